use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use zsup_core::atlas::{
    check_all_cocycles, check_cocycle, superize_dvb, superize_nvb, tangent_lift_atlas,
    tangent_lift_morphism, AtlasJson, DvbJson, NvbJson, Sampling, DEFAULT_SEED,
};
use zsup_core::clifford::{
    check_color_commutative, clifford_mul, parse_clifford, quaternion_presentation,
    PresentationJson, StructureJson,
};
use zsup_core::expr::{parse_expression, SeriesEvaluator};
use zsup_core::grading::{first_violation, realize_sign_table, verify_assignment};
use zsup_core::morphism::{
    check_morphism_data, compose, germ_invert, jacobian, jet_at, maximal_ideal_order,
    pullback_section, BaseBox, MorphismJson, RangeCheck, DEFAULT_SAMPLES,
};
use zsup_core::scalar::parse_rational;
use zsup_core::{
    DegreeAssignment, DomainSpec, GradedSeries, MorphismData, Order, Rational, SignTable,
};

use crate::report::{CliError, ErrorKind, Report, Status};
use crate::script;

/// Truncation order of the built-in domain when `--order` is absent.
pub const DEFAULT_ORDER: u32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "zsup",
    version,
    about = "Exact Z2^n-graded algebra and superdomain computations"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Options {
    /// Truncation order of the expression domain.
    #[arg(long, global = true)]
    pub order: Option<u32>,
    /// Domain JSON file for expressions (default: x | xi, eta, theta over Z2^2).
    #[arg(long, global = true)]
    pub domain: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub output: Option<OutputFormat>,
    /// Number of sample points for range and invertibility checks.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seed for deterministic sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Multiplicative inverse of a series with invertible base part.
    Invert {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Split a series into homogeneous components.
    Decompose {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Pull a target-domain expression back along a morphism.
    Pullback {
        morphism: PathBuf,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Composite `outer ∘ inner` of two morphisms.
    Compose { outer: PathBuf, inner: PathBuf },
    /// Check degrees and, when boxes are given, the base range of a morphism.
    CheckMorphism { morphism: PathBuf },
    /// Jacobian matrix of a morphism.
    Jacobian { morphism: PathBuf },
    /// Check the cocycle condition on an atlas.
    CheckCocycle {
        atlas: PathBuf,
        /// Only this triple, as `A,B,C`.
        #[arg(long)]
        triple: Option<String>,
    },
    /// Tangent lift of an atlas or a morphism.
    TangentLift { file: PathBuf },
    /// Superize double vector bundle transition data.
    SuperizeDvb { file: PathBuf },
    /// Superize n-fold vector bundle transition data.
    SuperizeNvb { file: PathBuf },
    /// Realize a sign table by a degree assignment.
    RealizeSigns { table: PathBuf },
    /// Check a degree assignment against a sign table.
    VerifySigns { table: PathBuf, assignment: PathBuf },
    /// Normal form of a product in a color Clifford algebra.
    CliffordMul {
        presentation: PathBuf,
        #[arg(allow_hyphen_values = true)]
        left: String,
        #[arg(allow_hyphen_values = true)]
        right: Option<String>,
    },
    /// Check color commutativity of a structure-constant algebra (default: quaternions).
    CheckColorComm { algebra: Option<PathBuf> },
    /// Jet of a series at a base point.
    Jet {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        /// Base point, comma separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(short = 'k', long = "weight")]
        k: u32,
        /// Jet of the inverse germ instead.
        #[arg(long)]
        invert: bool,
    },
    /// Order of a series in the maximal ideal of a base point.
    MadicOrder {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Run a script file.
    Run { script: PathBuf },
}

#[derive(Clone)]
pub struct Context {
    pub domain: Arc<DomainSpec>,
    pub output: OutputFormat,
    pub samples: usize,
    pub seed: u64,
    pub color: bool,
    pub base_dir: Option<PathBuf>,
    pub bindings: HashMap<String, GradedSeries>,
    pub in_script: bool,
}

impl Context {
    pub fn from_options(opts: &Options, base_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let mut ctx = Context {
            domain: Arc::new(DomainSpec::standard_z2_squared(DEFAULT_ORDER)),
            output: OutputFormat::Text,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            color: std::env::var("ZSUP_COLOR").is_ok_and(|v| v == "1"),
            base_dir,
            bindings: HashMap::new(),
            in_script: false,
        };
        ctx.apply(opts)?;
        Ok(ctx)
    }

    /// Overlays flags onto this context.
    pub fn apply(&mut self, opts: &Options) -> Result<(), CliError> {
        if let Some(path) = &opts.domain {
            let d: DomainSpec = self.load(path)?;
            self.set_domain(d);
        }
        if let Some(n) = opts.order {
            self.set_order(n)?;
        }
        if let Some(o) = opts.output {
            self.output = o;
        }
        if let Some(s) = opts.samples {
            if s == 0 {
                return Err(CliError::input("--samples must be positive"));
            }
            self.samples = s;
        }
        if let Some(s) = opts.seed {
            self.seed = s;
        }
        Ok(())
    }

    /// Replaces the expression domain and drops all bindings.
    pub fn set_domain(&mut self, d: DomainSpec) {
        self.domain = Arc::new(d);
        self.bindings.clear();
    }

    /// Changes the truncation order, carrying bindings along.
    pub fn set_order(&mut self, n: u32) -> Result<(), CliError> {
        let domain = Arc::new(self.domain.with_order(n));
        for v in self.bindings.values_mut() {
            *v = v.with_domain_order(&domain)?;
        }
        self.domain = domain;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn read(&self, path: &Path) -> Result<String, CliError> {
        let full = self.resolve(path);
        fs::read_to_string(&full)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", full.display())))
    }

    pub fn load<T: DeserializeOwned>(&self, path: &Path) -> Result<T, CliError> {
        let text = self.read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", self.resolve(path).display())))
    }

    pub fn series(&self, text: &str) -> Result<GradedSeries, CliError> {
        self.series_in(&self.domain, text)
    }

    pub fn series_in(
        &self,
        domain: &Arc<DomainSpec>,
        text: &str,
    ) -> Result<GradedSeries, CliError> {
        let expr = parse_expression(text)?;
        let bindings = Arc::ptr_eq(domain, &self.domain).then_some(&self.bindings);
        Ok(expr.evaluate(&SeriesEvaluator { domain, bindings })?)
    }

    pub fn emit(&self, report: &Report) {
        let text = match self.output {
            OutputFormat::Text => report.render_text(self.color),
            OutputFormat::Json => report.render_json(),
        };
        print!("{text}");
    }
}

/// Runs one command and prints its report. Verification errors are
/// reported as failed checks; input errors are returned.
pub fn execute(ctx: &mut Context, cmd: &Command) -> Result<Status, CliError> {
    if let Command::Run { script } = cmd {
        if ctx.in_script {
            return Err(CliError::input("`run` cannot be nested inside a script"));
        }
        return script::run_file(ctx, script);
    }
    match run_command(ctx, cmd) {
        Ok(report) => {
            ctx.emit(&report);
            Ok(report.status)
        }
        Err(e) if e.kind == ErrorKind::Verification => {
            let report = Report::new(json!({"ok": false, "error": e.message}))
                .verdict(format!("FAIL: {}", e.message), false);
            ctx.emit(&report);
            Ok(Status::Failed)
        }
        Err(e) => Err(e),
    }
}

pub fn run_command(ctx: &Context, cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Invert { expr } => {
            let f = ctx.series(expr)?;
            let inv = f.invert()?;
            Ok(series_report(&inv))
        }
        Command::Decompose { expr } => decompose(ctx, expr),
        Command::Pullback { morphism, expr } => {
            let m = load_morphism(ctx, morphism)?.0;
            let g = ctx.series_in(m.target(), expr)?;
            Ok(series_report(&pullback_section(&m, &g)?))
        }
        Command::Compose { outer, inner } => {
            let outer = load_morphism(ctx, outer)?.0;
            let inner = load_morphism(ctx, inner)?.0;
            Ok(morphism_report(&compose(&outer, &inner)?))
        }
        Command::CheckMorphism { morphism } => check_morphism(ctx, morphism),
        Command::Jacobian { morphism } => jacobian_report(ctx, morphism),
        Command::CheckCocycle { atlas, triple } => check_cocycles(ctx, atlas, triple.as_deref()),
        Command::TangentLift { file } => tangent_lift(ctx, file),
        Command::SuperizeDvb { file } => {
            let spec = ctx.load::<DvbJson>(file)?.to_spec()?;
            let mut sampling = Sampling::unit(spec.base_dim(), ctx.seed);
            sampling.samples = ctx.samples;
            let t = superize_dvb(&spec, &sampling, "A", "B")?;
            Ok(morphism_report(&t.map))
        }
        Command::SuperizeNvb { file } => {
            let json: NvbJson = ctx.load(file)?;
            let t = superize_nvb(&json.to_spec()?, json.overlap_box()?, "A", "B")?;
            Ok(morphism_report(&t.map))
        }
        Command::RealizeSigns { table } => {
            let t: SignTable = ctx.load(table)?;
            let a = realize_sign_table(&t);
            let ok = verify_assignment(&t, &a)?;
            Ok(assignment_report(&a)
                .verdict(format!("verified: {ok}"), ok)
                .with_ok(ok))
        }
        Command::VerifySigns { table, assignment } => {
            let t: SignTable = ctx.load(table)?;
            let a: DegreeAssignment = ctx.load(assignment)?;
            let ok = verify_assignment(&t, &a)?;
            let violation = first_violation(&t, &a);
            let mut r = Report::new(json!({
                "ok": ok,
                "violation": violation.map(|(i, j)| [i + 1, j + 1]),
            }))
            .verdict(format!("verified: {ok}"), ok);
            if let Some((i, j)) = violation {
                r = r.line(format!("violation at ({}, {})", i + 1, j + 1));
            }
            Ok(r)
        }
        Command::CliffordMul {
            presentation,
            left,
            right,
        } => {
            let p = ctx
                .load::<PresentationJson>(presentation)?
                .to_presentation()?;
            let mut u = parse_clifford(&p, left)?;
            if let Some(right) = right {
                u = clifford_mul(&p, &u, &parse_clifford(&p, right)?)?;
            }
            let text = u.to_string_with(&p);
            Ok(Report::new(json!({ "result": text })).line(text))
        }
        Command::CheckColorComm { algebra } => {
            let a = match algebra {
                Some(path) => ctx.load::<StructureJson>(path)?.to_algebra()?,
                None => quaternion_presentation(),
            };
            let r = check_color_commutative(&a)?;
            let mut report = Report::new(serde_json::to_value(&r).expect("report serializes"))
                .line(format!("pairs checked: {}", r.pairs_checked))
                .verdict(
                    format!("color commutative: {}", r.commutative),
                    r.commutative,
                );
            if let Some((x, y)) = &r.counterexample {
                report = report.line(format!("counterexample: {x}*{y}"));
            }
            Ok(report)
        }
        Command::Jet {
            expr,
            at,
            k,
            invert,
        } => {
            let f = ctx.series(expr)?;
            let point = parse_point(at, ctx.domain.num_base())?;
            let jet = if *invert {
                germ_invert(&f, &point, *k)?
            } else {
                jet_at(&f, &point, *k)?
            };
            let rep = jet.to_series();
            let shifted = jet.shifted().to_expr_string();
            Ok(Report::new(json!({
                "result": rep.to_expr_string(),
                "shifted": shifted,
                "max_weight": jet.max_weight(),
            }))
            .line(rep.to_expr_string()))
        }
        Command::MadicOrder { expr, at } => {
            let f = ctx.series(expr)?;
            let point = parse_point(at, ctx.domain.num_base())?;
            let order = maximal_ideal_order(&f, &point);
            let value = match order {
                Order::Finite(k) => json!(k),
                Order::Infinite => json!("infinite"),
            };
            Ok(Report::new(json!({ "order": value })).line(order.to_string()))
        }
        Command::Run { .. } => Err(CliError::input("`run` is only available at top level")),
    }
}

impl Report {
    fn with_ok(mut self, ok: bool) -> Self {
        if let Value::Object(map) = &mut self.json {
            map.insert("verified".into(), json!(ok));
        }
        self
    }
}

fn series_report(f: &GradedSeries) -> Report {
    let text = f.to_expr_string();
    Report::new(json!({ "result": text, "terms": f.to_term_list() })).line(text)
}

fn morphism_report(m: &MorphismData) -> Report {
    let exprs = m.to_exprs();
    let lines = m.target().variables().into_iter().map(|v| {
        let name = m.target().variable_name(v);
        format!("{name} = {}", exprs[name])
    });
    let json = serde_json::to_value(MorphismJson::from_morphism(m)).expect("morphism serializes");
    Report::new(json).lines(lines.collect::<Vec<_>>())
}

fn assignment_report(a: &DegreeAssignment) -> Report {
    let lines = a
        .sigmas()
        .iter()
        .enumerate()
        .map(|(i, s)| format!("sigma{} = {s}", i + 1))
        .collect::<Vec<_>>();
    Report::new(json!({ "n": a.rank(), "sigmas": a.sigmas() }))
        .line(format!("n = {}", a.rank()))
        .lines(lines)
}

fn decompose(ctx: &Context, expr: &str) -> Result<Report, CliError> {
    let f = ctx.series(expr)?;
    let parts = f.decompose();
    let json = parts
        .iter()
        .map(|(d, s)| json!({ "degree": d, "component": s.to_expr_string() }))
        .collect::<Vec<_>>();
    let lines = parts
        .iter()
        .map(|(d, s)| format!("{d}: {}", s.to_expr_string()))
        .collect::<Vec<_>>();
    Ok(Report::new(Value::Array(json)).lines(lines))
}

type Boxes = Option<(BaseBox<Rational>, BaseBox<Rational>)>;

fn load_morphism(ctx: &Context, path: &Path) -> Result<(MorphismData, Boxes), CliError> {
    let json: MorphismJson = ctx.load(path)?;
    let m = json.to_morphism()?;
    let boxes = match (&json.source_box, &json.target_box) {
        (Some(s), Some(t)) => Some((s.to_box()?, t.to_box()?)),
        (None, None) => None,
        _ => {
            return Err(CliError::input(
                "source_box and target_box must be given together",
            ))
        }
    };
    Ok((m, boxes))
}

fn check_morphism(ctx: &Context, path: &Path) -> Result<Report, CliError> {
    let (m, boxes) = load_morphism(ctx, path)?;
    let range = boxes.as_ref().map(|(s, t)| RangeCheck {
        source_box: s,
        target_box: t,
        samples: ctx.samples,
        seed: ctx.seed,
    });
    let r = check_morphism_data(&m, range)?;
    let range_line = if boxes.is_some() {
        format!("range: ok ({} samples)", r.samples_checked)
    } else {
        "range: not checked (no boxes)".to_string()
    };
    Ok(Report::new(json!({
        "ok": true,
        "degrees_ok": r.degrees_ok,
        "samples_checked": r.samples_checked,
    }))
    .verdict("degrees: ok", true)
    .line(range_line))
}

fn jacobian_report(ctx: &Context, path: &Path) -> Result<Report, CliError> {
    let m = load_morphism(ctx, path)?.0;
    let rows = m.target().variables();
    let cols = m.source().variables();
    let jac = jacobian(&m);
    let mut lines = Vec::new();
    let mut json_rows = serde_json::Map::new();
    for (w, row) in rows.iter().zip(&jac) {
        let wname = m.target().variable_name(*w);
        let mut entries = serde_json::Map::new();
        for (v, e) in cols.iter().zip(row) {
            let vname = m.source().variable_name(*v);
            let text = e.to_expr_string();
            lines.push(format!("d{wname}/d{vname} = {text}"));
            entries.insert(vname.to_string(), json!(text));
        }
        json_rows.insert(wname.to_string(), Value::Object(entries));
    }
    Ok(Report::new(Value::Object(json_rows)).lines(lines))
}

fn check_cocycles(ctx: &Context, path: &Path, triple: Option<&str>) -> Result<Report, CliError> {
    let atlas = ctx.load::<AtlasJson>(path)?.to_atlas()?;
    let reports = match triple {
        Some(t) => {
            let ids: Vec<&str> = t.split(',').map(str::trim).collect();
            let [a, b, c] = ids[..] else {
                return Err(CliError::input(format!(
                    "--triple expects A,B,C, got `{t}`"
                )));
            };
            vec![check_cocycle(&atlas, (a, b, c))?]
        }
        None => check_all_cocycles(&atlas)?,
    };
    let all_ok = reports.iter().all(|r| r.ok);
    let mut report = Report::new(json!({ "ok": all_ok, "triples": reports }));
    for r in &reports {
        let [a, b, c] = &r.triple;
        let line = match &r.counterexample_coordinate {
            None => format!("({a}, {b}, {c}): ok"),
            Some(v) => format!("({a}, {b}, {c}): FAIL at {v}"),
        };
        report = report.verdict(line, r.ok);
    }
    Ok(report.line(format!("{} triples checked", reports.len())))
}

fn tangent_lift(ctx: &Context, path: &Path) -> Result<Report, CliError> {
    let raw: Value = ctx.load(path)?;
    if raw.get("charts").is_some() {
        let json: AtlasJson = serde_json::from_value(raw).map_err(CliError::input)?;
        let lifted = tangent_lift_atlas(&json.to_atlas()?)?;
        let out = AtlasJson::from_atlas(&lifted, true);
        let mut lines = Vec::new();
        for t in &out.transitions {
            lines.push(format!("{} -> {}:", t.from, t.to));
            lines.extend(t.pullbacks.iter().map(|(k, v)| format!("  {k} = {v}")));
        }
        Ok(Report::new(serde_json::to_value(out).expect("atlas serializes")).lines(lines))
    } else {
        let json: MorphismJson = serde_json::from_value(raw).map_err(CliError::input)?;
        Ok(morphism_report(&tangent_lift_morphism(
            &json.to_morphism()?,
        )?))
    }
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<Rational>, CliError> {
    let point = if text.trim().is_empty() {
        Vec::new()
    } else {
        text.split(',')
            .map(|s| {
                parse_rational(s.trim()).ok_or_else(|| {
                    CliError::input(format!("`{}` is not a rational number", s.trim()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if point.len() != dim {
        return Err(CliError::input(format!(
            "point has {} coordinates, the domain has {dim} base variables",
            point.len()
        )));
    }
    Ok(point)
}
