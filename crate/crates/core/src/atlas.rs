//! Charts, coordinate transitions, and the cocycle condition; tangent lifts
//! from Z₂ⁿ to Z₂ⁿ⁺¹ and superization of n-fold vector bundle data.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::Degree;
use crate::morphism::{
    compose, format_point, BaseBox, BoxJson, MorphismData, RationalJson, DEFAULT_SAMPLES,
};
use crate::poly::Polynomial;
use crate::scalar::Scalar;
use crate::series::{DomainSpec, FormalVar, GradedSeries};

/// Suffix given to the tangent partner of a coordinate.
pub const DOT_SUFFIX: &str = "_dot";

#[derive(Clone, Debug, PartialEq)]
pub struct Chart<S> {
    pub id: String,
    pub domain: Arc<DomainSpec>,
    pub base_box: BaseBox<S>,
}

/// Ψ_{to,from}: coordinates of chart `to` as series in the coordinates of
/// chart `from`, valid on `overlap` (a box in `from`'s base coordinates).
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub from: String,
    pub to: String,
    pub overlap: BaseBox<S>,
    pub map: MorphismData<S>,
}

impl<S: Scalar> Transition<S> {
    pub fn new(from: &str, to: &str, overlap: BaseBox<S>, map: MorphismData<S>) -> Result<Self> {
        map.check_degrees()?;
        if overlap.dim() != map.source().num_base() {
            return Err(Error::DimensionMismatch {
                expected: map.source().num_base(),
                found: overlap.dim(),
            });
        }
        Ok(Transition {
            from: from.to_string(),
            to: to.to_string(),
            overlap,
            map,
        })
    }

    /// The base Jacobian of the ε-part must be nonsingular at sampled
    /// points of the overlap.
    pub fn check_invertible(&self, samples: usize, seed: u64) -> Result<()> {
        let phi = self.map.base_map();
        let p = self.map.source().num_base();
        if phi.len() != p {
            return Err(Error::SizeMismatch(format!(
                "transition {} -> {} changes the base dimension",
                self.from, self.to
            )));
        }
        let jac: Vec<Vec<Polynomial<S>>> = phi
            .iter()
            .map(|f| (0..p).map(|i| f.derivative(i)).collect())
            .collect();
        for point in self.overlap.samples(samples, seed) {
            let m: Vec<Vec<S>> = jac
                .iter()
                .map(|row| row.iter().map(|e| e.eval(&point)).collect())
                .collect();
            if determinant(m).is_zero() {
                return Err(Error::SingularAtSample {
                    point: format_point(&point),
                    what: "base Jacobian".into(),
                });
            }
        }
        Ok(())
    }
}

/// Determinant by fraction-free-free Gaussian elimination (exact over rationals).
pub(crate) fn determinant<S: Scalar>(mut m: Vec<Vec<S>>) -> S {
    let n = m.len();
    let mut det = S::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return S::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / p.clone();
            for c in col..n {
                let v = m[col][c].clone() * factor.clone();
                m[r][c] = m[r][c].clone() - v;
            }
        }
    }
    det
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atlas<S> {
    charts: Vec<Chart<S>>,
    transitions: BTreeMap<(String, String), Transition<S>>,
}

impl<S: Scalar> Atlas<S> {
    /// Requires both directions for every transition and Ψ_αα = id when given.
    pub fn new(charts: Vec<Chart<S>>, transitions: Vec<Transition<S>>) -> Result<Self> {
        let atlas = Self::new_partial(charts, transitions)?;
        for (from, to) in atlas.transitions.keys() {
            if !atlas.transitions.contains_key(&(to.clone(), from.clone())) {
                return Err(Error::MissingTransition {
                    from: to.clone(),
                    to: from.clone(),
                });
            }
        }
        Ok(atlas)
    }

    /// Like [`Atlas::new`] but allows transitions given in one direction
    /// only. Polynomial coefficients rarely admit polynomial inverses, so
    /// forward-only data is the common case for generated atlases.
    pub fn new_partial(charts: Vec<Chart<S>>, transitions: Vec<Transition<S>>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for c in &charts {
            if !ids.insert(c.id.clone()) {
                return Err(Error::InvalidAtlas(format!(
                    "duplicate chart id `{}`",
                    c.id
                )));
            }
            if c.base_box.dim() != c.domain.num_base() {
                return Err(Error::InvalidAtlas(format!(
                    "chart `{}` box has dimension {}, domain has {} base coordinates",
                    c.id,
                    c.base_box.dim(),
                    c.domain.num_base()
                )));
            }
        }
        let mut atlas = Atlas {
            charts,
            transitions: BTreeMap::new(),
        };
        for t in transitions {
            let from = atlas.chart(&t.from)?;
            let to = atlas.chart(&t.to)?;
            if **t.map.source() != *from.domain || **t.map.target() != *to.domain {
                return Err(Error::InvalidAtlas(format!(
                    "transition {} -> {} does not match the chart domains",
                    t.from, t.to
                )));
            }
            if t.from == t.to && t.map != MorphismData::identity(&from.domain) {
                return Err(Error::InvalidAtlas(format!(
                    "self-transition of `{}` is not the identity",
                    t.from
                )));
            }
            let key = (t.from.clone(), t.to.clone());
            if atlas.transitions.insert(key, t).is_some() {
                return Err(Error::InvalidAtlas("duplicate transition".into()));
            }
        }
        Ok(atlas)
    }

    pub fn charts(&self) -> &[Chart<S>] {
        &self.charts
    }

    pub fn chart(&self, id: &str) -> Result<&Chart<S>> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::InvalidAtlas(format!("unknown chart `{id}`")))
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition<S>> {
        self.transitions.values()
    }

    /// Ψ_{to,from}, with identity for `from == to` when not stored.
    pub fn transition(&self, from: &str, to: &str) -> Result<Transition<S>> {
        if let Some(t) = self.transitions.get(&(from.to_string(), to.to_string())) {
            return Ok(t.clone());
        }
        if from == to {
            let c = self.chart(from)?;
            return Ok(Transition {
                from: from.to_string(),
                to: to.to_string(),
                overlap: c.base_box.clone(),
                map: MorphismData::identity(&c.domain),
            });
        }
        Err(Error::MissingTransition {
            from: from.to_string(),
            to: to.to_string(),
        })
    }

    /// Sample-based invertibility check of every stored transition.
    pub fn check_invertible(&self, samples: usize, seed: u64) -> Result<()> {
        self.transitions
            .values()
            .try_for_each(|t| t.check_invertible(samples, seed))
    }

    /// Ordered triples of distinct charts whose three transitions exist.
    pub fn checkable_triples(&self) -> Vec<(String, String, String)> {
        let has = |a: &str, b: &str| {
            self.transitions
                .contains_key(&(a.to_string(), b.to_string()))
        };
        let mut out = Vec::new();
        for a in &self.charts {
            for b in &self.charts {
                for c in &self.charts {
                    let (a, b, c) = (&a.id, &b.id, &c.id);
                    if a == b || b == c || a == c {
                        continue;
                    }
                    if has(c, b) && has(a, c) && has(a, b) {
                        out.push((a.clone(), b.clone(), c.clone()));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub triple: [String; 3],
    pub ok: bool,
    pub counterexample_coordinate: Option<String>,
}

/// Checks Ψ_βγ ∘ Ψ_γα = Ψ_βα for `triple = (α, β, γ)` by comparing canonical
/// forms of every coordinate pullback.
pub fn check_cocycle<S: Scalar>(
    atlas: &Atlas<S>,
    triple: (&str, &str, &str),
) -> Result<CocycleReport> {
    let (alpha, beta, gamma) = triple;
    let psi_ba = atlas.transition(alpha, beta)?;
    let psi_ga = atlas.transition(alpha, gamma)?;
    let psi_bg = atlas.transition(gamma, beta)?;
    if psi_ba.overlap.intersect(&psi_ga.overlap)?.is_empty() {
        return Err(Error::EmptyOverlap(
            alpha.to_string(),
            beta.to_string(),
            gamma.to_string(),
        ));
    }
    let composite = compose(&psi_bg.map, &psi_ga.map)?;
    let target = psi_ba.map.target();
    let counterexample = target
        .variables()
        .into_iter()
        .find(|&v| composite.pullback_of(v) != psi_ba.map.pullback_of(v))
        .map(|v| target.variable_name(v).to_string());
    Ok(CocycleReport {
        triple: [alpha.to_string(), beta.to_string(), gamma.to_string()],
        ok: counterexample.is_none(),
        counterexample_coordinate: counterexample,
    })
}

/// Runs [`check_cocycle`] on every checkable triple.
pub fn check_all_cocycles<S: Scalar>(atlas: &Atlas<S>) -> Result<Vec<CocycleReport>> {
    atlas
        .checkable_triples()
        .iter()
        .map(|(a, b, c)| check_cocycle(atlas, (a, b, c)))
        .collect()
}

/// Index bookkeeping between a domain and its tangent lift.
struct Lift {
    domain: Arc<DomainSpec>,
    formal: Vec<usize>,
    dotted: Vec<usize>,
}

/// Rank n+1 domain with coordinates (x, ξ, ẋ, ξ̇): originals get degree
/// (0, d), tangent partners degree (1, d).
pub fn tangent_lift_domain(dom: &DomainSpec) -> Result<DomainSpec> {
    let mut formal: Vec<FormalVar> = dom
        .formal_vars()
        .iter()
        .map(|v| FormalVar {
            name: v.name.clone(),
            degree: v.degree.prepend(0),
        })
        .collect();
    for v in dom.variables() {
        formal.push(FormalVar {
            name: format!("{}{DOT_SUFFIX}", dom.variable_name(v)),
            degree: dom.variable_degree(v).prepend(1),
        });
    }
    DomainSpec::new(
        dom.rank() + 1,
        dom.base_vars().to_vec(),
        formal,
        dom.truncation_order(),
    )
}

fn lift(dom: &DomainSpec) -> Result<Lift> {
    let lifted = tangent_lift_domain(dom)?;
    let idx = |name: &str| lifted.formal_index(name).expect("lifted coordinate");
    let formal = dom.formal_vars().iter().map(|v| idx(&v.name)).collect();
    let dotted = dom
        .variables()
        .into_iter()
        .map(|v| idx(&format!("{}{DOT_SUFFIX}", dom.variable_name(v))))
        .collect();
    Ok(Lift {
        domain: Arc::new(lifted),
        formal,
        dotted,
    })
}

/// Lifts a morphism to the tangent domains: u′ is kept and the partner of
/// every target coordinate transforms as u̇′ = Σ_v v̇ · ∂_v u′.
pub fn tangent_lift_morphism<S: Scalar>(m: &MorphismData<S>) -> Result<MorphismData<S>> {
    let src = lift(m.source())?;
    let tgt = lift(m.target())?;
    let base_ids: Vec<usize> = (0..m.source().num_base()).collect();
    let embed = |f: &GradedSeries<S>| f.embed(&src.domain, &base_ids, &src.formal);
    let source_vars = m.source().variables();

    let mut by_name: BTreeMap<String, GradedSeries<S>> = BTreeMap::new();
    for w in m.target().variables() {
        let u = m.pullback_of(w);
        let name = m.target().variable_name(w).to_string();
        let mut dot = GradedSeries::zero(&src.domain);
        for (k, &v) in source_vars.iter().enumerate() {
            let d = u.partial_derivative(v);
            if d.is_zero() {
                continue;
            }
            let vdot = GradedSeries::formal_var(&src.domain, src.dotted[k]);
            dot = dot.add(&vdot.mul(&embed(&d))?)?;
        }
        by_name.insert(format!("{name}{DOT_SUFFIX}"), dot);
        by_name.insert(name, embed(u));
    }
    let pullbacks = tgt
        .domain
        .variables()
        .into_iter()
        .map(|v| {
            by_name
                .remove(tgt.domain.variable_name(v))
                .expect("lifted pullback")
        })
        .collect();
    let lifted = MorphismData::new_unchecked(Arc::clone(&src.domain), tgt.domain, pullbacks)?;
    lifted.check_degrees()?;
    Ok(lifted)
}

pub fn tangent_lift<S: Scalar>(t: &Transition<S>) -> Result<Transition<S>> {
    t.map.check_degrees()?;
    Ok(Transition {
        from: t.from.clone(),
        to: t.to.clone(),
        overlap: t.overlap.clone(),
        map: tangent_lift_morphism(&t.map)?,
    })
}

/// Lifts every chart and transition. The result keeps the one- or
/// two-directional shape of the input.
pub fn tangent_lift_atlas<S: Scalar>(atlas: &Atlas<S>) -> Result<Atlas<S>> {
    let charts = atlas
        .charts
        .iter()
        .map(|c| {
            Ok(Chart {
                id: c.id.clone(),
                domain: Arc::new(tangent_lift_domain(&c.domain)?),
                base_box: c.base_box.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let transitions = atlas
        .transitions
        .values()
        .map(tangent_lift)
        .collect::<Result<Vec<_>>>()?;
    Atlas::new_partial(charts, transitions)
}

/// Sample points used to test invertibility of structure functions.
#[derive(Clone, Debug)]
pub struct Sampling<S> {
    pub base_box: BaseBox<S>,
    pub samples: usize,
    pub seed: u64,
}

impl<S: Scalar> Sampling<S> {
    /// `(−1, 1)^p` with the default sample count.
    pub fn unit(p: usize, seed: u64) -> Self {
        Sampling {
            base_box: BaseBox::symmetric(p, S::one()),
            samples: DEFAULT_SAMPLES,
            seed,
        }
    }
}

/// Coordinate of the standard fiber V₀₁ (ξ) or V₁₀ (η) of a double vector bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberCoord {
    Xi(usize),
    Eta(usize),
}

/// `coeff(x)·f₁f₂` feeding ψ′_target, with one ξ and one η factor in
/// either order.
#[derive(Clone, Debug, PartialEq)]
pub struct DTerm<S> {
    pub target: usize,
    pub factors: [FiberCoord; 2],
    pub coeff: Polynomial<S>,
}

/// Double vector bundle transition data:
/// x′ = φ(x), ξ′ = a(x)ξ, η′ = b(x)η, ψ′ = c(x)ψ + d(x)ξη.
#[derive(Clone, Debug, PartialEq)]
pub struct DvbSpec<S> {
    pub phi: Vec<Polynomial<S>>,
    pub a: Vec<Vec<Polynomial<S>>>,
    pub b: Vec<Vec<Polynomial<S>>>,
    pub c: Vec<Vec<Polynomial<S>>>,
    pub d: Vec<DTerm<S>>,
    pub truncation_order: u32,
}

fn check_square<S: Scalar>(m: &[Vec<Polynomial<S>>], name: &str, p: usize) -> Result<()> {
    for row in m {
        if row.len() != m.len() {
            return Err(Error::InvalidBundle(format!("`{name}` is not square")));
        }
        if row.iter().any(|e| e.nvars() != p) {
            return Err(Error::InvalidBundle(format!(
                "`{name}` entries must be polynomials in {p} base variables"
            )));
        }
    }
    Ok(())
}

impl<S: Scalar> DvbSpec<S> {
    pub fn base_dim(&self) -> usize {
        self.phi.len()
    }

    /// (rank V₀₁, rank V₁₀, rank V₁₁).
    pub fn ranks(&self) -> (usize, usize, usize) {
        (self.a.len(), self.b.len(), self.c.len())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.base_dim();
        if self.phi.iter().any(|f| f.nvars() != p) {
            return Err(Error::InvalidBundle("φ must map the base to itself".into()));
        }
        check_square(&self.a, "a", p)?;
        check_square(&self.b, "b", p)?;
        check_square(&self.c, "c", p)?;
        let (r1, r2, r3) = self.ranks();
        for t in &self.d {
            if t.target >= r3 || t.coeff.nvars() != p {
                return Err(Error::InvalidBundle("d-term out of range".into()));
            }
            match t.factors {
                [FiberCoord::Xi(k), FiberCoord::Eta(m)]
                | [FiberCoord::Eta(m), FiberCoord::Xi(k)] => {
                    if k >= r1 || m >= r2 {
                        return Err(Error::InvalidBundle("d-term factor out of range".into()));
                    }
                }
                _ => {
                    return Err(Error::InvalidBundle(
                        "d-terms need one ξ and one η factor".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Dense d[l][k][m] with factor order forgotten.
    pub fn d_tensor(&self) -> Vec<Vec<Vec<Polynomial<S>>>> {
        let p = self.base_dim();
        let (r1, r2, r3) = self.ranks();
        let mut d = vec![vec![vec![Polynomial::zero(p); r2]; r1]; r3];
        for t in &self.d {
            let (k, m) = match t.factors {
                [FiberCoord::Xi(k), FiberCoord::Eta(m)]
                | [FiberCoord::Eta(m), FiberCoord::Xi(k)] => (k, m),
                _ => unreachable!("validated"),
            };
            d[t.target][k][m] = d[t.target][k][m].add(&t.coeff);
        }
        d
    }

    /// `self ∘ first` computed classically on the even bundle data:
    /// φ″ = φ∘φ₁, a″ = (a∘φ₁)a₁, b″ = (b∘φ₁)b₁, c″ = (c∘φ₁)c₁,
    /// d″ = (c∘φ₁)d₁ + (d∘φ₁)(a₁ ⊗ b₁).
    pub fn after(&self, first: &Self) -> Result<Self> {
        self.validate()?;
        first.validate()?;
        if self.ranks() != first.ranks() || self.base_dim() != first.base_dim() {
            return Err(Error::InvalidBundle("bundle shapes differ".into()));
        }
        let p = self.base_dim();
        let (r1, r2, r3) = self.ranks();
        let at = |f: &Polynomial<S>| f.compose(&first.phi);
        let matmul = |outer: &[Vec<Polynomial<S>>], inner: &[Vec<Polynomial<S>>]| {
            let n = outer.len();
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n).fold(Polynomial::zero(p), |acc, k| {
                                acc.add(&at(&outer[i][k]).mul(&inner[k][j]))
                            })
                        })
                        .collect()
                })
                .collect::<Vec<Vec<_>>>()
        };
        let d1 = first.d_tensor();
        let d2 = self.d_tensor();
        let mut d = Vec::new();
        for l in 0..r3 {
            for k in 0..r1 {
                for m in 0..r2 {
                    let mut e = Polynomial::zero(p);
                    for n in 0..r3 {
                        e = e.add(&at(&self.c[l][n]).mul(&d1[n][k][m]));
                    }
                    for k2 in 0..r1 {
                        for m2 in 0..r2 {
                            e = e
                                .add(&at(&d2[l][k2][m2]).mul(&first.a[k2][k]).mul(&first.b[m2][m]));
                        }
                    }
                    if !e.is_zero() {
                        d.push(DTerm {
                            target: l,
                            factors: [FiberCoord::Xi(k), FiberCoord::Eta(m)],
                            coeff: e,
                        });
                    }
                }
            }
        }
        Ok(DvbSpec {
            phi: self.phi.iter().map(at).collect(),
            a: matmul(&self.a, &first.a),
            b: matmul(&self.b, &first.b),
            c: matmul(&self.c, &first.c),
            d,
            truncation_order: self.truncation_order.min(first.truncation_order),
        })
    }

    /// The same data as a general n-fold bundle with n = 2.
    pub fn to_nvb(&self) -> NvbSpec<S> {
        let (r1, r2, r3) = self.ranks();
        let deg = |s| Degree::from_bit_str(s).expect("static degree");
        let mut fiber = Vec::new();
        for k in 0..r1 {
            fiber.push((format!("xi{}", k + 1), deg("01")));
        }
        for k in 0..r2 {
            fiber.push((format!("eta{}", k + 1), deg("10")));
        }
        for k in 0..r3 {
            fiber.push((format!("psi{}", k + 1), deg("11")));
        }
        let linear = |m: &[Vec<Polynomial<S>>], offset: usize| -> Vec<Vec<NvbTerm<S>>> {
            m.iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(j, c)| NvbTerm {
                            coeff: c.clone(),
                            word: vec![offset + j],
                        })
                        .collect()
                })
                .collect()
        };
        let mut transitions = linear(&self.a, 0);
        transitions.extend(linear(&self.b, r1));
        let mut psi = linear(&self.c, r1 + r2);
        for t in &self.d {
            let index = |f: FiberCoord| match f {
                FiberCoord::Xi(k) => k,
                FiberCoord::Eta(m) => r1 + m,
            };
            psi[t.target].push(NvbTerm {
                coeff: t.coeff.clone(),
                word: t.factors.iter().map(|&f| index(f)).collect(),
            });
        }
        transitions.extend(psi);
        NvbSpec {
            n: 2,
            base_vars: base_names(self.base_dim()),
            fiber,
            phi: self.phi.clone(),
            transitions,
            truncation_order: self.truncation_order,
        }
    }
}

fn base_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

/// The Z₂²-superdomain of a double vector bundle with the given fiber ranks:
/// coordinates x1.., xi1.. (0,1), eta1.. (1,0), psi1.. (1,1).
pub fn dvb_domain(p: usize, ranks: (usize, usize, usize), order: u32) -> Result<DomainSpec> {
    let deg = |s| Degree::from_bit_str(s).expect("static degree");
    let mut formal = Vec::new();
    for (count, prefix, d) in [
        (ranks.0, "xi", "01"),
        (ranks.1, "eta", "10"),
        (ranks.2, "psi", "11"),
    ] {
        for k in 1..=count {
            formal.push(FormalVar {
                name: format!("{prefix}{k}"),
                degree: deg(d),
            });
        }
    }
    DomainSpec::new(2, base_names(p), formal, order)
}

fn check_matrix_invertible<S: Scalar>(
    m: &[Vec<Polynomial<S>>],
    name: &str,
    sampling: &Sampling<S>,
) -> Result<()> {
    if m.is_empty() {
        return Ok(());
    }
    for point in sampling.base_box.samples(sampling.samples, sampling.seed) {
        let values = m
            .iter()
            .map(|row| row.iter().map(|e| e.eval(&point)).collect())
            .collect();
        if determinant(values).is_zero() {
            return Err(Error::SingularAtSample {
                point: format_point(&point),
                what: format!("structure matrix `{name}`"),
            });
        }
    }
    Ok(())
}

/// Reinterprets double vector bundle transition data with Z₂² degrees
/// ((0,0),(0,1),(1,0),(1,1)) for (x, ξ, η, ψ). Since ⟨(0,1),(1,0)⟩ = 0, the
/// factor order in ξη does not matter.
pub fn superize_dvb<S: Scalar>(
    spec: &DvbSpec<S>,
    sampling: &Sampling<S>,
    from: &str,
    to: &str,
) -> Result<Transition<S>> {
    spec.validate()?;
    check_matrix_invertible(&spec.a, "a", sampling)?;
    check_matrix_invertible(&spec.b, "b", sampling)?;
    check_matrix_invertible(&spec.c, "c", sampling)?;
    superize_nvb(&spec.to_nvb(), sampling.base_box.clone(), from, to)
}

/// `coeff(x)` times the product of the fiber coordinates in `word`.
#[derive(Clone, Debug, PartialEq)]
pub struct NvbTerm<S> {
    pub coeff: Polynomial<S>,
    pub word: Vec<usize>,
}

/// Transition data of an n-fold vector bundle: homogeneous fiber coordinates
/// with degrees in {0,1}ⁿ and multi-degree preserving polynomial transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct NvbSpec<S> {
    pub n: usize,
    pub base_vars: Vec<String>,
    pub fiber: Vec<(String, Degree)>,
    pub phi: Vec<Polynomial<S>>,
    /// One list of terms per fiber coordinate.
    pub transitions: Vec<Vec<NvbTerm<S>>>,
    pub truncation_order: u32,
}

/// Superizes n-fold vector bundle data. Every product in the transition
/// polynomials must involve coordinates with pairwise disjoint supports, so
/// the factors commute under the Z₂ⁿ sign rule and no ordering choice arises.
pub fn superize_nvb<S: Scalar>(
    spec: &NvbSpec<S>,
    overlap: BaseBox<S>,
    from: &str,
    to: &str,
) -> Result<Transition<S>> {
    let p = spec.base_vars.len();
    if spec.phi.len() != p || spec.phi.iter().any(|f| f.nvars() != p) {
        return Err(Error::InvalidBundle("φ must map the base to itself".into()));
    }
    if spec.transitions.len() != spec.fiber.len() {
        return Err(Error::InvalidBundle(format!(
            "{} fiber coordinates but {} transition rows",
            spec.fiber.len(),
            spec.transitions.len()
        )));
    }
    let domain = Arc::new(DomainSpec::new(
        spec.n,
        spec.base_vars.clone(),
        spec.fiber
            .iter()
            .map(|(name, degree)| FormalVar {
                name: name.clone(),
                degree: degree.clone(),
            })
            .collect(),
        spec.truncation_order,
    )?);
    let name = |i: usize| spec.fiber[i].0.as_str();

    let mut by_name: BTreeMap<String, GradedSeries<S>> = BTreeMap::new();
    for (i, terms) in spec.transitions.iter().enumerate() {
        let mut series = GradedSeries::zero(&domain);
        for term in terms {
            if term.coeff.nvars() != p {
                return Err(Error::InvalidBundle("coefficient ring mismatch".into()));
            }
            let mut support = vec![0u8; spec.n];
            for (pos, &f) in term.word.iter().enumerate() {
                let deg =
                    spec.fiber.get(f).map(|(_, d)| d).ok_or_else(|| {
                        Error::InvalidBundle(format!("fiber index {f} out of range"))
                    })?;
                if let Some(&g) = term.word[..pos]
                    .iter()
                    .find(|&&g| deg.support().any(|k| spec.fiber[g].1.bits()[k] == 1))
                {
                    return Err(Error::NonDisjointSupport {
                        left: name(g).to_string(),
                        right: name(f).to_string(),
                    });
                }
                for k in deg.support() {
                    support[k] = 1;
                }
            }
            if support != spec.fiber[i].1.bits() {
                return Err(Error::DegreeMismatch {
                    coordinate: name(i).to_string(),
                    detail: format!(
                        "term of multidegree {:?} feeds a coordinate of degree {}",
                        support, spec.fiber[i].1
                    ),
                });
            }
            let word: Vec<usize> = term
                .word
                .iter()
                .map(|&f| domain.formal_index(name(f)).expect("fiber coordinate"))
                .collect();
            let (sign, mu) = domain
                .normalize_product(&word)
                .expect("disjoint supports never repeat an odd factor");
            debug_assert_eq!(sign, 1);
            series = series.add(&GradedSeries::monomial(&domain, mu, term.coeff.clone()))?;
        }
        by_name.insert(name(i).to_string(), series);
    }
    for (j, f) in spec.phi.iter().enumerate() {
        by_name.insert(
            spec.base_vars[j].clone(),
            GradedSeries::from_base(&domain, f.clone()),
        );
    }
    let pullbacks = domain
        .variables()
        .into_iter()
        .map(|v| {
            by_name
                .remove(domain.variable_name(v))
                .expect("every coordinate")
        })
        .collect();
    let map = MorphismData::new(Arc::clone(&domain), Arc::clone(&domain), pullbacks)?;
    Transition::new(from, to, overlap, map)
}

/// JSON form of an atlas. Transition pullbacks are expressions in the
/// `from` chart's coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasJson {
    pub charts: Vec<ChartJson>,
    pub transitions: Vec<TransitionJson>,
    /// Accept transitions given in one direction only.
    #[serde(default)]
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartJson {
    pub id: String,
    pub domain: DomainSpec,
    pub base_box: BoxJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: String,
    pub to: String,
    pub overlap: BoxJson,
    pub pullbacks: BTreeMap<String, String>,
}

impl AtlasJson {
    pub fn to_atlas(&self) -> Result<Atlas<BigRational>> {
        let charts = self
            .charts
            .iter()
            .map(|c| {
                Ok(Chart {
                    id: c.id.clone(),
                    domain: Arc::new(c.domain.clone()),
                    base_box: c.base_box.to_box()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let domain_of = |id: &str| {
            charts
                .iter()
                .find(|c| c.id == id)
                .map(|c| Arc::clone(&c.domain))
                .ok_or_else(|| Error::InvalidAtlas(format!("unknown chart `{id}`")))
        };
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let map =
                    MorphismData::from_exprs(domain_of(&t.from)?, domain_of(&t.to)?, &t.pullbacks)?;
                Transition::new(&t.from, &t.to, t.overlap.to_box()?, map)
            })
            .collect::<Result<Vec<_>>>()?;
        if self.partial {
            Atlas::new_partial(charts, transitions)
        } else {
            Atlas::new(charts, transitions)
        }
    }

    pub fn from_atlas(atlas: &Atlas<BigRational>, partial: bool) -> Self {
        AtlasJson {
            charts: atlas
                .charts
                .iter()
                .map(|c| ChartJson {
                    id: c.id.clone(),
                    domain: (*c.domain).clone(),
                    base_box: BoxJson::from_box(&c.base_box),
                })
                .collect(),
            transitions: atlas
                .transitions
                .values()
                .map(TransitionJson::from_transition)
                .collect(),
            partial,
        }
    }
}

impl TransitionJson {
    pub fn from_transition(t: &Transition<BigRational>) -> Self {
        TransitionJson {
            from: t.from.clone(),
            to: t.to.clone(),
            overlap: BoxJson::from_box(&t.overlap),
            pullbacks: t.map.to_exprs(),
        }
    }
}

/// JSON form of double vector bundle data; polynomials are expression
/// strings in the base variables `x1, x2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DvbJson {
    pub base_dim: usize,
    pub phi: Vec<String>,
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
    pub c: Vec<Vec<String>>,
    #[serde(default)]
    pub d: Vec<DTermJson>,
    #[serde(default = "default_dvb_order")]
    pub truncation_order: u32,
}

fn default_dvb_order() -> u32 {
    2
}

/// `{"target": 0, "factors": ["xi1", "eta1"], "coeff": "x1"}`; indices
/// and names are 1-based in the factor names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DTermJson {
    pub target: usize,
    pub factors: [String; 2],
    pub coeff: String,
}

fn parse_fiber_name(s: &str) -> Result<FiberCoord> {
    let bad = || Error::InvalidBundle(format!("`{s}` is not a ξ/η fiber coordinate"));
    let (ctor, rest): (fn(usize) -> FiberCoord, &str) = if let Some(r) = s.strip_prefix("xi") {
        (FiberCoord::Xi, r)
    } else if let Some(r) = s.strip_prefix("eta") {
        (FiberCoord::Eta, r)
    } else {
        return Err(bad());
    };
    let k: usize = rest.parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(bad());
    }
    Ok(ctor(k - 1))
}

impl DvbJson {
    pub fn to_spec(&self) -> Result<DvbSpec<BigRational>> {
        let vars = base_names(self.base_dim);
        let poly = |s: &str| crate::expr::parse_polynomial::<BigRational>(&vars, s);
        let matrix = |m: &[Vec<String>]| {
            m.iter()
                .map(|row| row.iter().map(|s| poly(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        };
        let spec = DvbSpec {
            phi: self.phi.iter().map(|s| poly(s)).collect::<Result<_>>()?,
            a: matrix(&self.a)?,
            b: matrix(&self.b)?,
            c: matrix(&self.c)?,
            d: self
                .d
                .iter()
                .map(|t| {
                    Ok(DTerm {
                        target: t.target,
                        factors: [
                            parse_fiber_name(&t.factors[0])?,
                            parse_fiber_name(&t.factors[1])?,
                        ],
                        coeff: poly(&t.coeff)?,
                    })
                })
                .collect::<Result<_>>()?,
            truncation_order: self.truncation_order,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// JSON form of n-fold bundle data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvbJson {
    pub n: usize,
    pub base_vars: Vec<String>,
    pub fiber: Vec<FormalVar>,
    pub phi: Vec<String>,
    /// Fiber coordinate name → expression in the fiber coordinates with
    /// polynomial coefficients in the base variables.
    pub transitions: BTreeMap<String, String>,
    #[serde(default = "default_nvb_order")]
    pub truncation_order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<BoxJson>,
}

fn default_nvb_order() -> u32 {
    4
}

impl NvbJson {
    /// Expressions are expanded without applying any sign rule: every
    /// product keeps its written factor order.
    pub fn to_spec(&self) -> Result<NvbSpec<BigRational>> {
        let names: Vec<String> = self.fiber.iter().map(|v| v.name.clone()).collect();
        let mut transitions = Vec::new();
        for v in &self.fiber {
            let text = self
                .transitions
                .get(&v.name)
                .ok_or_else(|| Error::InvalidBundle(format!("no transition for `{}`", v.name)))?;
            let e = crate::expr::parse_expression(text)?;
            let terms = e.evaluate(&WordEvaluator {
                base: &self.base_vars,
                fiber: &names,
            })?;
            transitions.push(
                terms
                    .into_iter()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(word, coeff)| NvbTerm { coeff, word })
                    .collect(),
            );
        }
        let vars = &self.base_vars;
        Ok(NvbSpec {
            n: self.n,
            base_vars: self.base_vars.clone(),
            fiber: self
                .fiber
                .iter()
                .map(|v| (v.name.clone(), v.degree.clone()))
                .collect(),
            phi: self
                .phi
                .iter()
                .map(|s| crate::expr::parse_polynomial(vars, s))
                .collect::<Result<_>>()?,
            transitions,
            truncation_order: self.truncation_order,
        })
    }

    pub fn overlap_box(&self) -> Result<BaseBox<BigRational>> {
        match &self.overlap {
            Some(b) => b.to_box(),
            None => Ok(BaseBox::symmetric(
                self.base_vars.len(),
                BigRational::from_int(1),
            )),
        }
    }
}

/// Expands an expression into ordered words of fiber coordinates with
/// polynomial coefficients (free, noncommutative in the fiber letters).
struct WordEvaluator<'a> {
    base: &'a [String],
    fiber: &'a [String],
}

type WordSum = Vec<(Vec<usize>, Polynomial<BigRational>)>;

fn merge_words(terms: WordSum) -> WordSum {
    let mut map: BTreeMap<Vec<usize>, Polynomial<BigRational>> = BTreeMap::new();
    for (w, c) in terms {
        let entry = map.entry(w).or_insert_with(|| Polynomial::zero(c.nvars()));
        *entry = entry.add(&c);
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl crate::expr::Evaluator for WordEvaluator<'_> {
    type Value = WordSum;

    fn number(&self, r: &BigRational) -> Result<Self::Value> {
        Ok(vec![(
            vec![],
            Polynomial::constant(self.base.len(), r.clone()),
        )])
    }

    fn variable(&self, name: &str, pos: crate::expr::Pos) -> Result<Self::Value> {
        if let Some(i) = self.base.iter().position(|v| v == name) {
            return Ok(vec![(vec![], Polynomial::var(self.base.len(), i))]);
        }
        if let Some(i) = self.fiber.iter().position(|v| v == name) {
            return Ok(vec![(vec![i], Polynomial::one(self.base.len()))]);
        }
        Err(Error::Parse {
            line: pos.line,
            column: pos.column,
            message: format!("unknown variable `{name}`"),
        })
    }

    fn add(&self, mut a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        a.extend(b);
        Ok(merge_words(a))
    }

    fn sub(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        self.add(a, self.neg(b)?)
    }

    fn neg(&self, a: Self::Value) -> Result<Self::Value> {
        Ok(a.into_iter().map(|(w, c)| (w, c.neg())).collect())
    }

    fn mul(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        let mut out = Vec::new();
        for (wa, ca) in &a {
            for (wb, cb) in &b {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.push((w, ca.mul(cb)));
            }
        }
        Ok(merge_words(out))
    }
}

/// Convenience: a box JSON with all-integer bounds.
pub fn integer_box(lo: &[i64], hi: &[i64]) -> BoxJson {
    BoxJson {
        lo: lo.iter().map(|&v| RationalJson::Int(v)).collect(),
        hi: hi.iter().map(|&v| RationalJson::Int(v)).collect(),
    }
}

/// Default sampling seed shared by the CLI and tests.
pub const DEFAULT_SEED: u64 = 0x5eed;
