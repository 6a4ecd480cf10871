//! Morphisms of Z₂ⁿ-superdomains given by coordinate pullbacks, their
//! extension to all series by formal Taylor expansion, Jacobians, and
//! 𝔪-adic jets at base points.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse_series;
use crate::poly::Polynomial;
use crate::scalar::{parse_rational, Scalar};
use crate::series::{DomainSpec, GradedMonomial, GradedSeries, Order, Variable};

/// Default number of rational sample points for range and invertibility checks.
pub const DEFAULT_SAMPLES: usize = 32;

/// An open rational coordinate box `lo < x < hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseBox<S> {
    lo: Vec<S>,
    hi: Vec<S>,
}

impl<S: Scalar> BaseBox<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        Ok(BaseBox { lo, hi })
    }

    /// The box `(-r, r)^p`.
    pub fn symmetric(p: usize, r: S) -> Self {
        BaseBox {
            lo: vec![-r.clone(); p],
            hi: vec![r; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[S] {
        &self.lo
    }

    pub fn hi(&self) -> &[S] {
        &self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h)
    }

    pub fn contains(&self, point: &[S]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| l < x && x < h)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let pick = |a: &S, b: &S, max: bool| {
            if (a > b) == max {
                a.clone()
            } else {
                b.clone()
            }
        };
        Ok(BaseBox {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| pick(a, b, true))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| pick(a, b, false))
                .collect(),
        })
    }

    /// Deterministic interior sample points `lo + (hi − lo)·k/1001`.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<Vec<S>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let denom = S::from_int(1001);
        (0..count)
            .map(|_| {
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(l, h)| {
                        let k = S::from_int(rng.gen_range(1..=1000));
                        l.clone() + (h.clone() - l.clone()) * k / denom.clone()
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn format_point<S: fmt::Display>(point: &[S]) -> String {
    let parts: Vec<String> = point.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// JSON form of a box: rationals as strings or integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxJson {
    pub lo: Vec<RationalJson>,
    pub hi: Vec<RationalJson>,
}

/// A rational written either as a JSON integer or as a string `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalJson {
    Int(i64),
    Text(String),
}

impl RationalJson {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            RationalJson::Int(v) => Ok(BigRational::from_integer((*v).into())),
            RationalJson::Text(s) => parse_rational(s).ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: format!("invalid rational `{s}`"),
            }),
        }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        RationalJson::Text(r.to_string())
    }
}

impl BoxJson {
    pub fn to_box(&self) -> Result<BaseBox<BigRational>> {
        let conv = |v: &[RationalJson]| {
            v.iter()
                .map(|r| r.to_rational())
                .collect::<Result<Vec<_>>>()
        };
        BaseBox::new(conv(&self.lo)?, conv(&self.hi)?)
    }

    pub fn from_box(b: &BaseBox<BigRational>) -> Self {
        BoxJson {
            lo: b.lo.iter().map(RationalJson::from_rational).collect(),
            hi: b.hi.iter().map(RationalJson::from_rational).collect(),
        }
    }
}

/// A superdomain morphism `source → target` in coordinate form: one pullback
/// series per target coordinate (base coordinates first).
#[derive(Clone, Debug, PartialEq)]
pub struct MorphismData<S> {
    source: Arc<DomainSpec>,
    target: Arc<DomainSpec>,
    pullbacks: Vec<GradedSeries<S>>,
}

impl<S: Scalar> MorphismData<S> {
    /// Structural checks only: pullback count, domains, and grading rank.
    pub fn new_unchecked(
        source: Arc<DomainSpec>,
        target: Arc<DomainSpec>,
        pullbacks: Vec<GradedSeries<S>>,
    ) -> Result<Self> {
        if source.rank() != target.rank() {
            return Err(Error::DimensionMismatch {
                expected: target.rank(),
                found: source.rank(),
            });
        }
        let expected = target.num_base() + target.num_formal();
        if pullbacks.len() != expected {
            return Err(Error::SizeMismatch(format!(
                "target has {expected} coordinates, got {} pullbacks",
                pullbacks.len()
            )));
        }
        if pullbacks.iter().any(|p| **p.domain() != *source) {
            return Err(Error::DomainMismatch);
        }
        let pullbacks = pullbacks
            .into_iter()
            .map(|p| {
                if Arc::ptr_eq(p.domain(), &source) {
                    Ok(p)
                } else {
                    p.with_domain_order(&source)
                }
            })
            .collect::<Result<_>>()?;
        Ok(MorphismData {
            source,
            target,
            pullbacks,
        })
    }

    /// Structural checks plus degree homogeneity of every pullback.
    pub fn new(
        source: Arc<DomainSpec>,
        target: Arc<DomainSpec>,
        pullbacks: Vec<GradedSeries<S>>,
    ) -> Result<Self> {
        let m = Self::new_unchecked(source, target, pullbacks)?;
        m.check_degrees()?;
        Ok(m)
    }

    pub fn identity(domain: &Arc<DomainSpec>) -> Self {
        let pullbacks = domain
            .variables()
            .into_iter()
            .map(|v| GradedSeries::variable(domain, v))
            .collect();
        MorphismData {
            source: Arc::clone(domain),
            target: Arc::clone(domain),
            pullbacks,
        }
    }

    /// Parses `name = expr` pullbacks; every target coordinate must appear.
    pub fn from_exprs(
        source: Arc<DomainSpec>,
        target: Arc<DomainSpec>,
        exprs: &BTreeMap<String, String>,
    ) -> Result<Self> {
        for name in exprs.keys() {
            if target.variable(name).is_none() {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }
        let pullbacks = target
            .variables()
            .into_iter()
            .map(|v| {
                let name = target.variable_name(v);
                let text = exprs
                    .get(name)
                    .ok_or_else(|| Error::SizeMismatch(format!("no pullback for `{name}`")))?;
                parse_series(&source, text)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new_unchecked(source, target, pullbacks)
    }

    pub fn source(&self) -> &Arc<DomainSpec> {
        &self.source
    }

    pub fn target(&self) -> &Arc<DomainSpec> {
        &self.target
    }

    pub fn pullbacks(&self) -> &[GradedSeries<S>] {
        &self.pullbacks
    }

    /// Pullback of one target coordinate.
    pub fn pullback_of(&self, v: Variable) -> &GradedSeries<S> {
        match v {
            Variable::Base(i) => &self.pullbacks[i],
            Variable::Formal(a) => &self.pullbacks[self.target.num_base() + a],
        }
    }

    /// The underlying map of base coordinates, φ = ε ∘ (pullbacks of y).
    pub fn base_map(&self) -> Vec<Polynomial<S>> {
        self.pullbacks[..self.target.num_base()]
            .iter()
            .map(GradedSeries::base_project)
            .collect()
    }

    /// Every pullback must be homogeneous of its coordinate's degree.
    pub fn check_degrees(&self) -> Result<()> {
        for v in self.target.variables() {
            let want = self.target.variable_degree(v);
            let p = self.pullback_of(v);
            if !p.is_homogeneous_of(&want) {
                let detail = match p.homogeneous_degree() {
                    Some(found) => format!("expected degree {want}, found {found}"),
                    None => format!("expected degree {want}, pullback is not homogeneous"),
                };
                return Err(Error::DegreeMismatch {
                    coordinate: self.target.variable_name(v).to_string(),
                    detail,
                });
            }
        }
        Ok(())
    }

    /// Expression strings keyed by target coordinate.
    pub fn to_exprs(&self) -> BTreeMap<String, String> {
        self.target
            .variables()
            .into_iter()
            .map(|v| {
                (
                    self.target.variable_name(v).to_string(),
                    self.pullback_of(v).to_expr_string(),
                )
            })
            .collect()
    }
}

/// Sampling parameters for the base-range check.
#[derive(Clone, Debug)]
pub struct RangeCheck<'a, S> {
    pub source_box: &'a BaseBox<S>,
    pub target_box: &'a BaseBox<S>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MorphismReport {
    pub degrees_ok: bool,
    pub samples_checked: usize,
}

/// Verifies degree homogeneity and, when boxes are supplied, that the base
/// map sends sampled points of the source box into the target box.
pub fn check_morphism_data<S: Scalar>(
    m: &MorphismData<S>,
    range: Option<RangeCheck<'_, S>>,
) -> Result<MorphismReport> {
    m.check_degrees()?;
    let mut samples_checked = 0;
    if let Some(rc) = range {
        if rc.source_box.dim() != m.source.num_base() || rc.target_box.dim() != m.target.num_base()
        {
            return Err(Error::DimensionMismatch {
                expected: m.source.num_base(),
                found: rc.source_box.dim(),
            });
        }
        let phi = m.base_map();
        for point in rc.source_box.samples(rc.samples, rc.seed) {
            let image: Vec<S> = phi.iter().map(|p| p.eval(&point)).collect();
            if !rc.target_box.contains(&image) {
                return Err(Error::RangeViolation {
                    point: format_point(&point),
                });
            }
            samples_checked += 1;
        }
    }
    Ok(MorphismReport {
        degrees_ok: true,
        samples_checked,
    })
}

/// φ*(g) = Σ_ν φ*(g_ν)·(φ*η)^ν with each φ*(g_ν) expanded as the formal
/// Taylor series Σ_α (1/α!)·(∂^α g_ν)(φ(x))·j^α, where φ*(yⁱ) = φⁱ(x) + jⁱ.
///
/// Terms with |α| > N vanish since jⁱ ∈ J, so every sum is finite.
pub fn pullback_section<S: Scalar>(
    m: &MorphismData<S>,
    g: &GradedSeries<S>,
) -> Result<GradedSeries<S>> {
    if **g.domain() != *m.target {
        return Err(Error::DomainMismatch);
    }
    let src = &m.source;
    let order = src.truncation_order();
    let p_target = m.target.num_base();

    let phi = m.base_map();
    let nilpotent: Vec<GradedSeries<S>> = m.pullbacks[..p_target]
        .iter()
        .zip(&phi)
        .map(|(s, base)| s.sub(&GradedSeries::from_base(src, base.clone())))
        .collect::<Result<_>>()?;
    let mut nil_powers = PowerCache::new(src, nilpotent);
    let mut eta_powers = PowerCache::new(src, m.pullbacks[p_target..].to_vec());

    let mut out = GradedSeries::zero(src);
    for (nu, g_nu) in g.terms() {
        let mut eta_part = GradedSeries::one(src);
        for (b, &e) in nu.exponents().iter().enumerate() {
            if e > 0 {
                eta_part = eta_part.mul(eta_powers.get(b, e))?;
            }
        }
        if eta_part.is_zero() {
            continue;
        }
        let base_part = taylor_pullback(g_nu, &phi, &mut nil_powers, order)?;
        out = out.add(&base_part.mul(&eta_part)?)?;
    }
    Ok(out)
}

struct PowerCache<S> {
    domain: Arc<DomainSpec>,
    bases: Vec<GradedSeries<S>>,
    powers: Vec<Vec<GradedSeries<S>>>,
}

impl<S: Scalar> PowerCache<S> {
    fn new(domain: &Arc<DomainSpec>, bases: Vec<GradedSeries<S>>) -> Self {
        let powers = bases
            .iter()
            .map(|_| vec![GradedSeries::one(domain)])
            .collect();
        PowerCache {
            domain: Arc::clone(domain),
            bases,
            powers,
        }
    }

    fn get(&mut self, i: usize, e: u32) -> &GradedSeries<S> {
        let e = e as usize;
        while self.powers[i].len() <= e {
            let next = self.powers[i]
                .last()
                .unwrap()
                .mul(&self.bases[i])
                .expect("cached powers share a domain");
            self.powers[i].push(next);
        }
        debug_assert!(Arc::ptr_eq(self.powers[i][e].domain(), &self.domain));
        &self.powers[i][e]
    }

    fn is_zero(&self, i: usize) -> bool {
        self.bases[i].is_zero()
    }
}

fn taylor_pullback<S: Scalar>(
    g: &Polynomial<S>,
    phi: &[Polynomial<S>],
    nil_powers: &mut PowerCache<S>,
    order: u32,
) -> Result<GradedSeries<S>> {
    let domain = Arc::clone(&nil_powers.domain);
    let mut out = GradedSeries::zero(&domain);
    let mut stack: Vec<(Vec<u32>, usize, u32)> = vec![(vec![0; phi.len()], 0, order)];
    // Enumerate α with |α| ≤ N, αᵢ ≤ deg_i g, and αᵢ = 0 whenever jⁱ = 0.
    let mut alphas = Vec::new();
    while let Some((a, i, budget)) = stack.pop() {
        if i == phi.len() {
            alphas.push(a);
            continue;
        }
        let cap = if nil_powers.is_zero(i) {
            0
        } else {
            budget.min(g.degree_in(i))
        };
        for e in 0..=cap {
            let mut next = a.clone();
            next[i] = e;
            stack.push((next, i + 1, budget - e));
        }
    }
    alphas.sort();
    for alpha in alphas {
        let mut deriv = g.clone();
        let mut weight = S::one();
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                deriv = deriv.derivative(i);
            }
            weight = weight * S::inv_factorial(k);
        }
        if deriv.is_zero() {
            continue;
        }
        let coeff = deriv.compose(phi).scale(&weight);
        let mut term = GradedSeries::from_base(&domain, coeff);
        for (i, &k) in alpha.iter().enumerate() {
            if k > 0 {
                term = term.mul(nil_powers.get(i, k))?;
            }
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

/// `outer ∘ inner`: pullbacks are `inner*(outer*(z))`.
pub fn compose<S: Scalar>(
    outer: &MorphismData<S>,
    inner: &MorphismData<S>,
) -> Result<MorphismData<S>> {
    if *inner.target != *outer.source {
        return Err(Error::DomainMismatch);
    }
    let pullbacks = outer
        .pullbacks
        .iter()
        .map(|p| {
            let p = if Arc::ptr_eq(p.domain(), &inner.target) {
                p.clone()
            } else {
                p.with_domain_order(&inner.target)?
            };
            pullback_section(inner, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MorphismData {
        source: Arc::clone(&inner.source),
        target: Arc::clone(&outer.target),
        pullbacks,
    })
}

/// Left partial derivative; see [`GradedSeries::partial_derivative`].
pub fn partial_derivative<S: Scalar>(f: &GradedSeries<S>, v: Variable) -> GradedSeries<S> {
    f.partial_derivative(v)
}

/// Entry (w, v) is ∂_v φ*(w): rows are target coordinates and columns source
/// coordinates, base first. Entry (w, v) is homogeneous of degree deg w + deg v.
pub fn jacobian<S: Scalar>(m: &MorphismData<S>) -> Vec<Vec<GradedSeries<S>>> {
    let cols = m.source.variables();
    m.target
        .variables()
        .into_iter()
        .map(|w| {
            let p = m.pullback_of(w);
            cols.iter().map(|&v| p.partial_derivative(v)).collect()
        })
        .collect()
}

/// ε(φ*g) = g₀ ∘ φ.
pub fn base_map_commutes<S: Scalar>(m: &MorphismData<S>, g: &GradedSeries<S>) -> Result<bool> {
    let lhs = pullback_section(m, g)?.base_project();
    let rhs = g.base_project().compose(&m.base_map());
    Ok(lhs == rhs)
}

/// Largest ℓ with [f]_m ∈ 𝔪_m^ℓ: min over μ of ord_m(f_μ) + |μ|.
pub fn maximal_ideal_order<S: Scalar>(f: &GradedSeries<S>, point: &[S]) -> Order {
    f.terms()
        .filter_map(|(mu, c)| c.vanishing_order(point).map(|o| o + mu.order()))
        .min()
        .map_or(Order::Infinite, Order::Finite)
}

/// A truncated expansion at a base point, stored in shifted coordinates
/// `u = x − center`; no term has weight (u-degree + |μ|) above `max_weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S> {
    center: Vec<S>,
    max_weight: u32,
    shifted: GradedSeries<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn center(&self) -> &[S] {
        &self.center
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    /// The data as a series in `u = x − center`.
    pub fn shifted(&self) -> &GradedSeries<S> {
        &self.shifted
    }

    /// The polynomial representative in the original coordinates.
    pub fn to_series(&self) -> GradedSeries<S> {
        let back: Vec<S> = self.center.iter().map(|c| -c.clone()).collect();
        self.shifted.map_coefficients(|p| p.translate(&back))
    }

    /// Product truncated at the smaller of the two weights.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.center != other.center {
            return Err(Error::DomainMismatch);
        }
        let max_weight = self.max_weight.min(other.max_weight);
        Ok(Jet {
            center: self.center.clone(),
            max_weight,
            shifted: truncate_weight(&self.shifted.mul(&other.shifted)?, max_weight),
        })
    }
}

fn shift_to<S: Scalar>(f: &GradedSeries<S>, point: &[S]) -> Result<GradedSeries<S>> {
    if point.len() != f.domain().num_base() {
        return Err(Error::DimensionMismatch {
            expected: f.domain().num_base(),
            found: point.len(),
        });
    }
    Ok(f.map_coefficients(|p| p.translate(point)))
}

/// Keeps terms of weight `deg_u + |μ| ≤ max_weight`.
fn truncate_weight<S: Scalar>(f: &GradedSeries<S>, max_weight: u32) -> GradedSeries<S> {
    let mut out = GradedSeries::zero(f.domain());
    for (mu, c) in f.terms() {
        if mu.order() <= max_weight {
            out.add_term(mu.clone(), c.truncate_degree(max_weight - mu.order() + 1));
        }
    }
    out
}

/// The polynomial P with [f]_m − [P]_m ∈ 𝔪_m^k: for every |μ| < k, the
/// Taylor expansion of f_μ at m up to degree k − |μ| − 1.
pub fn jet_at<S: Scalar>(f: &GradedSeries<S>, point: &[S], k: u32) -> Result<Jet<S>> {
    if k == 0 {
        return Err(Error::TruncationOrder {
            requested: 0,
            max: f.domain().truncation_order(),
        });
    }
    Ok(Jet {
        center: point.to_vec(),
        max_weight: k - 1,
        shifted: truncate_weight(&shift_to(f, point)?, k - 1),
    })
}

/// Inverse of the germ of `f` at a point where f₀ does not vanish, up to
/// weight `k`.
pub fn germ_invert<S: Scalar>(f: &GradedSeries<S>, point: &[S], k: u32) -> Result<Jet<S>> {
    let shifted = truncate_weight(&shift_to(f, point)?, k);
    let domain = Arc::clone(shifted.domain());
    let c = shifted
        .coefficient(&GradedMonomial::one(domain.num_formal()))
        .constant_term();
    if c.is_zero() {
        return Err(Error::NotInvertible(format!(
            "independent term vanishes at {}",
            format_point(point)
        )));
    }
    let c_inv = S::one() / c.clone();
    let j = shifted.sub(&GradedSeries::constant(&domain, c))?;
    let step = j.scale(&-c_inv.clone());
    let mut sum = GradedSeries::one(&domain);
    let mut power = GradedSeries::one(&domain);
    for _ in 0..k {
        power = truncate_weight(&power.mul(&step)?, k);
        if power.is_zero() {
            break;
        }
        sum = sum.add(&power)?;
    }
    Ok(Jet {
        center: point.to_vec(),
        max_weight: k,
        shifted: sum.scale(&c_inv),
    })
}

/// JSON form: `{"source": …, "target": …, "pullbacks": {"y": "x + theta^2", …}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphismJson {
    pub source: DomainSpec,
    pub target: DomainSpec,
    pub pullbacks: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_box: Option<BoxJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_box: Option<BoxJson>,
}

impl MorphismJson {
    pub fn to_morphism(&self) -> Result<MorphismData<BigRational>> {
        MorphismData::from_exprs(
            Arc::new(self.source.clone()),
            Arc::new(self.target.clone()),
            &self.pullbacks,
        )
    }

    pub fn from_morphism(m: &MorphismData<BigRational>) -> Self {
        MorphismJson {
            source: (*m.source).clone(),
            target: (*m.target).clone(),
            pullbacks: m.to_exprs(),
            source_box: None,
            target_box: None,
        }
    }
}
