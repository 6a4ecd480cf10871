//! Truncated Z₂ⁿ-graded formal power series `C[x][[ξ¹,…,ξ^q]]` with exact
//! polynomial coefficients in the degree-zero base variables.
//!
//! Formal variables commute according to the sign rule
//! `ξᵃξᵇ = (−1)^⟨deg ξᵃ, deg ξᵇ⟩ ξᵇξᵃ`; odd ones square to zero. Every stored
//! monomial is in canonical (ascending variable index) order and every series
//! is truncated eagerly at the domain's order `N`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{enumerate_degrees, Degree};
use crate::poly::Polynomial;
use crate::scalar::Scalar;

/// A formal (nonzero degree) coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalVar {
    pub name: String,
    pub degree: Degree,
}

/// Coordinates and truncation order of a Z₂ⁿ-superdomain.
///
/// Formal variables are stored grouped by lexicographic degree, keeping
/// declaration order within a degree; monomial exponent vectors index into
/// this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain")]
pub struct DomainSpec {
    n: usize,
    base_vars: Vec<String>,
    formal_vars: Vec<FormalVar>,
    truncation_order: u32,
}

#[derive(Deserialize)]
struct RawDomain {
    n: usize,
    #[serde(default)]
    base_vars: Vec<String>,
    #[serde(default)]
    formal_vars: Vec<FormalVar>,
    truncation_order: u32,
}

impl TryFrom<RawDomain> for DomainSpec {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        DomainSpec::new(raw.n, raw.base_vars, raw.formal_vars, raw.truncation_order)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl DomainSpec {
    pub fn new(
        n: usize,
        base_vars: Vec<String>,
        mut formal_vars: Vec<FormalVar>,
        truncation_order: u32,
    ) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for name in base_vars.iter().chain(formal_vars.iter().map(|v| &v.name)) {
            if !is_identifier(name) {
                return Err(Error::InvalidDomain(format!(
                    "`{name}` is not an identifier"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidDomain(format!("duplicate variable `{name}`")));
            }
        }
        for v in &formal_vars {
            if v.degree.rank() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.degree.rank(),
                });
            }
            if v.degree.is_zero() {
                return Err(Error::InvalidDomain(format!(
                    "formal variable `{}` has degree zero",
                    v.name
                )));
            }
        }
        formal_vars.sort_by(|a, b| a.degree.cmp(&b.degree));
        Ok(DomainSpec {
            n,
            base_vars,
            formal_vars,
            truncation_order,
        })
    }

    /// Convenience constructor from `(name, degree)` pairs.
    pub fn with_vars(
        n: usize,
        base_vars: &[&str],
        formal_vars: &[(&str, Degree)],
        truncation_order: u32,
    ) -> Result<Self> {
        Self::new(
            n,
            base_vars.iter().map(|s| s.to_string()).collect(),
            formal_vars
                .iter()
                .map(|(name, degree)| FormalVar {
                    name: name.to_string(),
                    degree: degree.clone(),
                })
                .collect(),
            truncation_order,
        )
    }

    /// The Z₂²-superdomain of dimension 1|(1,1,1) with coordinates
    /// `x, xi, eta, theta` of degrees (0,0),(0,1),(1,0),(1,1).
    pub fn standard_z2_squared(truncation_order: u32) -> Self {
        let deg = |s| Degree::from_bit_str(s).unwrap();
        Self::with_vars(
            2,
            &["x"],
            &[("xi", deg("01")), ("eta", deg("10")), ("theta", deg("11"))],
            truncation_order,
        )
        .unwrap()
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn base_vars(&self) -> &[String] {
        &self.base_vars
    }

    pub fn formal_vars(&self) -> &[FormalVar] {
        &self.formal_vars
    }

    pub fn num_base(&self) -> usize {
        self.base_vars.len()
    }

    pub fn num_formal(&self) -> usize {
        self.formal_vars.len()
    }

    pub fn truncation_order(&self) -> u32 {
        self.truncation_order
    }

    pub fn formal_degree(&self, a: usize) -> &Degree {
        &self.formal_vars[a].degree
    }

    pub fn is_odd(&self, a: usize) -> bool {
        self.formal_vars[a].degree.is_odd()
    }

    /// Same coordinates with a different truncation order.
    pub fn with_order(&self, truncation_order: u32) -> Self {
        DomainSpec {
            truncation_order,
            ..self.clone()
        }
    }

    /// Dimension p|q with q counted per nonzero degree in lexicographic order.
    pub fn dimension(&self) -> (usize, Vec<usize>) {
        let q = enumerate_degrees(self.n)
            .into_iter()
            .skip(1)
            .map(|d| self.formal_vars.iter().filter(|v| v.degree == d).count())
            .collect();
        (self.base_vars.len(), q)
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base_vars.iter().position(|v| v == name)
    }

    pub fn formal_index(&self, name: &str) -> Option<usize> {
        self.formal_vars.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<Variable> {
        self.base_index(name)
            .map(Variable::Base)
            .or_else(|| self.formal_index(name).map(Variable::Formal))
    }

    pub fn variable_name(&self, v: Variable) -> &str {
        match v {
            Variable::Base(i) => &self.base_vars[i],
            Variable::Formal(a) => &self.formal_vars[a].name,
        }
    }

    pub fn variable_degree(&self, v: Variable) -> Degree {
        match v {
            Variable::Base(_) => Degree::zero(self.n),
            Variable::Formal(a) => self.formal_vars[a].degree.clone(),
        }
    }

    /// All coordinates, base first.
    pub fn variables(&self) -> Vec<Variable> {
        (0..self.num_base())
            .map(Variable::Base)
            .chain((0..self.num_formal()).map(Variable::Formal))
            .collect()
    }

    /// Sorts a word of formal variables into canonical order.
    ///
    /// Returns the accumulated sign (one factor (−1)^⟨deg a, deg b⟩ per
    /// transposition of distinct letters) and the canonical monomial, or
    /// `None` when an odd letter occurs twice.
    pub fn normalize_product(&self, word: &[usize]) -> Option<(i8, GradedMonomial)> {
        let mut inversions = 0u8;
        for i in 0..word.len() {
            for j in i + 1..word.len() {
                if word[i] > word[j] {
                    inversions ^= self.formal_degree(word[i]).dot(self.formal_degree(word[j]));
                }
            }
        }
        let mut exps = vec![0u32; self.num_formal()];
        for &a in word {
            exps[a] += 1;
            if exps[a] > 1 && self.is_odd(a) {
                return None;
            }
        }
        Some((if inversions == 1 { -1 } else { 1 }, GradedMonomial(exps)))
    }

    /// [`normalize_product`](Self::normalize_product) on variable names.
    pub fn normalize_word(&self, names: &[&str]) -> Result<Option<(i8, GradedMonomial)>> {
        let word = names
            .iter()
            .map(|n| {
                self.formal_index(n)
                    .ok_or_else(|| Error::UnknownVariable(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.normalize_product(&word))
    }

    /// Σ μₐ·deg(ξᵃ) mod 2.
    pub fn monomial_degree(&self, mu: &GradedMonomial) -> Degree {
        let mut bits = vec![0u8; self.n];
        for (a, &e) in mu.0.iter().enumerate() {
            if e % 2 == 1 {
                for (b, d) in bits.iter_mut().zip(self.formal_degree(a).bits()) {
                    *b ^= d;
                }
            }
        }
        Degree::new(bits).unwrap()
    }

    /// Checks exponent caps and length; does not check the truncation order.
    pub fn validate_monomial(&self, mu: &GradedMonomial) -> Result<()> {
        if mu.0.len() != self.num_formal() {
            return Err(Error::InvalidMonomial(format!(
                "expected {} exponents, found {}",
                self.num_formal(),
                mu.0.len()
            )));
        }
        if let Some(a) = (0..self.num_formal()).find(|&a| self.is_odd(a) && mu.0[a] > 1) {
            return Err(Error::InvalidMonomial(format!(
                "odd variable `{}` raised to power {}",
                self.formal_vars[a].name, mu.0[a]
            )));
        }
        Ok(())
    }

    /// Sign and product of two canonical monomials `μ·ν`, `None` if zero.
    pub(crate) fn multiply_monomials(
        &self,
        left: &GradedMonomial,
        right: &GradedMonomial,
    ) -> Option<(bool, GradedMonomial)> {
        let mut exps = Vec::with_capacity(left.0.len());
        for (a, (l, r)) in left.0.iter().zip(&right.0).enumerate() {
            let e = l + r;
            if e > 1 && self.is_odd(a) {
                return None;
            }
            exps.push(e);
        }
        // Each factor of ν with a smaller index crosses each factor of μ with a larger one.
        let mut sign = 0u32;
        for (b, &r) in right.0.iter().enumerate() {
            if r == 0 {
                continue;
            }
            for (a, &l) in left.0.iter().enumerate().skip(b + 1) {
                if l != 0 && self.formal_degree(a).dot(self.formal_degree(b)) == 1 {
                    sign += l * r;
                }
            }
        }
        Some((sign % 2 == 1, GradedMonomial(exps)))
    }

    /// All canonical monomials of degree `d` with total order ≤ `max_order`.
    pub fn enumerate_monomials(&self, d: &Degree, max_order: u32) -> Vec<GradedMonomial> {
        let mut out = Vec::new();
        let mut exps = vec![0u32; self.num_formal()];
        self.enumerate_rec(0, max_order, &mut exps, &mut out);
        out.retain(|mu| &self.monomial_degree(mu) == d);
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
        out
    }

    fn enumerate_rec(
        &self,
        a: usize,
        budget: u32,
        exps: &mut Vec<u32>,
        out: &mut Vec<GradedMonomial>,
    ) {
        if a == self.num_formal() {
            out.push(GradedMonomial(exps.clone()));
            return;
        }
        let cap = if self.is_odd(a) {
            budget.min(1)
        } else {
            budget
        };
        for e in 0..=cap {
            exps[a] = e;
            self.enumerate_rec(a + 1, budget - e, exps, out);
        }
        exps[a] = 0;
    }
}

/// A base or formal coordinate of a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Base(usize),
    Formal(usize),
}

/// Exponent vector over the formal variables, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedMonomial(Vec<u32>);

impl GradedMonomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        GradedMonomial(exponents)
    }

    pub fn one(q: usize) -> Self {
        GradedMonomial(vec![0; q])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total exponent |μ|.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

/// J-adic or 𝔪-adic order: a natural number or +∞ (for zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn at_least(self, k: u32) -> bool {
        match self {
            Order::Finite(v) => v >= k,
            Order::Infinite => true,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(v) => write!(f, "{v}"),
            Order::Infinite => write!(f, "inf"),
        }
    }
}

/// A truncated series `Σ f_μ(x) ξ^μ` over a [`DomainSpec`].
#[derive(Clone, Debug)]
pub struct GradedSeries<S> {
    domain: Arc<DomainSpec>,
    terms: BTreeMap<GradedMonomial, Polynomial<S>>,
}

impl<S: PartialEq> PartialEq for GradedSeries<S> {
    fn eq(&self, other: &Self) -> bool {
        same_domain(&self.domain, &other.domain) && self.terms == other.terms
    }
}

fn same_domain(a: &Arc<DomainSpec>, b: &Arc<DomainSpec>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl<S: Scalar> GradedSeries<S> {
    pub fn zero(domain: &Arc<DomainSpec>) -> Self {
        GradedSeries {
            domain: Arc::clone(domain),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(domain: &Arc<DomainSpec>, c: S) -> Self {
        Self::from_base(domain, Polynomial::constant(domain.num_base(), c))
    }

    pub fn one(domain: &Arc<DomainSpec>) -> Self {
        Self::constant(domain, S::one())
    }

    pub fn from_base(domain: &Arc<DomainSpec>, p: Polynomial<S>) -> Self {
        let mut s = Self::zero(domain);
        s.add_term(GradedMonomial::one(domain.num_formal()), p);
        s
    }

    pub fn base_var(domain: &Arc<DomainSpec>, i: usize) -> Self {
        Self::from_base(domain, Polynomial::var(domain.num_base(), i))
    }

    pub fn formal_var(domain: &Arc<DomainSpec>, a: usize) -> Self {
        let mut e = vec![0; domain.num_formal()];
        e[a] = 1;
        Self::monomial(
            domain,
            GradedMonomial(e),
            Polynomial::one(domain.num_base()),
        )
    }

    pub fn variable(domain: &Arc<DomainSpec>, v: Variable) -> Self {
        match v {
            Variable::Base(i) => Self::base_var(domain, i),
            Variable::Formal(a) => Self::formal_var(domain, a),
        }
    }

    /// Looks a coordinate up by name.
    pub fn named(domain: &Arc<DomainSpec>, name: &str) -> Result<Self> {
        domain
            .variable(name)
            .map(|v| Self::variable(domain, v))
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// `c(x)·ξ^μ`, truncated.
    pub fn monomial(domain: &Arc<DomainSpec>, mu: GradedMonomial, c: Polynomial<S>) -> Self {
        let mut s = Self::zero(domain);
        s.add_term(mu, c);
        s
    }

    /// Builds a series from explicit terms, validating monomials and
    /// dropping orders above `N`.
    pub fn from_terms(
        domain: &Arc<DomainSpec>,
        terms: impl IntoIterator<Item = (GradedMonomial, Polynomial<S>)>,
    ) -> Result<Self> {
        let mut s = Self::zero(domain);
        for (mu, c) in terms {
            domain.validate_monomial(&mu)?;
            if c.nvars() != domain.num_base() {
                return Err(Error::DimensionMismatch {
                    expected: domain.num_base(),
                    found: c.nvars(),
                });
            }
            s.add_term(mu, c);
        }
        Ok(s)
    }

    pub fn domain(&self) -> &Arc<DomainSpec> {
        &self.domain
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GradedMonomial, &Polynomial<S>)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mu: &GradedMonomial) -> Polynomial<S> {
        self.terms
            .get(mu)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(self.domain.num_base()))
    }

    /// Adds `c·ξ^μ` unless it is zero or above the truncation order.
    pub(crate) fn add_term(&mut self, mu: GradedMonomial, c: Polynomial<S>) {
        if c.is_zero() || mu.order() > self.domain.truncation_order() {
            return;
        }
        match self.terms.entry(mu) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().add(&c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if same_domain(&self.domain, &other.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let mut out = self.clone();
        for (mu, c) in &other.terms {
            out.add_term(mu.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        GradedSeries {
            domain: Arc::clone(&self.domain),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero(&self.domain);
        for (mu, c) in &self.terms {
            out.add_term(mu.clone(), c.scale(s));
        }
        out
    }

    /// Multiplies every coefficient by a base polynomial.
    pub fn scale_base(&self, p: &Polynomial<S>) -> Self {
        let mut out = Self::zero(&self.domain);
        for (mu, c) in &self.terms {
            out.add_term(mu.clone(), c.mul(p));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let max = self.domain.truncation_order();
        let mut out = Self::zero(&self.domain);
        for (mu, a) in &self.terms {
            for (nu, b) in &other.terms {
                if mu.order() + nu.order() > max {
                    continue;
                }
                if let Some((negative, prod)) = self.domain.multiply_monomials(mu, nu) {
                    let c = a.mul(b);
                    out.add_term(prod, if negative { c.neg() } else { c });
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(&self.domain);
        for _ in 0..k {
            out = out.mul(self).expect("same domain");
        }
        out
    }

    /// The independent term f₀ (image under the base projection ε).
    pub fn base_project(&self) -> Polynomial<S> {
        self.coefficient(&GradedMonomial::one(self.domain.num_formal()))
    }

    /// Inverse of a series whose independent term is a nonzero constant:
    /// with f = c + j, j ∈ J, returns c⁻¹·Σ_{k≤N} (−c⁻¹j)ᵏ.
    pub fn invert(&self) -> Result<Self> {
        let f0 = self.base_project();
        let c = match f0.as_constant() {
            Some(c) if !c.is_zero() => c,
            Some(_) => return Err(Error::NotInvertible("independent term is zero".into())),
            None => {
                return Err(Error::NotInvertible(
                    "independent term is not a constant".into(),
                ))
            }
        };
        let c_inv = S::one() / c.clone();
        let j = self.sub(&Self::constant(&self.domain, c))?;
        let step = j.scale(&-c_inv.clone());
        let mut sum = Self::one(&self.domain);
        let mut power = Self::one(&self.domain);
        for _ in 0..self.domain.truncation_order() {
            power = power.mul(&step)?;
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power)?;
        }
        Ok(sum.scale(&c_inv))
    }

    /// min |μ| over stored terms.
    pub fn j_adic_valuation(&self) -> Order {
        self.terms
            .keys()
            .map(GradedMonomial::order)
            .min()
            .map_or(Order::Infinite, Order::Finite)
    }

    /// Representative of the class in O/J^k: drops every term with |μ| ≥ k.
    pub fn truncate(&self, k: u32) -> Result<Self> {
        let max = self.domain.truncation_order();
        if k > max + 1 {
            return Err(Error::TruncationOrder { requested: k, max });
        }
        Ok(GradedSeries {
            domain: Arc::clone(&self.domain),
            terms: self
                .terms
                .iter()
                .filter(|(mu, _)| mu.order() < k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        })
    }

    pub fn homogeneous_component(&self, d: &Degree) -> Self {
        GradedSeries {
            domain: Arc::clone(&self.domain),
            terms: self
                .terms
                .iter()
                .filter(|(mu, _)| &self.domain.monomial_degree(mu) == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Nonzero homogeneous components, by ascending degree.
    pub fn decompose(&self) -> Vec<(Degree, Self)> {
        enumerate_degrees(self.domain.rank())
            .into_iter()
            .map(|d| {
                let c = self.homogeneous_component(&d);
                (d, c)
            })
            .filter(|(_, c)| !c.is_zero())
            .collect()
    }

    /// `Some(d)` if every term has degree `d`; the zero series is
    /// homogeneous of every degree and reports `Some(0)`.
    pub fn homogeneous_degree(&self) -> Option<Degree> {
        let mut degrees = self.terms.keys().map(|mu| self.domain.monomial_degree(mu));
        let first = match degrees.next() {
            Some(d) => d,
            None => return Some(Degree::zero(self.domain.rank())),
        };
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous_of(&self, d: &Degree) -> bool {
        self.terms
            .keys()
            .all(|mu| &self.domain.monomial_degree(mu) == d)
    }

    /// Left partial derivative.
    ///
    /// For a formal variable `v`, one factor of `v` is moved to the front of
    /// the canonical monomial (collecting (−1)^⟨deg v, deg w⟩ for every factor
    /// `w` it crosses), multiplied by the exponent of `v`, and removed.
    pub fn partial_derivative(&self, v: Variable) -> Self {
        let mut out = Self::zero(&self.domain);
        match v {
            Variable::Base(i) => {
                for (mu, c) in &self.terms {
                    out.add_term(mu.clone(), c.derivative(i));
                }
            }
            Variable::Formal(a) => {
                let deg_v = self.domain.formal_degree(a);
                for (mu, c) in &self.terms {
                    let e = mu.0[a];
                    if e == 0 {
                        continue;
                    }
                    let crossings: u32 = (0..a)
                        .filter(|&w| self.domain.formal_degree(w).dot(deg_v) == 1)
                        .map(|w| mu.0[w])
                        .sum();
                    let mut factor = S::from_int(i64::from(e));
                    if crossings % 2 == 1 {
                        factor = -factor;
                    }
                    let mut nu = mu.0.clone();
                    nu[a] -= 1;
                    out.add_term(GradedMonomial(nu), c.scale(&factor));
                }
            }
        }
        out
    }

    /// Re-expresses the series in a domain whose formal variables include
    /// these ones: `base_map[i]` and `formal_map[a]` give the new indices.
    /// The target domain must order mapped formal variables the same way.
    pub fn embed(
        &self,
        domain: &Arc<DomainSpec>,
        base_map: &[usize],
        formal_map: &[usize],
    ) -> Self {
        let mut out = Self::zero(domain);
        for (mu, c) in &self.terms {
            let mut e = vec![0; domain.num_formal()];
            for (a, &k) in mu.0.iter().enumerate() {
                e[formal_map[a]] = k;
            }
            out.add_term(GradedMonomial(e), c.embed(domain.num_base(), base_map));
        }
        out
    }

    /// Maps every coefficient through `f`.
    pub fn map_coefficients(&self, mut f: impl FnMut(&Polynomial<S>) -> Polynomial<S>) -> Self {
        let mut out = Self::zero(&self.domain);
        for (mu, c) in &self.terms {
            out.add_term(mu.clone(), f(c));
        }
        out
    }

    /// Drops terms for which `keep` is false.
    pub fn filter_terms(
        &self,
        mut keep: impl FnMut(&GradedMonomial, &Polynomial<S>) -> bool,
    ) -> Self {
        GradedSeries {
            domain: Arc::clone(&self.domain),
            terms: self
                .terms
                .iter()
                .filter(|(m, c)| keep(m, c))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Same terms in a domain with identical coordinates but another order.
    pub fn with_domain_order(&self, domain: &Arc<DomainSpec>) -> Result<Self> {
        if domain.base_vars() != self.domain.base_vars()
            || domain.formal_vars() != self.domain.formal_vars()
        {
            return Err(Error::DomainMismatch);
        }
        let mut out = Self::zero(domain);
        for (mu, c) in &self.terms {
            out.add_term(mu.clone(), c.clone());
        }
        Ok(out)
    }

    /// Canonical text in the expression grammar, e.g. `1 + xi*eta - 3/2*theta^2`.
    ///
    /// Terms appear by ascending order |μ|, then by descending exponent
    /// vector; multi-term coefficients are parenthesized.
    pub fn to_expr_string(&self) -> String {
        let names = self.domain.base_vars();
        let mut pieces: Vec<(bool, String)> = Vec::new();
        for (mu, c) in self.ordered_terms() {
            let formal = self.monomial_string(mu);
            if formal.is_empty() {
                let text = c.to_string_with(names);
                pieces.extend(split_signed_terms(&text));
                continue;
            }
            if c.num_terms() == 1 {
                let text = c.to_string_with(names);
                let (negative, body) = match text.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, text),
                };
                let piece = if body == "1" {
                    formal
                } else {
                    format!("{body}*{formal}")
                };
                pieces.push((negative, piece));
            } else {
                pieces.push((false, format!("({})*{formal}", c.to_string_with(names))));
            }
        }
        if pieces.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (negative, body)) in pieces.into_iter().enumerate() {
            match (i, negative) {
                (0, true) => {
                    out.push('-');
                    out.push_str(&body);
                }
                (0, false) => out.push_str(&body),
                (_, true) => {
                    out.push_str(" - ");
                    out.push_str(&body);
                }
                (_, false) => {
                    out.push_str(" + ");
                    out.push_str(&body);
                }
            }
        }
        out
    }

    fn ordered_terms(&self) -> Vec<(&GradedMonomial, &Polynomial<S>)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
        terms
    }

    fn monomial_string(&self, mu: &GradedMonomial) -> String {
        let mut parts = Vec::new();
        for (a, &e) in mu.0.iter().enumerate() {
            let name = &self.domain.formal_vars[a].name;
            match e {
                0 => {}
                1 => parts.push(name.clone()),
                e => parts.push(format!("{name}^{e}")),
            }
        }
        parts.join("*")
    }

    /// Sorted term list for JSON output.
    pub fn to_term_list(&self) -> Vec<SeriesTerm> {
        self.terms
            .iter()
            .map(|(mu, c)| SeriesTerm {
                mu: mu.0.clone(),
                coeff: c.to_string_with(self.domain.base_vars()),
            })
            .collect()
    }
}

/// Splits `a + b - c` at top-level signs into `(negative, body)` pieces.
fn split_signed_terms(text: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let (mut negative, mut rest) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    loop {
        let plus = rest.find(" + ");
        let minus = rest.find(" - ");
        let next = match (plus, minus) {
            (Some(p), Some(m)) => Some(p.min(m)),
            (p, m) => p.or(m),
        };
        match next {
            Some(pos) => {
                out.push((negative, rest[..pos].to_string()));
                negative = &rest[pos..pos + 3] == " - ";
                rest = &rest[pos + 3..];
            }
            None => {
                out.push((negative, rest.to_string()));
                break;
            }
        }
    }
    out
}

/// One entry of a serialized series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub mu: Vec<u32>,
    pub coeff: String,
}

impl<S: Scalar> fmt::Display for GradedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_expr_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Series = GradedSeries<BigRational>;

    fn dom(order: u32) -> Arc<DomainSpec> {
        Arc::new(DomainSpec::standard_z2_squared(order))
    }

    fn var(d: &Arc<DomainSpec>, name: &str) -> Series {
        Series::named(d, name).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    fn c(d: &Arc<DomainSpec>, n: i64) -> Series {
        Series::constant(d, q(n))
    }

    #[test]
    fn domain_validation() {
        let deg = |s| Degree::from_bit_str(s).unwrap();
        assert!(DomainSpec::with_vars(2, &["x"], &[("xi", deg("00"))], 3).is_err());
        assert!(DomainSpec::with_vars(2, &["x"], &[("x", deg("01"))], 3).is_err());
        assert!(DomainSpec::with_vars(2, &["x"], &[("xi", deg("1"))], 3).is_err());
        let d = DomainSpec::with_vars(
            2,
            &["x"],
            &[("theta", deg("11")), ("xi", deg("01")), ("eta", deg("10"))],
            3,
        )
        .unwrap();
        let names: Vec<_> = d.formal_vars().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["xi", "eta", "theta"]);
        assert_eq!(d.dimension(), (1, vec![1, 1, 1]));
    }

    #[test]
    fn domain_json() {
        let json = r#"{"n":2,"base_vars":["x"],"formal_vars":[{"name":"xi","degree":[0,1]},{"name":"eta","degree":[1,0]},{"name":"theta","degree":[1,1]}],"truncation_order":6}"#;
        let d: DomainSpec = serde_json::from_str(json).unwrap();
        assert_eq!(d, DomainSpec::standard_z2_squared(6));
        assert_eq!(serde_json::to_string(&d).unwrap(), json);
    }

    #[test]
    fn normalize_product_examples() {
        let d = dom(4);
        let (sign, mu) = d.normalize_word(&["eta", "xi"]).unwrap().unwrap();
        assert_eq!((sign, mu.exponents()), (1, &[1, 1, 0][..]));
        let (sign, mu) = d.normalize_word(&["theta", "xi"]).unwrap().unwrap();
        assert_eq!((sign, mu.exponents()), (-1, &[1, 0, 1][..]));
        assert_eq!(d.normalize_word(&["xi", "xi"]).unwrap(), None);
        assert!(matches!(
            d.normalize_word(&["zeta"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn monomial_degrees() {
        let d = dom(4);
        let deg = |s| Degree::from_bit_str(s).unwrap();
        assert_eq!(
            d.monomial_degree(&GradedMonomial::new(vec![1, 1, 1])),
            deg("00")
        );
        assert_eq!(d.monomial_degree(&GradedMonomial::one(3)), deg("00"));
        assert_eq!(
            d.monomial_degree(&GradedMonomial::new(vec![0, 0, 2])),
            deg("00")
        );
    }

    #[test]
    fn products_apply_sign_rule() {
        let d = dom(4);
        let (xi, eta, theta) = (var(&d, "xi"), var(&d, "eta"), var(&d, "theta"));
        assert_eq!(xi.mul(&eta).unwrap(), eta.mul(&xi).unwrap());
        assert!(xi.mul(&xi).unwrap().is_zero());
        assert_eq!(theta.mul(&xi).unwrap(), xi.mul(&theta).unwrap().neg());
        let lhs = c(&d, 1)
            .add(&theta)
            .unwrap()
            .mul(&c(&d, 1).sub(&theta).unwrap())
            .unwrap();
        assert_eq!(lhs, c(&d, 1).sub(&theta.pow(2)).unwrap());
    }

    #[test]
    fn eager_truncation() {
        let d = dom(2);
        let theta = var(&d, "theta");
        assert!(theta.pow(3).is_zero());
        assert_eq!(theta.pow(2).j_adic_valuation(), Order::Finite(2));
    }

    #[test]
    fn inverse_examples() {
        let d = dom(3);
        let theta = var(&d, "theta");
        let inv = c(&d, 1).sub(&theta).unwrap().invert().unwrap();
        let expected = c(&d, 1)
            .add(&theta)
            .unwrap()
            .add(&theta.pow(2))
            .unwrap()
            .add(&theta.pow(3))
            .unwrap();
        assert_eq!(inv, expected);
        assert_eq!(c(&d, 1).invert().unwrap(), c(&d, 1));

        let d2 = dom(2);
        let theta = var(&d2, "theta");
        let f = c(&d2, 2).add(&theta).unwrap();
        let inv = f.invert().unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let expected = Series::constant(&d2, half)
            .sub(&theta.scale(&BigRational::new(1.into(), 4.into())))
            .unwrap()
            .add(&theta.pow(2).scale(&BigRational::new(1.into(), 8.into())))
            .unwrap();
        assert_eq!(inv, expected);
        assert_eq!(f.mul(&inv).unwrap(), c(&d2, 1));
    }

    #[test]
    fn inverse_rejections() {
        let d = dom(3);
        let x = var(&d, "x");
        assert!(matches!(x.invert(), Err(Error::NotInvertible(_))));
        assert!(matches!(
            c(&d, 1).add(&x).unwrap().invert(),
            Err(Error::NotInvertible(_))
        ));
        assert!(matches!(
            var(&d, "xi").invert(),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn valuation_examples() {
        let d = dom(4);
        let x = var(&d, "x");
        let xe = var(&d, "xi").mul(&var(&d, "eta")).unwrap();
        assert_eq!(
            x.pow(2).add(&xe).unwrap().j_adic_valuation(),
            Order::Finite(0)
        );
        assert_eq!(
            xe.add(&var(&d, "theta").pow(3)).unwrap().j_adic_valuation(),
            Order::Finite(2)
        );
        assert_eq!(Series::zero(&d).j_adic_valuation(), Order::Infinite);
    }

    #[test]
    fn truncation_examples() {
        let d = dom(4);
        let theta = var(&d, "theta");
        let f = c(&d, 1).add(&theta).unwrap().add(&theta.pow(2)).unwrap();
        assert_eq!(f.truncate(2).unwrap(), c(&d, 1).add(&theta).unwrap());
        assert!(f.truncate(0).unwrap().is_zero());
        assert!(matches!(f.truncate(6), Err(Error::TruncationOrder { .. })));
    }

    #[test]
    fn homogeneous_components() {
        let d = dom(4);
        let f = var(&d, "xi")
            .add(&var(&d, "eta"))
            .unwrap()
            .add(&var(&d, "theta").pow(2))
            .unwrap();
        let deg = |s| Degree::from_bit_str(s).unwrap();
        assert_eq!(f.homogeneous_component(&deg("01")), var(&d, "xi"));
        let total = f
            .decompose()
            .into_iter()
            .fold(Series::zero(&d), |acc, (_, c)| acc.add(&c).unwrap());
        assert_eq!(total, f);
    }

    #[test]
    fn monomial_families() {
        let d = dom(6);
        let deg = |s| Degree::from_bit_str(s).unwrap();
        let m = |e: &[u32]| GradedMonomial::new(e.to_vec());
        assert_eq!(d.enumerate_monomials(&deg("00"), 0), vec![m(&[0, 0, 0])]);
        let fam = d.enumerate_monomials(&deg("01"), 2);
        assert_eq!(fam, vec![m(&[1, 0, 0]), m(&[0, 1, 1])]);
        // Brute force over every exponent vector with |μ| ≤ 3 and odd caps.
        let mut brute = Vec::new();
        for a in 0..=1 {
            for b in 0..=1 {
                for t in 0..=3u32 {
                    let mu = m(&[a, b, t]);
                    if mu.order() <= 3 && d.monomial_degree(&mu) == deg("11") {
                        brute.push(mu);
                    }
                }
            }
        }
        let mut fam = d.enumerate_monomials(&deg("11"), 3);
        fam.sort();
        brute.sort();
        assert_eq!(fam, brute);
        // θ^{2r+1} and θ^{2r}ξη.
        let mut expected = vec![m(&[0, 0, 1]), m(&[1, 1, 0]), m(&[0, 0, 3])];
        expected.sort();
        assert_eq!(brute, expected);
    }

    #[test]
    fn left_derivative_signs() {
        let d = dom(4);
        let (xi, eta, theta) = (var(&d, "xi"), var(&d, "eta"), var(&d, "theta"));
        let xe = xi.mul(&eta).unwrap();
        assert_eq!(xe.partial_derivative(Variable::Formal(0)), eta);
        assert_eq!(xe.partial_derivative(Variable::Formal(1)), xi);
        assert_eq!(
            theta.pow(2).partial_derivative(Variable::Formal(2)),
            theta.scale(&q(2))
        );
        // ∂_θ(ξθ) crosses ξ: ⟨(1,1),(0,1)⟩ = 1.
        let xt = xi.mul(&theta).unwrap();
        assert_eq!(xt.partial_derivative(Variable::Formal(2)), xi.neg());
    }

    #[test]
    fn printing() {
        let d = dom(4);
        let f = c(&d, 1)
            .add(&var(&d, "xi").mul(&var(&d, "eta")).unwrap())
            .unwrap()
            .sub(
                &var(&d, "theta")
                    .pow(2)
                    .scale(&BigRational::new(3.into(), 2.into())),
            )
            .unwrap();
        assert_eq!(f.to_expr_string(), "1 + xi*eta - 3/2*theta^2");
        let g = var(&d, "theta").scale_base(&Polynomial::var(1, 0).add(&Polynomial::one(1)));
        assert_eq!(g.to_expr_string(), "(x + 1)*theta");
        assert_eq!(Series::zero(&d).to_expr_string(), "0");
        assert_eq!(var(&d, "x").neg().to_expr_string(), "-x");
    }
}
