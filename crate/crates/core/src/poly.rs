//! Sparse multivariate polynomials over a [`Scalar`], used as the coefficient
//! ring of graded series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::scalar::Scalar;

/// Exponent vector of a polynomial term.
pub type Exponents = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S> {
    nvars: usize,
    terms: BTreeMap<Exponents, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, S::one())
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, S::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, S)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[u32]) -> S {
        self.terms.get(e).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coefficient(&vec![0; self.nvars])
    }

    /// `Some(c)` when the polynomial is the constant `c` (including 0).
    pub fn as_constant(&self) -> Option<S> {
        match self.terms.len() {
            0 => Some(S::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Lowest total degree of a term; `None` for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub(crate) fn add_term(&mut self, e: Exponents, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.clone() * s.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * S::from_int(i64::from(e[i])));
        }
        out
    }

    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars);
        self.terms.iter().fold(S::zero(), |acc, (e, c)| {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    t = t * x.clone();
                }
            }
            acc + t
        })
    }

    /// Substitutes `subs[i]` for `x_i`. The result lives in the ring of the
    /// substituted polynomials.
    pub fn compose(&self, subs: &[Polynomial<S>]) -> Polynomial<S> {
        assert_eq!(subs.len(), self.nvars);
        let target_vars = subs.first().map_or(0, |p| p.nvars);
        // Powers are reused across terms.
        let mut powers: Vec<Vec<Polynomial<S>>> = subs
            .iter()
            .map(|p| vec![Polynomial::one(p.nvars)])
            .collect();
        let mut out = Polynomial::zero(target_vars);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(target_vars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap().mul(&subs[i]);
                    powers[i].push(next);
                }
                if k > 0 {
                    t = t.mul(&powers[i][k as usize]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// `p(x + shift)`.
    pub fn translate(&self, shift: &[S]) -> Self {
        let subs: Vec<_> = (0..self.nvars)
            .map(|i| Self::var(self.nvars, i).add(&Self::constant(self.nvars, shift[i].clone())))
            .collect();
        self.compose(&subs)
    }

    /// Order of vanishing at `point`; `None` for the zero polynomial.
    pub fn vanishing_order(&self, point: &[S]) -> Option<u32> {
        self.translate(point).min_degree()
    }

    /// Drops all terms of total degree `>= k`.
    pub fn truncate_degree(&self, k: u32) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() < k)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Re-embeds into a ring with more variables, mapping `x_i ↦ x_{map[i]}`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        Polynomial {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = vec![0; nvars];
                    for (i, &k) in e.iter().enumerate() {
                        e2[map[i]] += k;
                    }
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Canonical text form, e.g. `3/2*x^2 - 1`. Terms are printed by
    /// descending total degree, then descending exponent vector.
    pub fn to_string_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.ordered_terms().into_iter().enumerate() {
            let negative = c.is_neg();
            let abs = if negative { -c.clone() } else { c.clone() };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factors = monomial_factors(e, names);
            if factors.is_empty() {
                let _ = write!(out, "{abs}");
            } else if abs.is_one() {
                out.push_str(&factors);
            } else {
                let _ = write!(out, "{abs}*{factors}");
            }
        }
        out
    }

    fn ordered_terms(&self) -> Vec<(&Exponents, &S)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        terms
    }
}

fn monomial_factors(e: &[u32], names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &k) in e.iter().enumerate() {
        match k {
            0 => {}
            1 => parts.push(names[i].clone()),
            k => parts.push(format!("{}^{k}", names[i])),
        }
    }
    parts.join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type P = Polynomial<BigRational>;

    fn q(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    fn x() -> P {
        P::var(1, 0)
    }

    #[test]
    fn arithmetic_and_cancellation() {
        let p = x().add(&P::one(1));
        let sq = p.mul(&p);
        assert_eq!(sq.coefficient(&[1]), q(2));
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.pow(3).total_degree(), Some(3));
    }

    #[test]
    fn derivative_and_eval() {
        let p = x().pow(3).scale(&q(2));
        assert_eq!(p.derivative(0), x().pow(2).scale(&q(6)));
        assert_eq!(p.eval(&[q(2)]), q(16));
    }

    #[test]
    fn composition_and_translation() {
        let p = x().pow(2);
        let shifted = p.translate(&[q(1)]);
        assert_eq!(shifted, x().pow(2).add(&x().scale(&q(2))).add(&P::one(1)));
        assert_eq!(p.vanishing_order(&[q(0)]), Some(2));
        assert_eq!(p.vanishing_order(&[q(1)]), Some(0));
        assert_eq!(P::zero(1).vanishing_order(&[q(0)]), None);
    }

    #[test]
    fn printing() {
        let names = vec!["x".to_string(), "y".to_string()];
        let p = P::from_terms(
            2,
            [
                (vec![2, 0], BigRational::new(3.into(), 2.into())),
                (vec![0, 0], q(-1)),
                (vec![1, 1], q(-1)),
            ],
        );
        assert_eq!(p.to_string_with(&names), "3/2*x^2 - x*y - 1");
        assert_eq!(P::zero(2).to_string_with(&names), "0");
        assert_eq!(P::constant(2, q(-4)).to_string_with(&names), "-4");
    }
}
