//! Color Clifford algebras and Z₂ⁿ-commutativity of structure-constant algebras.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Evaluator, Pos};
use crate::grading::Degree;
use crate::morphism::RationalJson;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub degree: Degree,
}

/// Generators f_a with the relations f_a f_b − (−1)^⟨a,b⟩ f_b f_a = h_ab.
///
/// For generators of even parity the relations leave f_a² free; a value may
/// be supplied in `squares`, which requires h_ab = 0 for every b.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorAlgebraPresentation<S> {
    n: usize,
    generators: Vec<Generator>,
    h: Vec<Vec<S>>,
    squares: BTreeMap<usize, S>,
}

impl<S: Scalar> ColorAlgebraPresentation<S> {
    pub fn new(
        n: usize,
        generators: Vec<Generator>,
        h: Vec<Vec<S>>,
        squares: BTreeMap<usize, S>,
    ) -> Result<Self> {
        let g = generators.len();
        for (i, gen) in generators.iter().enumerate() {
            if gen.degree.rank() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: gen.degree.rank(),
                });
            }
            if generators[..i].iter().any(|o| o.name == gen.name) {
                return Err(Error::InvalidPresentation(format!(
                    "duplicate generator `{}`",
                    gen.name
                )));
            }
        }
        if h.len() != g || h.iter().any(|row| row.len() != g) {
            return Err(Error::InvalidPresentation(format!("h must be {g}×{g}")));
        }
        let name = |i: usize| generators[i].name.as_str();
        for a in 0..g {
            for b in 0..g {
                let (da, db) = (&generators[a].degree, &generators[b].degree);
                let eps = if da.dot(db) == 1 { -S::one() } else { S::one() };
                if h[b][a] != -(eps * h[a][b].clone()) {
                    return Err(Error::InvalidPresentation(format!(
                        "h({}, {}) and h({}, {}) violate the symmetry forced by the relation",
                        name(a),
                        name(b),
                        name(b),
                        name(a)
                    )));
                }
                if !h[a][b].is_zero() && da != db {
                    return Err(Error::InvalidPresentation(format!(
                        "h({}, {}) is nonzero but the degrees differ",
                        name(a),
                        name(b)
                    )));
                }
            }
        }
        for &a in squares.keys() {
            if a >= g {
                return Err(Error::InvalidPresentation(format!(
                    "square index {a} out of range"
                )));
            }
            if generators[a].degree.is_odd() {
                return Err(Error::InvalidPresentation(format!(
                    "the square of odd generator `{}` is fixed by h",
                    name(a)
                )));
            }
            if h[a].iter().any(|v| !v.is_zero()) {
                return Err(Error::InvalidPresentation(format!(
                    "an explicit square for `{}` needs h({}, ·) = 0",
                    name(a),
                    name(a)
                )));
            }
        }
        Ok(ColorAlgebraPresentation {
            n,
            generators,
            h,
            squares,
        })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn h(&self, a: usize, b: usize) -> &S {
        &self.h[a][b]
    }

    pub fn square(&self, a: usize) -> Option<&S> {
        self.squares.get(&a)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn word_degree(&self, word: &[usize]) -> Degree {
        word.iter().fold(Degree::zero(self.n), |acc, &a| {
            &acc + &self.generators[a].degree
        })
    }

    fn sign(&self, a: usize, b: usize) -> bool {
        self.generators[a].degree.dot(&self.generators[b].degree) == 1
    }
}

/// A combination of strictly ascending generator words.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement<S> {
    terms: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> CliffordElement<S> {
    pub fn zero() -> Self {
        CliffordElement {
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(c: S) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![], c);
        e
    }

    pub fn one() -> Self {
        Self::scalar(S::one())
    }

    pub fn generator(a: usize) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![a], S::one());
        e
    }

    /// Basis word; must be strictly ascending.
    pub fn word(word: Vec<usize>, c: S) -> Result<Self> {
        if word.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMonomial(format!(
                "{word:?} is not strictly ascending"
            )));
        }
        let mut e = Self::zero();
        e.add_term(word, c);
        Ok(e)
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, S> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &[usize]) -> S {
        self.terms.get(word).cloned().unwrap_or_else(S::zero)
    }

    fn add_term(&mut self, word: Vec<usize>, c: S) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&word) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(word, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero();
        for (w, v) in &self.terms {
            out.add_term(w.clone(), v.clone() * c.clone());
        }
        out
    }

    /// `"-1 + 2*e1*e2"`, words ordered by length then lexicographically.
    pub fn to_string_with(&self, p: &ColorAlgebraPresentation<S>) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut words: Vec<(&Vec<usize>, &S)> = self.terms.iter().collect();
        words.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        for (i, (w, c)) in words.into_iter().enumerate() {
            let neg = c.is_neg();
            let abs = if neg { -c.clone() } else { c.clone() };
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let names: Vec<&str> = w.iter().map(|&a| p.generators[a].name.as_str()).collect();
            if w.is_empty() {
                let _ = write!(out, "{abs}");
            } else if abs.is_one() {
                out.push_str(&names.join("*"));
            } else {
                let _ = write!(out, "{abs}*{}", names.join("*"));
            }
        }
        out
    }
}

/// Rewrites a single (possibly unordered) word to the ordered basis.
fn normalize_word<S: Scalar>(
    p: &ColorAlgebraPresentation<S>,
    word: Vec<usize>,
    coeff: S,
) -> Result<CliffordElement<S>> {
    let mut out = CliffordElement::zero();
    let mut work = vec![(word, coeff)];
    while let Some((w, c)) = work.pop() {
        if c.is_zero() {
            continue;
        }
        let Some(i) = w.windows(2).position(|pair| pair[0] >= pair[1]) else {
            out.add_term(w, c);
            continue;
        };
        let (b, a) = (w[i], w[i + 1]);
        let mut rest = w[..i].to_vec();
        rest.extend_from_slice(&w[i + 2..]);
        if a == b {
            let value = if p.generators[a].degree.is_odd() {
                p.h[a][a].clone() / S::from_int(2)
            } else {
                p.squares
                    .get(&a)
                    .cloned()
                    .ok_or_else(|| Error::UndeterminedSquare(p.generators[a].name.clone()))?
            };
            work.push((rest, c * value));
        } else {
            // f_b f_a = (−1)^⟨a,b⟩ f_a f_b + h_ba
            work.push((rest, c.clone() * p.h[b][a].clone()));
            let mut swapped = w;
            swapped.swap(i, i + 1);
            let c = if p.sign(a, b) { -c } else { c };
            work.push((swapped, c));
        }
    }
    Ok(out)
}

pub fn clifford_mul<S: Scalar>(
    p: &ColorAlgebraPresentation<S>,
    u: &CliffordElement<S>,
    v: &CliffordElement<S>,
) -> Result<CliffordElement<S>> {
    let mut out = CliffordElement::zero();
    for (wu, cu) in &u.terms {
        for (wv, cv) in &v.terms {
            let mut w = wu.clone();
            w.extend_from_slice(wv);
            out = out.add(&normalize_word(p, w, cu.clone() * cv.clone())?);
        }
    }
    Ok(out)
}

/// Evaluates expressions over the generator names, with products taken in
/// the Clifford algebra.
pub struct CliffordEvaluator<'a, S> {
    pub presentation: &'a ColorAlgebraPresentation<S>,
}

impl<S: Scalar> Evaluator for CliffordEvaluator<'_, S> {
    type Value = CliffordElement<S>;

    fn number(&self, r: &BigRational) -> Result<Self::Value> {
        Ok(CliffordElement::scalar(S::from_rational(r)))
    }

    fn variable(&self, name: &str, pos: Pos) -> Result<Self::Value> {
        self.presentation
            .generator_index(name)
            .map(CliffordElement::generator)
            .ok_or_else(|| Error::Parse {
                line: pos.line,
                column: pos.column,
                message: format!("unknown generator `{name}`"),
            })
    }

    fn add(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        Ok(a.add(&b))
    }

    fn sub(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        Ok(a.sub(&b))
    }

    fn neg(&self, a: Self::Value) -> Result<Self::Value> {
        Ok(a.neg())
    }

    fn mul(&self, a: Self::Value, b: Self::Value) -> Result<Self::Value> {
        clifford_mul(self.presentation, &a, &b)
    }
}

pub fn parse_clifford<S: Scalar>(
    p: &ColorAlgebraPresentation<S>,
    text: &str,
) -> Result<CliffordElement<S>> {
    parse_expression(text)?.evaluate(&CliffordEvaluator { presentation: p })
}

/// A finite-dimensional algebra with homogeneous basis and
/// `table[i][j][k]` the coefficient of e_k in e_i·e_j.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstantAlgebra<S> {
    names: Vec<String>,
    degrees: Vec<Degree>,
    table: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> StructureConstantAlgebra<S> {
    pub fn new(names: Vec<String>, degrees: Vec<Degree>, table: Vec<Vec<Vec<S>>>) -> Result<Self> {
        let d = names.len();
        if degrees.len() != d {
            return Err(Error::SizeMismatch(format!(
                "{d} basis names but {} degrees",
                degrees.len()
            )));
        }
        if let Some(first) = degrees.first() {
            if let Some(bad) = degrees.iter().find(|g| g.rank() != first.rank()) {
                return Err(Error::DimensionMismatch {
                    expected: first.rank(),
                    found: bad.rank(),
                });
            }
        }
        if table.len() != d
            || table
                .iter()
                .any(|row| row.len() != d || row.iter().any(|v| v.len() != d))
        {
            return Err(Error::SizeMismatch(format!("table must be {d}×{d}×{d}")));
        }
        Ok(StructureConstantAlgebra {
            names,
            degrees,
            table,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degrees(&self) -> &[Degree] {
        &self.degrees
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn product(&self, i: usize, j: usize) -> &[S] {
        &self.table[i][j]
    }

    /// Product of two elements in basis coordinates.
    pub fn mul(&self, u: &[S], v: &[S]) -> Vec<S> {
        let d = self.dim();
        let mut out = vec![S::zero(); d];
        for (i, ui) in u.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (j, vj) in v.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                for (k, t) in self.table[i][j].iter().enumerate() {
                    out[k] = out[k].clone() + ui.clone() * vj.clone() * t.clone();
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorCommReport {
    pub commutative: bool,
    pub pairs_checked: usize,
    pub counterexample: Option<(String, String)>,
}

/// Checks e_i e_j = (−1)^⟨deg e_i, deg e_j⟩ e_j e_i for all ordered pairs
/// of basis elements. Errors if some product spreads over several degrees.
pub fn check_color_commutative<S: Scalar>(
    a: &StructureConstantAlgebra<S>,
) -> Result<ColorCommReport> {
    let d = a.dim();
    for i in 0..d {
        for j in 0..d {
            let mut seen: Option<&Degree> = None;
            for (k, c) in a.table[i][j].iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                match seen {
                    None => seen = Some(&a.degrees[k]),
                    Some(g) if *g == a.degrees[k] => {}
                    Some(_) => {
                        return Err(Error::InhomogeneousProduct {
                            left: a.names[i].clone(),
                            right: a.names[j].clone(),
                        })
                    }
                }
            }
        }
    }
    let mut checked = 0;
    for i in 0..d {
        for j in 0..d {
            checked += 1;
            let negative = a.degrees[i].dot(&a.degrees[j]) == 1;
            let ok = a.table[i][j].iter().zip(&a.table[j][i]).all(|(x, y)| {
                if negative {
                    *x == -y.clone()
                } else {
                    x == y
                }
            });
            if !ok {
                return Ok(ColorCommReport {
                    commutative: false,
                    pairs_checked: checked,
                    counterexample: Some((a.names[i].clone(), a.names[j].clone())),
                });
            }
        }
    }
    Ok(ColorCommReport {
        commutative: true,
        pairs_checked: checked,
        counterexample: None,
    })
}

/// ℍ with basis (1, i, j, k) and degrees (0,0,0), (1,1,0), (1,0,1), (0,1,1).
pub fn quaternion_presentation<S: Scalar>() -> StructureConstantAlgebra<S> {
    // e_a e_b = sign · e_c
    const TABLE: [[(i64, usize); 4]; 4] = [
        [(1, 0), (1, 1), (1, 2), (1, 3)],
        [(1, 1), (-1, 0), (1, 3), (-1, 2)],
        [(1, 2), (-1, 3), (-1, 0), (1, 1)],
        [(1, 3), (1, 2), (-1, 1), (-1, 0)],
    ];
    let table = TABLE
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(s, c)| {
                    let mut v = vec![S::zero(); 4];
                    v[c] = S::from_int(s);
                    v
                })
                .collect()
        })
        .collect();
    let degrees = ["000", "110", "101", "011"]
        .iter()
        .map(|b| Degree::from_bit_str(b).expect("static degree"))
        .collect();
    StructureConstantAlgebra::new(
        ["1", "i", "j", "k"].iter().map(|s| s.to_string()).collect(),
        degrees,
        table,
    )
    .expect("static table")
}

/// The rank-1 presentation e1, e2 odd with h = diag(−2, −2); i = e1, j = e2
/// and k = e1e2 satisfy the quaternion relations.
pub fn quaternion_clifford<S: Scalar>() -> ColorAlgebraPresentation<S> {
    let odd = Degree::from_bit_str("1").expect("static degree");
    let gens = ["e1", "e2"]
        .iter()
        .map(|n| Generator {
            name: n.to_string(),
            degree: odd.clone(),
        })
        .collect();
    let m2 = S::from_int(-2);
    let h = vec![vec![m2.clone(), S::zero()], vec![S::zero(), m2]];
    ColorAlgebraPresentation::new(1, gens, h, BTreeMap::new()).expect("valid presentation")
}

/// `{"n":1,"generators":[{"name":"e1","degree":[1]}],"h":[[-2]],"squares":{}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresentationJson {
    pub n: usize,
    pub generators: Vec<Generator>,
    pub h: Vec<Vec<RationalJson>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub squares: BTreeMap<String, RationalJson>,
}

impl PresentationJson {
    pub fn to_presentation(&self) -> Result<ColorAlgebraPresentation<BigRational>> {
        let h = self
            .h
            .iter()
            .map(|row| {
                row.iter()
                    .map(RationalJson::to_rational)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut squares = BTreeMap::new();
        for (name, v) in &self.squares {
            let idx = self
                .generators
                .iter()
                .position(|g| &g.name == name)
                .ok_or_else(|| Error::InvalidPresentation(format!("unknown generator `{name}`")))?;
            squares.insert(idx, v.to_rational()?);
        }
        ColorAlgebraPresentation::new(self.n, self.generators.clone(), h, squares)
    }

    pub fn from_presentation(p: &ColorAlgebraPresentation<BigRational>) -> Self {
        PresentationJson {
            n: p.n,
            generators: p.generators.clone(),
            h: p.h
                .iter()
                .map(|row| row.iter().map(RationalJson::from_rational).collect())
                .collect(),
            squares: p
                .squares
                .iter()
                .map(|(&a, v)| (p.generators[a].name.clone(), RationalJson::from_rational(v)))
                .collect(),
        }
    }
}

/// `{"basis":["1","i"],"degrees":[[0],[1]],"table":[[[1,0],[0,1]],[[0,1],[-1,0]]]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureJson {
    pub basis: Vec<String>,
    pub degrees: Vec<Degree>,
    pub table: Vec<Vec<Vec<RationalJson>>>,
}

impl StructureJson {
    pub fn to_algebra(&self) -> Result<StructureConstantAlgebra<BigRational>> {
        let table = self
            .table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        v.iter()
                            .map(RationalJson::to_rational)
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        StructureConstantAlgebra::new(self.basis.clone(), self.degrees.clone(), table)
    }

    pub fn from_algebra(a: &StructureConstantAlgebra<BigRational>) -> Self {
        StructureJson {
            basis: a.names.clone(),
            degrees: a.degrees.clone(),
            table: a
                .table
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| v.iter().map(RationalJson::from_rational).collect())
                        .collect()
                })
                .collect(),
        }
    }
}
