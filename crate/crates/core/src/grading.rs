//! Z₂ⁿ degrees, the sign rule they induce, and realization of arbitrary
//! symmetric sign tables by degree assignments.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of Z₂ⁿ. Ordering is lexicographic with the first component most
/// significant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<u8>")]
pub struct Degree(Vec<u8>);

impl Degree {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidDegreeBit(i64::from(b)));
        }
        Ok(Degree(bits))
    }

    pub fn zero(n: usize) -> Self {
        Degree(vec![0; n])
    }

    /// The degree with a single 1 in position `i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut bits = vec![0; n];
        bits[i] = 1;
        Degree(bits)
    }

    /// Parse a bit string such as `"011"`.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidDegreeBit(i64::from(u32::from(other)))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Degree)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Componentwise sum mod 2.
    pub fn checked_add(&self, other: &Degree) -> Result<Degree> {
        same_rank(self, other)?;
        Ok(Degree(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    /// ⟨a,b⟩ = Σ aᵢbᵢ mod 2.
    pub fn scalar_product(&self, other: &Degree) -> Result<u8> {
        same_rank(self, other)?;
        Ok(self.dot(other))
    }

    /// Unchecked scalar product; callers guarantee equal rank.
    pub(crate) fn dot(&self, other: &Degree) -> u8 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0, |acc, (a, b)| acc ^ (a & b))
    }

    /// Sum of the components mod 2.
    pub fn parity(&self) -> u8 {
        self.0.iter().fold(0, |acc, b| acc ^ b)
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == 1
    }

    /// (−1)^⟨a,b⟩.
    pub fn commutation_sign(&self, other: &Degree) -> Result<i8> {
        Ok(if self.scalar_product(other)? == 1 {
            -1
        } else {
            1
        })
    }

    /// Positions holding a 1.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
    }

    /// `(first, self...)` in rank n+1.
    pub fn prepend(&self, first: u8) -> Degree {
        let mut bits = Vec::with_capacity(self.0.len() + 1);
        bits.push(first & 1);
        bits.extend_from_slice(&self.0);
        Degree(bits)
    }
}

fn same_rank(a: &Degree, b: &Degree) -> Result<()> {
    if a.rank() != b.rank() {
        return Err(Error::DimensionMismatch {
            expected: a.rank(),
            found: b.rank(),
        });
    }
    Ok(())
}

impl Add for &Degree {
    type Output = Degree;

    /// Panics on rank mismatch; use [`Degree::checked_add`] for fallible input.
    fn add(self, other: &Degree) -> Degree {
        self.checked_add(other).expect("degree ranks differ")
    }
}

impl TryFrom<Vec<i64>> for Degree {
    type Error = Error;

    fn try_from(bits: Vec<i64>) -> Result<Self> {
        bits.into_iter()
            .map(|b| match b {
                0 | 1 => Ok(b as u8),
                other => Err(Error::InvalidDegreeBit(other)),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Degree)
    }
}

impl From<Degree> for Vec<u8> {
    fn from(d: Degree) -> Self {
        d.0
    }
}

impl fmt::Debug for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

pub fn scalar_product(a: &Degree, b: &Degree) -> Result<u8> {
    a.scalar_product(b)
}

pub fn parity(d: &Degree) -> u8 {
    d.parity()
}

pub fn commutation_sign(a: &Degree, b: &Degree) -> Result<i8> {
    a.commutation_sign(b)
}

/// All 2ⁿ degrees in increasing lexicographic order, starting at 0.
pub fn enumerate_degrees(n: usize) -> Vec<Degree> {
    (0..1usize << n)
        .map(|k| Degree((0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect()))
        .collect()
}

/// A symmetric table of signs φ(i,j) ∈ {±1} on m generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignTable")]
pub struct SignTable {
    m: usize,
    phi: Vec<Vec<i8>>,
}

#[derive(Deserialize)]
struct RawSignTable {
    m: usize,
    phi: Vec<Vec<i64>>,
}

impl TryFrom<RawSignTable> for SignTable {
    type Error = Error;

    fn try_from(raw: RawSignTable) -> Result<Self> {
        if raw.phi.len() != raw.m {
            return Err(Error::SizeMismatch(format!(
                "m = {} but phi has {} rows",
                raw.m,
                raw.phi.len()
            )));
        }
        SignTable::new(raw.phi)
    }
}

impl SignTable {
    pub fn new(phi: Vec<Vec<i64>>) -> Result<Self> {
        let m = phi.len();
        if m == 0 {
            return Err(Error::SizeMismatch("sign table needs m >= 1".into()));
        }
        let mut table = vec![vec![0i8; m]; m];
        for (i, row) in phi.iter().enumerate() {
            if row.len() != m {
                return Err(Error::SizeMismatch(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                table[i][j] = match v {
                    1 => 1,
                    -1 => -1,
                    value => {
                        return Err(Error::InvalidSign {
                            row: i,
                            col: j,
                            value,
                        })
                    }
                };
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                if table[i][j] != table[j][i] {
                    return Err(Error::AsymmetricSignTable(i, j));
                }
            }
        }
        Ok(SignTable { m, phi: table })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.phi[i][j]
    }

    /// p(i,j) with (−1)^p = φ(i,j).
    fn parity(&self, i: usize, j: usize) -> u8 {
        u8::from(self.phi[i][j] == -1)
    }
}

/// Degrees σ₁,…,σ_m in a common Z₂ⁿ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAssignment")]
pub struct DegreeAssignment {
    n: usize,
    sigmas: Vec<Degree>,
}

#[derive(Deserialize)]
struct RawAssignment {
    n: usize,
    sigmas: Vec<Degree>,
}

impl TryFrom<RawAssignment> for DegreeAssignment {
    type Error = Error;

    fn try_from(raw: RawAssignment) -> Result<Self> {
        DegreeAssignment::new(raw.n, raw.sigmas)
    }
}

impl DegreeAssignment {
    pub fn new(n: usize, sigmas: Vec<Degree>) -> Result<Self> {
        if let Some(bad) = sigmas.iter().find(|s| s.rank() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.rank(),
            });
        }
        Ok(DegreeAssignment { n, sigmas })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn sigmas(&self) -> &[Degree] {
        &self.sigmas
    }
}

/// Builds σ: {1..m} → Z₂^{2m} with φ(i,j) = (−1)^⟨σᵢ,σⱼ⟩ by the inductive
/// construction over the index set ordered (1,−1,2,−2,…,m,−m).
///
/// Generator `r` (0-based) owns columns `2r` (index `r+1`) and `2r+1`
/// (index `−(r+1)`). After step `r`, every σⱼ with j > r has its columns
/// up to `2r+1` fixed so that the sign rule holds against σ₀..σ_r.
pub fn realize_sign_table(t: &SignTable) -> DegreeAssignment {
    let m = t.m();
    let n = 2 * m;
    let mut sigma = vec![vec![0u8; n]; m];

    for r in 0..m {
        // Columns of indices with |k| ≤ r (1-based), i.e. owned by earlier generators.
        let earlier = 0..2 * r;
        let partial: u8 = sigma[r][earlier.clone()].iter().fold(0, |a, b| a ^ b);
        sigma[r][2 * r] = 1;
        sigma[r][2 * r + 1] = 1 ^ partial ^ t.parity(r, r);
        for j in r + 1..m {
            let overlap = earlier
                .clone()
                .fold(0u8, |acc, k| acc ^ (sigma[j][k] & sigma[r][k]));
            sigma[j][2 * r] = overlap ^ t.parity(j, r);
            sigma[j][2 * r + 1] = 0;
        }
    }

    DegreeAssignment {
        n,
        sigmas: sigma.into_iter().map(Degree).collect(),
    }
}

/// True iff φ(i,j) = (−1)^⟨σᵢ,σⱼ⟩ for every pair.
pub fn verify_assignment(t: &SignTable, a: &DegreeAssignment) -> Result<bool> {
    if a.sigmas.len() != t.m() {
        return Err(Error::SizeMismatch(format!(
            "table has {} generators, assignment has {}",
            t.m(),
            a.sigmas.len()
        )));
    }
    Ok(first_violation(t, a).is_none())
}

/// The first pair (i,j), i ≤ j, where the assignment disagrees with the table.
pub fn first_violation(t: &SignTable, a: &DegreeAssignment) -> Option<(usize, usize)> {
    let m = t.m().min(a.sigmas.len());
    for i in 0..m {
        for j in i..m {
            let want = t.sign(i, j);
            let got = if a.sigmas[i].dot(&a.sigmas[j]) == 1 {
                -1
            } else {
                1
            };
            if want != got {
                return Some((i, j));
            }
        }
    }
    None
}

/// Drops every coordinate that is zero in all σᵢ.
pub fn minimize_assignment(a: &DegreeAssignment) -> DegreeAssignment {
    let keep: Vec<usize> = (0..a.n)
        .filter(|&k| a.sigmas.iter().any(|s| s.0[k] == 1))
        .collect();
    DegreeAssignment {
        n: keep.len(),
        sigmas: a
            .sigmas
            .iter()
            .map(|s| Degree(keep.iter().map(|&k| s.0[k]).collect()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(bits: &[u8]) -> Degree {
        Degree::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn scalar_product_examples() {
        assert_eq!(scalar_product(&d(&[1, 1, 0]), &d(&[1, 0, 1])).unwrap(), 1);
        assert_eq!(scalar_product(&d(&[0, 0, 0]), &d(&[1, 1, 1])).unwrap(), 0);
        assert_eq!(scalar_product(&d(&[1, 1]), &d(&[1, 1])).unwrap(), 0);
        assert!(matches!(
            scalar_product(&d(&[1]), &d(&[1, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity(&d(&[1, 1])), 0);
        assert_eq!(parity(&d(&[0, 0, 0])), 0);
        assert_eq!(parity(&d(&[1, 1, 0])), 0);
        assert_eq!(parity(&d(&[0, 1])), 1);
    }

    #[test]
    fn commutation_sign_examples() {
        assert_eq!(commutation_sign(&d(&[0, 1]), &d(&[1, 0])).unwrap(), 1);
        assert_eq!(commutation_sign(&d(&[0, 1]), &d(&[0, 1])).unwrap(), -1);
        assert_eq!(commutation_sign(&d(&[1, 1]), &d(&[1, 1])).unwrap(), 1);
    }

    #[test]
    fn degree_enumeration() {
        assert_eq!(
            enumerate_degrees(2),
            vec![d(&[0, 0]), d(&[0, 1]), d(&[1, 0]), d(&[1, 1])]
        );
        assert_eq!(enumerate_degrees(0), vec![d(&[])]);
        let three = enumerate_degrees(3);
        assert_eq!(three.len(), 8);
        assert_eq!(
            &three[..4],
            &[d(&[0, 0, 0]), d(&[0, 0, 1]), d(&[0, 1, 0]), d(&[0, 1, 1])]
        );
        assert!(three.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn realize_single_generator() {
        let odd = SignTable::new(vec![vec![-1]]).unwrap();
        let a = realize_sign_table(&odd);
        assert_eq!(a.sigmas(), &[d(&[1, 0])]);
        assert!(verify_assignment(&odd, &a).unwrap());

        let even = SignTable::new(vec![vec![1]]).unwrap();
        let a = realize_sign_table(&even);
        assert_eq!(a.sigmas(), &[d(&[1, 1])]);
        assert!(verify_assignment(&even, &a).unwrap());
    }

    #[test]
    fn realize_three_generators() {
        let t = SignTable::new(vec![vec![1, -1, 1], vec![-1, -1, 1], vec![1, 1, 1]]).unwrap();
        let a = realize_sign_table(&t);
        assert_eq!(a.rank(), 6);
        assert!(verify_assignment(&t, &a).unwrap());
    }

    #[test]
    fn asymmetric_table_rejected() {
        assert!(matches!(
            SignTable::new(vec![vec![1, -1], vec![1, 1]]),
            Err(Error::AsymmetricSignTable(0, 1))
        ));
        assert!(matches!(
            SignTable::new(vec![vec![1, 2], vec![2, 1]]),
            Err(Error::InvalidSign { .. })
        ));
    }

    #[test]
    fn classical_super_rule() {
        let t = SignTable::new(vec![vec![-1; 3]; 3]).unwrap();
        let a = DegreeAssignment::new(1, vec![d(&[1]); 3]).unwrap();
        assert!(verify_assignment(&t, &a).unwrap());
    }

    #[test]
    fn flipped_bit_is_detected() {
        let t = SignTable::new(vec![vec![1, -1], vec![-1, -1]]).unwrap();
        let a = realize_sign_table(&t);
        let mut sigmas = a.sigmas().to_vec();
        let mut bits = sigmas[1].bits().to_vec();
        // σ₂(1) pairs with σ₁(1) = 1, so flipping it flips ⟨σ₁,σ₂⟩.
        bits[0] ^= 1;
        sigmas[1] = Degree::new(bits).unwrap();
        let broken = DegreeAssignment::new(a.rank(), sigmas).unwrap();
        assert!(!verify_assignment(&t, &broken).unwrap());
        assert_eq!(first_violation(&t, &broken), Some((0, 1)));
    }

    #[test]
    fn verify_size_mismatch() {
        let t = SignTable::new(vec![vec![1]]).unwrap();
        let a = DegreeAssignment::new(1, vec![d(&[0]), d(&[1])]).unwrap();
        assert!(matches!(
            verify_assignment(&t, &a),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn minimization() {
        let a = DegreeAssignment::new(2, vec![d(&[1, 0])]).unwrap();
        assert_eq!(minimize_assignment(&a).sigmas(), &[d(&[1])]);

        let minimal = DegreeAssignment::new(2, vec![d(&[1, 0]), d(&[0, 1])]).unwrap();
        assert_eq!(minimize_assignment(&minimal), minimal);

        let trivial = DegreeAssignment::new(2, vec![d(&[0, 0])]).unwrap();
        let m = minimize_assignment(&trivial);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.sigmas(), &[d(&[])]);
    }

    #[test]
    fn json_shapes() {
        let t: SignTable =
            serde_json::from_str(r#"{"m": 3, "phi": [[1,-1,1],[-1,-1,1],[1,1,1]]}"#).unwrap();
        assert_eq!(t.m(), 3);
        assert!(serde_json::from_str::<SignTable>(r#"{"m": 2, "phi": [[1,-1],[1,1]]}"#).is_err());
        let a = DegreeAssignment::new(2, vec![d(&[1, 0])]).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"n":2,"sigmas":[[1,0]]}"#);
        assert_eq!(serde_json::from_str::<DegreeAssignment>(&json).unwrap(), a);
    }
}
