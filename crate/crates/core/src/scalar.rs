//! Coefficient scalars.
//!
//! Every algebraic structure in this crate is generic over a [`Scalar`]. Exact
//! work uses [`BigRational`]; `f64`/`f32` instantiations are available for
//! quick numeric experiments but equality checks on them are only as good as
//! floating point.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_rational(r: &BigRational) -> Self;

    /// Exact rational value, if one exists.
    fn to_rational(&self) -> Option<BigRational>;

    fn from_int(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    fn is_neg(&self) -> bool {
        *self < Self::zero()
    }

    /// `1/k!`
    fn inv_factorial(k: u32) -> Self {
        let mut f = Self::one();
        for i in 2..=k {
            f = f * Self::from_int(i64::from(i));
        }
        Self::one() / f
    }
}

impl Scalar for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

impl Scalar for f64 {
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_f64(*self)
    }
}

impl Scalar for f32 {
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_f32(*self)
    }
}

/// Parse `p`, `-p` or `p/q` into a rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_factorials() {
        assert_eq!(BigRational::inv_factorial(0), BigRational::from_int(1));
        assert_eq!(
            BigRational::inv_factorial(4),
            BigRational::new(1.into(), 24.into())
        );
        assert!((f64::inv_factorial(3) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rational_literals() {
        assert_eq!(
            parse_rational("-3/6"),
            Some(BigRational::new((-1).into(), 2.into()))
        );
        assert_eq!(parse_rational("7"), Some(BigRational::from_int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
