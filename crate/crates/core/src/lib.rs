//! Exact symbolic computation for Z₂ⁿ-graded, Z₂ⁿ-commutative algebra and
//! Z₂ⁿ-superdomain geometry.
//!
//! The algebraic types are generic over a coefficient [`Scalar`]; the aliases
//! below fix it to exact rationals, which is what every verification routine
//! in this crate is meant to run on.

pub mod atlas;
pub mod clifford;
pub mod error;
pub mod expr;
pub mod grading;
pub mod morphism;
pub mod poly;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use grading::{Degree, DegreeAssignment, SignTable};
pub use scalar::Scalar;
pub use series::{DomainSpec, GradedMonomial, Order, Variable};

pub use num_rational::BigRational;

/// Exact rational scalars.
pub type Rational = BigRational;
/// Base coefficients: polynomials in the degree-zero variables.
pub type Polynomial = poly::Polynomial<Rational>;
pub type GradedSeries = series::GradedSeries<Rational>;
pub type MorphismData = morphism::MorphismData<Rational>;
pub type Jet = morphism::Jet<Rational>;
pub type Transition = atlas::Transition<Rational>;
pub type Atlas = atlas::Atlas<Rational>;
pub type DvbSpec = atlas::DvbSpec<Rational>;
pub type NvbSpec = atlas::NvbSpec<Rational>;
pub type ColorAlgebraPresentation = clifford::ColorAlgebraPresentation<Rational>;
pub type CliffordElement = clifford::CliffordElement<Rational>;
pub type StructureConstantAlgebra = clifford::StructureConstantAlgebra<Rational>;
