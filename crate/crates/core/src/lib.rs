//! Finite-scale toolkit for local stability of a binary relation: φ-types and
//! their definitions, Keisler measures, the Morley product, ladder and VC
//! analysis, ε-approximations and order arrays.

pub mod approx;
pub mod error;
pub mod generate;
pub mod io;
pub mod measure;
pub mod morley;
pub mod order;
pub mod relation;
pub mod run;
pub mod scalar;
pub mod stability;
pub mod two_tree;
pub mod types;

pub use error::{Error, Result};
pub use measure::KeislerMeasure;
pub use relation::{AmbientRelation, Expr, Formula, Side};
pub use scalar::Scalar;
pub use types::{PhiType, TypeSpace};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;
pub type ExactMeasure = KeislerMeasure<Rational>;
pub type FloatMeasure = KeislerMeasure<f64>;
