//! Scalar abstraction for measure weights and measure values.
//!
//! Everything that carries a probability (measure weights, Morley values,
//! deviations, double-limit grids) is generic over [`Scalar`]. The exact
//! instance is [`Rational`](crate::Rational); `f64`/`f32` are available for
//! quick numerical exploration where exact equalities are not needed.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive};

/// Numeric type used for weights and measure values.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Send + Sync + 'static {
    /// `true` when arithmetic is exact (equalities may be tested with `==`).
    const EXACT: bool;

    fn from_ratio(num: i64, den: u64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn to_f64(&self) -> f64;

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    /// Equality for exact scalars; equality up to a small relative slack for floats.
    fn close_to(&self, other: &Self) -> bool;

    /// Denominator of the value when the scalar is an exact fraction that fits in `u64`.
    fn denominator(&self) -> Option<u64> {
        None
    }

    fn is_negative_value(&self) -> bool {
        *self < Self::zero()
    }

    /// Text form used in reports: `num/den` for exact values.
    fn render(&self) -> String;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        (self - other).abs()
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }

    fn denominator(&self) -> Option<u64> {
        self.denom().to_u64()
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

macro_rules! float_scalar {
    ($t:ty, $slack:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: u64) -> Self {
                (num as f64 / den as f64) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn abs_diff(&self, other: &Self) -> Self {
                (self - other).abs()
            }

            fn close_to(&self, other: &Self) -> bool {
                let scale = self.abs().max(other.abs()).max(<$t>::one());
                (self - other).abs() <= $slack * scale
            }

            fn render(&self) -> String {
                self.to_string()
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

/// Sum of an iterator of scalars.
pub fn sum<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// Largest element, or zero for an empty iterator.
pub fn max<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items
        .into_iter()
        .fold(S::zero(), |acc, x| if x > acc { x } else { acc })
}

/// Converts any scalar into `f64` through [`Scalar::to_f64`] and back into `T`.
pub fn convert<S: Scalar, T: Scalar>(value: &S) -> T {
    if let (Some(den), true) = (value.denominator(), T::EXACT) {
        let num = value.to_f64() * den as f64;
        return T::from_ratio(num.round() as i64, den);
    }
    let v = value.to_f64();
    // 2^-40 grid for float -> exact, generous enough for printing and comparisons
    const GRID: u64 = 1 << 40;
    T::from_ratio((v * GRID as f64).round() as i64, GRID)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn rational_is_exact() {
        let third = Rational::from_ratio(1, 3);
        let sum = third.clone() + third.clone() + third;
        assert!(sum.close_to(&Rational::one()));
        assert_eq!(sum, Rational::one());
        assert_eq!(Rational::from_ratio(2, 6).denominator(), Some(3));
    }

    #[test]
    fn float_close_to_has_slack() {
        let third = 1.0f64 / 3.0;
        assert!((third + third + third).close_to(&1.0));
        assert!(!(0.5f64).close_to(&0.5001));
        assert_eq!(f64::from_ratio(1, 4), 0.25);
        assert_eq!(<f64 as Scalar>::denominator(&0.25), None);
    }

    #[test]
    fn abs_diff_symmetry() {
        let a = Rational::from_ratio(1, 4);
        let b = Rational::from_ratio(2, 3);
        assert_eq!(a.abs_diff(&b), b.abs_diff(&a));
        assert_eq!(2.0f32.abs_diff(&3.5), 1.5);
    }

    #[test]
    fn convert_between_scalars() {
        let q = Rational::from_ratio(3, 8);
        let f: f64 = convert(&q);
        assert_eq!(f, 0.375);
        let back: Rational = convert(&f);
        assert_eq!(back, q);
    }
}
