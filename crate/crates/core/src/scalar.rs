//! Scalar abstraction shared by every exact module.
//!
//! All measure, model and subspace code is written against [`Scalar`], an
//! ordered field. The exact instantiation used throughout the crate is
//! [`crate::Rational`]; `f64` also satisfies the bound and can be used where
//! exactness is not required.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// An ordered field with conversions to and from machine numbers.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `n / d` as a field element. Panics if `d == 0`.
    fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::from_i64(n).expect("integer embedding") / Self::from_i64(d).expect("integer embedding")
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer embedding")
    }

    /// Nearest `f64`; NaN if the value has no finite approximation.
    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialOrd
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Complex numbers over a scalar field.
pub type Cx<T> = Complex<T>;

/// `|z|²`, exact over the field.
pub fn abs_sq<T: Scalar>(z: &Cx<T>) -> T {
    z.re.clone() * z.re.clone() + z.im.clone() * z.im.clone()
}

/// Real scalar embedded as a complex number.
pub fn real<T: Scalar>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// `a · conj(b)`.
pub fn mul_conj<T: Scalar>(a: &Cx<T>, b: &Cx<T>) -> Cx<T> {
    a.clone() * b.conj()
}

/// Sorts a vector of partially ordered values. Panics on incomparable pairs
/// (NaN for floating scalars).
pub(crate) fn sort_dedup<T: Scalar>(v: &mut Vec<T>) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("scalars must be totally ordered"));
    v.dedup();
}
