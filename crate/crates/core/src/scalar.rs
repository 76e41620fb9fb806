//! Scalar abstractions.
//!
//! Planning and posterior bookkeeping only need field arithmetic and an
//! ordering, so they are written against [`Scalar`], which is implemented for
//! `f32`, `f64` and exact `Rational64`. Anything that draws random numbers
//! needs [`Real`] (floating point only).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{Float, NumAssign, Zero};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Ordered field element used by the exact planning code.
pub trait Scalar:
    Copy + Debug + Display + PartialOrd + NumAssign + Sum + Send + Sync + 'static
{
    /// Exact `num / den` where the type allows it.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy conversion used for reporting and for sampling from exact models.
    fn to_f64(self) -> f64;

    /// Slack allowed when checking that a distribution sums to one.
    fn stochastic_tolerance() -> Self;

    fn from_count(n: u64) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn is_finite_value(self) -> bool {
        true
    }
}

macro_rules! impl_float_scalar {
    ($f:ty, $tol:expr) => {
        impl Scalar for $f {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $f / den as $f
            }

            fn to_f64(self) -> f64 {
                self as f64
            }

            fn stochastic_tolerance() -> Self {
                $tol
            }

            fn is_finite_value(self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_float_scalar!(f64, 1e-9);
impl_float_scalar!(f32, 1e-5);

impl Scalar for Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn stochastic_tolerance() -> Self {
        Rational64::zero()
    }
}

/// Floating-point scalar that can also be sampled.
///
/// The sampling hooks live on the trait so generic code does not have to
/// repeat `StandardNormal: Distribution<T>` style bounds everywhere.
pub trait Real: Scalar + Float {
    fn from_f64(x: f64) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from `Gamma(shape, 1)`. A zero shape is the point mass at zero.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            fn from_f64(x: f64) -> Self {
                x as $f
            }

            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }

            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                if shape <= 0.0 {
                    return 0.0;
                }
                Gamma::new(shape, 1.0)
                    .expect("positive finite gamma shape")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f64);
impl_real!(f32);
