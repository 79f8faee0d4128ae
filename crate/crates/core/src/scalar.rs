//! Numeric traits the library is generic over.
//!
//! Combinatorial code (rank oracles, greedy, vertex enumeration) only needs
//! ordered field arithmetic and runs on [`Scalar`], which includes exact
//! rationals. Anything that takes logarithms or square roots (confidence
//! radii, bounds, random sampling) requires [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Ordered field element usable as a rank value, weight or basis entry.
pub trait Scalar:
    Num + NumAssign + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance for feasibility and sum checks. Zero for exact types.
    fn tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `true` for NaN and infinities; exact types are always finite.
    fn is_finite_value(&self) -> bool;

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

    fn abs_value(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    /// Lossy conversion used for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar: adds the transcendental functions bandit code needs.
pub trait Real: Scalar + Float {
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 representable")
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    // f32 carries ~7 significant digits; 1e-9 is below its resolution near 1.
    fn tolerance() -> Self {
        1e-5
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Real for f64 {}
impl Real for f32 {}
