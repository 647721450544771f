//! Scalar abstraction shared by the model, reference dynamics and the curve solver.
//!
//! Everything that only needs field arithmetic and ordering is written against
//! [`Scalar`], so the same code runs on `f32`, `f64` and exact rationals. The
//! stochastic parts (noise, learners, harness) stay on `f64`.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Absolute slack allowed when testing membership of a closed interval.
    fn slack() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    fn real(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
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

    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        self.max_of(lo).min_of(hi)
    }

    /// `lo - slack <= self <= hi + slack`
    fn within(self, lo: Self, hi: Self) -> bool {
        self >= lo - Self::slack() && self <= hi + Self::slack()
    }
}

impl Scalar for f64 {
    fn slack() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn slack() -> Self {
        1e-5
    }
}

impl Scalar for Ratio<i128> {
    fn slack() -> Self {
        Ratio::from_integer(0)
    }
}

/// Smallest integer `n >= 0` with `n >= x`, computed through `f64` and then
/// corrected with exact comparisons in `S`.
pub(crate) fn ceil_count<S: Scalar>(x: S) -> usize {
    if x <= S::zero() {
        return 0;
    }
    let mut n = x.real().ceil().max(0.0) as usize;
    while n > 0 && S::count(n - 1) >= x {
        n -= 1;
    }
    while S::count(n) < x {
        n += 1;
    }
    n
}
