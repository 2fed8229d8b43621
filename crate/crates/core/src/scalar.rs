use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the entropy math runs on.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant, saturating to infinity where the type cannot hold it.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::infinity)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `p * log2(p)` with the limit convention `0 * log2(0) = 0`.
pub fn xlog2x<S: Scalar>(p: S) -> S {
    if p <= S::zero() {
        S::zero()
    } else {
        p * p.log2()
    }
}

/// `(part / total) * log2(part / total)`, zero when either side is zero.
pub(crate) fn share_log2<S: Scalar>(part: S, total: S) -> S {
    if part <= S::zero() || total <= S::zero() {
        S::zero()
    } else {
        xlog2x(part / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_log_zero_is_zero() {
        assert_eq!(xlog2x(0.0_f64), 0.0);
        assert_eq!(xlog2x(0.0_f32), 0.0);
        assert_eq!(share_log2(0.0_f64, 4.0), 0.0);
        assert_eq!(share_log2(1.0_f64, 0.0), 0.0);
    }

    #[test]
    fn halves() {
        assert_eq!(xlog2x(0.5_f64), -0.5);
        assert_eq!(share_log2(2.0_f64, 8.0), -0.5);
    }
}
