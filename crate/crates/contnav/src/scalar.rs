//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar used throughout the simulator, policy and metrics.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }

    /// Lossy view as `f64`, for reporting and serialization to text tables.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sum in a fixed left-to-right order (determinism requires a pinned
/// reduction order; never sum scalars through an unordered collection).
pub fn sum<S: Scalar>(xs: impl IntoIterator<Item = S>) -> S {
    xs.into_iter().fold(S::zero(), |a, b| a + b)
}

/// Dot product of two equal-length slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

/// Squared Euclidean norm.
pub fn norm_sq<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn of_round_trips_constants() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
    }

    #[test]
    fn dot_matches_hand_value() {
        let a = [1.0f64, 2.0, 3.0];
        let b = [4.0f64, -5.0, 6.0];
        assert_eq!(dot(&a, &b), 4.0 - 10.0 + 18.0);
    }
}
