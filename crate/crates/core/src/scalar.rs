//! Numeric traits the model is generic over.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A resource quantity: server capacity, link bandwidth, VNF or flow demand.
///
/// Integers, floats and exact rationals all qualify. Subtraction is only ever
/// performed after a `<=` check, so unsigned types are safe.
pub trait Resource: Num + Copy + PartialOrd + ToPrimitive + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion used by the state encoder and diagnostics.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_positive(self) -> bool {
        self > Self::zero()
    }
}

impl<T> Resource for T where T: Num + Copy + PartialOrd + ToPrimitive + FromPrimitive + Debug + Send + Sync + 'static {}

/// Floating point type used for encoded system states.
pub trait StateScalar: Float + FromPrimitive + Debug + Send + Sync + 'static {
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }
}

impl<T> StateScalar for T where T: Float + FromPrimitive + Debug + Send + Sync + 'static {}
