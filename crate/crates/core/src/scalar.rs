use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar accepted by the analytic queueing formulas.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl<T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static> Scalar for T {}
