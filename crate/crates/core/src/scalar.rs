//! Floating-point scalar abstraction shared by numeric evaluation and the grid lab.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point type used for numeric instantiation (f32 or f64).
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Machine epsilon scaled to something usable as a default zero-test floor.
    fn default_tolerance() -> Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl Real for f64 {
    fn default_tolerance() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn default_tolerance() -> Self {
        1e-4
    }
}
