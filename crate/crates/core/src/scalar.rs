//! Scalar type used for knowledge values.
//!
//! All dynamics and closed-form routines are generic over [`Knowledge`], so the
//! same code runs in `f64` (the default everywhere) or `f32`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type that can hold a knowledge value.
pub trait Knowledge:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for parameters and literals.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Knowledge for f32 {}
impl Knowledge for f64 {}

/// Distance from 0 or 1 below which values snap to the boundary.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-12;
