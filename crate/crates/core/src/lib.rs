//! Numerical laboratory for singular integral operators associated to convex
//! hypersurfaces: flatness ladders and normal forms of the surface, kernel
//! cancellation checks, oscillatory multiplier evaluation, and the dichotomy
//! experiments built on top of them.

pub mod error;
pub mod geometry;
pub mod kernels;
pub mod multiplier;
pub mod numerics;
pub mod profiles;

pub use error::{CzError, Result};
