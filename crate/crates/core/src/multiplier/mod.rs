//! Truncated multiplier evaluation: oscillatory integrals of Calderon-Zygmund
//! kernels over shrinking annuli, their 1-D reduced forms, and the Fourier
//! transforms of dyadic surface measures.

mod cells;
mod coarea;
mod engine;
mod muk;
mod planewave;
mod reduced;

pub use engine::{
    truncated_multiplier, MultiplierEngine, MultiplierQuery, DEFAULT_QUERY_TOL, PARAM_LIMIT,
};
pub use muk::{dilation_delta, MuKMeasure};
pub use reduced::{
    reduced_integral, reduced_integral_tol, ReducedForm, ReducedIntegralSpec, ReducedQ,
    DEFAULT_B_EXPONENT,
};
