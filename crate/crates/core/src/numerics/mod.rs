//! Shared numeric primitives: sparse polynomials, root finding, adaptive
//! quadrature, special functions, and the rank-one determinant identity.

pub mod linalg;
pub mod poly;
pub mod quad;
pub mod rankone;
pub mod roots;
pub mod special;

pub use poly::MultiPoly;
pub use quad::{gauss_legendre, quad_adaptive_1d, quad_adaptive_1d_c, Quad, QuadC};
pub use rankone::{det_rank_one_update, RankOneMatrixSpec};
pub use roots::find_root_monotone;
