//! Singular kernels with spherical parts from a small registry, plus the
//! cancellation integrals that characterize them.

pub mod checks;
pub mod kernel;
pub mod omega;
pub mod sphere;

pub use checks::{
    annulus_integral, flatten_identity_check, hemisphere_integral, levelset_cancellation,
    FlattenCheck,
};
pub use kernel::{build_kernel, ComboTerm, CzKernel, KernelConfig, MEAN_ZERO_TOL};
pub use omega::{omega_by_name, registered_kernel_names, Omega, OmegaAtom, BIAS_OFFSET};
pub use sphere::{hemisphere_spherical_integral, refined_integral, sphere_integral, SphereRule};
