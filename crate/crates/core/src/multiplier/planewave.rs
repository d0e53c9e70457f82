//! Annulus integrals with a purely linear phase. The radial integral of
//! `exp(i s r) / r` has a sine/cosine-integral closed form, so only a
//! non-oscillatory angular factor is left; in dimension three the azimuthal
//! average of every registered spherical part is a quadratic polynomial in
//! the polar cosine, collapsing the sphere integral to one dimension.

use num_complex::Complex64;

use crate::error::{CzError, Result};
use crate::kernels::{CzKernel, OmegaAtom, BIAS_OFFSET};
use crate::numerics::quad_adaptive_1d_c;
use crate::numerics::special::{cosine_integral, sine_integral};

/// Below this phase scale the radial factor is the plain logarithm.
const LINEAR_PHASE_FLOOR: f64 = 1e-280;

/// Integral of exp(i s r) dr / r over [r_a, r_b], 0 < r_a < r_b.
pub(crate) fn radial_linear_factor(s: f64, r_a: f64, r_b: f64) -> Complex64 {
    let a = s.abs();
    if a * r_b < LINEAR_PHASE_FLOOR {
        return Complex64::new((r_b / r_a).ln(), 0.0);
    }
    let re = cosine_integral(a * r_b) - cosine_integral(a * r_a);
    let im = s.signum() * (sine_integral(a * r_b) - sine_integral(a * r_a));
    Complex64::new(re, im)
}

/// Annulus contribution of exp(i xi.t) K(t) over r_a <= |t| <= r_b for a
/// kernel whose radial phase is inactive.
pub(crate) fn annulus_plane_wave(
    kernel: &CzKernel,
    xi: &[f64],
    r_a: f64,
    r_b: f64,
    tol: f64,
) -> Result<Complex64> {
    debug_assert!(0.0 < r_a && r_a < r_b && r_b <= 1.0 + 1e-12);
    let norm: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(Complex64::new(
            (r_b / r_a).ln() * kernel.spherical_mean(),
            0.0,
        ));
    }
    match kernel.dim() {
        2 => {
            let omega = kernel.omega();
            let q = quad_adaptive_1d_c(
                |beta| {
                    let th = [beta.cos(), beta.sin()];
                    let s = xi[0] * th[0] + xi[1] * th[1];
                    radial_linear_factor(s, r_a, r_b).scale(omega.eval(&th))
                },
                0.0,
                std::f64::consts::TAU,
                tol,
            )?;
            Ok(q.value)
        }
        3 => {
            // Azimuthal average around the xi axis: with e = xi / |xi|,
            // each atom averages to a polynomial a0 + a1 c + a2 c^2 in the
            // polar cosine c (degree-one atoms give c e_j, the degree-two
            // harmonic gives its value at e times the Legendre P2).
            let e = [xi[0] / norm, xi[1] / norm, xi[2] / norm];
            let (mut a0, mut a1, mut a2) = (0.0_f64, 0.0_f64, 0.0_f64);
            for &(atom, w) in kernel.omega().terms() {
                match atom {
                    OmegaAtom::Coordinate(j) => a1 += w * e[j],
                    OmegaAtom::Harmonic22 => {
                        let d = e[0] * e[0] - e[1] * e[1];
                        a2 += 1.5 * w * d;
                        a0 -= 0.5 * w * d;
                    }
                    OmegaAtom::Biased => {
                        a1 += w * e[0];
                        a0 += w * BIAS_OFFSET;
                    }
                }
            }
            let q = quad_adaptive_1d_c(
                |c| radial_linear_factor(norm * c, r_a, r_b).scale(a0 + c * (a1 + c * a2)),
                -1.0,
                1.0,
                tol / std::f64::consts::TAU,
            )?;
            Ok(q.value.scale(std::f64::consts::TAU))
        }
        d => Err(CzError::Input(format!(
            "plane-wave annulus integrals need 2 or 3 variables, got {d}"
        ))),
    }
}
