//! Fourier transforms of the dyadic surface measures: smooth bump chi on the
//! gauge annulus 2^{-k} <= ||t|| <= 2^{-k+1}, normalized to total mass one.
//! Supported for two-variable surfaces whose dilation structure has no flat
//! directions (E = {0}): the gauge-polar chart then covers the annulus and
//! rotationally symmetric instances collapse to a 1-D Bessel integral.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{CzError, Result};
use crate::geometry::{LevelSetChart, SurfaceSpec};
use crate::numerics::special::bessel_j0;
use crate::numerics::{gauss_legendre, quad_adaptive_1d, quad_adaptive_1d_c};
use crate::profiles::PhiBar;

/// Magnitude limit shared with the multiplier engine.
use crate::multiplier::engine::PARAM_LIMIT;

/// Oscillation budget of the general nested path, in radians.
const NESTED_RADIAN_BUDGET: f64 = 5.0e4;
/// Detection tolerance for rotational symmetry of the chart.
const SYMMETRY_TOL: f64 = 1e-10;

/// The smooth bump supported in [1, 2] before normalization.
fn chi0(rho: f64) -> f64 {
    let u = (rho - 1.0) * (2.0 - rho);
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// Size of the anisotropic dilation delta(t)(xi, gamma) = (t xi, phibar(t) gamma).
pub fn dilation_delta(t: f64, xi: &[f64], gamma: f64, phi_bar: &PhiBar) -> f64 {
    let mut acc = (phi_bar.value(t) * gamma).powi(2);
    for &x in xi {
        acc += (t * x) * (t * x);
    }
    acc.sqrt()
}

/// One dyadic surface measure, ready to be transformed.
pub struct MuKMeasure {
    surface: SurfaceSpec,
    k: u32,
    c_norm: f64,
    residual: f64,
    /// Chart is the unit circle, the angular density is constant, and the
    /// graph height is radial: the transform collapses to a Bessel integral.
    zonal: bool,
    h_value: f64,
}

impl MuKMeasure {
    pub fn new(surface: &SurfaceSpec, k: u32) -> Result<Self> {
        if surface.dim() != 2 {
            return Err(CzError::Unsupported(format!(
                "dyadic measures are implemented for two-variable surfaces, got {}",
                surface.dim()
            )));
        }
        if k < 1 {
            return Err(CzError::Input("dyadic scale k must be at least 1".into()));
        }
        if !surface.is_gauge() {
            let ladder = surface.ladder()?;
            if ladder.codim != surface.dim() {
                return Err(CzError::Misuse(
                    "dyadic measures need a surface with no flat directions".into(),
                ));
            }
        }

        // Probe the chart for rotational symmetry.
        let mut zonal = true;
        let mut h_value = 0.0;
        let scale = 0.5_f64.powi(k as i32);
        for i in 0..64 {
            let beta = TAU * i as f64 / 64.0;
            let om = omega_point(surface, beta)?;
            let h = angular_density(surface, beta)?;
            let unit = (om[0] * om[0] + om[1] * om[1]).sqrt();
            if i == 0 {
                h_value = h;
            }
            let s1 = surface.psi(&[1.2 * scale * om[0], 1.2 * scale * om[1]]);
            let s1_ref = {
                let o0 = omega_point(surface, 0.0)?;
                surface.psi(&[1.2 * scale * o0[0], 1.2 * scale * o0[1]])
            };
            if (unit - 1.0).abs() > SYMMETRY_TOL
                || (h - h_value).abs() > SYMMETRY_TOL * (1.0 + h_value.abs())
                || (s1 - s1_ref).abs() > SYMMETRY_TOL * (1.0 + s1_ref.abs())
            {
                zonal = false;
                break;
            }
        }

        let mut m = MuKMeasure {
            surface: surface.clone(),
            k,
            c_norm: 1.0,
            residual: 0.0,
            zonal,
            h_value,
        };
        let raw0 = m.raw(&[0.0, 0.0], 0.0)?;
        if !(raw0.re > 0.0) || raw0.im.abs() > 1e-12 * raw0.re {
            return Err(CzError::Geometry(format!(
                "measure mass came out non-positive: {raw0}"
            )));
        }
        m.c_norm = 1.0 / raw0.re;

        // Independent product-form check of the same mass.
        let radial = quad_adaptive_1d(|rho| chi0(rho) * rho, 1.0, 2.0, 1e-12)?.value;
        let angular = {
            let (nodes, weights) = gauss_legendre(64);
            let panels = 8;
            let mut acc = 0.0;
            for p in 0..panels {
                let (a, b) = (TAU * p as f64 / panels as f64, TAU * (p + 1) as f64 / panels as f64);
                for (x, w) in nodes.iter().zip(weights.iter()) {
                    let beta = 0.5 * (a + b) + 0.5 * (b - a) * x;
                    acc += w * 0.5 * (b - a) * angular_density(surface, beta)?;
                }
            }
            acc
        };
        let product = radial * angular;
        m.residual = (raw0.re - product).abs() / product.abs().max(1e-300);
        if m.residual > 1e-8 {
            return Err(CzError::Geometry(format!(
                "normalization disagrees with the product form: relative residual {:.3e}",
                m.residual
            )));
        }
        Ok(m)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn surface(&self) -> &SurfaceSpec {
        &self.surface
    }

    /// Relative disagreement between the nested mass and the product form.
    pub fn normalization_residual(&self) -> f64 {
        self.residual
    }

    /// The transform of the normalized measure; equals 1 exactly at the
    /// origin by construction.
    pub fn fourier(&self, xi: &[f64], gamma: f64) -> Result<Complex64> {
        if xi.len() != 2 {
            return Err(CzError::Input(format!(
                "frequency must have 2 components, got {}",
                xi.len()
            )));
        }
        if !gamma.is_finite() || gamma.abs() > PARAM_LIMIT {
            return Err(CzError::Range { name: "gamma", value: gamma, limit: PARAM_LIMIT });
        }
        let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if !norm.is_finite() || norm > PARAM_LIMIT {
            return Err(CzError::Range { name: "xi", value: norm, limit: PARAM_LIMIT });
        }
        Ok(self.raw(xi, gamma)? * self.c_norm)
    }

    fn raw(&self, xi: &[f64], gamma: f64) -> Result<Complex64> {
        let scale = 0.5_f64.powi(self.k as i32);
        let phi = self.surface.phi();
        let gamma_active = gamma != 0.0 && !phi.is_zero();
        let xi_norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();

        if self.zonal {
            // Angular integral in closed form; 1-D radial remains.
            let radial_phase = |rho: f64| -> f64 {
                if gamma_active {
                    let om = [scale * rho, 0.0];
                    gamma * phi.value(self.surface.psi(&om))
                } else {
                    0.0
                }
            };
            // Even chunking by a phase-variation estimate.
            let mut tv = xi_norm * scale; // J0 oscillation across [1, 2]
            if gamma_active {
                let mut prev = radial_phase(1.0);
                for i in 1..=64 {
                    let v = radial_phase(1.0 + i as f64 / 64.0);
                    tv += (v - prev).abs();
                    prev = v;
                }
            }
            let chunks = (1 + (tv / 5e3) as usize).min(10_000);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..chunks {
                let a = 1.0 + i as f64 / chunks as f64;
                let b = 1.0 + (i + 1) as f64 / chunks as f64;
                let q = quad_adaptive_1d_c(
                    |rho| {
                        let bump = chi0(rho) * rho * bessel_j0(scale * rho * xi_norm);
                        Complex64::new(0.0, radial_phase(rho)).exp()
                            * (bump * TAU * self.h_value)
                    },
                    a,
                    b,
                    1e-10 / chunks as f64,
                )?;
                acc += q.value;
            }
            return Ok(acc);
        }

        // General gauge-polar path: nested adaptive quadrature under an
        // explicit oscillation budget.
        let rad_estimate = 2.0 * scale * xi_norm * 4.0
            + if gamma_active {
                let s_lo = self.surface.psi(&{
                    let o = omega_point(&self.surface, 0.0)?;
                    [scale * o[0], scale * o[1]]
                });
                let s_hi = self.surface.psi(&{
                    let o = omega_point(&self.surface, 0.0)?;
                    [2.0 * scale * o[0], 2.0 * scale * o[1]]
                });
                gamma.abs() * (phi.value(s_hi) - phi.value(s_lo)).abs() * 8.0
            } else {
                0.0
            };
        if rad_estimate > NESTED_RADIAN_BUDGET {
            return Err(CzError::Convergence {
                context: "dyadic measure oscillation budget",
                partial_re: 0.0,
                partial_im: 0.0,
                estimate: rad_estimate,
                detail: format!(
                    "estimated {rad_estimate:.3e} radians exceeds the nested-path budget; \
                     parameters this large need a rotationally symmetric chart"
                ),
            });
        }
        let outer = quad_adaptive_1d_c(
            |beta| {
                let om = match omega_point(&self.surface, beta) {
                    Ok(o) => o,
                    Err(_) => return Complex64::new(f64::NAN, f64::NAN),
                };
                let h = match angular_density(&self.surface, beta) {
                    Ok(v) => v,
                    Err(_) => return Complex64::new(f64::NAN, f64::NAN),
                };
                let inner = quad_adaptive_1d_c(
                    |rho| {
                        let t = [scale * rho * om[0], scale * rho * om[1]];
                        let mut phase = xi[0] * t[0] + xi[1] * t[1];
                        if gamma_active {
                            phase += gamma * phi.value(self.surface.psi(&t));
                        }
                        Complex64::new(0.0, phase).exp() * (chi0(rho) * rho)
                    },
                    1.0,
                    2.0,
                    2e-12,
                );
                match inner {
                    Ok(q) => q.value * h,
                    Err(_) => Complex64::new(f64::NAN, f64::NAN),
                }
            },
            0.0,
            TAU,
            1e-9,
        )?;
        Ok(outer.value)
    }
}

/// Point of the unit gauge level at chart angle beta.
fn omega_point(surface: &SurfaceSpec, beta: f64) -> Result<[f64; 2]> {
    if surface.is_gauge() {
        return Ok(surface.curve()?.point(beta));
    }
    let schulz = surface.schulz()?;
    let chart = LevelSetChart::new(schulz);
    let u = [beta.cos(), beta.sin()];
    let g = chart.gauge_radius(&u)?;
    Ok([g * u[0], g * u[1]])
}

/// Unsigned area-sweep density |det[omega, omega']| of the chart (the curve
/// registry parametrizes clockwise; star-shaped charts keep one sign).
fn angular_density(surface: &SurfaceSpec, beta: f64) -> Result<f64> {
    let h = 1e-6;
    let a = omega_point(surface, beta + h)?;
    let b = omega_point(surface, beta - h)?;
    let om = omega_point(surface, beta)?;
    let dp = [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)];
    Ok((om[0] * dp[1] - om[1] * dp[0]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;

    fn paraboloid() -> SurfaceSpec {
        SurfaceSpec::registry("paraboloid", Some(2), None, Profile::Power(1.0)).unwrap()
    }

    #[test]
    fn origin_value_is_exactly_one() {
        // Normalization and evaluation share one code path, so the origin
        // value is 1 to the last bit on both the zonal and general routes.
        let zonal = MuKMeasure::new(&paraboloid(), 4).unwrap();
        let v = zonal.fourier(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!(v.re.to_bits(), 1.0_f64.to_bits());
        assert_eq!(v.im, 0.0);
        assert!(zonal.normalization_residual() <= 1e-8);

        let flat = SurfaceSpec::registry("wwz-alpha", None, Some(1.0), Profile::Power(1.0))
            .unwrap();
        let general = MuKMeasure::new(&flat, 3).unwrap();
        let v = general.fourier(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!(v.re.to_bits(), 1.0_f64.to_bits());
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn zonal_route_matches_nested_quadrature() {
        let surf = paraboloid();
        let zonal = MuKMeasure::new(&surf, 3).unwrap();
        assert!(zonal.zonal);
        // Build a clone forced down the general path.
        let mut nested = MuKMeasure::new(&surf, 3).unwrap();
        nested.zonal = false;
        let raw0 = nested.raw(&[0.0, 0.0], 0.0).unwrap();
        nested.c_norm = 1.0 / raw0.re;
        for (xi, gamma) in [([2.5, 0.0], 0.0), ([1.0, 2.0], 1.5), ([0.0, 0.0], 3.0)] {
            let a = zonal.fourier(&xi, gamma).unwrap();
            let b = nested.fourier(&xi, gamma).unwrap();
            assert!(
                (a - b).norm() <= 5e-7,
                "xi {xi:?}, gamma {gamma}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn transform_magnitude_never_exceeds_the_mass() {
        let m = MuKMeasure::new(&paraboloid(), 4).unwrap();
        for &(x, y, g) in &[
            (0.0, 0.0, 0.0),
            (3.0, -1.0, 0.0),
            (40.0, 7.0, 12.0),
            (500.0, 0.0, -30.0),
            (0.0, 0.0, 900.0),
        ] {
            let v = m.fourier(&[x, y], g).unwrap();
            assert!(v.norm() <= 1.0 + 1e-9, "({x}, {y}, {g}): |mu| = {}", v.norm());
        }
    }

    #[test]
    fn conjugate_frequencies_conjugate_the_transform() {
        let m = MuKMeasure::new(&paraboloid(), 3).unwrap();
        let plus = m.fourier(&[4.0, -2.0], 9.0).unwrap();
        let minus = m.fourier(&[-4.0, 2.0], -9.0).unwrap();
        assert!((plus - minus.conj()).norm() <= 1e-9);
    }

    #[test]
    fn small_arguments_stay_near_the_mass() {
        // |mu_hat - 1| is controlled by the dilation size at scale 2^{-k+3}.
        let m = MuKMeasure::new(&paraboloid(), 5).unwrap();
        let pb = m.surface().phi_bar().unwrap();
        let t = 0.5_f64.powi(5 - 3);
        for &(x, y, g) in &[(0.5, 0.0, 0.0), (0.0, 0.0, 2.0), (1.0, 1.0, 1.0)] {
            let v = m.fourier(&[x, y], g).unwrap();
            let delta = dilation_delta(t, &[x, y], g, &pb);
            assert!(
                (v - Complex64::new(1.0, 0.0)).norm() <= 3.0 * delta,
                "({x}, {y}, {g}): |mu - 1| = {} vs delta {delta}",
                (v - Complex64::new(1.0, 0.0)).norm()
            );
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let three = SurfaceSpec::registry("paraboloid", Some(3), None, Profile::Zero).unwrap();
        assert!(matches!(
            MuKMeasure::new(&three, 2),
            Err(CzError::Unsupported(_))
        ));
        assert!(matches!(
            MuKMeasure::new(&paraboloid(), 0),
            Err(CzError::Input(_))
        ));
        // A surface with a flat direction fails the ladder gate.
        use crate::numerics::MultiPoly;
        let poly = MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 4], 1.0)]).unwrap();
        let ridged = SurfaceSpec::from_poly(poly, Profile::Zero, None).unwrap();
        assert!(matches!(
            MuKMeasure::new(&ridged, 2),
            Err(CzError::Misuse(_))
        ));
        // Over-range frequency.
        let m = MuKMeasure::new(&paraboloid(), 3).unwrap();
        assert!(matches!(
            m.fourier(&[2e6, 0.0], 0.0),
            Err(CzError::Range { .. })
        ));
    }
}
