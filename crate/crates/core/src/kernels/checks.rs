//! Cancellation integrals: annulus, hemisphere, level-set, and the flat
//! slice vs hemisphere identity.

use rayon::prelude::*;

use crate::error::{CzError, Result};
use crate::geometry::LevelSetChart;
use crate::kernels::kernel::CzKernel;
use crate::kernels::sphere::hemisphere_spherical_integral;
use crate::numerics::{gauss_legendre, quad_adaptive_1d};

/// Truncation radii for the transverse integral in the level-set check.
const LEVELSET_CUTS: [f64; 3] = [8.0, 16.0, 32.0];
/// Half-widths of the expanding boxes in the flat-slice check.
const SLICE_RADII: [f64; 4] = [12.0, 24.0, 48.0, 96.0];
/// Disagreement between the 3-point and 4-point tail extrapolations that
/// counts as failure to converge.
const SLICE_AGREE: f64 = 5e-6;

fn check_radii(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > a) {
        return Err(CzError::Input(format!(
            "annulus radii must satisfy 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// Integral of K over the annulus a <= |t| <= b, via the polar
/// factorization log(b/a) times the spherical mean.
pub fn annulus_integral(kernel: &CzKernel, a: f64, b: f64) -> Result<f64> {
    check_radii(a, b)?;
    Ok((b / a).ln() * kernel.spherical_mean())
}

/// Integral of K over the half-annulus {v . t >= 0, a <= |t| <= b}:
/// log(b/a) times the hemisphere integral of the spherical part.
pub fn hemisphere_integral(kernel: &CzKernel, v: &[f64], a: f64, b: f64) -> Result<f64> {
    check_radii(a, b)?;
    let omega = kernel.omega();
    let half = hemisphere_spherical_integral(kernel.dim(), v, |th| omega.eval(th))?;
    Ok((b / a).ln() * half)
}

/// Double integral of K over the unit level set of the leading form times
/// the transverse fiber, weighted by the surface density; zero for kernels
/// satisfying the annulus axiom. The fiber is truncated at |z| <= Z for
/// Z in {8, 16, 32} and the constant term of c0 + c1 Z^{r-dim} is returned.
pub fn levelset_cancellation(kernel: &CzKernel, chart: &LevelSetChart) -> Result<f64> {
    let form = chart.form();
    let dim = form.m.len();
    if kernel.dim() != dim {
        return Err(CzError::Misuse(format!(
            "kernel dimension {} does not match the form dimension {dim}",
            kernel.dim()
        )));
    }
    let r = form.r;
    if r < 2 {
        return Err(CzError::Unsupported(format!(
            "transverse tail decays too slowly to extrapolate with {r} fast axis(es); need r >= 2"
        )));
    }
    if dim - r != 1 {
        return Err(CzError::Unsupported(format!(
            "level-set check needs a one-dimensional transverse fiber, got {}",
            dim - r
        )));
    }
    let fast = form.fast_axes().to_vec();
    let slow = (0..dim).find(|j| !fast.contains(j)).expect("one slow axis");

    let mut values = [0.0; 3];
    for (i, &cut) in LEVELSET_CUTS.iter().enumerate() {
        values[i] = chart.level_integral(|p| {
            let density = match chart.density(p) {
                Ok(d) => d,
                Err(_) => return f64::NAN,
            };
            let mut point = vec![0.0; dim];
            for (k, &j) in fast.iter().enumerate() {
                point[j] = p[k];
            }
            let fiber = quad_adaptive_1d(
                |z| {
                    let mut q = point.clone();
                    q[slow] = z;
                    kernel.eval(&q)
                },
                -cut,
                cut,
                1e-9,
            );
            match fiber {
                Ok(q) => density * q.value,
                Err(_) => f64::NAN,
            }
        })?;
    }
    let tail_power = r as f64 - dim as f64;
    Ok(fit_constant_plus_power(&LEVELSET_CUTS, &values, tail_power))
}

/// Least-squares constant of y ~ c0 + c1 x^p.
fn fit_constant_plus_power(xs: &[f64], ys: &[f64], p: f64) -> f64 {
    let n = xs.len() as f64;
    let (mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let u = x.powf(p);
        su += u;
        suu += u * u;
        sy += y;
        suy += u * y;
    }
    (suu * sy - su * suy) / (n * suu - su * su)
}

/// Both sides of the flat-slice identity: the plane integral of K(x, 1)
/// equals the upper-hemisphere integral of the spherical part.
#[derive(Clone, Copy, Debug)]
pub struct FlattenCheck {
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluate the two sides independently: lhs by expanding-box quadrature of
/// K(x1, x2, 1) with the tail removed by polynomial extrapolation in 1/R,
/// rhs by hemisphere quadrature over {theta_3 >= 0}.
pub fn flatten_identity_check(kernel: &CzKernel) -> Result<FlattenCheck> {
    if kernel.dim() != 3 {
        return Err(CzError::Misuse(format!(
            "flat-slice identity is a three-dimensional statement, kernel has dim {}",
            kernel.dim()
        )));
    }
    let ys: Vec<f64> = SLICE_RADII.iter().map(|&r| slice_box_integral(kernel, r)).collect();
    let us: Vec<f64> = SLICE_RADII.iter().map(|&r| 1.0 / r).collect();
    let lhs = lagrange_at_zero(&us, &ys);
    let shorter = lagrange_at_zero(&us[1..], &ys[1..]);
    let gap = (lhs - shorter).abs();
    if gap > SLICE_AGREE * (1.0 + lhs.abs()) {
        return Err(CzError::Convergence {
            context: "flat-slice tail extrapolation",
            partial_re: lhs,
            partial_im: 0.0,
            estimate: gap,
            detail: format!(
                "3-point and 4-point extrapolations disagree by {gap:.3e} at box {:.0}",
                SLICE_RADII[SLICE_RADII.len() - 1]
            ),
        });
    }
    let omega = kernel.omega();
    let rhs = hemisphere_spherical_integral(3, &[0.0, 0.0, 1.0], |th| omega.eval(th))?;
    Ok(FlattenCheck { lhs, rhs })
}

/// Composite 8-point Gauss-Legendre tensor quadrature of K(x, y, 1) over
/// the box [-R, R]^2 with unit-width panels.
fn slice_box_integral(kernel: &CzKernel, radius: f64) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let panels = (2.0 * radius).round().max(1.0) as usize;
    let h = 2.0 * radius / panels as f64;
    let mut xs = Vec::with_capacity(panels * 8);
    let mut ws = Vec::with_capacity(panels * 8);
    for i in 0..panels {
        let mid = -radius + (i as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    let rows: Vec<f64> = xs
        .par_iter()
        .zip(ws.par_iter())
        .map(|(&x, &wx)| {
            let mut acc = 0.0;
            for (&y, &wy) in xs.iter().zip(&ws) {
                acc += wy * kernel.eval(&[x, y, 1.0]);
            }
            wx * acc
        })
        .collect();
    rows.iter().sum()
}

/// Value at 0 of the polynomial interpolating (us, ys).
fn lagrange_at_zero(us: &[f64], ys: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..us.len() {
        let mut basis = 1.0;
        for j in 0..us.len() {
            if j != i {
                basis *= us[j] / (us[j] - us[i]);
            }
        }
        total += basis * ys[i];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{flatness_ladder, schulz_decompose, SchulzForm};
    use crate::kernels::kernel::{build_kernel, KernelConfig};
    use crate::numerics::MultiPoly;

    const PI: f64 = std::f64::consts::PI;

    fn kernel(name: &str, dim: usize) -> CzKernel {
        build_kernel(&KernelConfig::named(name, dim)).unwrap()
    }

    fn round_form() -> SchulzForm {
        // x^2 + y^2 + z^4: two fast axes, one quartic transverse axis.
        let poly = MultiPoly::new(
            3,
            vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 2, 0], 1.0),
                (vec![0, 0, 4], 1.0),
            ],
        )
        .unwrap();
        let ladder = flatness_ladder(&poly).unwrap();
        schulz_decompose(&poly, &ladder).unwrap()
    }

    #[test]
    fn annulus_vanishes_for_registered_kernels() {
        for dim in [2usize, 3] {
            for name in ["riesz-1", "riesz-2", "harmonic-22"] {
                let k = kernel(name, dim);
                let v = annulus_integral(&k, 0.1, 1.0).unwrap();
                assert!(v.abs() < 1e-8, "{name} dim {dim}: {v}");
            }
        }
        let k = kernel("riesz-1", 3);
        assert!(annulus_integral(&k, 0.5, 2.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn annulus_rejects_degenerate_radii() {
        let k = kernel("riesz-1", 2);
        assert!(matches!(annulus_integral(&k, 0.0, 1.0), Err(CzError::Input(_))));
        assert!(matches!(annulus_integral(&k, 2.0, 1.0), Err(CzError::Input(_))));
    }

    #[test]
    fn biased_control_scales_linearly_in_log_ratio() {
        // Mean of theta_1 + 1/4 is pi on S^2; the annulus integral is
        // pi log(b/a).
        let k = kernel("biased", 3);
        let one = annulus_integral(&k, 1.0, std::f64::consts::E).unwrap();
        let two = annulus_integral(&k, 1.0, (2.0_f64).exp()).unwrap();
        assert!((one - PI).abs() < 1e-7, "{one}");
        assert!((two - 2.0 * one).abs() < 1e-9);
    }

    #[test]
    fn hemisphere_frozen_value_and_odd_cases() {
        let k = kernel("riesz-1", 3);
        // log(1 / (1/e)) = 1; the hemisphere moment of theta_1 is pi.
        let v = hemisphere_integral(&k, &[1.0, 0.0, 0.0], (-1.0_f64).exp(), 1.0).unwrap();
        assert!((v - PI).abs() < 1e-6, "{v}");
        // theta_1 is odd across the hemisphere theta_2 >= 0.
        let w = hemisphere_integral(&k, &[0.0, 1.0, 0.0], 0.1, 1.0).unwrap();
        assert!(w.abs() < 1e-8, "{w}");
        let k2 = kernel("riesz-2", 3);
        let u = hemisphere_integral(&k2, &[1.0, 0.0, 0.0], 0.1, 1.0).unwrap();
        assert!(u.abs() < 1e-8, "{u}");
    }

    #[test]
    fn hemispheres_add_up_to_the_annulus() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for dim in [2usize, 3] {
            for name in ["riesz-1", "harmonic-22", "biased"] {
                let k = kernel(name, dim);
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                let plus = hemisphere_integral(&k, &v, 0.2, 3.0).unwrap();
                let neg: Vec<f64> = v.iter().map(|x| -x).collect();
                let minus = hemisphere_integral(&k, &neg, 0.2, 3.0).unwrap();
                let full = annulus_integral(&k, 0.2, 3.0).unwrap();
                assert!(
                    (plus + minus - full).abs() < 2e-8,
                    "{name} dim {dim}: {plus} + {minus} vs {full}"
                );
            }
        }
    }

    #[test]
    fn levelset_vanishes_when_the_axiom_holds() {
        let form = round_form();
        let chart = LevelSetChart::new(&form);
        let odd_z = kernel("riesz-3", 3);
        let v = levelset_cancellation(&odd_z, &chart).unwrap();
        assert!(v.abs() < 1e-6, "odd transverse part: {v}");
        for name in ["riesz-1", "harmonic-22"] {
            let k = kernel(name, 3);
            let v = levelset_cancellation(&k, &chart).unwrap();
            assert!(v.abs() < 1e-4, "{name}: {v}");
        }
    }

    #[test]
    fn levelset_matches_an_independent_quadrature_oracle() {
        // Oracle: midpoint rule in angle on the unit circle (the level set
        // of x^2 + y^2, density 1), unit-width Gauss panels in z, Richardson
        // extrapolation in Z^{-2} from Z = 16, 32.
        let form = round_form();
        let chart = LevelSetChart::new(&form);
        let k = kernel("riesz-1", 3);

        let (gx, gw) = gauss_legendre(8);
        let value_at = |zmax: f64| -> f64 {
            let n_ang = 2048;
            let dphi = 2.0 * PI / n_ang as f64;
            let mut total = 0.0;
            for i in 0..n_ang {
                let phi = dphi * (i as f64 + 0.5);
                let (c, s) = (phi.cos(), phi.sin());
                let panels = (2.0 * zmax) as usize;
                let h = 2.0 * zmax / panels as f64;
                let mut inner = 0.0;
                for pnl in 0..panels {
                    let mid = -zmax + (pnl as f64 + 0.5) * h;
                    for (x, w) in gx.iter().zip(&gw) {
                        let z = mid + 0.5 * h * x;
                        inner += 0.5 * h * w * k.eval(&[c, s, z]);
                    }
                }
                total += dphi * inner;
            }
            total
        };
        let oracle = {
            let v16 = value_at(16.0);
            let v32 = value_at(32.0);
            (4.0 * v32 - v16) / 3.0
        };
        let ours = levelset_cancellation(&k, &chart).unwrap();
        assert!(ours.abs() < 1e-4, "{ours}");
        assert!((ours - oracle).abs() < 1e-4, "{ours} vs oracle {oracle}");
    }

    #[test]
    fn levelset_flags_violations_and_unsupported_shapes() {
        let form = round_form();
        let chart = LevelSetChart::new(&form);
        let biased = kernel("biased", 3);
        let v = levelset_cancellation(&biased, &chart).unwrap();
        assert!(v > 3.0, "mean-violating control should not cancel: {v}");

        // Every axis quadratic: no transverse fiber left.
        let round3 = MultiPoly::new(
            3,
            vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 2, 0], 1.0),
                (vec![0, 0, 2], 1.0),
            ],
        )
        .unwrap();
        let ladder3 = flatness_ladder(&round3).unwrap();
        let form3 = schulz_decompose(&round3, &ladder3).unwrap();
        let chart3 = LevelSetChart::new(&form3);
        assert!(matches!(
            levelset_cancellation(&kernel("riesz-1", 3), &chart3),
            Err(CzError::Unsupported(_))
        ));

        // One fast axis only: tail too slow.
        let thin = MultiPoly::new(
            3,
            vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 4, 0], 1.0),
                (vec![0, 0, 4], 1.0),
            ],
        )
        .unwrap();
        let ladder_thin = flatness_ladder(&thin).unwrap();
        let form_thin = schulz_decompose(&thin, &ladder_thin).unwrap();
        let chart_thin = LevelSetChart::new(&form_thin);
        assert!(matches!(
            levelset_cancellation(&kernel("riesz-1", 3), &chart_thin),
            Err(CzError::Unsupported(_))
        ));

        // Dimension mismatch.
        assert!(matches!(
            levelset_cancellation(&kernel("riesz-1", 2), &chart),
            Err(CzError::Misuse(_))
        ));
    }

    #[test]
    fn flat_slice_identity_frozen_value() {
        // For the third coordinate the slice integrand is
        // (1 + |x|^2)^{-2}, whose plane integral is pi; the hemisphere
        // moment is also pi.
        let k = kernel("riesz-3", 3);
        let chk = flatten_identity_check(&k).unwrap();
        assert!((chk.rhs - PI).abs() < 1e-8, "rhs {}", chk.rhs);
        assert!((chk.lhs - PI).abs() < 1e-5, "lhs {}", chk.lhs);
    }

    #[test]
    fn flat_slice_identity_for_every_registered_kernel() {
        for name in ["riesz-1", "riesz-2", "riesz-3", "harmonic-22", "biased"] {
            let cfg = KernelConfig::named(name, 3);
            let k = build_kernel(&cfg).unwrap();
            let chk = flatten_identity_check(&k).unwrap();
            let scale = chk.rhs.abs().max(1.0);
            assert!(
                (chk.lhs - chk.rhs).abs() <= 1e-4 * scale,
                "{name}: lhs {} vs rhs {}",
                chk.lhs,
                chk.rhs
            );
        }
        // The odd entries kill both sides outright.
        let odd = flatten_identity_check(&kernel("riesz-1", 3)).unwrap();
        assert!(odd.lhs.abs() < 1e-8 && odd.rhs.abs() < 1e-8);
        // The biased control pins both sides at (1/4) |upper hemisphere|.
        let biased = flatten_identity_check(&kernel("biased", 3)).unwrap();
        assert!((biased.rhs - PI / 2.0).abs() < 1e-8, "rhs {}", biased.rhs);
        assert!((biased.lhs - PI / 2.0).abs() < 1e-4, "lhs {}", biased.lhs);
    }

    #[test]
    fn flat_slice_identity_needs_dimension_three() {
        let k = kernel("riesz-1", 2);
        assert!(matches!(flatten_identity_check(&k), Err(CzError::Misuse(_))));
    }
}
