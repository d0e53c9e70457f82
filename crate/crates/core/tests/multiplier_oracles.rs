//! Dense brute-force oracles for the multiplier operations: fixed midpoint
//! and Simpson grids written straight from the integral definitions. They
//! share no quadrature machinery with the adaptive evaluators under test.

use czlab_core::geometry::SurfaceSpec;
use czlab_core::kernels::{build_kernel, CzKernel, KernelConfig};
use czlab_core::multiplier::{
    reduced_integral, truncated_multiplier, MuKMeasure, MultiplierQuery, ReducedForm,
    ReducedIntegralSpec, ReducedQ,
};
use czlab_core::profiles::{PhiBar, Profile};
use num_complex::Complex64;
use proptest::prelude::*;
use rayon::prelude::*;

const CARTESIAN_TOL: f64 = 1e-3;
const LOGPOLAR_TOL: f64 = 1e-3;
const MEASURE_TOL: f64 = 1e-4;
const REDUCED_TOL: f64 = 1e-6;

/// Fixed-order pairwise reduction, so parallel slab sums stay reproducible.
fn pairwise(vals: &[Complex64]) -> Complex64 {
    match vals.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => vals[0],
        n => pairwise(&vals[..n / 2]) + pairwise(&vals[n / 2..]),
    }
}

/// Midpoint rule on a fixed 256^3 tensor grid in annulus coordinates
/// (radius, polar angle, azimuth), so the domain eps <= |t| <= 1 is covered
/// exactly. The kernel's homogeneity turns K(t) dt into Omega(theta)
/// sin(polar) / r per coordinate volume. Radial slabs run in parallel; each
/// slab accumulates in index order.
fn annulus_tensor_midpoint_dim3(kernel: &CzKernel, xi: &[f64; 3], eps: f64) -> Complex64 {
    let n = 256usize;
    let (hr, hp, hb) = (
        (1.0 - eps) / n as f64,
        std::f64::consts::PI / n as f64,
        std::f64::consts::TAU / n as f64,
    );
    let slabs: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|ir| {
            let r = eps + (ir as f64 + 0.5) * hr;
            let mut acc = Complex64::new(0.0, 0.0);
            for ip in 0..n {
                let polar = (ip as f64 + 0.5) * hp;
                let (sp, cp) = polar.sin_cos();
                for ib in 0..n {
                    let beta = (ib as f64 + 0.5) * hb;
                    let theta = [sp * beta.cos(), sp * beta.sin(), cp];
                    let t = [r * theta[0], r * theta[1], r * theta[2]];
                    let phase = xi[0] * t[0] + xi[1] * t[1] + xi[2] * t[2];
                    acc += Complex64::new(0.0, phase).exp() * (kernel.eval(&theta) * sp / r);
                }
            }
            acc * (hr * hp * hb)
        })
        .collect();
    pairwise(&slabs)
}

/// Midpoint rule in log-polar coordinates for the two-variable truncated
/// multiplier: t = e^u (cos b, sin b) turns K(t) dt into Omega(theta) du db,
/// and the grid covers the annulus exactly.
fn logpolar_midpoint_dim2(
    surface: &SurfaceSpec,
    kernel: &CzKernel,
    gamma: f64,
    xi: &[f64; 2],
    eps: f64,
    n: usize,
) -> Complex64 {
    let u_lo = eps.ln();
    let hu = -u_lo / n as f64;
    let hb = std::f64::consts::TAU / n as f64;
    let phi = surface.phi();
    let rows: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|iu| {
            let r = (u_lo + (iu as f64 + 0.5) * hu).exp();
            let mut acc = Complex64::new(0.0, 0.0);
            for ib in 0..n {
                let beta = (ib as f64 + 0.5) * hb;
                let theta = [beta.cos(), beta.sin()];
                let t = [r * theta[0], r * theta[1]];
                let mut phase = xi[0] * t[0] + xi[1] * t[1];
                if gamma != 0.0 {
                    phase += gamma * phi.value(surface.psi(&t));
                }
                acc += Complex64::new(0.0, phase).exp() * kernel.eval(&theta);
            }
            acc * hu * hb
        })
        .collect();
    pairwise(&rows)
}

/// The dyadic measure in plain Cartesian form: chi(2^k |t|) dt over the
/// square enclosing its support, normalized by the same rule at the origin.
/// Valid for surfaces whose gauge norm is the Euclidean one.
fn cartesian_midpoint_measure(
    surface: &SurfaceSpec,
    k: u32,
    xi: &[f64; 2],
    gamma: f64,
    n: usize,
) -> Complex64 {
    let chi = |rho: f64| {
        let u = (rho - 1.0) * (2.0 - rho);
        if u <= 0.0 {
            0.0
        } else {
            (-1.0 / u).exp()
        }
    };
    let scale = 0.5_f64.powi(k as i32);
    let half = 2.0 * scale;
    let h = 2.0 * half / n as f64;
    let phi = surface.phi();
    let raw = |xi: &[f64; 2], gamma: f64| -> Complex64 {
        let rows: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|iy| {
                let ty = -half + (iy as f64 + 0.5) * h;
                let mut acc = Complex64::new(0.0, 0.0);
                for ix in 0..n {
                    let t = [-half + (ix as f64 + 0.5) * h, ty];
                    let bump = chi((t[0] * t[0] + t[1] * t[1]).sqrt() / scale);
                    if bump == 0.0 {
                        continue;
                    }
                    let phase = xi[0] * t[0] + xi[1] * t[1] + gamma * phi.value(surface.psi(&t));
                    acc += Complex64::new(0.0, phase).exp() * bump;
                }
                acc * h * h
            })
            .collect();
        pairwise(&rows)
    };
    raw(xi, gamma) / raw(&[0.0, 0.0], 0.0)
}

/// Composite Simpson rule for the one-dimensional reduced forms, with the
/// sine form's removable singularity patched by its limit value.
fn simpson_reduced(spec: &ReducedIntegralSpec) -> Complex64 {
    let n = 1 << 17; // panels; even by construction
    let (lo, hi) = match spec.form {
        ReducedForm::Sine => {
            let mut cap = spec.xi_cap.abs();
            if spec.b_exponent > 0.0 {
                cap = cap.max(spec.eta.abs().powf(spec.b_exponent));
            }
            (0.0, 1.0_f64.min(1.0 / cap.max(1.0)))
        }
        ReducedForm::OneSidedPhase => {
            if spec.eta.abs() <= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            (1.0 / spec.eta.abs(), 1.0)
        }
    };
    let q = |l: f64| match &spec.q {
        ReducedQ::Identity => l,
        ReducedQ::SurfaceHeight { .. } => unreachable!("oracle covers the identity route"),
    };
    let g = |l: f64| -> Complex64 {
        match spec.form {
            ReducedForm::Sine => {
                if l == 0.0 {
                    return Complex64::new(spec.eta, 0.0);
                }
                Complex64::new(0.0, spec.gamma * spec.phi_bar.value(l)).exp()
                    * ((spec.eta * q(l)).sin() / l)
            }
            ReducedForm::OneSidedPhase => {
                Complex64::new(0.0, spec.gamma * spec.phi_bar.value(l) - spec.eta * q(l)).exp() / l
            }
        }
    };
    let h = (hi - lo) / n as f64;
    let mut acc = g(lo) + g(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += g(lo + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

#[test]
fn truncated_matches_the_tensor_rule_in_three_variables() {
    let surface = SurfaceSpec::registry("paraboloid", Some(3), None, Profile::Zero).unwrap();
    let kernel = build_kernel(&KernelConfig::named("riesz-1", 3)).unwrap();
    let xi = [3.0, 0.0, 0.0];
    let eps = 0.5_f64.powi(6);
    let oracle = annulus_tensor_midpoint_dim3(&kernel, &xi, eps);
    let query = MultiplierQuery {
        surface,
        kernel,
        gamma: 0.0,
        xi: xi.to_vec(),
        eps,
        modulation: None,
    };
    let got = truncated_multiplier(&query).unwrap();
    assert!(
        (got - oracle).norm() < CARTESIAN_TOL,
        "got {got}, oracle {oracle}"
    );
}

#[test]
fn truncated_matches_the_log_polar_rule_in_two_variables() {
    let surface = SurfaceSpec::registry("paraboloid", Some(2), None, Profile::Power(1.0)).unwrap();
    let kernel = build_kernel(&KernelConfig::named("riesz-1", 2)).unwrap();
    let eps = 0.5_f64.powi(5);

    // Mixed frequencies exercise the oscillation-cell route.
    let xi = [1.2, 0.4];
    let gamma = 2.7;
    let oracle = logpolar_midpoint_dim2(&surface, &kernel, gamma, &xi, eps, 4096);
    let query = MultiplierQuery {
        surface: surface.clone(),
        kernel: kernel.clone(),
        gamma,
        xi: xi.to_vec(),
        eps,
        modulation: None,
    };
    let got = truncated_multiplier(&query).unwrap();
    assert!(
        (got - oracle).norm() < LOGPOLAR_TOL,
        "mixed: got {got}, oracle {oracle}"
    );

    // A radial-frequency query exercises the level-band route instead.
    let gamma = 5.5;
    let oracle = logpolar_midpoint_dim2(&surface, &kernel, gamma, &[0.0, 0.0], eps, 4096);
    let query = MultiplierQuery {
        surface,
        kernel,
        gamma,
        xi: vec![0.0, 0.0],
        eps,
        modulation: None,
    };
    let got = truncated_multiplier(&query).unwrap();
    assert!(
        (got - oracle).norm() < LOGPOLAR_TOL,
        "radial: got {got}, oracle {oracle}"
    );
}

#[test]
fn measure_transform_matches_the_cartesian_rule() {
    let surface = SurfaceSpec::registry("paraboloid", Some(2), None, Profile::Power(1.0)).unwrap();
    let measure = MuKMeasure::new(&surface, 3).unwrap();
    let cases: [([f64; 2], f64); 3] = [
        ([2.5, 0.0], 0.0),
        ([0.0, 0.0], 30.0),
        ([1.5, -2.0], 6.0),
    ];
    for (xi, gamma) in cases {
        let oracle = cartesian_midpoint_measure(&surface, 3, &xi, gamma, 2048);
        let got = measure.fourier(&xi, gamma).unwrap();
        assert!(
            (got - oracle).norm() < MEASURE_TOL,
            "xi {xi:?}, gamma {gamma}: got {got}, oracle {oracle}"
        );
    }
}

#[test]
fn reduced_integrals_match_the_simpson_rule() {
    // Pure sine-integral configuration: the value is Si(eta).
    let si = ReducedIntegralSpec {
        form: ReducedForm::Sine,
        phi_bar: PhiBar::new(Profile::Power(2.0), 1),
        q: ReducedQ::Identity,
        gamma: 0.0,
        eta: 50.0,
        xi_cap: 1.0,
        b_exponent: 0.0,
    };
    let got = reduced_integral(&si).unwrap();
    let oracle = simpson_reduced(&si);
    assert!((got - oracle).norm() < REDUCED_TOL, "Si: got {got}, oracle {oracle}");
    assert!(
        (got.re - 1.5516170724859358).abs() < 1e-7 && got.im.abs() < REDUCED_TOL,
        "Si(50) came out as {got}"
    );

    // Oscillatory sine form with a capped upper limit.
    let sine = ReducedIntegralSpec {
        form: ReducedForm::Sine,
        phi_bar: PhiBar::new(Profile::Power(2.0), 1),
        q: ReducedQ::Identity,
        gamma: 40.0,
        eta: 7.0,
        xi_cap: 3.0,
        b_exponent: 0.5,
    };
    let got = reduced_integral(&sine).unwrap();
    let oracle = simpson_reduced(&sine);
    assert!((got - oracle).norm() < REDUCED_TOL, "sine: got {got}, oracle {oracle}");

    // One-sided phase over [1/eta, 1].
    let one_sided = ReducedIntegralSpec {
        form: ReducedForm::OneSidedPhase,
        phi_bar: PhiBar::new(Profile::Power(2.0), 1),
        q: ReducedQ::Identity,
        gamma: 12.0,
        eta: 9.0,
        xi_cap: 0.0,
        b_exponent: 0.0,
    };
    let got = reduced_integral(&one_sided).unwrap();
    let oracle = simpson_reduced(&one_sided);
    assert!(
        (got - oracle).norm() < REDUCED_TOL,
        "one-sided: got {got}, oracle {oracle}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, .. ProptestConfig::default() })]

    /// Negating both frequencies conjugates every reduced integral: the
    /// integrands are real apart from the oscillatory factor.
    #[test]
    fn reduced_integral_conjugates_under_frequency_negation(
        gamma in -200.0..200.0f64,
        eta in 1.5..400.0f64,
        cap in 0.0..4.0f64,
        one_sided in proptest::bool::ANY,
    ) {
        let spec = |g: f64, e: f64| ReducedIntegralSpec {
            form: if one_sided { ReducedForm::OneSidedPhase } else { ReducedForm::Sine },
            phi_bar: PhiBar::new(Profile::Power(2.0), 1),
            q: ReducedQ::Identity,
            gamma: g,
            eta: e,
            xi_cap: cap,
            b_exponent: 0.5,
        };
        let plus = reduced_integral(&spec(gamma, eta)).unwrap();
        let minus = reduced_integral(&spec(-gamma, -eta)).unwrap();
        // The one-sided phase conjugates; the sine factor also flips sign.
        let want = if one_sided { minus.conj() } else { -minus.conj() };
        prop_assert!(
            (plus - want).norm() < 2e-8,
            "got {plus} vs {want}"
        );
    }
}
