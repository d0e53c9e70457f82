//! Adaptive 1-D quadrature on a Gauss-Kronrod 7/15 panel, for real and
//! complex integrands.

use num_complex::Complex64;

use crate::error::{CzError, Result};

/// Kronrod abscissae (positive half), 15-point rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the embedded 7-point rule (odd-index abscissae).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: usize = 60;
const PANEL_BUDGET: usize = 400_000;

/// Value plus the accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub err: f64,
}

/// Complex-valued counterpart of [`Quad`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadC {
    pub value: Complex64,
    pub err: f64,
}

/// Shared accumulator abstraction so one adaptive driver serves both field types.
trait Accum: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn abs(self) -> f64;
    fn parts(self) -> (f64, f64);
}

impl Accum for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Accum for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

/// One Gauss-Kronrod panel: returns (kronrod, error estimate).
fn gk15_panel<T: Accum>(f: &mut dyn FnMut(f64) -> Result<T>, a: f64, b: f64) -> Result<(T, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = T::zero();
    let mut gauss = T::zero();
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let sample = if x == 0.0 {
            f(mid)?
        } else {
            f(mid - half * x)?.add(f(mid + half * x)?)
        };
        kron = kron.add(sample.scale(wk));
        if i % 2 == 1 {
            gauss = gauss.add(sample.scale(WG[i / 2]));
        }
    }
    let kron = kron.scale(half);
    let gauss = gauss.scale(half);
    let err = kron.add(gauss.scale(-1.0)).abs();
    Ok((kron, err))
}

struct AdaptState<T: Accum> {
    sum: T,
    err_sum: f64,
    panels: usize,
    failures: usize,
    worst: f64,
}

fn adapt<T: Accum>(
    f: &mut dyn FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    tol: f64,
    total_len: f64,
    depth: usize,
    state: &mut AdaptState<T>,
) -> Result<()> {
    let (value, err) = gk15_panel(f, a, b)?;
    state.panels += 1;
    let local_share = tol * ((b - a) / total_len);
    if err <= local_share {
        state.sum = state.sum.add(value);
        state.err_sum += err;
        return Ok(());
    }
    if depth >= MAX_DEPTH || state.panels >= PANEL_BUDGET {
        // Out of budget: keep the best available value and flag the failure.
        state.sum = state.sum.add(value);
        state.err_sum += err;
        state.failures += 1;
        state.worst = state.worst.max(err);
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, tol, total_len, depth + 1, state)?;
    adapt(f, mid, b, tol, total_len, depth + 1, state)
}

fn drive<T: Accum>(
    mut f: impl FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(T, f64)> {
    if !(tol > 0.0) {
        return Err(CzError::Input(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(CzError::Input(format!("non-finite interval [{a}, {b}]")));
    }
    if a > b {
        return Err(CzError::Input(format!("inverted interval [{a}, {b}]")));
    }
    if a == b {
        return Ok((T::zero(), 0.0));
    }
    let mut state = AdaptState {
        sum: T::zero(),
        err_sum: 0.0,
        panels: 0,
        failures: 0,
        worst: 0.0,
    };
    adapt(&mut f, a, b, tol, b - a, 0, &mut state)?;
    if state.failures > 0 {
        let (re, im) = state.sum.parts();
        return Err(CzError::Convergence {
            context: "quad_adaptive_1d",
            partial_re: re,
            partial_im: im,
            estimate: state.err_sum,
            detail: format!(
                "{} panel(s) hit the depth/budget limit, worst estimate {:.3e}",
                state.failures, state.worst
            ),
        });
    }
    Ok((state.sum, state.err_sum))
}

/// Integrate a real function over [a, b] to absolute tolerance `tol`.
///
/// Panels split when the local estimate exceeds its length-proportional share
/// of `tol`; traversal is depth-first left-to-right, so results are
/// deterministic. NaN/infinite samples abort with a numeric error; exceeding
/// the depth or panel budget yields a convergence error carrying the partial
/// value and the accumulated estimate.
pub fn quad_adaptive_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quad> {
    let (value, err) = drive(
        |x| {
            let y = f(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(CzError::NonFinite { context: "quad_adaptive_1d", at: x })
            }
        },
        a,
        b,
        tol,
    )?;
    Ok(Quad { value, err })
}

/// Complex-valued twin of [`quad_adaptive_1d`].
pub fn quad_adaptive_1d_c(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadC> {
    let (value, err) = drive(
        |x| {
            let y = f(x);
            if y.re.is_finite() && y.im.is_finite() {
                Ok(y)
            } else {
                Err(CzError::NonFinite { context: "quad_adaptive_1d", at: x })
            }
        },
        a,
        b,
        tol,
    )?;
    Ok(QuadC { value, err })
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of the Legendre polynomial by Newton iteration from the Chebyshev
/// initial guess; weights 2 / ((1 - x^2) P_n'(x)^2). Exact for polynomials
/// of degree 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let mut p_curr = 1.0;
            let mut p_prev = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p_next = ((2.0 * jf + 1.0) * z * p_curr - jf * p_prev) / (jf + 1.0);
                p_prev = p_curr;
                p_curr = p_next;
            }
            deriv = nf * (z * p_curr - p_prev) / (z * z - 1.0);
            let step = p_curr / deriv;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * deriv * deriv);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::sine_integral;

    const TOL: f64 = 1e-10;

    #[test]
    fn gauss_legendre_is_exact_on_high_degree_monomials() {
        for n in [4usize, 8, 17, 64] {
            let (x, w) = gauss_legendre(n);
            assert_eq!(x.len(), n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "weights sum {total} for n = {n}");
            // Exactness on x^{2n-2}: integral 2 / (2n - 1).
            let p = 2 * n - 2;
            let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
            let exact = 2.0 / (2.0 * n as f64 - 1.0);
            assert!(
                (val - exact).abs() < 1e-12 * exact.max(1.0),
                "n = {n}: {val} vs {exact}"
            );
        }
    }

    #[test]
    fn constant_integrates_to_length() {
        let q = quad_adaptive_1d(|_| 1.0, 0.0, 1.0, TOL).unwrap();
        assert!((q.value - 1.0).abs() <= TOL);
    }

    #[test]
    fn sine_over_half_period() {
        let q = quad_adaptive_1d(f64::sin, 0.0, std::f64::consts::PI, TOL).unwrap();
        assert!((q.value - 2.0).abs() <= TOL);
        assert!(q.err >= (q.value - 2.0).abs());
    }

    #[test]
    fn oscillatory_sinc_matches_sine_integral() {
        let f = |x: f64| if x == 0.0 { 50.0 } else { (50.0 * x).sin() / x };
        let q = quad_adaptive_1d(f, 0.0, 1.0, TOL).unwrap();
        let want = sine_integral(50.0);
        assert!((q.value - want).abs() <= 1e-9, "got {}, want {want}", q.value);
        assert!(q.err >= (q.value - want).abs());
    }

    #[test]
    fn error_estimate_bounds_true_error_on_closed_forms() {
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64, f64)> = vec![
            (Box::new(|x: f64| x * x), 0.0, 2.0, 8.0 / 3.0),
            (Box::new(f64::exp), 0.0, 1.0, std::f64::consts::E - 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), 0.0, 1.0, std::f64::consts::FRAC_PI_4),
        ];
        for (f, a, b, want) in cases {
            let q = quad_adaptive_1d(&f, a, b, TOL).unwrap();
            assert!((q.value - want).abs() <= q.err.max(1e-14));
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = quad_adaptive_1d(|x| x.exp(), 0.7, 0.7, TOL).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn rejects_inverted_interval_and_bad_tol() {
        assert!(matches!(
            quad_adaptive_1d(|x| x, 1.0, 0.0, TOL),
            Err(CzError::Input(_))
        ));
        assert!(matches!(
            quad_adaptive_1d(|x| x, 0.0, 1.0, -1.0),
            Err(CzError::Input(_))
        ));
    }

    #[test]
    fn non_finite_sample_reports_location() {
        // The first panel's central node sits exactly on the log singularity.
        let err = quad_adaptive_1d(|x| (x - 0.5).abs().ln(), 0.0, 1.0, TOL).unwrap_err();
        match err {
            CzError::NonFinite { at, .. } => assert_eq!(at, 0.5),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn depth_exhaustion_carries_partial_value() {
        // A genuinely singular (but finite-valued) integrand: x^(-0.9) has
        // unbounded variation near 0 and defeats the depth limit at tight
        // tolerance.
        let err = quad_adaptive_1d(|x| x.abs().powf(-0.9).min(1e300), 0.0, 1.0, 1e-13);
        match err {
            Err(CzError::Convergence { partial_re, estimate, .. }) => {
                assert!(partial_re > 0.0);
                assert!(estimate > 0.0);
            }
            other => panic!("expected Convergence, got {other:?}"),
        }
    }

    #[test]
    fn complex_linear_phase_matches_closed_form() {
        let w = 37.0;
        let q = quad_adaptive_1d_c(
            |x| Complex64::new(0.0, w * x).exp(),
            0.0,
            1.0,
            TOL,
        )
        .unwrap();
        let want = (Complex64::new(0.0, w).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((q.value - want).norm() <= 1e-9);
    }
}
