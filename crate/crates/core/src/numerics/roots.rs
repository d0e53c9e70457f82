//! Bracketed scalar root finding: interpolation steps guarded by bisection.

use crate::error::{CzError, Result};

/// Default residual tolerance used by the geometry layers.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_ITER: usize = 200;

/// Find the root of a continuous, strictly monotone `f` on `[lo, hi]`.
///
/// Returns `x` with `|f(x)| <= tol * (1 + |f(lo)| + |f(hi)|)` and `x` inside
/// the original bracket. Steps are inverse-quadratic/secant interpolation with
/// a bisection safeguard, so convergence is guaranteed and deterministic.
pub fn find_root_monotone<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(CzError::Input(format!("root tolerance must be positive, got {tol}")));
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CzError::Input(format!("bad bracket [{lo}, {hi}]")));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(CzError::NonFinite { context: "find_root_monotone", at: lo });
    }
    if !f_hi.is_finite() {
        return Err(CzError::NonFinite { context: "find_root_monotone", at: hi });
    }
    let target = tol * (1.0 + f_lo.abs() + f_hi.abs());
    if f_lo.abs() <= target {
        return Ok(lo);
    }
    if f_hi.abs() <= target {
        return Ok(hi);
    }
    if f_lo * f_hi > 0.0 {
        return Err(CzError::Bracket { lo, hi, f_lo, f_hi });
    }

    // Brent's bookkeeping: b is the best iterate, a its counterpoint with
    // opposite sign, c the previous b.
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut mflag = true;
    let mut d = c;

    for _ in 0..MAX_ITER {
        if fb.abs() <= target {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // Inverse quadratic interpolation.
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            // Secant step.
            b - fb * (b - a) / (fb - fa)
        };

        let mid = 0.5 * (a + b);
        let (low, high) = if b < mid { (b, mid) } else { (mid, b) };
        let delta = f64::EPSILON * b.abs().max(1.0);
        let cond_range = !(s > low && s < high);
        let cond_slow = if mflag {
            (s - b).abs() >= 0.5 * (b - c).abs() || (b - c).abs() < delta
        } else {
            (s - b).abs() >= 0.5 * (c - d).abs() || (c - d).abs() < delta
        };
        if cond_range || cond_slow {
            s = mid;
            mflag = true;
        } else {
            mflag = false;
        }

        let fs = f(s);
        if !fs.is_finite() {
            return Err(CzError::NonFinite { context: "find_root_monotone", at: s });
        }
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        if (a - b).abs() <= delta && fb.abs() > target {
            // Interval down to rounding granularity without meeting the
            // residual: the function jumps through zero too steeply.
            return Err(CzError::Convergence {
                context: "find_root_monotone",
                partial_re: b,
                partial_im: 0.0,
                estimate: fb.abs(),
                detail: format!("bracket collapsed at x = {b} with |f| = {}", fb.abs()),
            });
        }
    }
    Err(CzError::Convergence {
        context: "find_root_monotone",
        partial_re: b,
        partial_im: 0.0,
        estimate: fb.abs(),
        detail: "iteration limit reached".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let x = find_root_monotone(|x| x * x - 4.0, 0.0, 10.0, 1e-12).unwrap();
        assert!((x - 2.0).abs() < 1e-10);
    }

    #[test]
    fn identity_root_at_zero() {
        let x = find_root_monotone(|x| x, -1.0, 1.0, 1e-12).unwrap();
        assert!(x.abs() < 1e-12);
    }

    #[test]
    fn height_style_example() {
        // lambda^2 = 0.3^2 + 0.1^4 has the closed-form root sqrt(0.0901).
        let rhs = 0.3f64 * 0.3 + 0.1f64.powi(4);
        let x = find_root_monotone(|l| l * l - rhs, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - rhs.sqrt()).abs() < 1e-12);
        assert!((x - 0.3001666203960727).abs() < 1e-12);
    }

    #[test]
    fn residual_postcondition_holds() {
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
            (Box::new(|x: f64| x.exp() - 2.0), 0.0, 3.0),
            (Box::new(|x: f64| x.powi(5) - 0.37), 0.0, 1.0),
            (Box::new(|x: f64| x.tanh() - 0.5), -4.0, 4.0),
        ];
        for (f, lo, hi) in cases {
            let tol = 1e-11;
            let target = tol * (1.0 + f(lo).abs() + f(hi).abs());
            let x = find_root_monotone(&f, lo, hi, tol).unwrap();
            assert!(x >= lo && x <= hi);
            assert!(f(x).abs() <= target);
        }
    }

    #[test]
    fn rejects_missing_bracket() {
        let err = find_root_monotone(|x| x * x + 1.0, -1.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, CzError::Bracket { .. }));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let err = find_root_monotone(|x| x, -1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, CzError::Input(_)));
    }

    #[test]
    fn accepts_root_at_endpoint() {
        let x = find_root_monotone(|x| x - 1.0, 1.0, 2.0, 1e-10).unwrap();
        assert_eq!(x, 1.0);
    }
}
