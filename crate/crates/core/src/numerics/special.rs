//! Sine and cosine integrals, the closed forms behind the radial factor
//! of linear-phase multipliers.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.5772156649015328606;
const SERIES_CUTOFF: f64 = 6.0;

/// Si(x) = integral of sin(u)/u over [0, x]. Odd in x.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= SERIES_CUTOFF {
        si_series(x)
    } else {
        let e1 = exp1_imag(x);
        std::f64::consts::FRAC_PI_2 + e1.im
    }
}

/// Ci(x) = Euler gamma + ln x + integral of (cos(u) - 1)/u over [0, x], x > 0.
pub fn cosine_integral(x: f64) -> f64 {
    debug_assert!(x > 0.0, "Ci needs x > 0, got {x}");
    if x <= SERIES_CUTOFF {
        ci_series(x)
    } else {
        -exp1_imag(x).re
    }
}

fn si_series(x: f64) -> f64 {
    // Sum x^(2k+1) * (-1)^k / ((2k+1) (2k+1)!) with a running power/factorial.
    let x2 = x * x;
    let mut u = x; // x^(2k+1) / (2k+1)!
    let mut acc = x;
    let mut k = 0u32;
    loop {
        k += 1;
        let m = 2 * k;
        u *= x2 / ((m as f64) * (m as f64 + 1.0));
        let term = if k % 2 == 0 { u } else { -u } / (m as f64 + 1.0);
        acc += term;
        if term.abs() < 1e-17 * acc.abs().max(1.0) || k > 60 {
            return acc;
        }
    }
}

fn ci_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut u = 1.0; // x^(2k) / (2k)!
    let mut acc = EULER_GAMMA + x.ln();
    let mut k = 0u32;
    loop {
        k += 1;
        let m = 2 * k;
        u *= x2 / ((m as f64) * (m as f64 - 1.0));
        let term = if k % 2 == 0 { u } else { -u } / m as f64;
        acc += term;
        if term.abs() < 1e-17 * acc.abs().max(1.0) || k > 60 {
            return acc;
        }
    }
}

/// J0(x), the order-zero Bessel function, by the classical rational
/// approximations (series region |x| <= 3, modulus/phase beyond). Absolute
/// error below 2e-7 everywhere, which is ample for the quadrature fast paths
/// that consume it.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        let y = (ax / 3.0) * (ax / 3.0);
        1.0 + y
            * (-2.2499997
                + y * (1.2656208
                    + y * (-0.3163866 + y * (0.0444479 + y * (-0.0039444 + y * 0.0002100)))))
    } else {
        let z = 3.0 / ax;
        let f0 = 0.79788456
            + z * (-0.00000077
                + z * (-0.00552740
                    + z * (-0.00009512 + z * (0.00137237 + z * (-0.00072805 + z * 0.00014476)))));
        let theta = ax - 0.78539816
            + z * (-0.04166397
                + z * (-0.00003954
                    + z * (0.00262573 + z * (-0.00054125 + z * (-0.00029333 + z * 0.00013558)))));
        f0 * theta.cos() / ax.sqrt()
    }
}

/// E1(i x) for x > 0 by a modified Lentz continued fraction; gives the
/// oscillatory tails Ci(x) = -Re, Si(x) = pi/2 + Im.
fn exp1_imag(x: f64) -> Complex64 {
    let z = Complex64::new(0.0, x);
    let tiny = 1e-290;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for k in 1..200 {
        let a = -(k as f64) * (k as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    // E1(z) = exp(-z) * h, with exp(-ix) = cos x - i sin x.
    Complex64::new(x.cos(), -x.sin()) * h
}
