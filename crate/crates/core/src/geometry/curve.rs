//! Convex gauge curves in the plane: the round gauge and a family with one
//! exponentially flat boundary point, together with cap measures and the
//! dyadic integrability probe for degree-one homogeneous surface measures.

use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};
use crate::numerics::quad_adaptive_1d;

/// Quintic ramp with vanishing first and second derivatives at both ends.
fn ramp(v: f64) -> f64 {
    v * v * v * (10.0 + v * (-15.0 + 6.0 * v))
}

/// Bump `30 v^2 (1-v)^2` (unit integral over [0, 1]).
fn bump(v: f64) -> f64 {
    30.0 * v * v * (1.0 - v) * (1.0 - v)
}

/// A convex curve with an exponentially flat point at the top, merging into
/// the unit circle away from it.
///
/// The upper boundary is the graph `y = f(x)` for `|x| <= x_b`:
/// a dip `f = y0 - dip(|x|)` with `dip(u) = c0 exp(-u^{-alpha})` up to `u_s`
/// (quadratic continuation beyond, keeping the curvature positive), then a
/// concave C^2 polynomial bridge on `[x_a, x_b]` that lands tangentially on
/// the unit circle. Junctions sit at boundary slope ratios |x|/|y| of 1/4
/// and 1/2; the rest of the curve is the unit circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatBodyCurve {
    pub alpha: f64,
    pub c0: f64,
    u_s: f64,
    d_s: f64,
    dp_s: f64,
    dpp_s: f64,
    x_a: f64,
    x_b: f64,
    y0: f64,
    f_a: f64,
    fp_a: f64,
    fpp_a: f64,
    fpp_b: f64,
    bump_amp: f64,
}

impl FlatBodyCurve {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CzError::Input(format!(
                "flat-point exponent must be positive and finite, got {alpha}"
            )));
        }
        let c0 = 0.5;
        // The pure dip formula stays convex only while alpha u^{-alpha} > alpha + 1;
        // stop at 90% of that turning point (or earlier) and continue quadratically.
        let turning = (alpha / (alpha + 1.0)).powf(1.0 / alpha);
        let u_s = (0.9 * turning).min(0.23);
        let (d_s, dp_s, dpp_s) = pure_dip(alpha, c0, u_s);

        let x_b = 1.0 / 5.0_f64.sqrt();
        let y_b = 2.0 / 5.0_f64.sqrt();
        let slope_b = -0.5;
        let fpp_b = -(1.0 - x_b * x_b).powf(-1.5);

        // Fixed point for the inner junction: x_a / f(x_a) = 1/4, where the
        // top height y0 itself comes from shooting the bridge onto the circle.
        let mut x_a = 0.23;
        let mut y0 = 0.9;
        let mut f_a = 0.9;
        let mut fp_a = 0.0;
        let mut fpp_a = 0.0;
        let mut bump_amp = 0.0;
        for _ in 0..60 {
            let (d, dp, dpp) = dip_eval(alpha, c0, u_s, d_s, dp_s, dpp_s, x_a);
            fp_a = -dp;
            fpp_a = -dpp;
            let len = x_b - x_a;
            bump_amp = (slope_b - fp_a) / len - 0.5 * (fpp_a + fpp_b);
            // Height drop across the bridge: f'(v) integrates the curvature
            // profile fpp_a + (fpp_b - fpp_a) ramp + bump_amp * bump, whose
            // (1-v)-weighted moments are 1/2, 1/7 and 1/2.
            let t_moment = 0.5 * fpp_a + (fpp_b - fpp_a) / 7.0 + 0.5 * bump_amp;
            let drop = len * fp_a + len * len * t_moment;
            f_a = y_b - drop;
            y0 = f_a + d;
            let next = f_a / 4.0;
            if (next - x_a).abs() < 1e-14 {
                x_a = next;
                break;
            }
            x_a = next;
        }

        let curve = FlatBodyCurve {
            alpha,
            c0,
            u_s,
            d_s,
            dp_s,
            dpp_s,
            x_a,
            x_b,
            y0,
            f_a,
            fp_a,
            fpp_a,
            fpp_b,
            bump_amp,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Flat-zone and bridge profile `y = f(x)` for `0 <= x <= x_b`.
    fn f(&self, x: f64) -> (f64, f64, f64) {
        if x <= self.x_a {
            let (d, dp, dpp) =
                dip_eval(self.alpha, self.c0, self.u_s, self.d_s, self.dp_s, self.dpp_s, x);
            (self.y0 - d, -dp, -dpp)
        } else {
            let len = self.x_b - self.x_a;
            let v = ((x - self.x_a) / len).clamp(0.0, 1.0);
            let fpp = self.fpp_a
                + (self.fpp_b - self.fpp_a) * ramp(v)
                + self.bump_amp * bump(v);
            // First and zeroth antiderivatives of the curvature profile.
            let ramp_i = v * v * v * v * (2.5 + v * (-3.0 + v));
            let bump_i = 30.0 * (v * v * v / 3.0 - v * v * v * v / 2.0 + v.powi(5) / 5.0);
            let fp = self.fp_a
                + len * (self.fpp_a * v + (self.fpp_b - self.fpp_a) * ramp_i + self.bump_amp * bump_i);
            let ramp_ii = v.powi(5) * (0.5 + v * (-0.5 + v / 7.0));
            let bump_ii = 30.0 * (v * v * v * v / 12.0 - v.powi(5) / 10.0 + v.powi(6) / 30.0);
            let f = self.f_a
                + len * self.fp_a * v
                + len
                    * len
                    * (0.5 * self.fpp_a * v * v
                        + (self.fpp_b - self.fpp_a) * ramp_ii
                        + self.bump_amp * bump_ii);
            (f, fp, fpp)
        }
    }

    fn validate(&self) -> Result<()> {
        // The flat top may poke slightly outside the unit disk (the gauge
        // only needs convexity); reject only runaway constructions.
        if !(self.y0 > 0.5 && self.y0 < 1.5) {
            return Err(CzError::Convexity(format!(
                "flat-top height {} is out of scale",
                self.y0
            )));
        }
        // Concavity of the full profile, checked on a dense grid; the dip
        // zone is analytic, the bridge polynomial, so sampling is reliable.
        for i in 0..=4000 {
            let x = self.x_b * (i as f64) / 4000.0;
            let (f, fp, fpp) = self.f(x);
            if fpp > 1e-9 {
                return Err(CzError::Convexity(format!(
                    "profile curvature flips sign at x = {x} (f'' = {fpp:.3e})"
                )));
            }
            if f <= 0.0 || !f.is_finite() || !fp.is_finite() {
                return Err(CzError::Convexity(format!(
                    "profile degenerates at x = {x}"
                )));
            }
        }
        // C^2 landing on the circle.
        let (f, fp, _) = self.f(self.x_b);
        let yb = 2.0 / 5.0_f64.sqrt();
        if (f - yb).abs() > 1e-9 || (fp + 0.5).abs() > 1e-9 {
            return Err(CzError::Convexity(format!(
                "bridge misses the circle: height gap {:.3e}, slope gap {:.3e}",
                f - yb,
                fp + 0.5
            )));
        }
        Ok(())
    }

    /// Depth of the dip below the flat tangent at x (exact in the flat zone).
    pub fn dip_depth(&self, x: f64) -> f64 {
        self.y0 - self.f(x.abs()).0
    }

    pub fn flat_top(&self) -> [f64; 2] {
        [0.0, self.y0]
    }
}

fn pure_dip(alpha: f64, c0: f64, u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = u.powf(-alpha);
    if e > 700.0 {
        return (0.0, 0.0, 0.0);
    }
    let a = c0 * (-e).exp();
    let ap = a * alpha * u.powf(-alpha - 1.0);
    let app = a * (alpha * alpha * u.powf(-2.0 * alpha - 2.0)
        - alpha * (alpha + 1.0) * u.powf(-alpha - 2.0));
    (a, ap, app)
}

fn dip_eval(
    alpha: f64,
    c0: f64,
    u_s: f64,
    d_s: f64,
    dp_s: f64,
    dpp_s: f64,
    u: f64,
) -> (f64, f64, f64) {
    if u <= u_s {
        pure_dip(alpha, c0, u)
    } else {
        let w = u - u_s;
        (
            d_s + dp_s * w + 0.5 * dpp_s * w * w,
            dp_s + dpp_s * w,
            dpp_s,
        )
    }
}

/// A closed convex curve through which a degree-one homogeneous gauge is
/// defined: `psi(t) = |t| / rho(angle of t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ConvexCurve {
    /// The unit circle (round gauge `psi = |t|`).
    Circle,
    /// Unit-circle body with one exponentially flat boundary point.
    Flat(FlatBodyCurve),
}

impl ConvexCurve {
    pub fn flat(alpha: f64) -> Result<Self> {
        Ok(ConvexCurve::Flat(FlatBodyCurve::new(alpha)?))
    }

    /// Boundary point at polar angle `beta`, measured from the positive
    /// y-axis (the flat point sits at beta = 0).
    pub fn point(&self, beta: f64) -> [f64; 2] {
        match self {
            ConvexCurve::Circle => [beta.sin(), beta.cos()],
            ConvexCurve::Flat(c) => {
                let beta_b = 0.5_f64.atan();
                let b = wrap_angle(beta);
                if b.abs() <= beta_b {
                    let x = c.graph_x(b.abs());
                    let y = c.f(x).0;
                    [x * b.signum(), y]
                } else {
                    [b.sin(), b.cos()]
                }
            }
        }
    }

    /// Arc-length speed `|dp/dbeta|`.
    pub fn speed(&self, beta: f64) -> f64 {
        match self {
            ConvexCurve::Circle => 1.0,
            ConvexCurve::Flat(c) => {
                let beta_b = 0.5_f64.atan();
                let b = wrap_angle(beta);
                if b.abs() <= beta_b {
                    let x = c.graph_x(b.abs());
                    let (f, fp, _) = c.f(x);
                    let tb = b.abs().tan();
                    let sec2 = 1.0 + tb * tb;
                    let xp = sec2 * f / (1.0 - tb * fp);
                    xp * (1.0 + fp * fp).sqrt()
                } else {
                    1.0
                }
            }
        }
    }

    /// Minkowski gauge of a point: the homogeneous degree-one surface value.
    pub fn gauge(&self, t: &[f64]) -> f64 {
        let r = (t[0] * t[0] + t[1] * t[1]).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        match self {
            ConvexCurve::Circle => r,
            ConvexCurve::Flat(_) => {
                let beta = t[0].atan2(t[1]);
                let p = self.point(beta);
                r / (p[0] * p[0] + p[1] * p[1]).sqrt()
            }
        }
    }

    /// Total boundary length.
    pub fn length(&self) -> f64 {
        match self {
            ConvexCurve::Circle => 2.0 * std::f64::consts::PI,
            ConvexCurve::Flat(_) => {
                let quad = quad_adaptive_1d(
                    |b| self.speed(b),
                    -std::f64::consts::PI,
                    std::f64::consts::PI,
                    1e-10,
                )
                .expect("boundary speed is smooth");
                quad.value
            }
        }
    }

    /// Inward normal at the boundary point `beta`.
    fn inward_normal(&self, beta: f64) -> [f64; 2] {
        // Tangent rotated so the normal points into the body (the origin
        // side): for a convex curve traversed with increasing beta the
        // tangent is p'(beta); rotate by -90 degrees and orient inward.
        let h = 1e-6;
        let p1 = self.point(beta - h);
        let p2 = self.point(beta + h);
        let tx = p2[0] - p1[0];
        let ty = p2[1] - p1[1];
        let n = (tx * tx + ty * ty).sqrt();
        let p = self.point(beta);
        let mut nx = ty / n;
        let mut ny = -tx / n;
        if nx * p[0] + ny * p[1] > 0.0 {
            nx = -nx;
            ny = -ny;
        }
        [nx, ny]
    }
}

impl FlatBodyCurve {
    /// Solve x = tan(beta) * f(x) on the graph zone (monotone Newton).
    fn graph_x(&self, beta: f64) -> f64 {
        let tb = beta.tan();
        let mut x = (tb * self.y0).min(self.x_b);
        for _ in 0..40 {
            let (f, fp, _) = self.f(x);
            let g = x - tb * f;
            let gp = 1.0 - tb * fp;
            let step = g / gp;
            x -= step;
            if x < 0.0 {
                x = 0.0;
            }
            if x > self.x_b {
                x = self.x_b;
            }
            if step.abs() < 1e-15 {
                break;
            }
        }
        x
    }
}

fn wrap_angle(beta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut b = beta % two_pi;
    if b > std::f64::consts::PI {
        b -= two_pi;
    }
    if b < -std::f64::consts::PI {
        b += two_pi;
    }
    b
}

/// Arc length of the boundary cap cut off at height `eps` above the tangent
/// line at `t0` (given by its polar angle `beta0`).
///
/// The distance-to-tangent function is sampled on a doubling grid (starting
/// at 2^12 points), crossings are sharpened by bisection, and the arc length
/// between them integrated; doubling stops when the relative change drops
/// below 1e-4.
pub fn cap_measure(curve: &ConvexCurve, beta0: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(CzError::Input(format!(
            "cap height must be positive and finite, got {eps}"
        )));
    }
    let p0 = curve.point(beta0);
    let n0 = curve.inward_normal(beta0);
    let dist = |beta: f64| -> f64 {
        let p = curve.point(beta);
        (p[0] - p0[0]) * n0[0] + (p[1] - p0[1]) * n0[1]
    };

    let mut previous = f64::NAN;
    let mut n = 1 << 12;
    loop {
        let measure = cap_pass(curve, beta0, eps, &dist, n)?;
        if previous.is_finite() {
            let change = (measure - previous).abs();
            if change <= 1e-4 * measure.max(1e-300) {
                return Ok(measure);
            }
        }
        previous = measure;
        n *= 2;
        if n > (1 << 22) {
            return Err(CzError::Convergence {
                context: "cap measure grid doubling",
                partial_re: previous,
                partial_im: 0.0,
                estimate: f64::NAN,
                detail: format!("no settling by {n} samples at eps = {eps}"),
            });
        }
    }
}

fn cap_pass(
    curve: &ConvexCurve,
    beta0: f64,
    eps: f64,
    dist: &impl Fn(f64) -> f64,
    n: usize,
) -> Result<f64> {
    // Walk outward from beta0 on both sides looking for the crossing of
    // dist = eps; convexity makes dist unimodal on each side.
    let pi = std::f64::consts::PI;
    let mut edges = [beta0 - pi, beta0 + pi];
    let mut full = [true, true];
    for (side, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        let mut prev_b = beta0;
        let mut prev_d = 0.0;
        for i in 1..=n {
            let b = beta0 + sign * pi * (i as f64) / (n as f64);
            let d = dist(b);
            if d >= eps {
                // Bisect the bracket [prev_b, b].
                let (mut lo, mut hi) = (prev_b, b);
                let (mut dlo, _dhi) = (prev_d, d);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let dm = dist(mid);
                    if (dm - eps) * (dlo - eps) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        dlo = dm;
                    }
                }
                edges[side] = 0.5 * (lo + hi);
                full[side] = false;
                break;
            }
            prev_b = b;
            prev_d = d;
        }
    }
    let quad = quad_adaptive_1d(|b| curve.speed(b), edges[0], edges[1], 1e-9)?;
    let _ = full;
    Ok(quad.value)
}

/// Report of the dyadic cap-integrability probe: the sup over base points of
/// `int |E(t0, eps)| deps/eps`, with per-band increments at the maximizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem5Report {
    pub eps_min: f64,
    pub bands: usize,
    pub sup_integral: f64,
    pub argmax_beta: f64,
    pub band_increments: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Default base-point grid: the flat point, a geometric ladder of angles
/// toward it, and a spread over the round zone.
pub fn default_base_angles() -> Vec<f64> {
    let mut grid = vec![0.0];
    let mut b = 1e-3;
    while b < 0.45 {
        grid.push(b);
        b *= 2.0;
    }
    grid.extend([0.6, 0.9, 1.3, 1.8, 2.4, 3.0]);
    grid
}

/// Evaluate the cap integral for every base angle and break the maximizer's
/// integral into dyadic bands `[2^{-k-1}, 2^{-k}]`.
pub fn theorem5_integrability(
    curve: &ConvexCurve,
    base_angles: &[f64],
    eps_min: f64,
    bands: usize,
) -> Result<Theorem5Report> {
    if base_angles.is_empty() {
        return Err(CzError::Input("empty base-point grid".into()));
    }
    if !(eps_min > 0.0 && eps_min < 1.0) {
        return Err(CzError::Input(format!(
            "eps_min must lie in (0, 1), got {eps_min}"
        )));
    }
    let integral = |beta0: f64, lo: f64, hi: f64| -> Result<f64> {
        // Integrate |E| deps/eps over log eps with a fixed Gauss grid per
        // dyadic band inside [lo, hi]; the cap measure is smooth in eps.
        let mut total = 0.0;
        let mut a = lo;
        while a < hi * (1.0 - 1e-12) {
            let b = (a * 2.0).min(hi);
            let (za, zb) = (a.ln(), b.ln());
            total += gauss16(|z| cap_measure(curve, beta0, z.exp()).unwrap_or(f64::NAN), za, zb);
            a = b;
        }
        if !total.is_finite() {
            return Err(CzError::NonFinite { context: "cap integral", at: beta0 });
        }
        Ok(total)
    };

    let mut sup = f64::NEG_INFINITY;
    let mut argmax = base_angles[0];
    for &b0 in base_angles {
        let v = integral(b0, eps_min, 1.0)?;
        if v > sup {
            sup = v;
            argmax = b0;
        }
    }

    let mut increments = Vec::with_capacity(bands);
    for k in 0..bands {
        let hi = 0.5_f64.powi(k as i32);
        let lo = (0.5 * hi).max(eps_min);
        if lo >= hi {
            break;
        }
        increments.push(integral(argmax, lo, hi)?);
    }
    let ratios = increments
        .windows(2)
        .map(|w| w[1] / w[0])
        .collect::<Vec<_>>();
    Ok(Theorem5Report {
        eps_min,
        bands: increments.len(),
        sup_integral: sup,
        argmax_beta: argmax,
        band_increments: increments,
        ratios,
    })
}

/// Fixed 16-node Gauss-Legendre rule (enough for the smooth band integrands).
fn gauss16(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.7554044083550030,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += W[i] * (f(mid + half * X[i]) + f(mid - half * X[i]));
    }
    acc * half
}
