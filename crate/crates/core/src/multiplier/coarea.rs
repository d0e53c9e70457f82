//! Radial-phase annulus integrals. When the spatial frequency vanishes the
//! phase depends on t only through psi(t), so the annulus integral collapses
//! to a single 1-D oscillatory integral over the level value s against a
//! weight: the angular measure of the level band, carrying the kernel's
//! spherical part. Weights are tabulated once per annulus as piecewise
//! Chebyshev interpolants (pieces split at critical values of psi on the
//! bounding spheres, where the band topology changes) and reused across all
//! radial frequencies, which is what makes sweeps up to |gamma| = 1e6
//! affordable.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CzError, Result};
use crate::geometry::SurfaceSpec;
use crate::kernels::{Omega, OmegaAtom, BIAS_OFFSET};
use crate::numerics::{gauss_legendre, quad_adaptive_1d_c};
use crate::profiles::Profile;

/// Number of Chebyshev nodes per smooth piece of the band weight.
const CHEB_NODES: usize = 49;
/// Sample count for root isolation along a polar section.
const ISOLATE_SAMPLES: usize = 33;
/// Maximum window panel width for the fixed Gauss rule (radians / cosine units).
const WINDOW_PANEL: f64 = 0.3;
/// Absolute tolerance share given to the tabulated weights.
const WEIGHT_TOL: f64 = 1e-8;
/// Phase radians per adaptive quadrature chunk (keeps each call within the
/// panel budget of the 1-D driver).
const CHUNK_RADIANS: f64 = 4.0e5;
/// Budget for the vector-valued angular integrator.
const ANGULAR_PANEL_BUDGET: usize = 400_000;

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Weight slots tabulated per band: the constant function, the coordinate
/// functions, and the degree-two harmonic, enough to assemble every
/// registered spherical part linearly.
pub(crate) fn slot_count(dim: usize) -> usize {
    dim + 2
}

/// Decompose a spherical part over the tabulated slots.
pub(crate) fn combo_vector(omega: &Omega) -> Vec<f64> {
    let dim = omega.dim();
    let mut combo = vec![0.0; slot_count(dim)];
    for &(atom, w) in omega.terms() {
        match atom {
            OmegaAtom::Coordinate(j) => combo[1 + j] += w,
            OmegaAtom::Harmonic22 => combo[dim + 1] += w,
            OmegaAtom::Biased => {
                combo[1] += w;
                combo[0] += w * BIAS_OFFSET;
            }
        }
    }
    combo
}

/// Reflection symmetries of psi, probed on seeded sample points. They kill
/// weight slots exactly (odd integrands on an even band) and let the angular
/// work run on a fundamental domain.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SurfaceSymmetry {
    even: [bool; 3],
    swap_xy: bool,
    all_even: bool,
}

pub(crate) fn probe_symmetry(surface: &SurfaceSpec) -> SurfaceSymmetry {
    let dim = surface.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(907);
    let mut even = [true; 3];
    let mut swap_xy = true;
    for _ in 0..48 {
        let t: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = surface.psi(&t);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs() + b.abs());
        for j in 0..dim {
            let mut flipped = t.clone();
            flipped[j] = -flipped[j];
            if !close(surface.psi(&flipped), base) {
                even[j] = false;
            }
        }
        let mut swapped = t.clone();
        swapped.swap(0, 1);
        if !close(surface.psi(&swapped), base) {
            swap_xy = false;
        }
    }
    let all_even = even[..dim].iter().all(|&e| e);
    SurfaceSymmetry { even, swap_xy, all_even }
}

/// Which requested slots survive the surface symmetries.
pub(crate) fn live_slots(need: &[f64], sym: &SurfaceSymmetry, dim: usize) -> Vec<bool> {
    let mut live = vec![false; slot_count(dim)];
    live[0] = need[0] != 0.0;
    for j in 0..dim {
        live[1 + j] = need[1 + j] != 0.0 && !sym.even[j];
    }
    live[dim + 1] = need[dim + 1] != 0.0 && !sym.swap_xy;
    live
}

/// One smooth piece of the band weight, stored as Chebyshev coefficients per
/// slot in the kink-absorbing variable sigma (s = a + (b-a) sin^2(pi sigma/2),
/// which turns half-integer endpoint behavior analytic).
struct BandPiece {
    a: f64,
    b: f64,
    coef: Vec<Vec<f64>>,
}

impl BandPiece {
    fn s_of_sigma(&self, sigma: f64) -> f64 {
        let t = (FRAC_PI_2 * sigma).sin();
        self.a + (self.b - self.a) * t * t
    }

    fn ds_dsigma(&self, sigma: f64) -> f64 {
        (self.b - self.a) * FRAC_PI_2 * (PI * sigma).sin()
    }
}

/// Tabulated band weights of one annulus.
pub(crate) struct BandTable {
    pub(crate) s_min: f64,
    pub(crate) s_max: f64,
    live: Vec<bool>,
    pieces: Vec<BandPiece>,
}

impl BandTable {
    /// Weight of a combined spherical part at interpolation coordinates.
    fn eval_combo(&self, piece: usize, sigma: f64, combo: &[f64]) -> f64 {
        let p = &self.pieces[piece];
        let x = 2.0 * sigma - 1.0;
        let mut acc = 0.0;
        for (k, c) in p.coef.iter().enumerate() {
            if combo[k] != 0.0 && !c.is_empty() {
                acc += combo[k] * clenshaw(c, x);
            }
        }
        acc
    }

    /// True when every slot the combination touches is identically zero.
    pub(crate) fn combo_is_dead(&self, combo: &[f64]) -> bool {
        combo
            .iter()
            .enumerate()
            .all(|(k, &w)| w == 0.0 || !self.live[k])
    }
}

fn clenshaw(coef: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coef.iter().skip(1).rev() {
        let next = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = next;
    }
    coef[0] + x * b1 - b2
}

/// Evaluation context for one annulus of one surface.
struct Band<'a> {
    surface: &'a SurfaceSpec,
    dim: usize,
    r_a: f64,
    r_b: f64,
    sym: SurfaceSymmetry,
    live: Vec<bool>,
}

impl<'a> Band<'a> {
    fn psi_dir(&self, theta: &[f64], r: f64) -> f64 {
        let mut t = [0.0; 3];
        for j in 0..self.dim {
            t[j] = r * theta[j];
        }
        self.surface.psi(&t[..self.dim])
    }

    /// Solve psi(r theta) = s on [r_a, r_b]; the caller guarantees the
    /// bracket. Returns the root and the radial derivative there.
    fn radial_root(&self, theta: &[f64], s: f64) -> Result<(f64, f64)> {
        let mut lo = self.r_a;
        let mut hi = self.r_b;
        let mut t = [0.0; 3];
        let mut grad = [0.0; 3];
        let eval = |r: f64, t: &mut [f64; 3], grad: &mut [f64; 3]| -> (f64, f64) {
            for j in 0..self.dim {
                t[j] = r * theta[j];
            }
            let g = self.surface.psi(&t[..self.dim]) - s;
            self.surface.grad(&t[..self.dim], &mut grad[..self.dim]);
            let mut dr = 0.0;
            for j in 0..self.dim {
                dr += grad[j] * theta[j];
            }
            (g, dr)
        };
        let (g_lo, d_lo) = eval(lo, &mut t, &mut grad);
        if g_lo >= 0.0 {
            return Ok((lo, d_lo.max(s / lo.max(1e-300))));
        }
        let (g_hi, d_hi) = eval(hi, &mut t, &mut grad);
        if g_hi <= 0.0 {
            return Ok((hi, d_hi.max(s / hi)));
        }
        let mut r = (lo * hi).sqrt();
        let tol = 1e-12 * (1.0 + s.abs());
        for _ in 0..80 {
            let (g, dr) = eval(r, &mut t, &mut grad);
            if g.abs() <= tol {
                return Ok((r, dr));
            }
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let step = if dr > 0.0 { r - g / dr } else { f64::NAN };
            r = if step.is_finite() && step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
        }
        let (_, dr) = eval(r, &mut t, &mut grad);
        Ok((r, dr))
    }

    /// Add the window integrals of one polar interval [u, v] (already known
    /// to lie inside the band) at fixed direction family `theta_of`.
    fn accumulate_window(
        &self,
        s: f64,
        u: f64,
        v: f64,
        theta_of: &dyn Fn(f64, &mut [f64; 3]),
        out: &mut [f64],
    ) -> Result<()> {
        let (nodes, weights) = gl16();
        let panels = ((v - u) / WINDOW_PANEL).ceil().max(1.0) as usize;
        let h = (v - u) / panels as f64;
        let mut theta = [0.0; 3];
        for p in 0..panels {
            let (a, b) = (u + p as f64 * h, u + (p + 1) as f64 * h);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (x, w) in nodes.iter().zip(weights) {
                let c = mid + half * x;
                theta_of(c, &mut theta);
                let (r, psi_r) = self.radial_root(&theta[..self.dim], s)?;
                if !(psi_r > 0.0) {
                    // Degenerate ray (psi flat in r); measure zero, skip.
                    continue;
                }
                let base = w * half / (r * psi_r);
                out[0] += base;
                for j in 0..self.dim {
                    if self.live[1 + j] {
                        out[1 + j] += base * theta[j];
                    }
                }
                if self.live[self.dim + 1] {
                    out[self.dim + 1] += base * (theta[0] * theta[0] - theta[1] * theta[1]);
                }
            }
        }
        Ok(())
    }

    /// Window decomposition of one section: roots of psi(r_a theta) = s and
    /// psi(r_b theta) = s partition the parameter range; sub-intervals whose
    /// midpoint satisfies psi(r_a theta) <= s <= psi(r_b theta) carry rays
    /// crossing the level inside the annulus.
    fn section(
        &self,
        lo: f64,
        hi: f64,
        s: f64,
        theta_of: &dyn Fn(f64, &mut [f64; 3]),
        out: &mut [f64],
    ) -> Result<()> {
        let mut theta = [0.0; 3];
        let mut cuts: Vec<f64> = vec![lo, hi];
        for &r in &[self.r_a, self.r_b] {
            let f = |c: f64| {
                let mut th = [0.0; 3];
                theta_of(c, &mut th);
                self.psi_dir(&th[..self.dim], r) - s
            };
            let mut prev_c = lo;
            let mut prev_f = f(lo);
            for i in 1..ISOLATE_SAMPLES {
                let c = lo + (hi - lo) * i as f64 / (ISOLATE_SAMPLES - 1) as f64;
                let fc = f(c);
                if prev_f == 0.0 {
                    cuts.push(prev_c);
                } else if prev_f * fc < 0.0 {
                    cuts.push(window_cut_root(&f, prev_c, c));
                } else if prev_f * fc > 0.0 {
                    // A root pair can hide in a same-sign cell when the level
                    // grazes an extremum of the section.
                    cuts.extend(hidden_root_pair(&f, prev_c, prev_f, c, fc));
                }
                prev_c = c;
                prev_f = fc;
            }
            if prev_f == 0.0 {
                cuts.push(prev_c);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * (1.0 + b.abs()));
        for pair in cuts.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if v - u < 1e-13 {
                continue;
            }
            let mid = 0.5 * (u + v);
            theta_of(mid, &mut theta);
            let fa = self.psi_dir(&theta[..self.dim], self.r_a);
            let fb = self.psi_dir(&theta[..self.dim], self.r_b);
            if fa <= s && s <= fb {
                self.accumulate_window(s, u, v, theta_of, out)?;
            }
        }
        Ok(())
    }

    /// Full weight vector at one level value.
    fn weights_at(&self, s: f64, w_scale: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|x| *x = 0.0);
        match self.dim {
            2 => {
                let (hi, factor) = if self.sym.all_even { (FRAC_PI_2, 4.0) } else { (TAU, 1.0) };
                let theta_of = |beta: f64, th: &mut [f64; 3]| {
                    th[0] = beta.cos();
                    th[1] = beta.sin();
                };
                self.section(0.0, hi, s, &theta_of, out)?;
                out.iter_mut().for_each(|x| *x *= factor);
                Ok(())
            }
            3 => {
                let (a_hi, c_lo, factor) = if self.sym.all_even {
                    (FRAC_PI_2, 0.0, 8.0)
                } else {
                    (TAU, -1.0, 1.0)
                };
                let n = out.len();
                let tol = WEIGHT_TOL * w_scale;
                adaptive_vec(
                    &|alpha: f64, acc: &mut [f64]| {
                        let (ca, sa) = (alpha.cos(), alpha.sin());
                        let theta_of = move |c: f64, th: &mut [f64; 3]| {
                            let rho = (1.0 - c * c).max(0.0).sqrt();
                            th[0] = rho * ca;
                            th[1] = rho * sa;
                            th[2] = c;
                        };
                        acc.iter_mut().for_each(|x| *x = 0.0);
                        self.section(c_lo, 1.0, s, &theta_of, acc)
                    },
                    0.0,
                    a_hi,
                    tol,
                    n,
                    out,
                )?;
                out.iter_mut().for_each(|x| *x *= factor);
                Ok(())
            }
            d => Err(CzError::Input(format!(
                "band weights need 2 or 3 variables, got {d}"
            ))),
        }
    }
}

/// Root of a sign-change bracket for window cuts, bisected until the bracket
/// reaches rounding granularity. Residual-based acceptance is wrong here: at
/// a cut near a grazing tangency |f'| is tiny, so any iterate within
/// residual_tol / |f'| of the root would be accepted, and that placement
/// error can rival the window width itself. The window widths feed the
/// azimuthal integrand, so cut positions must be exact to machine precision
/// even when the residual scale says nothing.
fn window_cut_root(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm * flo > 0.0 {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Detect a root pair hidden inside a same-sign cell: probe the midpoint,
/// screen with the three-point parabola, and when the extremum plausibly
/// grazes zero, polish it by golden section and bracket both roots.
fn hidden_root_pair(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> Vec<f64> {
    let sgn = if fa > 0.0 { 1.0 } else { -1.0 };
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm * sgn < 0.0 {
        return vec![window_cut_root(f, a, m), window_cut_root(f, m, b)];
    }
    let d2 = fa - 2.0 * fm + fb;
    if d2 == 0.0 {
        return Vec::new();
    }
    let d1 = 0.5 * (fb - fa);
    let vertex = -d1 / d2;
    let v_pred = fm - 0.5 * d1 * d1 / d2;
    let scale = fa.abs().max(fm.abs()).max(fb.abs());
    if vertex.abs() >= 1.0 || v_pred * sgn > 0.1 * scale {
        return Vec::new();
    }
    // Golden-section search for the true extremum of f * sgn.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut c1 = hi - INV_PHI * (hi - lo);
    let mut c2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(c1) * sgn;
    let mut f2 = f(c2) * sgn;
    for _ in 0..48 {
        if f1 <= f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - INV_PHI * (hi - lo);
            f1 = f(c1) * sgn;
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + INV_PHI * (hi - lo);
            f2 = f(c2) * sgn;
        }
        if hi - lo <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
    }
    let cm = 0.5 * (lo + hi);
    if f(cm) * sgn >= 0.0 {
        return Vec::new();
    }
    vec![window_cut_root(f, a, cm), window_cut_root(f, cm, b)]
}

/// Adaptive Gauss-Kronrod driver for vector-valued integrands (used for the
/// azimuthal layer, whose sections share all the expensive geometry).
fn adaptive_vec(
    f: &dyn Fn(f64, &mut [f64]) -> Result<()>,
    a: f64,
    b: f64,
    tol: f64,
    n: usize,
    out: &mut [f64],
) -> Result<()> {
    // 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights,
    // matching the scalar driver.
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
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut stack = vec![(a, b, 0usize)];
    let mut panels = 0usize;
    let mut kron = vec![0.0; n];
    let mut gauss = vec![0.0; n];
    let mut sample = vec![0.0; n];
    while let Some((lo, hi, depth)) = stack.pop() {
        panels += 1;
        if panels > ANGULAR_PANEL_BUDGET {
            return Err(CzError::Convergence {
                context: "band weight angular integration",
                partial_re: out[0],
                partial_im: 0.0,
                estimate: tol,
                detail: format!("panel budget exhausted on [{lo}, {hi}]"),
            });
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        kron.iter_mut().for_each(|x| *x = 0.0);
        gauss.iter_mut().for_each(|x| *x = 0.0);
        for (i, &x) in XGK.iter().enumerate() {
            let offs: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
            for &o in offs {
                f(mid + half * o, &mut sample)?;
                for k in 0..n {
                    kron[k] += WGK[i] * sample[k];
                    if i % 2 == 1 {
                        gauss[k] += WG[i / 2] * sample[k];
                    }
                }
            }
        }
        let mut err = 0.0_f64;
        for k in 0..n {
            err = err.max((kron[k] - gauss[k]).abs() * half);
        }
        if err <= tol * (hi - lo) / (b - a).max(1e-300) || depth >= 48 {
            for k in 0..n {
                out[k] += kron[k] * half;
            }
        } else {
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(())
}

/// Critical values of psi restricted to the sphere of radius r (the level
/// values where the band topology can change and the weight loses
/// smoothness).
fn critical_values(surface: &SurfaceSpec, r: f64, sym: &SurfaceSymmetry) -> Result<Vec<f64>> {
    let dim = surface.dim();
    let mut vals: Vec<f64> = Vec::new();
    match dim {
        2 => {
            let hi = if sym.all_even { FRAC_PI_2 } else { TAU };
            let fval = |beta: f64| surface.psi(&[r * beta.cos(), r * beta.sin()]);
            let fder = |beta: f64| {
                let t = [r * beta.cos(), r * beta.sin()];
                let mut g = [0.0; 2];
                surface.grad(&t, &mut g);
                (-t[1]) * g[0] + t[0] * g[1]
            };
            vals.push(fval(0.0));
            vals.push(fval(hi));
            let n = 257;
            let mut prev_b = 0.0;
            let mut prev_d = fder(0.0);
            for i in 1..n {
                let beta = hi * i as f64 / (n - 1) as f64;
                let d = fder(beta);
                if prev_d == 0.0 {
                    vals.push(fval(prev_b));
                } else if prev_d * d < 0.0 {
                    vals.push(fval(window_cut_root(&fder, prev_b, beta)));
                }
                prev_b = beta;
                prev_d = d;
            }
        }
        3 => {
            let (a_hi, c_lo) = if sym.all_even { (FRAC_PI_2, 0.0) } else { (TAU, -1.0) };
            let fval = |alpha: f64, c: f64| {
                let rho = (1.0 - c * c).max(0.0).sqrt();
                surface.psi(&[r * rho * alpha.cos(), r * rho * alpha.sin(), r * c])
            };
            // Poles and the symmetry-plane edges always carry critical points.
            vals.push(fval(0.0, 1.0));
            vals.push(fval(0.0, -1.0));
            for edge in 0..4 {
                // Parametrize each domain edge and collect its 1-D extrema.
                let line = |u: f64| match edge {
                    0 => fval(0.0, c_lo + (1.0 - c_lo) * u),
                    1 => fval(a_hi, c_lo + (1.0 - c_lo) * u),
                    2 => fval(a_hi * u, c_lo),
                    _ => fval(a_hi * u, (1.0 - 1e-9_f64).min(1.0)),
                };
                vals.push(line(0.0));
                vals.push(line(1.0));
                let n = 129;
                let mut prev = line(0.0);
                let mut prev_u = 0.0;
                let mut before = prev;
                for i in 1..=n {
                    let u = i as f64 / n as f64;
                    let v = line(u);
                    if i >= 2 && (prev - before) * (v - prev) < 0.0 {
                        // Local 1-D extremum: golden-section polish.
                        let refined = golden_extremum(&line, prev_u - 1.0 / n as f64, u);
                        vals.push(refined);
                    }
                    before = prev;
                    prev = v;
                    prev_u = u;
                }
            }
            // Interior critical points by Newton on the gradient from grid
            // candidates (local extrema and saddle-flavored sign changes).
            let (na, nc) = (49usize, 33usize);
            let grid_val = |ia: usize, ic: usize| {
                let alpha = a_hi * ia as f64 / (na - 1) as f64;
                let c = c_lo + (1.0 - c_lo) * ic as f64 / (nc - 1) as f64;
                (alpha, c)
            };
            let grad_norm = |alpha: f64, c: f64| {
                let h = 1e-6;
                let da = (fval(alpha + h, c) - fval(alpha - h, c)) / (2.0 * h);
                let dc = (fval(alpha, (c + h).min(1.0 - 1e-12)) - fval(alpha, (c - h).max(c_lo)))
                    / ((c + h).min(1.0 - 1e-12) - (c - h).max(c_lo));
                (da, dc)
            };
            let mut field = vec![vec![0.0; nc]; na];
            for (ia, row) in field.iter_mut().enumerate() {
                for (ic, slot) in row.iter_mut().enumerate() {
                    let (alpha, c) = grid_val(ia, ic);
                    let (da, dc) = grad_norm(alpha, c.clamp(c_lo + 1e-9, 1.0 - 1e-9));
                    *slot = da * da + dc * dc;
                }
            }
            for ia in 1..na - 1 {
                for ic in 1..nc - 1 {
                    let v = field[ia][ic];
                    if v <= field[ia - 1][ic]
                        && v <= field[ia + 1][ic]
                        && v <= field[ia][ic - 1]
                        && v <= field[ia][ic + 1]
                    {
                        let (mut alpha, mut c) = grid_val(ia, ic);
                        c = c.clamp(c_lo + 1e-9, 1.0 - 1e-9);
                        let mut ok = false;
                        for _ in 0..40 {
                            let (da, dc) = grad_norm(alpha, c);
                            if (da * da + dc * dc).sqrt() <= 1e-10 * (1.0 + r * r) {
                                ok = true;
                                break;
                            }
                            let h = 1e-5;
                            let (da_a, dc_a) = grad_norm(alpha + h, c);
                            let (da_c, dc_c) = grad_norm(alpha, (c + h).min(1.0 - 1e-9));
                            let (haa, hac) = ((da_a - da) / h, (da_c - da) / h);
                            let (hca, hcc) = ((dc_a - dc) / h, (dc_c - dc) / h);
                            let det = haa * hcc - hac * hca;
                            if det.abs() < 1e-14 {
                                break;
                            }
                            let step_a = (da * hcc - dc * hac) / det;
                            let step_c = (dc * haa - da * hca) / det;
                            alpha -= step_a.clamp(-0.3, 0.3);
                            c = (c - step_c.clamp(-0.2, 0.2)).clamp(c_lo + 1e-9, 1.0 - 1e-9);
                        }
                        if ok {
                            vals.push(fval(alpha, c));
                        }
                    }
                }
            }
        }
        d => {
            return Err(CzError::Input(format!(
                "critical values need 2 or 3 variables, got {d}"
            )))
        }
    }
    vals.retain(|v| v.is_finite());
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    Ok(vals)
}

fn golden_extremum(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
    lo = lo.max(0.0);
    hi = hi.min(1.0);
    let mut x1 = lo + phi * (hi - lo);
    let mut x2 = hi - phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let maximize = f(0.5 * (lo + hi)) >= 0.5 * (f(lo) + f(hi));
    for _ in 0..60 {
        let pick_left = if maximize { f1 > f2 } else { f1 < f2 };
        if pick_left {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - phi * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    f(0.5 * (lo + hi))
}

/// Build the band weight table of one annulus. `need` marks the slots any
/// caller may combine (dead-by-symmetry slots are skipped regardless).
pub(crate) fn build_band_table(
    surface: &SurfaceSpec,
    r_a: f64,
    r_b: f64,
    need: &[f64],
) -> Result<BandTable> {
    let dim = surface.dim();
    let sym = probe_symmetry(surface);
    let live = live_slots(need, &sym, dim);
    let band = Band { surface, dim, r_a, r_b, sym, live: live.clone() };

    let mut breaks = critical_values(surface, r_a, &sym)?;
    breaks.extend(critical_values(surface, r_b, &sym)?);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    let s_min = breaks[0];
    let s_max = *breaks.last().unwrap();
    let w_scale = match dim {
        2 => TAU * (r_b / r_a).ln() / (s_max - s_min),
        _ => 2.0 * TAU * (r_b / r_a).ln() / (s_max - s_min),
    };

    // Interior break values can be saddle crossings of psi on a boundary
    // sphere; there the band weight carries an (s - c) log|s - c| term that a
    // single Chebyshev piece cannot resolve. Geometric grading toward each
    // interior break keeps every subpiece an analytic distance away from the
    // singular point, restoring fast convergence of the interpolants.
    let mut edges: Vec<f64> = vec![breaks[0]];
    for (i, pair) in breaks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            if edges.last() != Some(&b) {
                edges.push(b);
            }
            continue;
        }
        let len = b - a;
        let floor = (4.0 * f64::EPSILON * a.abs().max(b.abs())).max(1e-300);
        if i > 0 {
            for j in (1..=GRADE_DEPTH).rev() {
                let off = len * GRADE_RATIO.powi(j);
                if off > floor {
                    edges.push(a + off);
                }
            }
        }
        if i + 2 < breaks.len() {
            for j in 1..=GRADE_DEPTH {
                let off = len * GRADE_RATIO.powi(j);
                if off > floor {
                    edges.push(b - off);
                }
            }
        }
        edges.push(b);
    }

    let n_slots = slot_count(dim);
    let mut pieces = Vec::new();
    if live.iter().any(|&l| l) {
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b - a <= 4.0 * f64::EPSILON * (a.abs().max(b.abs())) {
                continue;
            }
            let piece = BandPiece { a, b, coef: Vec::new() };
            // Chebyshev-Gauss nodes in sigma, mapped through the piece.
            let mut samples = vec![vec![0.0; CHEB_NODES]; n_slots];
            let mut buf = vec![0.0; n_slots];
            for j in 0..CHEB_NODES {
                let x = (PI * (j as f64 + 0.5) / CHEB_NODES as f64).cos();
                let sigma = 0.5 * (x + 1.0);
                let s = piece.s_of_sigma(sigma);
                band.weights_at(s, w_scale, &mut buf)?;
                for k in 0..n_slots {
                    samples[k][j] = buf[k];
                }
            }
            let mut coef = vec![Vec::new(); n_slots];
            for k in 0..n_slots {
                if !live[k] {
                    continue;
                }
                let mut c = vec![0.0; CHEB_NODES];
                for (m, cm) in c.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..CHEB_NODES {
                        let ang = PI * (j as f64 + 0.5) / CHEB_NODES as f64;
                        acc += samples[k][j] * ((m as f64) * ang).cos();
                    }
                    *cm = 2.0 * acc / CHEB_NODES as f64;
                }
                c[0] *= 0.5;
                coef[k] = c;
            }
            let piece = BandPiece { coef, ..piece };
            pieces.push(piece);
        }

        // Spot-check the interpolants against direct evaluations.
        let table_probe = BandTable { s_min, s_max, live: live.clone(), pieces };
        let mut buf = vec![0.0; n_slots];
        for (pi, piece) in table_probe.pieces.iter().enumerate() {
            for &sigma in &[0.171, 0.5, 0.829] {
                band.weights_at(piece.s_of_sigma(sigma), w_scale, &mut buf)?;
                for k in 0..n_slots {
                    if !live[k] {
                        continue;
                    }
                    let mut unit = vec![0.0; n_slots];
                    unit[k] = 1.0;
                    let interp = table_probe.eval_combo(pi, sigma, &unit);
                    if (interp - buf[k]).abs() > 1e-5 * w_scale.max(buf[k].abs()) {
                        return Err(CzError::Convergence {
                            context: "band weight interpolation",
                            partial_re: interp,
                            partial_im: 0.0,
                            estimate: (interp - buf[k]).abs(),
                            detail: format!(
                                "slot {k} deviates at s = {:.6e} on piece {pi}",
                                piece.s_of_sigma(sigma)
                            ),
                        });
                    }
                }
            }
        }
        return Ok(table_probe);
    }
    Ok(BandTable { s_min, s_max, live, pieces })
}

/// The 1-D oscillatory integral of one annulus at spatial frequency zero.
pub(crate) fn annulus_radial_phase(
    surface: &SurfaceSpec,
    table: &BandTable,
    combo: &[f64],
    gamma: f64,
    modulation: Option<&Profile>,
    tol: f64,
) -> Result<Complex64> {
    if table.combo_is_dead(combo) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let phi = surface.phi();
    let total_len = (table.s_max - table.s_min).max(1e-300);
    let mut acc = Complex64::new(0.0, 0.0);
    for (pi, piece) in table.pieces.iter().enumerate() {
        let len = piece.b - piece.a;
        let cuts = phase_chunks(phi, gamma, piece.a, piece.b);
        let piece_tol = 0.5 * tol * (len / total_len).max(0.02);
        let n_chunks = cuts.len() - 1;
        for pair in cuts.windows(2) {
            let q = quad_adaptive_1d_c(
                |sigma| {
                    let s = piece.s_of_sigma(sigma);
                    let w = table.eval_combo(pi, sigma, combo);
                    let b = modulation.map_or(1.0, |p| p.value(s));
                    let phase = gamma * phi.value(s);
                    Complex64::new(0.0, phase).exp() * (w * b * piece.ds_dsigma(sigma))
                },
                pair[0],
                pair[1],
                piece_tol / n_chunks as f64,
            )?;
            acc += q.value;
        }
    }
    Ok(acc)
}

/// Partition [0, 1] in the interpolation variable so each part carries a
/// bounded amount of phase variation. The variation of gamma * phi over the
/// piece is estimated on a logarithmic grid (the slope envelope of the rough
/// profiles behaves like 1/s, so equal parts in sigma would pile the whole
/// oscillation into the first one).
fn phase_chunks(phi: &Profile, gamma: f64, a: f64, b: f64) -> Vec<f64> {
    if gamma == 0.0 || phi.is_zero() {
        return vec![0.0, 1.0];
    }
    let len = b - a;
    let n = 512usize;
    // Offsets of s - a, log-spaced over twelve decades of the piece length.
    let g = |j: usize| -> f64 {
        if j == 0 {
            0.0
        } else {
            1e-12_f64.powf(1.0 - j as f64 / n as f64)
        }
    };
    let mut cum = vec![0.0; n + 1];
    let mut prev_s = a;
    let mut prev_d = phi.deriv(a.max(1e-300)).abs();
    for j in 1..=n {
        let s = a + len * g(j);
        let d = phi.deriv(s).abs();
        cum[j] = cum[j - 1] + gamma.abs() * d.max(prev_d) * (s - prev_s);
        prev_s = s;
        prev_d = d;
    }
    let total = cum[n] * 1.5;
    let n_chunks = (1 + (total / CHUNK_RADIANS) as usize).min(100_000);
    if n_chunks == 1 {
        return vec![0.0, 1.0];
    }
    let sigma_of = |s: f64| (((s - a) / len).clamp(0.0, 1.0).sqrt()).asin() / FRAC_PI_2;
    let mut cuts = vec![0.0];
    let mut level = 1usize;
    for j in 1..=n {
        while level < n_chunks && cum[j] >= cum[n] * level as f64 / n_chunks as f64 {
            let sigma = sigma_of(a + len * g(j));
            if sigma > *cuts.last().unwrap() + 1e-9 && sigma < 1.0 - 1e-9 {
                cuts.push(sigma);
            }
            level += 1;
        }
    }
    cuts.push(1.0);
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::omega_by_name;

    const TABLE_REL_TOL: f64 = 2e-6;

    fn quartic_plane() -> SurfaceSpec {
        SurfaceSpec::registry("wwz-thm2", None, None, Profile::Power(1.0)).unwrap()
    }

    #[test]
    fn symmetry_probe_sees_even_coordinates_and_broken_swap() {
        let s = quartic_plane();
        let sym = probe_symmetry(&s);
        assert!(sym.all_even && sym.even[..3].iter().all(|&e| e));
        assert!(!sym.swap_xy, "x^2 + y^4 + z^4 is not swap-symmetric");
        let p = SurfaceSpec::registry("paraboloid", Some(3), None, Profile::Zero).unwrap();
        assert!(probe_symmetry(&p).swap_xy);
    }

    #[test]
    fn constant_slot_integrates_to_log_times_area() {
        // Integrating the band weight of the constant slot over all levels
        // recovers the annulus integral of |t|^{-dim} dt: ln(r_b/r_a) times
        // the sphere area. This pins the whole window/weight machinery.
        for (name, dim, area) in [
            ("paraboloid", 2usize, TAU),
            ("wwz-thm1", 3, 2.0 * TAU),
            ("wwz-thm2", 3, 2.0 * TAU),
        ] {
            let surf =
                SurfaceSpec::registry(name, Some(dim), None, Profile::Power(1.0)).unwrap();
            let mut need = vec![0.0; slot_count(dim)];
            need[0] = 1.0;
            let table = build_band_table(&surf, 0.5, 1.0, &need).unwrap();
            let mut combo = vec![0.0; slot_count(dim)];
            combo[0] = 1.0;
            let v = annulus_radial_phase(&surf, &table, &combo, 0.0, None, 1e-7).unwrap();
            let want = std::f64::consts::LN_2 * area;
            assert!(
                (v.re - want).abs() <= TABLE_REL_TOL * want && v.im == 0.0,
                "{name}: got {v}, want {want}"
            );
        }
    }

    #[test]
    fn odd_and_swap_symmetric_slots_are_dead() {
        let surf = SurfaceSpec::registry("wwz-thm1", None, None, Profile::Power(2.0)).unwrap();
        let riesz = combo_vector(&omega_by_name("riesz-1", 3).unwrap());
        let h22 = combo_vector(&omega_by_name("harmonic-22", 3).unwrap());
        let need: Vec<f64> = riesz
            .iter()
            .zip(&h22)
            .map(|(a, b)| a.abs() + b.abs())
            .collect();
        let table = build_band_table(&surf, 0.5, 1.0, &need).unwrap();
        // Coordinates die by evenness; the harmonic dies by x/y exchange.
        assert!(table.combo_is_dead(&riesz));
        assert!(table.combo_is_dead(&h22));
        // On the plane quartic the harmonic survives.
        let surf2 = quartic_plane();
        let table2 = build_band_table(&surf2, 0.5, 1.0, &h22).unwrap();
        assert!(!table2.combo_is_dead(&h22));
    }

    #[test]
    fn harmonic_band_weight_cancels_in_total_measure() {
        // The harmonic has spherical mean zero, so integrating its band
        // weight over all levels must vanish even though the weight itself
        // is nonzero on the plane quartic.
        let surf = quartic_plane();
        let combo = combo_vector(&omega_by_name("harmonic-22", 3).unwrap());
        let table = build_band_table(&surf, 0.5, 1.0, &combo).unwrap();
        let v = annulus_radial_phase(&surf, &table, &combo, 0.0, None, 1e-7).unwrap();
        assert!(v.norm() <= 2e-6, "total harmonic weight should cancel, got {v}");
    }

    #[test]
    fn gauge_surface_band_reduces_to_circle_case() {
        // On the degree-one circle gauge psi(t) = |t| the band weight of the
        // constant slot is exactly 2 pi / s on [r_a, r_b].
        let surf = SurfaceSpec::registry("circle", None, None, Profile::Power(1.0)).unwrap();
        let mut need = vec![0.0; slot_count(2)];
        need[0] = 1.0;
        let table = build_band_table(&surf, 0.25, 0.5, &need).unwrap();
        assert!((table.s_min - 0.25).abs() < 1e-9 && (table.s_max - 0.5).abs() < 1e-9);
        let mut combo = vec![0.0; slot_count(2)];
        combo[0] = 1.0;
        // gamma = 0 total: 2 pi ln 2; with gamma: matches the closed form
        // integral of exp(i gamma s) 2 pi ds / s.
        let v0 = annulus_radial_phase(&surf, &table, &combo, 0.0, None, 1e-7).unwrap();
        assert!((v0.re - TAU * std::f64::consts::LN_2).abs() < 2e-6);
        let gamma = 37.0;
        let direct = quad_adaptive_1d_c(
            |s| Complex64::new(0.0, gamma * s).exp().scale(TAU / s),
            0.25,
            0.5,
            1e-10,
        )
        .unwrap()
        .value;
        let v1 = annulus_radial_phase(&surf, &table, &combo, gamma, None, 1e-7).unwrap();
        assert!((v1 - direct).norm() < 2e-6, "gauge: got {v1}, want {direct}");
    }

    #[test]
    fn modulation_weights_the_level_value() {
        // b(s) = s turns the measure ds/s-flavored weight into plain ds:
        // against the circle gauge the closed form is available.
        let surf = SurfaceSpec::registry("circle", None, None, Profile::Power(1.0)).unwrap();
        let mut combo = vec![0.0; slot_count(2)];
        combo[0] = 1.0;
        let table = build_band_table(&surf, 0.25, 0.5, &combo).unwrap();
        let v = annulus_radial_phase(
            &surf,
            &table,
            &combo,
            0.0,
            Some(&Profile::Power(1.0)),
            1e-7,
        )
        .unwrap();
        assert!((v.re - TAU * 0.25).abs() < 2e-6, "got {v}");
    }
}
