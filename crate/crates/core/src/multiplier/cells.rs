//! Oscillation-cell quadrature on one annulus. This is the generic path for
//! queries where both the spatial and the radial frequency are active: the
//! annulus is covered by cells in logarithmic-polar coordinates (where the
//! kernel measure dt / |t|^dim is exactly the coordinate volume), refined
//! until the phase varies by at most pi/2 across each cell, then integrated
//! with an embedded pair of tensor Gauss rules. Refinement is sequential and
//! deterministic; leaf evaluation is data-parallel with a fixed-order
//! pairwise reduction, so results do not depend on the worker count.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CzError, Result};
use crate::geometry::SurfaceSpec;
use crate::kernels::Omega;
use crate::numerics::gauss_legendre;
use crate::profiles::Profile;

/// Hard cap on the number of leaf cells per annulus.
const CELL_BUDGET: usize = 600_000;
/// Maximum phase variation allowed across one cell.
const PHASE_SPAN: f64 = FRAC_PI_2;
/// Base cap on coordinate extents so the amplitude is resolved even where
/// the phase is flat.
const EXTENT_CAP: f64 = 0.35;
/// Rounds of error-driven re-splitting after the first evaluation.
const RESPLIT_ROUNDS: usize = 4;

#[derive(Clone, Copy)]
struct Cell {
    lo: [f64; 3],
    hi: [f64; 3],
}

struct Geometry<'a> {
    surface: &'a SurfaceSpec,
    omega: &'a Omega,
    xi: [f64; 3],
    gamma: f64,
    modulation: Option<&'a Profile>,
    dim: usize,
    phase_active: bool,
}

impl<'a> Geometry<'a> {
    /// Map cell coordinates (log radius, azimuth, polar angle) to a point of
    /// the annulus. The polar angle keeps the map analytic at the poles.
    fn point(&self, x: &[f64; 3], t: &mut [f64; 3]) {
        let r = x[0].exp();
        match self.dim {
            2 => {
                t[0] = r * x[1].cos();
                t[1] = r * x[1].sin();
            }
            _ => {
                let rho = x[2].sin();
                t[0] = r * rho * x[1].cos();
                t[1] = r * rho * x[1].sin();
                t[2] = r * x[2].cos();
            }
        }
    }

    /// Norm of the phase gradient in the ambient variable.
    fn phase_grad_norm(&self, t: &[f64]) -> f64 {
        let mut acc = [self.xi[0], self.xi[1], self.xi[2]];
        if self.phase_active {
            let s = self.surface.psi(t);
            let dphi = self.gamma * self.surface.phi().deriv(s.max(1e-300));
            let mut g = [0.0; 3];
            self.surface.grad(t, &mut g[..self.dim]);
            for j in 0..self.dim {
                acc[j] += dphi * g[j];
            }
        }
        acc[..self.dim].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn corners(&self, cell: &Cell) -> Vec<[f64; 3]> {
        let n = 1usize << self.dim;
        let mut out = Vec::with_capacity(n);
        for mask in 0..n {
            let mut x = [0.0; 3];
            for k in 0..self.dim {
                x[k] = if mask & (1 << k) != 0 { cell.hi[k] } else { cell.lo[k] };
            }
            out.push(x);
        }
        out
    }

    /// Conservative diameter of the cell image and the widest coordinate
    /// axis measured in ambient distance.
    fn shape(&self, cell: &Cell) -> (f64, usize) {
        let corners = self.corners(cell);
        let mut pts = Vec::with_capacity(corners.len());
        let mut t = [0.0; 3];
        for x in &corners {
            self.point(x, &mut t);
            pts.push(t);
        }
        let mut diam = 0.0_f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d: f64 = (0..self.dim)
                    .map(|k| (pts[i][k] - pts[j][k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                diam = diam.max(d);
            }
        }
        let mut axis = 0;
        let mut widest = -1.0_f64;
        for k in 0..self.dim {
            let mut ext = 0.0_f64;
            for (i, ci) in corners.iter().enumerate() {
                for (j, cj) in corners.iter().enumerate().skip(i + 1) {
                    let differs =
                        (0..self.dim).all(|m| (m == k) != (ci[m] == cj[m]));
                    if differs {
                        let d: f64 = (0..self.dim)
                            .map(|m| (pts[i][m] - pts[j][m]).powi(2))
                            .sum::<f64>()
                            .sqrt();
                        ext = ext.max(d);
                    }
                }
            }
            if ext > widest {
                widest = ext;
                axis = k;
            }
        }
        (diam * 1.15, axis)
    }

    /// Axis whose coordinate extent exceeds the cap, worst first. Coordinate
    /// extents stay meaningful even when the angular axis wraps a full
    /// period, where ambient corner distances degenerate.
    fn oversized_axis(&self, cell: &Cell) -> Option<usize> {
        let mut worst = (1.0_f64, usize::MAX);
        for k in 0..self.dim {
            let ratio = (cell.hi[k] - cell.lo[k]) / EXTENT_CAP;
            if ratio > worst.0 {
                worst = (ratio, k);
            }
        }
        (worst.1 != usize::MAX).then_some(worst.1)
    }

    fn phase_needs_split(&self, cell: &Cell, diam: f64) -> bool {
        let mut g: f64 = 0.0;
        let mut t = [0.0; 3];
        for x in self.corners(cell) {
            self.point(&x, &mut t);
            g = g.max(self.phase_grad_norm(&t[..self.dim]));
        }
        let mut mid = [0.0; 3];
        for k in 0..self.dim {
            mid[k] = 0.5 * (cell.lo[k] + cell.hi[k]);
        }
        self.point(&mid, &mut t);
        g = g.max(self.phase_grad_norm(&t[..self.dim]));
        g * diam > PHASE_SPAN
    }

    fn split(&self, cell: &Cell, axis: usize) -> (Cell, Cell) {
        let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
        let mut left = *cell;
        let mut right = *cell;
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        (left, right)
    }

    /// All 2^dim children of a midpoint split along every axis, in a fixed
    /// order. Used by the error-driven rounds, where the dominant axis of
    /// the quadrature error is unknown.
    fn split_all(&self, cell: &Cell) -> Vec<Cell> {
        let mut mid = [0.0; 3];
        for k in 0..self.dim {
            mid[k] = 0.5 * (cell.lo[k] + cell.hi[k]);
        }
        (0..1usize << self.dim)
            .map(|mask| {
                let mut c = *cell;
                for k in 0..self.dim {
                    if mask & (1 << k) != 0 {
                        c.lo[k] = mid[k];
                    } else {
                        c.hi[k] = mid[k];
                    }
                }
                c
            })
            .collect()
    }

    fn integrand(&self, x: &[f64; 3]) -> Complex64 {
        let mut t = [0.0; 3];
        self.point(x, &mut t);
        let theta: Vec<f64> = {
            let r = x[0].exp();
            (0..self.dim).map(|k| t[k] / r).collect()
        };
        let mut amp = self.omega.eval(&theta);
        if self.dim == 3 {
            // dt / |t|^3 = sin(polar) du d(azimuth) d(polar).
            amp *= x[2].sin();
        }
        let mut phase = 0.0;
        for k in 0..self.dim {
            phase += self.xi[k] * t[k];
        }
        if self.phase_active || self.modulation.is_some() {
            let s = self.surface.psi(&t[..self.dim]);
            if self.phase_active {
                phase += self.gamma * self.surface.phi().value(s.max(0.0));
            }
            if let Some(b) = self.modulation {
                amp *= b.value(s.max(0.0));
            }
        }
        Complex64::new(0.0, phase).exp() * amp
    }

    /// Embedded tensor Gauss evaluation: value from the finer rule, error
    /// estimated by its distance to the next rule down. The pair is chosen
    /// high enough that the estimate stays far below the phase-span cells'
    /// own accuracy, since per-cell estimates add up without cancellation.
    fn eval(&self, cell: &Cell) -> (Complex64, f64) {
        let fine = self.tensor(cell, rule_fine());
        let coarse = self.tensor(cell, rule_coarse());
        (fine, (fine - coarse).norm())
    }

    fn tensor(&self, cell: &Cell, rule: &(Vec<f64>, Vec<f64>)) -> Complex64 {
        let (nodes, weights) = rule;
        let n = nodes.len();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut x = [0.0; 3];
        let count = n.pow(self.dim as u32);
        for flat in 0..count {
            let mut rest = flat;
            let mut w = 1.0;
            for k in 0..self.dim {
                let idx = rest % n;
                rest /= n;
                let half = 0.5 * (cell.hi[k] - cell.lo[k]);
                x[k] = 0.5 * (cell.lo[k] + cell.hi[k]) + half * nodes[idx];
                w *= half * weights[idx];
            }
            acc += self.integrand(&x) * w;
        }
        acc
    }

    fn measure(&self, cell: &Cell) -> f64 {
        (0..self.dim).map(|k| cell.hi[k] - cell.lo[k]).product()
    }
}

fn rule_fine() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(6))
}

fn rule_coarse() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(5))
}

/// Deterministic pairwise reduction (summation order is a balanced binary
/// tree over the slice, independent of thread scheduling).
pub(crate) fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Annulus integral by oscillation cells.
pub(crate) fn annulus_cells(
    surface: &SurfaceSpec,
    omega: &Omega,
    xi: &[f64],
    gamma: f64,
    modulation: Option<&Profile>,
    r_a: f64,
    r_b: f64,
    tol: f64,
) -> Result<Complex64> {
    let dim = surface.dim();
    let mut xi3 = [0.0; 3];
    xi3[..dim].copy_from_slice(xi);
    let phase_active = gamma != 0.0 && !surface.phi().is_zero();
    let geo = Geometry {
        surface,
        omega,
        xi: xi3,
        gamma,
        modulation,
        dim,
        phase_active,
    };

    let root = match dim {
        2 => Cell { lo: [r_a.ln(), 0.0, 0.0], hi: [r_b.ln(), TAU, 0.0] },
        3 => Cell { lo: [r_a.ln(), 0.0, 0.0], hi: [r_b.ln(), TAU, PI] },
        d => {
            return Err(CzError::Input(format!(
                "cell quadrature needs 2 or 3 variables, got {d}"
            )))
        }
    };
    let total_measure = geo.measure(&root);

    // Phase-driven refinement, depth-first so the leaf order is stable.
    let mut leaves: Vec<Cell> = Vec::new();
    let mut stack = vec![root];
    let mut blown = false;
    while let Some(cell) = stack.pop() {
        if leaves.len() + stack.len() >= CELL_BUDGET {
            blown = true;
            leaves.push(cell);
            leaves.extend(stack.drain(..));
            break;
        }
        let split_on = geo.oversized_axis(&cell).or_else(|| {
            let (diam, axis) = geo.shape(&cell);
            geo.phase_needs_split(&cell, diam).then_some(axis)
        });
        if let Some(axis) = split_on {
            let (a, b) = geo.split(&cell, axis);
            stack.push(b);
            stack.push(a);
        } else {
            leaves.push(cell);
        }
    }

    // First evaluation pass, then a few rounds of error-driven re-splits.
    let mut evaluated: Vec<(Cell, Complex64, f64)> = leaves
        .par_iter()
        .map(|cell| {
            let (v, e) = geo.eval(cell);
            (*cell, v, e)
        })
        .collect();
    for _ in 0..RESPLIT_ROUNDS {
        if blown {
            break;
        }
        let mut retry: Vec<usize> = Vec::new();
        for (i, (cell, _, err)) in evaluated.iter().enumerate() {
            let share = tol * 0.5 * geo.measure(cell) / total_measure;
            if *err > share {
                retry.push(i);
            }
        }
        let fan = (1usize << dim) - 1;
        if retry.is_empty() || evaluated.len() + retry.len() * fan > CELL_BUDGET {
            break;
        }
        // Replace each failing cell in place by its full midpoint split
        // (children are appended in a stable order keyed by parent index).
        let children: Vec<(usize, Vec<Cell>)> = retry
            .iter()
            .map(|&i| (i, geo.split_all(&evaluated[i].0)))
            .collect();
        let fresh: Vec<Vec<(Cell, Complex64, f64)>> = children
            .par_iter()
            .map(|(_, kids)| {
                kids.iter()
                    .map(|kid| {
                        let (v, e) = geo.eval(kid);
                        (*kid, v, e)
                    })
                    .collect()
            })
            .collect();
        for ((i, _), kids) in children.iter().zip(fresh) {
            let mut kids = kids.into_iter();
            evaluated[*i] = kids.next().unwrap();
            evaluated.extend(kids);
        }
    }

    let values: Vec<Complex64> = evaluated.iter().map(|(_, v, _)| *v).collect();
    let total = pairwise_sum(&values);
    let err_sum: f64 = evaluated.iter().map(|(_, _, e)| e).sum();

    if blown || err_sum > tol {
        let worst = evaluated
            .iter()
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .map(|(cell, _, err)| {
                let mut mid = [0.0; 3];
                for k in 0..dim {
                    mid[k] = 0.5 * (cell.lo[k] + cell.hi[k]);
                }
                let mut t = [0.0; 3];
                geo.point(&mid, &mut t);
                format!(
                    "worst cell err {err:.3e} spanning {:.3e} at t = {:?}",
                    geo.shape(cell).0,
                    &t[..dim]
                )
            })
            .unwrap_or_default();
        return Err(CzError::Convergence {
            context: "oscillatory cell refinement",
            partial_re: total.re,
            partial_im: total.im,
            estimate: err_sum,
            detail: format!("{} cells; {}", evaluated.len(), worst),
        });
    }
    Ok(total)
}
