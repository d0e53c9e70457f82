//! Flatness ladders: nested subspaces of directions along which the surface
//! vanishes to a given order, computed for axis-aligned polynomial surfaces.

use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};
use crate::numerics::linalg::{sym_eigen_2x2, sym_eigen_3x3};
use crate::numerics::MultiPoly;

/// One stored level: the subspace of directions flat to order `ell`,
/// spanned by the given orthonormal rows (coordinate axes here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub ell: u32,
    pub basis: Vec<Vec<f64>>,
}

/// The full ladder with its first-drop data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessLadder {
    pub levels: Vec<LadderLevel>,
    pub ell0: u32,
    pub codim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_v: Option<Vec<f64>>,
}

impl FlatnessLadder {
    /// Per-axis vanishing order (the level at which axis j leaves the ladder).
    pub fn axis_order(&self, j: usize) -> u32 {
        let mut ord = 1;
        for level in &self.levels {
            if level.basis.iter().any(|v| v[j] != 0.0) {
                ord = level.ell + 1;
            }
        }
        ord
    }

    /// Axes spanning the first proper level (order > ell0).
    pub fn flat_axes(&self) -> Vec<usize> {
        let level = self
            .levels
            .iter()
            .find(|l| l.ell == self.ell0)
            .expect("ladder stores level ell0");
        level
            .basis
            .iter()
            .map(|v| v.iter().position(|&c| c != 0.0).expect("unit basis vector"))
            .collect()
    }
}

/// Minimal degree of a pure power of each variable; `None` when the axis
/// carries no pure power at all.
fn pure_orders(psi: &MultiPoly) -> Vec<Option<u32>> {
    let dim = psi.dim();
    let mut ord = vec![None; dim];
    for (exp, _) in psi.terms() {
        let support: Vec<usize> = (0..dim).filter(|&j| exp[j] > 0).collect();
        if support.len() == 1 {
            let j = support[0];
            let d = exp[j];
            ord[j] = Some(ord[j].map_or(d, |cur: u32| cur.min(d)));
        }
    }
    ord
}

/// Evenly spread unit directions for sampling a homogeneous form.
fn sample_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720)
            .map(|i| {
                let b = std::f64::consts::PI * (i as f64) / 360.0;
                vec![b.cos(), b.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci sphere.
            let n = 2000;
            let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = 2.0 * std::f64::consts::PI * (i as f64) / golden;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// Check one nested block: the degree-`ell_b` form must vanish exactly on the
/// span of the deeper axes and stay positive elsewhere. `block` lists the
/// axes of the current subspace, `deeper` those that survive past `ell_b`.
fn check_block_form(
    psi: &MultiPoly,
    block: &[usize],
    deeper: &[usize],
    ell_b: u32,
) -> Result<()> {
    let dim = psi.dim();
    let in_block = |exp: &[u32]| (0..dim).all(|j| exp[j] == 0 || block.contains(&j));
    let form: Vec<(&Vec<u32>, f64)> = psi
        .terms()
        .iter()
        .filter(|(e, _)| e.iter().sum::<u32>() == ell_b && in_block(e))
        .map(|(e, c)| (e, *c))
        .collect();
    let scale: f64 = form.iter().map(|(_, c)| c.abs()).sum::<f64>().max(1e-30);

    if ell_b == 2 {
        // Exact route: assemble the quadratic form on the block and inspect
        // its spectrum. Rows touching deeper axes must vanish outright.
        let k = block.len();
        let mut m = vec![vec![0.0; k]; k];
        for (e, c) in &form {
            let vars: Vec<usize> = (0..dim).filter(|&j| e[j] > 0).collect();
            let (bi, bj) = if vars.len() == 1 {
                let i = block.iter().position(|&a| a == vars[0]).unwrap();
                (i, i)
            } else {
                let i = block.iter().position(|&a| a == vars[0]).unwrap();
                let j = block.iter().position(|&a| a == vars[1]).unwrap();
                (i, j)
            };
            if bi == bj {
                m[bi][bi] = *c;
            } else {
                m[bi][bj] = c / 2.0;
                m[bj][bi] = c / 2.0;
            }
        }
        for (bi, &axis) in block.iter().enumerate() {
            if deeper.contains(&axis) {
                if m[bi].iter().any(|&v| v != 0.0) {
                    return Err(CzError::Orientation(format!(
                        "degree-2 form couples flat axis {axis} to the active block"
                    )));
                }
            }
        }
        let active: Vec<usize> = (0..k)
            .filter(|&i| !deeper.contains(&block[i]))
            .collect();
        let eig_min = match active.len() {
            0 => return Ok(()),
            1 => m[active[0]][active[0]],
            2 => {
                sym_eigen_2x2(
                    m[active[0]][active[0]],
                    m[active[0]][active[1]],
                    m[active[1]][active[1]],
                )[0]
            }
            3 => {
                let a = &active;
                sym_eigen_3x3(&[
                    [m[a[0]][a[0]], m[a[0]][a[1]], m[a[0]][a[2]]],
                    [m[a[1]][a[0]], m[a[1]][a[1]], m[a[1]][a[2]]],
                    [m[a[2]][a[0]], m[a[2]][a[1]], m[a[2]][a[2]]],
                ])[0]
            }
            _ => unreachable!("dim <= 3"),
        };
        if eig_min < -1e-9 * scale {
            return Err(CzError::Convexity(format!(
                "degree-2 form is indefinite (min eigenvalue {eig_min:.3e})"
            )));
        }
        if eig_min <= 1e-9 * scale {
            return Err(CzError::Orientation(format!(
                "degree-2 form is degenerate off the flat axes (min eigenvalue {eig_min:.3e}); \
                 the surface needs a rotation into axis-aligned position"
            )));
        }
        return Ok(());
    }

    // Higher-degree forms: sampled positivity off the deeper span.
    if form.is_empty() {
        return Ok(());
    }
    let eval_form = |v: &[f64]| -> f64 {
        form.iter()
            .map(|(e, c)| {
                let mut t = *c;
                for (bi, &axis) in block.iter().enumerate() {
                    if e[axis] > 0 {
                        t *= v[bi].powi(e[axis] as i32);
                    }
                }
                t
            })
            .sum()
    };
    // Sign changes are probed over the whole block (mixed directions with
    // deeper axes included); an odd coupling always shows up here.
    for v in sample_directions(block.len()) {
        let h = eval_form(&v);
        if h < -1e-12 * scale {
            return Err(CzError::Convexity(format!(
                "degree-{ell_b} level form changes sign (value {h:.3e} at {v:?})"
            )));
        }
    }
    // Zero directions are probed on the span of the axes that drop at this
    // level, where the form must be strictly positive.
    let fast: Vec<usize> = (0..block.len())
        .filter(|&bi| !deeper.contains(&block[bi]))
        .collect();
    let lift = |w: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; block.len()];
        for (wi, &bi) in fast.iter().enumerate() {
            v[bi] = w[wi];
        }
        v
    };
    let mut best_h = f64::INFINITY;
    let mut best_w: Vec<f64> = Vec::new();
    for w in sample_directions(fast.len()) {
        let h = eval_form(&lift(&w));
        if h < best_h {
            best_h = h;
            best_w = w;
        }
    }
    // Sharpen a suspiciously small minimum with shrinking probes around it;
    // a genuine zero direction collapses to round-off level.
    if best_h < 1e-4 * scale && fast.len() >= 2 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut radius = 0.08;
        for _ in 0..6 {
            let center = best_w.clone();
            for _ in 0..400 {
                let mut w: Vec<f64> = center
                    .iter()
                    .map(|&c| c + rng.gen_range(-radius..radius))
                    .collect();
                let norm = w.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1e-6 {
                    continue;
                }
                w.iter_mut().for_each(|c| *c /= norm);
                let h = eval_form(&lift(&w));
                if h < best_h {
                    best_h = h;
                    best_w = w;
                }
            }
            radius /= 4.0;
        }
    }
    if best_h < -1e-12 * scale {
        return Err(CzError::Convexity(format!(
            "degree-{ell_b} level form changes sign (value {best_h:.3e} at {best_w:?})"
        )));
    }
    if best_h < 1e-8 * scale {
        return Err(CzError::Orientation(format!(
            "degree-{ell_b} level form vanishes along a non-axis direction {best_w:?}"
        )));
    }
    Ok(())
}

/// Compute the flatness ladder of an axis-aligned polynomial surface.
///
/// Each axis leaves the ladder at its minimal pure-power degree; a mixed
/// monomial lighter than every pure power on its support, a degenerate level
/// form, or a sign change all mean the flat directions are not the
/// coordinate axes, which this analysis does not cover.
pub fn flatness_ladder(psi: &MultiPoly) -> Result<FlatnessLadder> {
    let dim = psi.dim();
    if psi.is_zero() {
        return Err(CzError::FiniteType { axis: 0 });
    }
    let orders = pure_orders(psi);
    let mut ord = vec![0u32; dim];
    for (j, o) in orders.iter().enumerate() {
        match o {
            Some(d) => ord[j] = *d,
            None => return Err(CzError::FiniteType { axis: j }),
        }
    }

    // A mixed monomial below the pure order of every variable it touches
    // would make the ladder drop along a diagonal direction.
    for (exp, _) in psi.terms() {
        let support: Vec<usize> = (0..dim).filter(|&j| exp[j] > 0).collect();
        if support.len() >= 2 {
            let d: u32 = exp.iter().sum();
            let min_ord = support.iter().map(|&j| ord[j]).min().unwrap();
            if d < min_ord {
                return Err(CzError::Orientation(format!(
                    "mixed monomial {exp:?} of degree {d} undercuts pure order {min_ord}"
                )));
            }
        }
    }

    // Nested block checks: at every distinct level the leading form must be
    // positive off the surviving axes.
    let mut block: Vec<usize> = (0..dim).collect();
    while !block.is_empty() {
        let ell_b = block.iter().map(|&j| ord[j]).min().unwrap();
        let deeper: Vec<usize> = block.iter().copied().filter(|&j| ord[j] > ell_b).collect();
        check_block_form(psi, &block, &deeper, ell_b)?;
        block = deeper;
    }

    let max_ord = *ord.iter().max().unwrap();
    let axis_vec = |j: usize| {
        let mut v = vec![0.0; dim];
        v[j] = 1.0;
        v
    };
    let levels: Vec<LadderLevel> = (1..=max_ord)
        .map(|ell| LadderLevel {
            ell,
            basis: (0..dim).filter(|&j| ord[j] > ell).map(axis_vec).collect(),
        })
        .collect();
    let ell0 = *ord.iter().min().unwrap();
    let keep = (0..dim).filter(|&j| ord[j] > ell0).count();
    let codim = dim - keep;
    let normal_v = if codim == 1 {
        let j = (0..dim).find(|&j| ord[j] == ell0).unwrap();
        Some(axis_vec(j))
    } else {
        None
    };
    Ok(FlatnessLadder { levels, ell0, codim, normal_v })
}
