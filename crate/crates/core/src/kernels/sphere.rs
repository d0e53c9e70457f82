//! Quadrature over the unit circle and the unit sphere: full-sphere product
//! rules and hemisphere caps aligned with a given pole.

use rayon::prelude::*;

use crate::error::{CzError, Result};
use crate::numerics::gauss_legendre;

/// Base node count on the circle; doubled on refinement.
const CIRCLE_BASE: usize = 4096;
/// Base azimuth x polar node counts on the sphere; both doubled on refinement.
const SPHERE_BASE: (usize, usize) = (128, 64);
/// Agreement between consecutive refinements that ends the doubling loop.
const REFINE_TOL: f64 = 1e-8;
/// Number of doublings tried before giving up.
const MAX_REFINE: usize = 3;
/// Nodes this close to a cap boundary count half; the boundary itself has
/// measure zero.
const EDGE_EPS: f64 = 1e-14;

/// A quadrature rule on S^{dim-1}, dim in {2, 3}: flat node coordinates with
/// stride `dim`, and weights summing to the measure of the covered region.
pub struct SphereRule {
    dim: usize,
    pts: Vec<f64>,
    wts: Vec<f64>,
}

impl SphereRule {
    /// Product rule over the whole sphere at refinement `level` (each level
    /// doubles every node count). Midpoints on the circle; uniform azimuth
    /// times Gauss-Legendre in the polar cosine on the sphere.
    pub fn full(dim: usize, level: usize) -> Result<Self> {
        match dim {
            2 => {
                let n = CIRCLE_BASE << level;
                let w = 2.0 * std::f64::consts::PI / n as f64;
                let mut pts = Vec::with_capacity(2 * n);
                let mut wts = Vec::with_capacity(n);
                for i in 0..n {
                    let phi = w * (i as f64 + 0.5);
                    pts.push(phi.cos());
                    pts.push(phi.sin());
                    wts.push(w);
                }
                Ok(SphereRule { dim, pts, wts })
            }
            3 => {
                let (na, np) = (SPHERE_BASE.0 << level, SPHERE_BASE.1 << level);
                let (cosines, cw) = gauss_legendre(np);
                let wa = 2.0 * std::f64::consts::PI / na as f64;
                let mut pts = Vec::with_capacity(3 * na * np);
                let mut wts = Vec::with_capacity(na * np);
                for (c, wc) in cosines.iter().zip(&cw) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for i in 0..na {
                        let az = wa * (i as f64 + 0.5);
                        pts.push(s * az.cos());
                        pts.push(s * az.sin());
                        pts.push(*c);
                        wts.push(wa * wc);
                    }
                }
                Ok(SphereRule { dim, pts, wts })
            }
            other => Err(CzError::Input(format!(
                "sphere quadrature supports dimensions 2 and 3, got {other}"
            ))),
        }
    }

    /// Rule over the closed hemisphere {theta . v >= 0}, built in a frame
    /// whose pole is `v` so the integrand stays smooth up to the rim. Any
    /// node landing on the rim itself (possible only in degenerate frames)
    /// takes half weight, matching the measure-zero boundary convention.
    pub fn cap(dim: usize, v: &[f64], level: usize) -> Result<Self> {
        let frame = orthonormal_frame(dim, v)?;
        match dim {
            2 => {
                // Angle from the pole in (-pi/2, pi/2), Gauss-Legendre.
                let n = (CIRCLE_BASE / 4) << level;
                let (xs, ws) = gauss_legendre(n);
                let half_pi = 0.5 * std::f64::consts::PI;
                let mut pts = Vec::with_capacity(2 * n);
                let mut wts = Vec::with_capacity(n);
                for (x, w) in xs.iter().zip(&ws) {
                    let ang = half_pi * x;
                    let (c, s) = (ang.cos(), ang.sin());
                    let p = [
                        c * frame[0][0] + s * frame[1][0],
                        c * frame[0][1] + s * frame[1][1],
                    ];
                    pts.extend_from_slice(&p);
                    wts.push(half_pi * w * edge_factor(dot(&p, v)));
                }
                Ok(SphereRule { dim, pts, wts })
            }
            3 => {
                let (na, np) = (SPHERE_BASE.0 << level, (SPHERE_BASE.1 / 2) << level);
                // Polar cosine restricted to [0, 1]: map GL nodes affinely.
                let (xs, ws) = gauss_legendre(np);
                let wa = 2.0 * std::f64::consts::PI / na as f64;
                let mut pts = Vec::with_capacity(3 * na * np);
                let mut wts = Vec::with_capacity(na * np);
                for (x, w) in xs.iter().zip(&ws) {
                    let c = 0.5 * (x + 1.0);
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for i in 0..na {
                        let az = wa * (i as f64 + 0.5);
                        let (ca, sa) = (az.cos(), az.sin());
                        let mut p = [0.0; 3];
                        for k in 0..3 {
                            p[k] = c * frame[0][k] + s * (ca * frame[1][k] + sa * frame[2][k]);
                        }
                        pts.extend_from_slice(&p);
                        wts.push(0.5 * wa * w * edge_factor(dot(&p, v)));
                    }
                }
                Ok(SphereRule { dim, pts, wts })
            }
            other => Err(CzError::Input(format!(
                "sphere quadrature supports dimensions 2 and 3, got {other}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.wts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wts.is_empty()
    }

    /// Weighted sum of f over the nodes. Chunked in parallel with the
    /// partial sums combined in a fixed order, so the result does not
    /// depend on the thread count.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let dim = self.dim;
        let chunk = 2048;
        let partials: Vec<f64> = self
            .pts
            .par_chunks(chunk * dim)
            .zip(self.wts.par_chunks(chunk))
            .map(|(ps, ws)| {
                let mut acc = 0.0;
                for (p, w) in ps.chunks(dim).zip(ws) {
                    acc += w * f(p);
                }
                acc
            })
            .collect();
        partials.iter().sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn edge_factor(dot_v: f64) -> f64 {
    if dot_v.abs() <= EDGE_EPS {
        0.5
    } else {
        1.0
    }
}

/// Orthonormal frame whose first row is the unit vector v.
fn orthonormal_frame(dim: usize, v: &[f64]) -> Result<Vec<Vec<f64>>> {
    if v.len() != dim {
        return Err(CzError::Input(format!(
            "pole has {} coordinates in dimension {dim}",
            v.len()
        )));
    }
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(CzError::Input(format!("pole must be a unit vector, |v| = {norm}")));
    }
    let mut rows = vec![v.to_vec()];
    // Seed with the coordinate axes least aligned with what we already have,
    // then Gram-Schmidt.
    let mut axes: Vec<usize> = (0..dim).collect();
    axes.sort_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap());
    for &ax in &axes {
        if rows.len() == dim {
            break;
        }
        let mut cand = vec![0.0; dim];
        cand[ax] = 1.0;
        for row in &rows {
            let proj = dot(&cand, row);
            for k in 0..dim {
                cand[k] -= proj * row[k];
            }
        }
        let n = dot(&cand, &cand).sqrt();
        if n > 1e-8 {
            for c in &mut cand {
                *c /= n;
            }
            rows.push(cand);
        }
    }
    if rows.len() != dim {
        return Err(CzError::Geometry("could not complete an orthonormal frame".into()));
    }
    Ok(rows)
}

/// Evaluate `make_rule(level).integrate(f)` at successive refinements until
/// two consecutive values agree to 1e-8, returning the finer one.
pub fn refined_integral(
    make_rule: impl Fn(usize) -> Result<SphereRule>,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<f64> {
    let mut prev = make_rule(0)?.integrate(&f);
    for level in 1..=MAX_REFINE {
        let cur = make_rule(level)?.integrate(&f);
        if (cur - prev).abs() <= REFINE_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(CzError::Convergence {
        context: "spherical quadrature refinement",
        partial_re: prev,
        partial_im: 0.0,
        estimate: REFINE_TOL,
        detail: format!("no {REFINE_TOL:e} agreement after {MAX_REFINE} doublings"),
    })
}

/// Full-sphere integral of f, refined to 1e-8 agreement.
pub fn sphere_integral(dim: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    refined_integral(|level| SphereRule::full(dim, level), f)
}

/// Integral of f over the hemisphere {theta . v >= 0}, refined likewise.
pub fn hemisphere_spherical_integral(
    dim: usize,
    v: &[f64],
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<f64> {
    refined_integral(|level| SphereRule::cap(dim, v, level), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn measures_come_out_right() {
        let circle = sphere_integral(2, |_| 1.0).unwrap();
        assert!((circle - 2.0 * PI).abs() < 1e-10);
        let sphere = sphere_integral(3, |_| 1.0).unwrap();
        assert!((sphere - 4.0 * PI).abs() < 1e-10);
        let half = hemisphere_spherical_integral(3, &[0.0, 0.0, 1.0], |_| 1.0).unwrap();
        assert!((half - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn second_moments_on_circle_and_sphere() {
        // theta_1^2 integrates to pi on S^1 and 4 pi / 3 on S^2.
        let c = sphere_integral(2, |p| p[0] * p[0]).unwrap();
        assert!((c - PI).abs() < 1e-10);
        let s = sphere_integral(3, |p| p[0] * p[0]).unwrap();
        assert!((s - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cap_of_a_linear_function_is_half_moment() {
        // Integral of (theta . v) over {theta . v >= 0} is pi in dim 3 and 2
        // in dim 2, independent of the pole.
        let v3 = {
            let raw = [0.3, -1.1, 0.7];
            let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            [raw[0] / n, raw[1] / n, raw[2] / n]
        };
        let got = hemisphere_spherical_integral(3, &v3, |p| dot(p, &v3)).unwrap();
        assert!((got - PI).abs() < 1e-10, "dim 3 cap moment {got}");
        let v2 = [0.6, 0.8];
        let got2 = hemisphere_spherical_integral(2, &v2, |p| dot(p, &v2)).unwrap();
        assert!((got2 - 2.0).abs() < 1e-10, "dim 2 cap moment {got2}");
    }

    #[test]
    fn cap_complements_add_to_the_full_sphere() {
        let v = [1.0, 0.0, 0.0];
        let f = |p: &[f64]| (1.3 + p[0]) * (0.4 - p[2] * p[1]);
        let plus = hemisphere_spherical_integral(3, &v, &f).unwrap();
        let minus = hemisphere_spherical_integral(3, &[-1.0, 0.0, 0.0], &f).unwrap();
        let full = sphere_integral(3, &f).unwrap();
        assert!((plus + minus - full).abs() < 2e-8);
    }

    #[test]
    fn rejects_non_unit_pole_and_bad_dimension() {
        assert!(SphereRule::cap(3, &[0.5, 0.0, 0.0], 0).is_err());
        assert!(SphereRule::full(4, 0).is_err());
        assert!(SphereRule::cap(3, &[1.0, 0.0], 0).is_err());
    }
}
