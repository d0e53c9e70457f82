//! Surface specifications: polynomial graphs, their closed-form fast paths,
//! degree-one gauge curves, and the named registry.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};
use crate::geometry::curve::ConvexCurve;
use crate::geometry::ladder::{flatness_ladder, FlatnessLadder};
use crate::geometry::schulz::{schulz_decompose, SchulzForm};
use crate::numerics::linalg::{sym_eigen_2x2, sym_eigen_3x3};
use crate::numerics::MultiPoly;
use crate::profiles::{PhiBar, Profile};

/// Closed-form graph surfaces with hand-written derivatives, used as fast
/// paths by the integration engines (the polynomial mirror is kept for
/// ladder analysis and cross-checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedForm {
    Paraboloid2,
    Paraboloid3,
    /// `x^2 + y^2 + z^4`: one flat axis.
    QuarticAxis,
    /// `x^2 + y^4 + z^4`: a flat plane with a distinguished normal.
    QuarticPlane,
}

impl ClosedForm {
    pub fn dim(self) -> usize {
        match self {
            ClosedForm::Paraboloid2 => 2,
            _ => 3,
        }
    }

    #[inline]
    pub fn eval(self, t: &[f64]) -> f64 {
        match self {
            ClosedForm::Paraboloid2 => t[0] * t[0] + t[1] * t[1],
            ClosedForm::Paraboloid3 => t[0] * t[0] + t[1] * t[1] + t[2] * t[2],
            ClosedForm::QuarticAxis => {
                let z2 = t[2] * t[2];
                t[0] * t[0] + t[1] * t[1] + z2 * z2
            }
            ClosedForm::QuarticPlane => {
                let y2 = t[1] * t[1];
                let z2 = t[2] * t[2];
                t[0] * t[0] + y2 * y2 + z2 * z2
            }
        }
    }

    #[inline]
    pub fn grad(self, t: &[f64], out: &mut [f64]) {
        match self {
            ClosedForm::Paraboloid2 => {
                out[0] = 2.0 * t[0];
                out[1] = 2.0 * t[1];
            }
            ClosedForm::Paraboloid3 => {
                out[0] = 2.0 * t[0];
                out[1] = 2.0 * t[1];
                out[2] = 2.0 * t[2];
            }
            ClosedForm::QuarticAxis => {
                out[0] = 2.0 * t[0];
                out[1] = 2.0 * t[1];
                out[2] = 4.0 * t[2] * t[2] * t[2];
            }
            ClosedForm::QuarticPlane => {
                out[0] = 2.0 * t[0];
                out[1] = 4.0 * t[1] * t[1] * t[1];
                out[2] = 4.0 * t[2] * t[2] * t[2];
            }
        }
    }

    fn poly(self) -> MultiPoly {
        let terms: Vec<(Vec<u32>, f64)> = match self {
            ClosedForm::Paraboloid2 => vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)],
            ClosedForm::Paraboloid3 => vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 2, 0], 1.0),
                (vec![0, 0, 2], 1.0),
            ],
            ClosedForm::QuarticAxis => vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 2, 0], 1.0),
                (vec![0, 0, 4], 1.0),
            ],
            ClosedForm::QuarticPlane => vec![
                (vec![2, 0, 0], 1.0),
                (vec![0, 4, 0], 1.0),
                (vec![0, 0, 4], 1.0),
            ],
        };
        MultiPoly::new(self.dim(), terms).expect("closed forms are valid polynomials")
    }
}

/// The graph function of a surface specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Psi {
    Poly(MultiPoly),
    Closed(ClosedForm),
    /// Homogeneous of degree one, defined through a convex gauge curve.
    Gauge(ConvexCurve),
}

/// A hypersurface `(t, psi(t))` together with the radial profile `phi` used
/// by the oscillatory phases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub name: Option<String>,
    dim: usize,
    psi: Psi,
    phi: Profile,
    #[serde(skip_serializing_if = "Option::is_none")]
    ladder: Option<FlatnessLadder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schulz: Option<SchulzForm>,
    #[serde(skip)]
    grad_polys: Vec<MultiPoly>,
    #[serde(skip)]
    hess_polys: Vec<Vec<MultiPoly>>,
}

impl SurfaceSpec {
    /// Build from an explicit polynomial, optionally pre-composed with an
    /// orthogonal change of variables to bring the flat directions onto
    /// coordinate axes.
    pub fn from_poly(
        poly: MultiPoly,
        phi: Profile,
        rotation: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        let poly = match rotation {
            Some(q) => {
                validate_orthogonal(q, poly.dim())?;
                poly.compose_linear(q)?
            }
            None => poly,
        };
        let dim = poly.dim();
        if dim != 2 && dim != 3 {
            return Err(CzError::Input(format!(
                "surfaces live over 2 or 3 ambient variables, got {dim}"
            )));
        }
        let ladder = flatness_ladder(&poly)?;
        let schulz = schulz_decompose(&poly, &ladder)?;
        let mut spec = SurfaceSpec {
            name: None,
            dim,
            psi: Psi::Poly(poly),
            phi,
            ladder: Some(ladder),
            schulz: Some(schulz),
            grad_polys: Vec::new(),
            hess_polys: Vec::new(),
        };
        spec.finish_build()?;
        Ok(spec)
    }

    fn from_closed(form: ClosedForm, phi: Profile, name: &str) -> Result<Self> {
        let poly = form.poly();
        let ladder = flatness_ladder(&poly)?;
        let schulz = schulz_decompose(&poly, &ladder)?;
        let mut spec = SurfaceSpec {
            name: Some(name.to_string()),
            dim: form.dim(),
            psi: Psi::Closed(form),
            phi,
            ladder: Some(ladder),
            schulz: Some(schulz),
            grad_polys: Vec::new(),
            hess_polys: Vec::new(),
        };
        spec.finish_build()?;
        Ok(spec)
    }

    /// Build a gauge surface (degree-one homogeneous) from a convex curve.
    pub fn from_curve(curve: ConvexCurve, phi: Profile, name: &str) -> Result<Self> {
        Ok(SurfaceSpec {
            name: Some(name.to_string()),
            dim: 2,
            psi: Psi::Gauge(curve),
            phi,
            ladder: None,
            schulz: None,
            grad_polys: Vec::new(),
            hess_polys: Vec::new(),
        })
    }

    /// Named registry.
    ///
    /// `paraboloid` takes `dim` 2 or 3; `wwz-alpha` takes the flatness
    /// exponent `alpha`; the two quartic model surfaces are fixed.
    pub fn registry(name: &str, dim: Option<usize>, alpha: Option<f64>, phi: Profile) -> Result<Self> {
        match name {
            "paraboloid" => match dim.unwrap_or(3) {
                2 => Self::from_closed(ClosedForm::Paraboloid2, phi, "paraboloid"),
                3 => Self::from_closed(ClosedForm::Paraboloid3, phi, "paraboloid"),
                d => Err(CzError::Input(format!("paraboloid dim must be 2 or 3, got {d}"))),
            },
            "wwz-thm1" => Self::from_closed(ClosedForm::QuarticAxis, phi, "wwz-thm1"),
            "wwz-thm2" => Self::from_closed(ClosedForm::QuarticPlane, phi, "wwz-thm2"),
            "wwz-alpha" => {
                let a = alpha.ok_or_else(|| {
                    CzError::Input("wwz-alpha needs the exponent alpha".into())
                })?;
                Self::from_curve(ConvexCurve::flat(a)?, phi, "wwz-alpha")
            }
            "circle" => Self::from_curve(ConvexCurve::Circle, phi, "circle"),
            other => Err(CzError::Input(format!("unknown surface `{other}`"))),
        }
    }

    fn finish_build(&mut self) -> Result<()> {
        let poly = match &self.psi {
            Psi::Poly(p) => p.clone(),
            Psi::Closed(f) => f.poly(),
            Psi::Gauge(_) => return Ok(()),
        };
        if poly.eval(&vec![0.0; self.dim])? != 0.0 {
            return Err(CzError::Input("surface must pass through the origin".into()));
        }
        self.grad_polys = poly.gradient()?;
        for g in &self.grad_polys {
            if g.eval(&vec![0.0; self.dim])? != 0.0 {
                return Err(CzError::Input(
                    "surface must be tangent to the hyperplane at the origin".into(),
                ));
            }
        }
        self.hess_polys = poly.hessian()?;
        self.check_convexity()
    }

    /// Positive semidefiniteness of the Hessian, sampled on a cube grid and
    /// on seeded random points in the unit ball.
    fn check_convexity(&self) -> Result<()> {
        let dim = self.dim;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let n = 17usize;
        let mut idx = vec![0usize; dim];
        loop {
            let p: Vec<f64> = idx
                .iter()
                .map(|&i| -1.0 + 2.0 * (i as f64) / ((n - 1) as f64))
                .collect();
            points.push(p);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == dim {
                    break;
                }
            }
            if k == dim {
                break;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        let mut added = 0;
        while added < 1000 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                points.push(p);
                added += 1;
            }
        }
        for p in &points {
            let mut h = vec![vec![0.0; dim]; dim];
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] = self.hess_polys[i][j].eval_unchecked(p);
                }
            }
            let min_eig = match dim {
                2 => sym_eigen_2x2(h[0][0], h[0][1], h[1][1])[0],
                3 => sym_eigen_3x3(&[
                    [h[0][0], h[0][1], h[0][2]],
                    [h[1][0], h[1][1], h[1][2]],
                    [h[2][0], h[2][1], h[2][2]],
                ])[0],
                _ => unreachable!(),
            };
            if min_eig < -1e-9 {
                return Err(CzError::Convexity(format!(
                    "Hessian has eigenvalue {min_eig:.3e} at {p:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &Profile {
        &self.phi
    }

    pub fn kind(&self) -> &Psi {
        &self.psi
    }

    pub fn is_gauge(&self) -> bool {
        matches!(self.psi, Psi::Gauge(_))
    }

    pub fn curve(&self) -> Result<&ConvexCurve> {
        match &self.psi {
            Psi::Gauge(c) => Ok(c),
            _ => Err(CzError::Misuse(
                "operation needs a degree-one gauge surface".into(),
            )),
        }
    }

    #[inline]
    pub fn psi(&self, t: &[f64]) -> f64 {
        match &self.psi {
            Psi::Poly(p) => p.eval_unchecked(t),
            Psi::Closed(f) => f.eval(t),
            Psi::Gauge(c) => c.gauge(t),
        }
    }

    /// Gradient of psi; gauge surfaces only away from the origin.
    pub fn grad(&self, t: &[f64], out: &mut [f64]) {
        match &self.psi {
            Psi::Poly(_) => {
                for (j, g) in self.grad_polys.iter().enumerate() {
                    out[j] = g.eval_unchecked(t);
                }
            }
            Psi::Closed(f) => f.grad(t, out),
            Psi::Gauge(c) => {
                // Finite differences suffice for diagnostics on gauges.
                let h = 1e-7 * (1.0 + (t[0] * t[0] + t[1] * t[1]).sqrt());
                for j in 0..2 {
                    let mut tp = [t[0], t[1]];
                    let mut tm = [t[0], t[1]];
                    tp[j] += h;
                    tm[j] -= h;
                    out[j] = (c.gauge(&tp) - c.gauge(&tm)) / (2.0 * h);
                }
            }
        }
    }

    pub fn ladder(&self) -> Result<&FlatnessLadder> {
        self.ladder.as_ref().ok_or_else(|| {
            CzError::Misuse("gauge surfaces have no polynomial flatness ladder".into())
        })
    }

    pub fn schulz(&self) -> Result<&SchulzForm> {
        self.schulz.as_ref().ok_or_else(|| {
            CzError::Misuse("gauge surfaces have no polynomial normal form".into())
        })
    }

    /// The rescaled radial profile `phi_bar(s) = phi(s^{ell0})`.
    pub fn phi_bar(&self) -> Result<PhiBar> {
        let ell0 = match &self.ladder {
            Some(l) => l.ell0,
            None => 1,
        };
        Ok(PhiBar::new(self.phi.clone(), ell0))
    }

    /// One-line structural summary used by reports.
    pub fn summary(&self) -> String {
        match &self.ladder {
            Some(l) => {
                let mut s = format!("ell0={} codim={}", l.ell0, l.codim);
                if l.codim == 1 {
                    s.push_str(" theorem=2");
                } else if l.codim < self.dim {
                    s.push_str(" theorem=1");
                }
                if let Some(v) = &l.normal_v {
                    let coords: Vec<String> =
                        v.iter().map(|c| format!("{}", c.round() as i64)).collect();
                    s.push_str(&format!(" v=({})", coords.join(",")));
                }
                s
            }
            None => "gauge degree=1".into(),
        }
    }
}

fn validate_orthogonal(q: &[Vec<f64>], dim: usize) -> Result<()> {
    if q.len() != dim || q.iter().any(|row| row.len() != dim) {
        return Err(CzError::Input(format!(
            "change of variables must be a {dim}x{dim} matrix"
        )));
    }
    for i in 0..dim {
        for j in 0..dim {
            let dot: f64 = (0..dim).map(|k| q[i][k] * q[j][k]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-10 {
                return Err(CzError::Input(
                    "change of variables must be orthogonal".into(),
                ));
            }
        }
    }
    Ok(())
}
