//! Level-set chart for the leading form H on its fast subspace: gauge
//! radius, the surface-measure density, and level-curve integrals.

use crate::error::{CzError, Result};
use crate::geometry::schulz::SchulzForm;
use crate::numerics::quad_adaptive_1d;

/// Chart over the unit level set {H = 1} of the homogeneous leading form,
/// restricted to the fast axes of a normal form.
pub struct LevelSetChart<'a> {
    form: &'a SchulzForm,
    dim: usize,
}

impl<'a> LevelSetChart<'a> {
    pub fn new(form: &'a SchulzForm) -> Self {
        let dim = form.m.len();
        LevelSetChart { form, dim }
    }

    /// The normal form this chart sits over.
    pub fn form(&self) -> &SchulzForm {
        self.form
    }

    fn embed(&self, omega: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.dim];
        for (k, &j) in self.form.fast_axes().iter().enumerate() {
            t[j] = omega[k];
        }
        t
    }

    /// Radius rho(omega) with H(rho * omega) = 1, for a unit direction in
    /// the fast subspace.
    pub fn gauge_radius(&self, omega: &[f64]) -> Result<f64> {
        let t = self.embed(omega);
        let h = self.form.h.eval(&t)?;
        if h <= 0.0 {
            return Err(CzError::DegenerateDirection { value: h });
        }
        Ok(h.powf(-1.0 / self.form.ell0 as f64))
    }

    /// Surface-measure density deg / |grad H| at a point of {H = 1}.
    pub fn density(&self, point_fast: &[f64]) -> Result<f64> {
        let t = self.embed(point_fast);
        let mut norm2 = 0.0;
        for j in self.form.fast_axes() {
            let g = self.form.h.partial(*j)?.eval(&t)?;
            norm2 += g * g;
        }
        if norm2 == 0.0 {
            return Err(CzError::DegenerateDirection { value: 0.0 });
        }
        Ok(self.form.ell0 as f64 / norm2.sqrt())
    }

    /// Integral of f over the level curve {H = 1} when the fast subspace is
    /// a plane, using the angular parametrization rho(theta) * omega(theta).
    pub fn level_integral(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let r = self.form.r;
        if r != 2 {
            return Err(CzError::Misuse(format!(
                "level-curve integral needs a two-dimensional fast subspace, got {r}"
            )));
        }
        let integrand = |theta: f64| -> f64 {
            let omega = [theta.cos(), theta.sin()];
            let rho = match self.gauge_radius(&omega) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            let p = [rho * omega[0], rho * omega[1]];
            // Arc speed of theta -> rho(theta) omega(theta):
            // sqrt(rho^2 + rho'^2) via a small analytic step.
            let h = 1e-6;
            let rp = {
                let op = [(theta + h).cos(), (theta + h).sin()];
                let om = [(theta - h).cos(), (theta - h).sin()];
                let a = self.gauge_radius(&op).unwrap_or(f64::NAN);
                let b = self.gauge_radius(&om).unwrap_or(f64::NAN);
                (a - b) / (2.0 * h)
            };
            f(&p) * (rho * rho + rp * rp).sqrt()
        };
        let q = quad_adaptive_1d(integrand, 0.0, 2.0 * std::f64::consts::PI, 1e-9)?;
        Ok(q.value)
    }
}
