//! Truncated multiplier evaluation. The kernel is integrated against the
//! oscillatory phase over the annulus eps < |t| < 1, assembled one dyadic
//! annulus at a time. Each annulus is routed to the cheapest applicable
//! path: a closed radial factor when only the spatial frequency is active,
//! the level-band reduction when only the radial frequency is active, and
//! oscillation cells when both are.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{CzError, Result};
use crate::geometry::SurfaceSpec;
use crate::kernels::CzKernel;
use crate::multiplier::cells::annulus_cells;
use crate::multiplier::coarea::{annulus_radial_phase, build_band_table, combo_vector, BandTable};
use crate::multiplier::planewave::annulus_plane_wave;
use crate::profiles::Profile;

/// Calibrated magnitude limit for both frequency parameters.
pub const PARAM_LIMIT: f64 = 1e6;
/// Default absolute tolerance of the one-shot entry point.
pub const DEFAULT_QUERY_TOL: f64 = 1e-6;
/// Relative slack when comparing a truncation radius to a dyadic boundary
/// (absorbs the rounding of radii supplied as powers).
const EDGE_SLACK: f64 = 1e-12;
/// Tolerance denominator per annulus (annulus values of mean-zero kernels
/// decay toward the origin, so a fixed share stays conservative).
const SHARE_DIV: f64 = 32.0;

/// One truncated-multiplier evaluation request.
#[derive(Clone, Debug)]
pub struct MultiplierQuery {
    pub surface: SurfaceSpec,
    pub kernel: CzKernel,
    /// Radial frequency multiplying the profile of the surface.
    pub gamma: f64,
    /// Spatial frequency; length must match the surface variable count.
    pub xi: Vec<f64>,
    /// Inner truncation radius, in (0, 1); the outer radius is exactly 1.
    pub eps: f64,
    /// Optional bounded amplitude b(psi(t)) under the integral.
    pub modulation: Option<Profile>,
}

/// Reusable evaluator for one (surface, kernel, modulation) triple. Level
/// band tables are built lazily per annulus and shared across frequencies,
/// which is what makes dense frequency sweeps affordable.
pub struct MultiplierEngine {
    surface: SurfaceSpec,
    kernel: CzKernel,
    modulation: Option<Profile>,
    combo: Vec<f64>,
    tables: Mutex<HashMap<(u64, u64), Arc<BandTable>>>,
}

impl MultiplierEngine {
    pub fn new(
        surface: &SurfaceSpec,
        kernel: &CzKernel,
        modulation: Option<Profile>,
    ) -> Result<Self> {
        if kernel.dim() != surface.dim() {
            return Err(CzError::Misuse(format!(
                "kernel lives on {} variables but the surface has {}",
                kernel.dim(),
                surface.dim()
            )));
        }
        Ok(MultiplierEngine {
            surface: surface.clone(),
            kernel: kernel.clone(),
            modulation,
            combo: combo_vector(kernel.omega()),
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn surface(&self) -> &SurfaceSpec {
        &self.surface
    }

    pub fn kernel(&self) -> &CzKernel {
        &self.kernel
    }

    fn table(&self, r_a: f64, r_b: f64) -> Result<Arc<BandTable>> {
        let key = (r_a.to_bits(), r_b.to_bits());
        let mut cache = self.tables.lock().unwrap();
        if let Some(t) = cache.get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(build_band_table(&self.surface, r_a, r_b, &self.combo)?);
        cache.insert(key, Arc::clone(&table));
        Ok(table)
    }

    /// One annulus integral, routed by which frequencies are active.
    pub(crate) fn annulus(
        &self,
        r_a: f64,
        r_b: f64,
        gamma: f64,
        xi: &[f64],
        tol: f64,
    ) -> Result<Complex64> {
        let gamma_active = gamma != 0.0 && !self.surface.phi().is_zero();
        let gamma_eff = if gamma_active { gamma } else { 0.0 };
        let xi_zero = xi.iter().all(|&x| x == 0.0);
        if !gamma_active && self.modulation.is_none() {
            return annulus_plane_wave(&self.kernel, xi, r_a, r_b, tol);
        }
        if xi_zero {
            let table = self.table(r_a, r_b)?;
            return annulus_radial_phase(
                &self.surface,
                &table,
                &self.combo,
                gamma_eff,
                self.modulation.as_ref(),
                tol,
            );
        }
        annulus_cells(
            &self.surface,
            self.kernel.omega(),
            xi,
            gamma_eff,
            self.modulation.as_ref(),
            r_a,
            r_b,
            tol,
        )
    }

    fn validate(&self, gamma: f64, xi: &[f64], eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CzError::Input(format!(
                "truncation radius must lie in (0, 1), got {eps}"
            )));
        }
        if xi.len() != self.surface.dim() {
            return Err(CzError::Input(format!(
                "frequency has {} components but the surface has {} variables",
                xi.len(),
                self.surface.dim()
            )));
        }
        if !gamma.is_finite() || gamma.abs() > PARAM_LIMIT {
            return Err(CzError::Range { name: "gamma", value: gamma, limit: PARAM_LIMIT });
        }
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > PARAM_LIMIT {
            return Err(CzError::Range { name: "xi", value: norm, limit: PARAM_LIMIT });
        }
        Ok(())
    }

    /// The multiplier truncated at inner radius eps (outer radius 1).
    pub fn truncated(&self, gamma: f64, xi: &[f64], eps: f64, tol: f64) -> Result<Complex64> {
        self.validate(gamma, xi, eps)?;
        let share = tol / SHARE_DIV;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut b = 1.0_f64;
        while b > eps * (1.0 + EDGE_SLACK) {
            let half = 0.5 * b;
            let a = if half > eps * (1.0 + EDGE_SLACK) { half } else { eps };
            acc += self.annulus(a, b, gamma, xi, share)?;
            b = a;
        }
        Ok(acc)
    }

    /// Truncations at several radii in one pass. Full dyadic annuli are
    /// computed once and reused, so the result at each level is bit-identical
    /// to the corresponding standalone `truncated` call.
    pub fn eps_profile(
        &self,
        gamma: f64,
        xi: &[f64],
        eps_levels: &[f64],
        tol: f64,
    ) -> Result<Vec<Complex64>> {
        if eps_levels.is_empty() {
            return Ok(Vec::new());
        }
        for &e in eps_levels {
            self.validate(gamma, xi, e)?;
        }
        let eps_min = eps_levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let share = tol / SHARE_DIV;

        // Shared full dyadic annuli, walked exactly like `truncated` down to
        // the deepest requested level, with running prefix sums.
        let mut prefix = vec![Complex64::new(0.0, 0.0)];
        let mut radii = vec![1.0_f64];
        let mut b = 1.0_f64;
        while 0.5 * b > eps_min * (1.0 + EDGE_SLACK) {
            let a = 0.5 * b;
            let v = self.annulus(a, b, gamma, xi, share)?;
            prefix.push(*prefix.last().unwrap() + v);
            radii.push(a);
            b = a;
        }

        let mut out = Vec::with_capacity(eps_levels.len());
        for &eps in eps_levels {
            // Count the full annuli the standalone walk would consume.
            let mut k = 0usize;
            while k + 1 < radii.len() && 0.5 * radii[k] > eps * (1.0 + EDGE_SLACK) {
                k += 1;
            }
            let mut acc = prefix[k];
            let b_last = radii[k];
            if b_last > eps * (1.0 + EDGE_SLACK) {
                let half = 0.5 * b_last;
                debug_assert!(half <= eps * (1.0 + EDGE_SLACK));
                acc += self.annulus(eps, b_last, gamma, xi, share)?;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Evaluate one truncated-multiplier query at the default tolerance.
pub fn truncated_multiplier(query: &MultiplierQuery) -> Result<Complex64> {
    let engine = MultiplierEngine::new(
        &query.surface,
        &query.kernel,
        query.modulation.clone(),
    )?;
    engine.truncated(query.gamma, &query.xi, query.eps, DEFAULT_QUERY_TOL)
}
