//! The kernel type K(t) = Omega(t/|t|) |t|^{-dim} and its construction from
//! config entries, with the mean-zero gate enforced at build time.

use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};
use crate::kernels::omega::{omega_by_name, Omega};
use crate::kernels::sphere::sphere_integral;

/// Largest spherical mean accepted as "zero" at construction.
pub const MEAN_ZERO_TOL: f64 = 1e-8;

/// A homogeneous kernel of degree -dim on R^dim, dim in {2, 3}, determined
/// by its spherical part.
#[derive(Clone, Debug)]
pub struct CzKernel {
    dim: usize,
    omega: Omega,
    mean: f64,
    validated: bool,
}

impl CzKernel {
    /// Build and enforce the annulus cancellation axiom: the spherical mean
    /// must vanish to within the quadrature tolerance.
    pub fn new(omega: Omega) -> Result<Self> {
        let k = CzKernel::new_unchecked(omega)?;
        if k.mean.abs() > MEAN_ZERO_TOL {
            return Err(CzError::Input(format!(
                "spherical part has nonzero mean {:.3e}; annuli would not cancel",
                k.mean
            )));
        }
        Ok(CzKernel { validated: true, ..k })
    }

    /// Build without the mean-zero gate (negative controls only). The mean
    /// is still computed and stored.
    pub fn new_unchecked(omega: Omega) -> Result<Self> {
        let dim = omega.dim();
        let mean = sphere_integral(dim, |th| omega.eval(th))?;
        Ok(CzKernel { dim, omega, mean, validated: false })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    /// Spherical mean of the spherical part (zero for validated kernels).
    pub fn spherical_mean(&self) -> f64 {
        self.mean
    }

    /// Whether the mean-zero gate was enforced at construction.
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// K(t). Homogeneous of degree -dim by construction; NaN at the origin,
    /// which the quadratures treat as a hard error.
    pub fn eval(&self, t: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for x in t {
            r2 += x * x;
        }
        let r = r2.sqrt();
        let mut theta = [0.0_f64; 3];
        for (k, x) in t.iter().enumerate() {
            theta[k] = x / r;
        }
        self.omega.eval(&theta[..t.len()]) / r.powi(self.dim as i32)
    }
}

/// One weighted term of a "combo" kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComboTerm {
    pub name: String,
    pub weight: f64,
}

/// Kernel entry as it appears in config files: either a registered name,
/// or {"name": "combo", "terms": [{"name": ..., "weight": ...}, ...]}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelConfig {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<ComboTerm>,
}

impl KernelConfig {
    pub fn named(name: &str, dim: usize) -> Self {
        KernelConfig { name: name.to_string(), dim, terms: Vec::new() }
    }
}

/// Build a kernel from a config entry. The "biased" atom (alone or inside a
/// combo) disables the mean-zero gate; everything else is validated.
pub fn build_kernel(cfg: &KernelConfig) -> Result<CzKernel> {
    let omega = if cfg.name == "combo" {
        if cfg.terms.is_empty() {
            return Err(CzError::Input("combo kernel needs at least one term".into()));
        }
        let mut flat = Vec::with_capacity(cfg.terms.len());
        for term in &cfg.terms {
            if term.name == "combo" {
                return Err(CzError::Input("combo terms cannot nest".into()));
            }
            let leaf = omega_by_name(&term.name, cfg.dim)?;
            for (atom, aw) in leaf.terms() {
                flat.push((*atom, aw * term.weight));
            }
        }
        Omega::weighted(cfg.dim, flat)?
    } else {
        if !cfg.terms.is_empty() {
            return Err(CzError::Input(format!(
                "kernel {:?} does not take terms; use name \"combo\"",
                cfg.name
            )));
        }
        omega_by_name(&cfg.name, cfg.dim)?
    };
    if omega.has_bias() {
        CzKernel::new_unchecked(omega)
    } else {
        CzKernel::new(omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validated_construction_rejects_nonzero_mean() {
        let biased = omega_by_name("biased", 3).unwrap();
        match CzKernel::new(biased.clone()) {
            Err(CzError::Input(msg)) => assert!(msg.contains("mean")),
            other => panic!("expected rejection, got {other:?}"),
        }
        let k = CzKernel::new_unchecked(biased).unwrap();
        assert!(!k.is_validated());
        // Mean of theta_1 + 1/4 over S^2 is pi.
        assert!((k.spherical_mean() - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn config_round_trip_and_combo_assembly() {
        let plain: KernelConfig =
            serde_json::from_str(r#"{"name": "riesz-1", "dim": 3}"#).unwrap();
        let k = build_kernel(&plain).unwrap();
        assert!(k.is_validated());
        assert_eq!(k.dim(), 3);

        let combo: KernelConfig = serde_json::from_str(
            r#"{"name": "combo", "dim": 3,
                "terms": [{"name": "riesz-1", "weight": 2.0},
                          {"name": "harmonic-22", "weight": -0.5}]}"#,
        )
        .unwrap();
        let ck = build_kernel(&combo).unwrap();
        let th = [0.36, 0.48, 0.8];
        let want = 2.0 * th[0] - 0.5 * (th[0] * th[0] - th[1] * th[1]);
        assert!((ck.omega().eval(&th) - want).abs() < 1e-15);

        // Serialization of a plain entry omits the empty terms array.
        let text = serde_json::to_string(&plain).unwrap();
        assert!(!text.contains("terms"));
    }

    #[test]
    fn combo_with_bias_skips_validation_and_bad_entries_fail() {
        let cfg: KernelConfig = serde_json::from_str(
            r#"{"name": "combo", "dim": 2,
                "terms": [{"name": "biased", "weight": 1.0}]}"#,
        )
        .unwrap();
        let k = build_kernel(&cfg).unwrap();
        assert!(!k.is_validated());

        let empty: KernelConfig =
            serde_json::from_str(r#"{"name": "combo", "dim": 2, "terms": []}"#).unwrap();
        assert!(build_kernel(&empty).is_err());

        let stray: KernelConfig = serde_json::from_str(
            r#"{"name": "riesz-1", "dim": 2,
                "terms": [{"name": "riesz-2", "weight": 1.0}]}"#,
        )
        .unwrap();
        assert!(build_kernel(&stray).is_err());
    }

    #[test]
    fn kernel_evaluation_is_homogeneous_of_degree_minus_dim() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3] {
            let k = build_kernel(&KernelConfig::named("riesz-1", dim)).unwrap();
            for _ in 0..500 {
                let t: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if t.iter().map(|x| x * x).sum::<f64>() < 1e-4 {
                    continue;
                }
                let lam: f64 = rng.gen_range(0.05..20.0);
                let scaled: Vec<f64> = t.iter().map(|x| lam * x).collect();
                let lhs = k.eval(&scaled) * lam.powi(dim as i32);
                let rhs = k.eval(&t);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-6),
                    "dim {dim}: {lhs} vs {rhs}"
                );
            }
        }
    }
}
