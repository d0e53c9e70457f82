//! Registered spherical parts: closed-form smooth functions on the unit
//! sphere from which kernels are assembled.

use crate::error::{CzError, Result};

/// Offset of the deliberately mean-violating entry "biased".
pub const BIAS_OFFSET: f64 = 0.25;

/// One closed-form atom on S^{dim-1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaAtom {
    /// Coordinate function theta_j (zero-based axis).
    Coordinate(usize),
    /// The degree-2 harmonic theta_1^2 - theta_2^2 (harmonic in any
    /// dimension, mean zero on circle and sphere alike).
    Harmonic22,
    /// theta_1 + 1/4: nonzero mean, usable only with validation disabled;
    /// serves as the negative control in cancellation experiments.
    Biased,
}

impl OmegaAtom {
    fn eval(self, theta: &[f64]) -> f64 {
        match self {
            OmegaAtom::Coordinate(j) => theta[j],
            OmegaAtom::Harmonic22 => theta[0] * theta[0] - theta[1] * theta[1],
            OmegaAtom::Biased => theta[0] + BIAS_OFFSET,
        }
    }

    fn is_biased(self) -> bool {
        matches!(self, OmegaAtom::Biased)
    }
}

/// Spherical part of a kernel: a weighted sum of registered atoms on a
/// sphere of fixed dimension.
#[derive(Clone, Debug)]
pub struct Omega {
    dim: usize,
    terms: Vec<(OmegaAtom, f64)>,
}

impl Omega {
    pub fn atom(dim: usize, atom: OmegaAtom) -> Result<Self> {
        Omega::weighted(dim, vec![(atom, 1.0)])
    }

    pub fn weighted(dim: usize, terms: Vec<(OmegaAtom, f64)>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(CzError::Input(format!(
                "kernels live on R^2 or R^3, got dimension {dim}"
            )));
        }
        if terms.is_empty() {
            return Err(CzError::Input("empty spherical part".into()));
        }
        for (atom, w) in &terms {
            if let OmegaAtom::Coordinate(j) = atom {
                if *j >= dim {
                    return Err(CzError::Input(format!(
                        "coordinate atom theta_{} out of range in dimension {dim}",
                        j + 1
                    )));
                }
            }
            if !w.is_finite() {
                return Err(CzError::Input("non-finite combination weight".into()));
            }
        }
        Ok(Omega { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether any term is the mean-violating control atom.
    pub fn has_bias(&self) -> bool {
        self.terms.iter().any(|(a, _)| a.is_biased())
    }

    pub(crate) fn terms(&self) -> &[(OmegaAtom, f64)] {
        &self.terms
    }

    /// Value at a unit vector.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (atom, w) in &self.terms {
            acc += w * atom.eval(theta);
        }
        acc
    }
}

/// Names the registry accepts, in listing order. "combo" additionally
/// assembles weighted sums of these.
pub fn registered_kernel_names(dim: usize) -> Vec<&'static str> {
    let mut names = vec!["riesz-1", "riesz-2"];
    if dim == 3 {
        names.push("riesz-3");
    }
    names.push("harmonic-22");
    names.push("biased");
    names
}

/// Look up a single registered name.
pub fn omega_by_name(name: &str, dim: usize) -> Result<Omega> {
    let atom = match name {
        "riesz-1" => OmegaAtom::Coordinate(0),
        "riesz-2" => OmegaAtom::Coordinate(1),
        "riesz-3" => OmegaAtom::Coordinate(2),
        "harmonic-22" => OmegaAtom::Harmonic22,
        "biased" => OmegaAtom::Biased,
        other => {
            return Err(CzError::Input(format!(
                "unknown kernel name {other:?}; registered: {:?} plus \"combo\"",
                registered_kernel_names(dim)
            )))
        }
    };
    Omega::atom(dim, atom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_respects_dimension() {
        assert!(omega_by_name("riesz-3", 3).is_ok());
        assert!(omega_by_name("riesz-3", 2).is_err());
        assert!(omega_by_name("mystery", 3).is_err());
        assert!(!registered_kernel_names(2).contains(&"riesz-3"));
    }

    #[test]
    fn evaluation_matches_the_closed_forms() {
        let o = omega_by_name("harmonic-22", 3).unwrap();
        let th = [0.6, 0.8, 0.0];
        assert_eq!(o.eval(&th), 0.6 * 0.6 - 0.8 * 0.8);
        let b = omega_by_name("biased", 2).unwrap();
        assert!(b.has_bias());
        assert_eq!(b.eval(&[1.0, 0.0]), 1.0 + BIAS_OFFSET);
    }
}
