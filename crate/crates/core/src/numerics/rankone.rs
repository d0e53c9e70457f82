//! Closed-form determinant of a diagonal-plus-rank-one matrix.

use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};

/// The matrix c*I + b * s t^T of size r x r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneMatrixSpec {
    pub r: usize,
    pub c: f64,
    pub b: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl RankOneMatrixSpec {
    pub fn new(r: usize, c: f64, b: f64, s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if r == 0 {
            return Err(CzError::Input("matrix size r must be at least 1".into()));
        }
        if s.len() != r || t.len() != r {
            return Err(CzError::Input(format!(
                "vector lengths ({}, {}) must equal r = {r}",
                s.len(),
                t.len()
            )));
        }
        Ok(RankOneMatrixSpec { r, c, b, s, t })
    }

    /// Materialize the dense matrix, row-major.
    pub fn assemble(&self) -> Vec<Vec<f64>> {
        (0..self.r)
            .map(|i| {
                (0..self.r)
                    .map(|j| {
                        let diag = if i == j { self.c } else { 0.0 };
                        diag + self.b * self.s[i] * self.t[j]
                    })
                    .collect()
            })
            .collect()
    }
}

/// det(c I + b s t^T) = c^r + c^(r-1) * b * sum_j s_j t_j, evaluated as written.
pub fn det_rank_one_update(spec: &RankOneMatrixSpec) -> f64 {
    let dot: f64 = spec.s.iter().zip(spec.t.iter()).map(|(a, b)| a * b).sum();
    spec.c.powi(spec.r as i32) + spec.c.powi(spec.r as i32 - 1) * spec.b * dot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::dense_det;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one_is_scalar() {
        let spec = RankOneMatrixSpec::new(1, 0.4, 2.0, vec![3.0], vec![-0.5]).unwrap();
        assert_eq!(det_rank_one_update(&spec), 0.4 + 2.0 * 3.0 * (-0.5));
    }

    #[test]
    fn gram_family_collapses_to_power() {
        // t = s, c = 1 - |s|^2, b = 1 gives (1 - |s|^2)^(r-1).
        let s = vec![0.3, -0.4, 0.2, 0.1, -0.25];
        let norm2: f64 = s.iter().map(|x| x * x).sum();
        let c = 1.0 - norm2;
        let spec = RankOneMatrixSpec::new(5, c, 1.0, s.clone(), s).unwrap();
        let want = c.powi(4);
        let got = det_rank_one_update(&spec);
        assert!((got - want).abs() <= 1e-14 * want.abs());
    }

    #[test]
    fn seeded_example_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = RankOneMatrixSpec::new(4, 0.7, 1.3, s, t).unwrap();
        let closed = det_rank_one_update(&spec);
        let dense = dense_det(spec.assemble());
        assert!(
            (closed - dense).abs() <= 1e-12 * dense.abs().max(1.0),
            "closed {closed} vs dense {dense}"
        );
    }

    #[test]
    fn rejects_length_mismatch() {
        let err = RankOneMatrixSpec::new(3, 1.0, 1.0, vec![1.0], vec![1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(CzError::Input(_))));
    }
}
