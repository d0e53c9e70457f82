//! Small dense helpers: LU determinants for oracle comparisons and
//! closed-form eigenvalues of symmetric 2x2 / 3x3 matrices.

/// Determinant by partial-pivot Gaussian elimination. Consumes the matrix.
pub fn dense_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    debug_assert!(m.iter().all(|row| row.len() == n));
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        det *= m[col][col];
        let pivot = m[col][col];
        for row in (col + 1)..n {
            let factor = m[row][col] / pivot;
            if factor != 0.0 {
                for k in col..n {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric 2x2 [[a, b], [b, c]], ascending.
pub fn sym_eigen_2x2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = (half_diff * half_diff + b * b).sqrt();
    [mean - radius, mean + radius]
}

/// Eigenvalues of a symmetric 3x3 (row-major, only the upper triangle is
/// read), ascending. Trigonometric closed form.
pub fn sym_eigen_3x3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let (a11, a12, a13) = (m[0][0], m[0][1], m[0][2]);
    let (a22, a23, a33) = (m[1][1], m[1][2], m[2][2]);
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    if p1 == 0.0 {
        let mut eig = [a11, a22, a33];
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return eig;
    }
    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let inv_p = 1.0 / p;
    let b = [
        [(a11 - q) * inv_p, a12 * inv_p, a13 * inv_p],
        [a12 * inv_p, (a22 - q) * inv_p, a23 * inv_p],
        [a13 * inv_p, a23 * inv_p, (a33 - q) * inv_p],
    ];
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let eig_hi = q + 2.0 * p * phi.cos();
    let eig_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    // The remaining eigenvalue comes from the trace.
    let eig_mid = 3.0 * q - eig_hi - eig_lo;
    let mut eig = [eig_lo, eig_mid, eig_hi];
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_known_matrices() {
        assert_eq!(dense_det(vec![vec![2.0]]), 2.0);
        assert_eq!(dense_det(vec![vec![1.0, 2.0], vec![3.0, 4.0]]), -2.0);
        let m = vec![
            vec![2.0, 0.0, 1.0],
            vec![0.0, 3.0, 0.0],
            vec![1.0, 0.0, 2.0],
        ];
        assert!((dense_det(m) - 9.0).abs() < 1e-14);
    }

    #[test]
    fn det_handles_singular() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(dense_det(m), 0.0);
    }

    #[test]
    fn eigen_2x2_matches_hand_calculation() {
        let [lo, hi] = sym_eigen_2x2(2.0, 1.0, 2.0);
        assert!((lo - 1.0).abs() < 1e-14);
        assert!((hi - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_3x3_diagonal_and_full() {
        let eig = sym_eigen_3x3(&[[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(eig, [1.0, 2.0, 3.0]);

        // Symmetric with known spectrum {1, 1, 4}: 2I + ones - I = ...
        let m = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
        let eig = sym_eigen_3x3(&m);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 1.0).abs() < 1e-12);
        assert!((eig[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_3x3_sum_matches_trace() {
        let m = [[0.3, -0.2, 0.7], [-0.2, 1.1, 0.05], [0.7, 0.05, -0.4]];
        let eig = sym_eigen_3x3(&m);
        let trace = 0.3 + 1.1 - 0.4;
        assert!((eig.iter().sum::<f64>() - trace).abs() < 1e-12);
        // Product matches determinant.
        let det = dense_det(m.iter().map(|r| r.to_vec()).collect());
        assert!((eig.iter().product::<f64>() - det).abs() < 1e-12);
    }
}
