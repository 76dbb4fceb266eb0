//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative jitter added to every covariance factorization.
pub const BASE_JITTER: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-4;

/// Cholesky factor of `matrix + jitter * I`, escalating the jitter ×10 from
/// `BASE_JITTER` to `MAX_JITTER` (relative to the mean diagonal) on failure.
pub fn jittered_cholesky(matrix: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok((Cholesky::new(DMatrix::zeros(0, 0)).expect("empty factorization"), 0.0));
    }
    let mean_diag = matrix.diagonal().iter().sum::<f64>() / n as f64;
    let scale = if mean_diag.is_finite() && mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut rel = BASE_JITTER;
    loop {
        let jitter = rel * scale;
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        rel *= 10.0;
        if rel > MAX_JITTER * (1.0 + 1e-9) {
            return Err(Error::numerical(format!(
                "covariance matrix not positive definite even with jitter {:e}; min eigenvalue {:e}",
                MAX_JITTER * scale,
                min_eigenvalue(matrix)
            )));
        }
    }
}

pub fn min_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    if matrix.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(matrix.clone()).eigenvalues.min()
}

/// Solves with one step of iterative refinement.
pub fn refined_solve(matrix: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>, rhs: &DVector<f64>) -> DVector<f64> {
    let mut x = chol.solve(rhs);
    let residual = rhs - matrix * &x;
    x += chol.solve(&residual);
    x
}
