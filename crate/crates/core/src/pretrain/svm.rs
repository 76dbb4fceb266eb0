//! Bias-free SVM duals on a precomputed Gram matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, refined_solve};

use super::Task;

fn check_system(gram: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<()> {
    if gram.nrows() != gram.ncols() {
        return Err(Error::input(format!("gram matrix must be square, got {}x{}", gram.nrows(), gram.ncols())));
    }
    if gram.nrows() != y.len() {
        return Err(Error::input(format!("gram is {0}x{0} but there are {1} targets", gram.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input(format!("lambda must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

/// LS-SVM (kernel ridge) dual: solves `(K + lambda I) alpha = y`.
pub fn train_lssvm(gram: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_system(gram, y, lambda)?;
    let h = regularized(gram, lambda);
    let chol = h.clone().cholesky().ok_or_else(|| not_pd(gram, lambda))?;
    let rhs = DVector::from_column_slice(y);
    let alpha = refined_solve(&h, &chol, &rhs);
    let residual = (&h * &alpha - &rhs).amax();
    let y_inf = rhs.amax();
    if residual > 1e-8 * y_inf.max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!(
            "LS-SVM residual {residual:e} exceeds 1e-8 * ||y||_inf = {:e}",
            1e-8 * y_inf
        )));
    }
    Ok(alpha.iter().copied().collect())
}

fn regularized(gram: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut h = gram.clone();
    for i in 0..h.nrows() {
        h[(i, i)] += lambda;
    }
    h
}

fn not_pd(gram: &DMatrix<f64>, lambda: f64) -> Error {
    let min_eig = min_eigenvalue(gram);
    Error::numerical(format!(
        "K + lambda I is not positive definite: min eigenvalue of K is {min_eig:e} \
         (lambda = {lambda:e}, tolerated bound -1e-8 * trace = {:e})",
        -1e-8 * gram.trace()
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct HingeOptions {
    /// Projected-gradient (KKT) tolerance.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for HingeOptions {
    fn default() -> Self {
        HingeOptions { tol: 1e-6, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct HingeSolution {
    pub alpha: Vec<f64>,
    pub sweeps: usize,
    /// Dual objective after each sweep.
    pub objective_trace: Vec<f64>,
    pub kkt_violation: f64,
}

/// Hinge-loss dual `min 1/2 a'Ka - 1'|a|` s.t. `0 <= y ⊙ a <= 1/lambda`.
pub fn train_hinge(gram: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    Ok(train_hinge_with(gram, y, lambda, &HingeOptions::default())?.alpha)
}

/// Cyclic coordinate descent with exact clipped 1-D minimization.
///
/// Works in `beta = y ⊙ alpha in [0, C]`, `C = 1/lambda`, where the problem is
/// `min 1/2 beta'Q beta - 1'beta` with `Q = diag(y) K diag(y)`. Once the KKT
/// tolerance is met the free coordinates are re-solved exactly.
pub fn train_hinge_with(gram: &DMatrix<f64>, y: &[f64], lambda: f64, opts: &HingeOptions) -> Result<HingeSolution> {
    check_system(gram, y, lambda)?;
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::input(format!("classification labels must be -1 or +1, got {bad}")));
    }
    let n = y.len();
    let c = 1.0 / lambda;
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram[(i, j)]);
    let mut beta = vec![0.0; n];
    // gradient Q beta - 1
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut violation = kkt_violation(&beta, &grad, c);

    while violation >= opts.tol {
        if sweeps == opts.max_sweeps {
            return Err(Error::numerical(format!(
                "hinge dual did not converge in {sweeps} sweeps; final KKT violation {violation:e}"
            )));
        }
        for i in 0..n {
            let qii = q[(i, i)];
            let old = beta[i];
            let new = if qii > 0.0 {
                (old - grad[i] / qii).clamp(0.0, c)
            } else if grad[i] < 0.0 {
                c
            } else if grad[i] > 0.0 {
                0.0
            } else {
                old
            };
            let delta = new - old;
            if delta != 0.0 {
                beta[i] = new;
                for (k, g) in grad.iter_mut().enumerate() {
                    *g += delta * q[(k, i)];
                }
            }
        }
        sweeps += 1;
        trace.push(objective(&beta, &grad));
        violation = kkt_violation(&beta, &grad, c);
    }

    if let Some((polished, polished_grad)) = polish(&q, &beta, c) {
        let v = kkt_violation(&polished, &polished_grad, c);
        if v <= violation && objective(&polished, &polished_grad) <= objective(&beta, &grad) + 1e-12 {
            beta = polished;
            violation = v;
        }
    }

    let alpha = beta.iter().zip(y).map(|(b, yi)| yi * b.clamp(0.0, c)).collect();
    Ok(HingeSolution { alpha, sweeps, objective_trace: trace, kkt_violation: violation })
}

fn objective(beta: &[f64], grad: &[f64]) -> f64 {
    // 1/2 b'Qb - 1'b with Qb = grad + 1
    beta.iter().zip(grad).map(|(b, g)| 0.5 * b * (g + 1.0) - b).sum()
}

fn kkt_violation(beta: &[f64], grad: &[f64], c: f64) -> f64 {
    beta.iter()
        .zip(grad)
        .map(|(&b, &g)| {
            if b <= 0.0 {
                (-g).max(0.0)
            } else if b >= c {
                g.max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Exact solve on the free set `0 < beta_i < C`, keeping bound coordinates fixed.
fn polish(q: &DMatrix<f64>, beta: &[f64], c: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = beta.len();
    let free: Vec<usize> = (0..n).filter(|&i| beta[i] > 0.0 && beta[i] < c).collect();
    if free.is_empty() {
        return None;
    }
    let bound: Vec<usize> = (0..n).filter(|&i| !(beta[i] > 0.0 && beta[i] < c)).collect();
    let qff = DMatrix::from_fn(free.len(), free.len(), |a, b| q[(free[a], free[b])]);
    let rhs = DVector::from_fn(free.len(), |a, _| {
        1.0 - bound.iter().map(|&j| q[(free[a], j)] * beta[j]).sum::<f64>()
    });
    let solved = qff.clone().lu().solve(&rhs)?;
    if solved.iter().any(|&b| !(b > 0.0 && b < c)) {
        return None;
    }
    let mut out = beta.to_vec();
    for (a, &i) in free.iter().enumerate() {
        out[i] = solved[a];
    }
    let grad = (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)] * out[j]).sum::<f64>() - 1.0)
        .collect();
    Some((out, grad))
}

/// Leave-one-out error used for hyperparameter selection.
///
/// Regression: mean squared LOO residual from the closed form
/// `e_i = alpha_i / (H^-1)_ii`, `H = K + lambda I`. Classification: fraction
/// of points misclassified after retraining without them (a zero decision
/// value counts as an error).
pub fn loo_error(gram: &DMatrix<f64>, y: &[f64], lambda: f64, task: Task) -> Result<f64> {
    check_system(gram, y, lambda)?;
    match task {
        Task::Regression => {
            let h = regularized(gram, lambda);
            let chol = h.clone().cholesky().ok_or_else(|| not_pd(gram, lambda))?;
            let alpha = refined_solve(&h, &chol, &DVector::from_column_slice(y));
            let h_inv = chol.inverse();
            let n = y.len() as f64;
            Ok((0..y.len()).map(|i| (alpha[i] / h_inv[(i, i)]).powi(2)).sum::<f64>() / n)
        }
        Task::Classification => {
            let n = y.len();
            let mut errors = 0usize;
            for i in 0..n {
                let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let decision = if keep.is_empty() {
                    0.0
                } else {
                    let sub = gram.select_rows(&keep).select_columns(&keep);
                    let sub_y: Vec<f64> = keep.iter().map(|&j| y[j]).collect();
                    let alpha = train_hinge(&sub, &sub_y, lambda)?;
                    keep.iter().zip(&alpha).map(|(&j, a)| a * gram[(i, j)]).sum()
                };
                if decision * y[i] <= 0.0 {
                    errors += 1;
                }
            }
            Ok(errors as f64 / n as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lssvm_identity() {
        let a = train_lssvm(&DMatrix::identity(2, 2), &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(a, vec![0.5, -0.5]);
    }

    #[test]
    fn lssvm_single_point() {
        let a = train_lssvm(&DMatrix::from_element(1, 1, 3.0), &[2.0], 0.5).unwrap();
        assert!((a[0] - 2.0 / 3.5).abs() < 1e-15);
    }

    #[test]
    fn lssvm_reports_indefinite_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -5.0]);
        let err = train_lssvm(&g, &[1.0, 1.0], 1e-3).unwrap_err();
        match err {
            Error::Numerical(msg) => assert!(msg.contains("min eigenvalue of K is -5")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lssvm_rejects_bad_lambda() {
        assert!(matches!(train_lssvm(&DMatrix::identity(1, 1), &[1.0], 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn hinge_xor() {
        let g = DMatrix::from_fn(4, 4, |i, j| if i == j { 9.0 } else { 1.0 });
        let a = train_hinge(&g, &[-1.0, 1.0, 1.0, -1.0], 1.0).unwrap();
        for (got, want) in a.iter().zip([-0.125, 0.125, 0.125, -0.125]) {
            assert!((got - want).abs() < 1e-12, "{a:?}");
        }
    }

    #[test]
    fn hinge_single_point() {
        for (k, lambda) in [(4.0, 1.0), (0.5, 1.0), (2.0, 0.1)] {
            let a = train_hinge(&DMatrix::from_element(1, 1, k), &[1.0], lambda).unwrap();
            let want = (1.0f64 / lambda).min(1.0 / k);
            assert!((a[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hinge_decoupled_pair() {
        let a = train_hinge(&DMatrix::identity(2, 2), &[1.0, -1.0], 1e-3).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12 && (a[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hinge_rejects_non_binary_labels() {
        assert!(matches!(train_hinge(&DMatrix::identity(1, 1), &[0.5], 1.0), Err(Error::Input(_))));
    }

    #[test]
    fn hinge_reports_non_convergence() {
        let g = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.9 });
        let opts = HingeOptions { tol: 1e-14, max_sweeps: 1 };
        let err = train_hinge_with(&g, &[1.0, -1.0, 1.0], 1e-3, &opts).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("KKT violation")));
    }

    #[test]
    fn loo_identity_regression() {
        let y = [0.3, -1.2, 0.7];
        let loo = loo_error(&DMatrix::identity(3, 3), &y, 0.4, Task::Regression).unwrap();
        let want = y.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!((loo - want).abs() < 1e-15);
    }

    #[test]
    fn loo_duplicated_points_classification() {
        // two copies of each of two well-separated points
        let pts = [[1.0], [1.0], [-1.0], [-1.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let g = DMatrix::from_fn(4, 4, |i, j| (pts[i][0] * pts[j][0] + 1.0f64).powi(2));
        assert_eq!(loo_error(&g, &y, 1.0, Task::Classification).unwrap(), 0.0);
    }
}
