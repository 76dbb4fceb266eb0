//! Zero-mean Gaussian-process regression over an arbitrary covariance.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::jittered_cholesky;
use crate::mkernel::{sq_dist, FeatureExpansion, FreeKernelSpec, KernelFamily, TunedKernel};

/// Observation noise variance used for noiseless objectives.
pub const DEFAULT_NOISE_VAR: f64 = 1e-6;

/// A Mercer covariance `K(x, x')`. Inputs are assumed dimension-compatible.
pub trait Covariance: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    fn diag(&self, x: &[f64]) -> f64 {
        self.eval(x, x)
    }
}

/// Isotropic squared exponential `exp(-nu/2 ||x - x'||^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredExp {
    pub nu: f64,
}

impl Covariance for SquaredExp {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (-0.5 * self.nu * sq_dist(x, y)).exp()
    }

    fn diag(&self, _x: &[f64]) -> f64 {
        1.0
    }
}

/// Squared exponential with one inverse squared length-scale per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ArdSquaredExp {
    pub nus: Vec<f64>,
}

impl Covariance for ArdSquaredExp {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let s: f64 = self
            .nus
            .iter()
            .zip(x.iter().zip(y))
            .map(|(nu, (a, b))| nu * (a - b) * (a - b))
            .sum();
        (-0.5 * s).exp()
    }

    fn diag(&self, _x: &[f64]) -> f64 {
        1.0
    }
}

impl Covariance for FreeKernelSpec {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval2(x, y)
    }
}

impl Covariance for TunedKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.base().family == KernelFamily::LogRatio {
            return self.eval_double_sum(x, y).unwrap_or(f64::NAN);
        }
        self.eval_unchecked(x, y)
    }
}

/// `scale * K(x, x')`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub inner: Arc<dyn Covariance>,
    pub scale: f64,
}

impl Covariance for Scaled {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.scale * self.inner.eval(x, y)
    }

    fn diag(&self, x: &[f64]) -> f64 {
        self.scale * self.inner.diag(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub noise_var: f64,
}

impl Observations {
    pub fn new(noise_var: f64) -> Self {
        Observations { points: Vec::new(), values: Vec::new(), noise_var }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.points.len() != self.values.len() {
            return Err(Error::input(format!(
                "{} observation points but {} values",
                self.points.len(),
                self.values.len()
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::input(format!("noise variance must be >= 0, got {}", self.noise_var)));
        }
        if let Some(first) = self.points.first() {
            if self.points.iter().any(|p| p.len() != first.len()) {
                return Err(Error::input("observation points must share a dimension"));
            }
        }
        Ok(())
    }
}

/// Posterior over `f` given observations, with a cached factorization of
/// `K_D + sigma^2 I` (plus jitter).
#[derive(Debug, Clone)]
pub struct GpPosterior {
    obs: Observations,
    kernel: Arc<dyn Covariance>,
    lower: DMatrix<f64>,
    alpha_vec: DVector<f64>,
    jitter: f64,
}

impl GpPosterior {
    pub fn new(kernel: Arc<dyn Covariance>, noise_var: f64) -> Result<Self> {
        Self::from_observations(kernel, Observations::new(noise_var))
    }

    pub fn from_observations(kernel: Arc<dyn Covariance>, obs: Observations) -> Result<Self> {
        obs.validate()?;
        let n = obs.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = kernel.eval(&obs.points[i], &obs.points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] = kernel.diag(&obs.points[i]) + obs.noise_var;
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("covariance matrix contains non-finite entries"));
        }
        let (chol, jitter) = jittered_cholesky(&k)?;
        let alpha_vec = chol.solve(&DVector::from_column_slice(&obs.values));
        let lower = chol.unpack();
        Ok(GpPosterior { obs, kernel, lower, alpha_vec, jitter })
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn kernel(&self) -> &Arc<dyn Covariance> {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Posterior over the enlarged observation set.
    pub fn add_observation(&self, x: Vec<f64>, y: f64) -> Result<GpPosterior> {
        if let Some(first) = self.obs.points.first() {
            if first.len() != x.len() {
                return Err(Error::input(format!(
                    "observation has dimension {}, expected {}",
                    x.len(),
                    first.len()
                )));
            }
        }
        let mut obs = self.obs.clone();
        obs.points.push(x);
        obs.values.push(y);
        GpPosterior::from_observations(Arc::clone(&self.kernel), obs)
    }

    /// Mean and variance at `x`; variance is clamped to `[0, K(x, x)]`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let (mean, var, prior) = self.posterior_parts(x);
        (mean, var.clamp(0.0, prior.max(0.0)))
    }

    /// Mean and variance before clamping.
    pub fn posterior_unclamped(&self, x: &[f64]) -> (f64, f64) {
        let (mean, var, _) = self.posterior_parts(x);
        (mean, var)
    }

    fn posterior_parts(&self, x: &[f64]) -> (f64, f64, f64) {
        let prior = self.kernel.diag(x);
        let n = self.obs.len();
        if n == 0 {
            return (0.0, prior, prior);
        }
        let mut v: Vec<f64> = self.obs.points.iter().map(|p| self.kernel.eval(x, p)).collect();
        let mean: f64 = v.iter().zip(self.alpha_vec.iter()).map(|(a, b)| a * b).sum();
        // forward substitution L v = k
        for i in 0..n {
            let mut s = v[i];
            for j in 0..i {
                s -= self.lower[(i, j)] * v[j];
            }
            v[i] = s / self.lower[(i, i)];
        }
        let reduction: f64 = v.iter().map(|a| a * a).sum();
        (mean, prior - reduction, prior)
    }
}

/// Posterior from the weight-space formulas with explicit features.
///
/// Uses `Sigma_tau = diag(tau^2)` and `Theta_D[k, j] = theta_k(x_j)`, inverting
/// `Theta' Sigma Theta + sigma^2 I` densely, then projects through `theta(x)`.
pub fn weight_space_posterior_oracle(expansion: &FeatureExpansion, obs: &Observations, x: &[f64]) -> Result<(f64, f64)> {
    obs.validate()?;
    let d = expansion.len();
    let phi_x = DVector::from_vec(expansion.features(x));
    let sigma = DVector::from_iterator(d, expansion.weights.iter().map(|t| t * t));
    if obs.is_empty() {
        let var = phi_x.iter().zip(sigma.iter()).map(|(f, s)| s * f * f).sum();
        return Ok((0.0, var));
    }
    let n = obs.len();
    let mut theta = DMatrix::zeros(d, n);
    for (j, p) in obs.points.iter().enumerate() {
        for (k, f) in expansion.features(p).into_iter().enumerate() {
            theta[(k, j)] = f;
        }
    }
    let sigma_theta = DMatrix::from_fn(d, n, |k, j| sigma[k] * theta[(k, j)]);
    let mut a = theta.transpose() * &sigma_theta;
    for i in 0..n {
        a[(i, i)] += obs.noise_var;
    }
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::numerical("weight-space system is singular"))?;
    let y = DVector::from_column_slice(&obs.values);
    let mean_v = &sigma_theta * (&a_inv * y);
    let cov_v = DMatrix::from_diagonal(&sigma) - &sigma_theta * &a_inv * sigma_theta.transpose();
    let mean = phi_x.dot(&mean_v);
    let var = (phi_x.transpose() * cov_v * &phi_x)[(0, 0)];
    Ok((mean, var))
}
