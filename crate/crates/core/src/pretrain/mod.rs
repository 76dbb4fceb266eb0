//! Pre-training on the auxiliary dataset.
//!
//! An SVM with the base free kernel at arity 2 is trained on the auxiliary
//! data, hyperparameters are picked by leave-one-out error, and the resulting
//! dual coefficients define the tuned covariance.

mod io;
mod svm;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mkernel::{FreeKernelSpec, KernelFamily, TunedKernel};

pub use io::{read_aux_csv, read_xy_csv, write_aux_csv};
pub use svm::{loo_error, train_hinge, train_hinge_with, train_lssvm, HingeOptions, HingeSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::input(format!(
                "unknown task '{other}' (expected regression or classification)"
            ))),
        }
    }
}

/// Affine maps between raw data and the normalized training scale.
///
/// Inputs: `[x_lo, x_hi]` per coordinate to `[-1, 1]`. Regression targets:
/// `[y_min, y_max]` to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub y_min: f64,
    pub y_max: f64,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize, task: Task) -> Self {
        let (y_min, y_max) = match task {
            Task::Regression => (0.0, 1.0),
            Task::Classification => (-1.0, 1.0),
        };
        Normalization { y_min, y_max, x_lo: vec![-1.0; dim], x_hi: vec![1.0; dim] }
    }

    /// Raw input to `[-1, 1]^n`. Constant coordinates map to 0.
    pub fn normalize_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_lo.iter().zip(&self.x_hi))
            .map(|(&v, (&lo, &hi))| if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 })
            .collect()
    }

    pub fn denormalize_x(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.x_lo.iter().zip(&self.x_hi))
            .map(|(&v, (&lo, &hi))| lo + 0.5 * (v + 1.0) * (hi - lo))
            .collect()
    }

    pub fn normalize_y(&self, y: f64) -> f64 {
        if self.y_max > self.y_min {
            (y - self.y_min) / (self.y_max - self.y_min)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuxDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task: Task,
    pub normalization: Normalization,
}

impl AuxDataset {
    /// Dataset that is already on the normalized scale.
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, task: Task) -> Result<Self> {
        let dim = inputs.first().map_or(0, Vec::len);
        let data = AuxDataset { inputs, targets, task, normalization: Normalization::identity(dim, task) };
        data.validate()?;
        Ok(data)
    }

    /// Normalizes raw observations: inputs by per-column min/max, regression
    /// targets by their min/max (a constant target maps to 0).
    pub fn from_raw(inputs: Vec<Vec<f64>>, targets: Vec<f64>, task: Task) -> Result<Self> {
        let dim = inputs.first().map_or(0, Vec::len);
        if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
            return Err(Error::input("auxiliary inputs must share a nonzero dimension"));
        }
        let mut x_lo = vec![f64::INFINITY; dim];
        let mut x_hi = vec![f64::NEG_INFINITY; dim];
        for x in &inputs {
            for k in 0..dim {
                x_lo[k] = x_lo[k].min(x[k]);
                x_hi[k] = x_hi[k].max(x[k]);
            }
        }
        Self::from_raw_with_bounds(inputs, targets, task, x_lo, x_hi)
    }

    /// Like [`AuxDataset::from_raw`] with known input bounds `[x_lo, x_hi]`.
    pub fn from_raw_with_bounds(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        task: Task,
        x_lo: Vec<f64>,
        x_hi: Vec<f64>,
    ) -> Result<Self> {
        let dim = inputs.first().map_or(0, Vec::len);
        if x_lo.len() != dim || x_hi.len() != dim {
            return Err(Error::input("input bounds do not match the data dimension"));
        }
        let (y_min, y_max) = match task {
            Task::Regression => targets
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y))),
            Task::Classification => (-1.0, 1.0),
        };
        let normalization = Normalization { y_min, y_max, x_lo, x_hi };
        let inputs = inputs.iter().map(|x| normalization.normalize_x(x)).collect();
        let targets = match task {
            Task::Regression => targets.iter().map(|&y| normalization.normalize_y(y)).collect(),
            Task::Classification => targets,
        };
        let data = AuxDataset { inputs, targets, task, normalization };
        data.validate()?;
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::input("auxiliary dataset is empty"));
        }
        if self.inputs.len() != self.targets.len() {
            return Err(Error::input(format!(
                "{} auxiliary inputs but {} targets",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        let dim = self.input_dim();
        if dim == 0 || self.inputs.iter().any(|x| x.len() != dim) {
            return Err(Error::input("auxiliary inputs must share a nonzero dimension"));
        }
        if self.inputs.iter().flatten().chain(&self.targets).any(|v| !v.is_finite()) {
            return Err(Error::input("auxiliary data contains non-finite values"));
        }
        const SLACK: f64 = 1e-12;
        if self.inputs.iter().flatten().any(|v| v.abs() > 1.0 + SLACK) {
            return Err(Error::input("auxiliary inputs must be normalized to [-1, 1]"));
        }
        match self.task {
            Task::Classification => {
                if let Some(bad) = self.targets.iter().find(|&&y| y != 1.0 && y != -1.0) {
                    return Err(Error::input(format!("classification targets must be -1 or +1, got {bad}")));
                }
            }
            Task::Regression => {
                if self.targets.iter().any(|&y| !(-SLACK..=1.0 + SLACK).contains(&y)) {
                    return Err(Error::input("regression targets must be normalized to [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub nu_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            nu_values: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            lambda_values: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nu_values.is_empty() || self.lambda_values.is_empty() {
            return Err(Error::input("hyperparameter grid must be non-empty"));
        }
        if self.nu_values.iter().chain(&self.lambda_values).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::input("hyperparameter grid values must be finite and positive"));
        }
        Ok(())
    }

    fn sorted(values: &[f64]) -> Vec<f64> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Persisted result of pre-training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxModel {
    pub kernel: FreeKernelSpec,
    pub lambda: f64,
    pub task: Task,
    pub alpha: Vec<f64>,
    pub aux_inputs: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub loo_error: f64,
    pub input_dim: usize,
}

impl AuxModel {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.alpha.len() != self.aux_inputs.len() || self.alpha.is_empty() {
            return Err(Error::input(format!(
                "model has {} dual coefficients for {} auxiliary inputs",
                self.alpha.len(),
                self.aux_inputs.len()
            )));
        }
        if self.aux_inputs.iter().any(|x| x.len() != self.input_dim) || self.input_dim == 0 {
            return Err(Error::input("auxiliary inputs do not match input_dim"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::input("model lambda must be positive"));
        }
        if !(self.loo_error >= 0.0) {
            return Err(Error::input("model loo_error must be non-negative"));
        }
        let n = &self.normalization;
        if n.x_lo.len() != self.input_dim || n.x_hi.len() != self.input_dim {
            return Err(Error::input("normalization bounds do not match input_dim"));
        }
        Ok(())
    }
}

/// Gram matrix of the arity-2 kernel over `points`.
pub fn gram_matrix(kernel: &FreeKernelSpec, points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval2(&points[i], &points[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn train(gram: &DMatrix<f64>, y: &[f64], lambda: f64, task: Task) -> Result<Vec<f64>> {
    match task {
        Task::Regression => train_lssvm(gram, y, lambda),
        Task::Classification => train_hinge(gram, y, lambda),
    }
}

/// Training targets: regression targets are centered, labels are used raw.
fn training_targets(data: &AuxDataset) -> Vec<f64> {
    match data.task {
        Task::Regression => {
            let mean = data.targets.iter().sum::<f64>() / data.targets.len() as f64;
            data.targets.iter().map(|y| y - mean).collect()
        }
        Task::Classification => data.targets.clone(),
    }
}

/// Grid search over `(nu, lambda)` by LOO error, then a final fit.
///
/// `kernel` fixes the family and any hyperparameter the grid does not tune;
/// `nu` is searched only for families that read it. Ties go to the smallest
/// `nu`, then the smallest `lambda`.
pub fn pretrain(data: &AuxDataset, kernel: FreeKernelSpec, grid: &HyperGrid) -> Result<AuxModel> {
    data.validate()?;
    grid.validate()?;
    kernel.validate()?;
    if kernel.family == KernelFamily::LogRatio {
        return Err(Error::Domain("the log-ratio family is not supported for pre-training".into()));
    }
    let y = training_targets(data);
    let nus = if kernel.family.uses_nu() { HyperGrid::sorted(&grid.nu_values) } else { vec![kernel.nu] };
    let lambdas = HyperGrid::sorted(&grid.lambda_values);

    // each nu row shares one Gram matrix
    let rows: Vec<Result<Vec<f64>>> = nus
        .par_iter()
        .map(|&nu| {
            let g = gram_matrix(&kernel.with_nu(nu), &data.inputs);
            lambdas.iter().map(|&lambda| loo_error(&g, &y, lambda, data.task)).collect()
        })
        .collect();

    let mut best: Option<(usize, usize, f64)> = None;
    for (i, row) in rows.into_iter().enumerate() {
        for (j, loo) in row?.into_iter().enumerate() {
            if loo.is_nan() {
                continue;
            }
            if best.map_or(true, |(_, _, b)| loo < b) {
                best = Some((i, j, loo));
            }
        }
    }
    let (i, j, loo) = best.ok_or_else(|| Error::numerical("every grid cell produced a NaN LOO error"))?;
    let chosen = kernel.with_nu(nus[i]);
    let lambda = lambdas[j];
    let gram = gram_matrix(&chosen, &data.inputs);
    let alpha = train(&gram, &y, lambda, data.task)?;

    let target_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check_vanishing(&alpha, target_scale)?;

    Ok(AuxModel {
        kernel: chosen,
        lambda,
        task: data.task,
        alpha,
        aux_inputs: data.inputs.clone(),
        normalization: data.normalization.clone(),
        loo_error: loo,
        input_dim: data.input_dim(),
    })
}

fn check_vanishing(alpha: &[f64], target_scale: f64) -> Result<()> {
    let max_abs_alpha = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let tolerance = crate::mkernel::vanishing_tolerance(target_scale);
    if !(max_abs_alpha >= tolerance) {
        return Err(Error::VanishingKernel { max_abs_alpha, tolerance });
    }
    Ok(())
}

/// Builds the re-weighted covariance from a trained model.
pub fn build_tuned(model: &AuxModel) -> Result<TunedKernel> {
    model.validate()?;
    TunedKernel::new(model.kernel, model.aux_inputs.clone(), model.alpha.clone())
}
