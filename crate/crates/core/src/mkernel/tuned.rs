//! The re-weighted Mercer kernel built from a free kernel and SVM duals.
//!
//! `K^A_2(x, x') = sum_{i,j} alpha_i alpha_j K_4(a_i, a_j, x, x')`. It keeps the
//! unweighted feature map of the base kernel and replaces its weights by
//! `tau_A = tau ⊙ sum_i alpha_i theta(a_i)`.

use crate::error::{Error, Result};

use super::{check_args, sq_norm, FeatureExpansion, FreeKernelSpec, KernelFamily};

/// Absolute floor on `max |alpha|` below which the tuned kernel is treated as identically zero.
pub const VANISHING_TOLERANCE: f64 = 1e-12;

/// Vanishing threshold for targets of magnitude `target_scale` (`max |y|`).
pub fn vanishing_tolerance(target_scale: f64) -> f64 {
    VANISHING_TOLERANCE * target_scale.abs().max(1.0)
}

#[derive(Debug, Clone)]
pub struct TunedKernel {
    base: FreeKernelSpec,
    aux_points: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    cache: PairCache,
}

/// Unordered pairs `(i <= j)` with `a_i ⊙ a_j` and the folded weight
/// `alpha_i alpha_j (2 if i != j)`, times the SE normalization of both points.
#[derive(Debug, Clone)]
struct PairCache {
    dim: usize,
    products: Vec<f64>,
    weights: Vec<f64>,
}

impl TunedKernel {
    pub fn new(base: FreeKernelSpec, aux_points: Vec<Vec<f64>>, alpha: Vec<f64>) -> Result<Self> {
        Self::with_target_scale(base, aux_points, alpha, 1.0)
    }

    /// Like [`TunedKernel::new`], with the vanishing threshold scaled by `max |y^A|`.
    pub fn with_target_scale(
        base: FreeKernelSpec,
        aux_points: Vec<Vec<f64>>,
        alpha: Vec<f64>,
        target_scale: f64,
    ) -> Result<Self> {
        base.validate()?;
        if aux_points.is_empty() {
            return Err(Error::input("tuned kernel needs at least one auxiliary point"));
        }
        if aux_points.len() != alpha.len() {
            return Err(Error::input(format!(
                "{} auxiliary points but {} dual coefficients",
                aux_points.len(),
                alpha.len()
            )));
        }
        let dim = aux_points[0].len();
        if dim == 0 || aux_points.iter().any(|p| p.len() != dim) {
            return Err(Error::input("auxiliary points must share a nonzero dimension"));
        }
        let max_abs_alpha = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let tolerance = vanishing_tolerance(target_scale);
        if !(max_abs_alpha >= tolerance) {
            return Err(Error::VanishingKernel { max_abs_alpha, tolerance });
        }
        let cache = PairCache::build(&base, &aux_points, &alpha);
        Ok(TunedKernel { base, aux_points, alpha, cache })
    }

    pub fn base(&self) -> &FreeKernelSpec {
        &self.base
    }

    pub fn aux_points(&self) -> &[Vec<f64>] {
        &self.aux_points
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn input_dim(&self) -> usize {
        self.cache.dim
    }

    /// `K^A_2(x, x')`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.cache.dim || y.len() != self.cache.dim {
            return Err(Error::input(format!(
                "expected inputs of dimension {}, got {} and {}",
                self.cache.dim,
                x.len(),
                y.len()
            )));
        }
        if self.base.family == KernelFamily::LogRatio {
            return self.eval_double_sum(x, y);
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Fast path for the dot-product families; inputs must have the right length.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.cache.dim;
        let mut total = 0.0;
        for (b, w) in self.cache.products.chunks_exact(n).zip(&self.cache.weights) {
            let s: f64 = (0..n).map(|k| b[k] * x[k] * y[k]).sum();
            total += w * self.base.dot_profile(s);
        }
        if self.base.family == KernelFamily::Se {
            total *= (-0.5 * self.base.nu * (sq_norm(x) + sq_norm(y))).exp();
        }
        total
    }

    /// Literal double sum of arity-4 evaluations, no caching.
    pub fn eval_double_sum(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_args(&[x, y])?;
        let mut total = 0.0;
        for (ai, &wi) in self.aux_points.iter().zip(&self.alpha) {
            for (aj, &wj) in self.aux_points.iter().zip(&self.alpha) {
                total += wi * wj * self.base.eval(&[ai, aj, x, y])?;
            }
        }
        Ok(total)
    }
}

impl PairCache {
    fn build(base: &FreeKernelSpec, points: &[Vec<f64>], alpha: &[f64]) -> Self {
        let dim = points[0].len();
        let norm: Vec<f64> = points
            .iter()
            .map(|p| {
                if base.family == KernelFamily::Se {
                    (-0.5 * base.nu * sq_norm(p)).exp()
                } else {
                    1.0
                }
            })
            .collect();
        let mut products = Vec::new();
        let mut weights = Vec::new();
        for i in 0..points.len() {
            for j in i..points.len() {
                let w = alpha[i] * alpha[j] * norm[i] * norm[j] * if i == j { 1.0 } else { 2.0 };
                if w == 0.0 {
                    continue;
                }
                products.extend(points[i].iter().zip(&points[j]).map(|(a, b)| a * b));
                weights.push(w);
            }
        }
        PairCache { dim, products, weights }
    }
}

/// Feature weights of the tuned kernel, `tau ⊙ sum_i alpha_i theta(a_i)`.
///
/// `expansion` must be built from the tuned kernel's base family.
pub fn tuned_weights_oracle(t: &TunedKernel, expansion: &FeatureExpansion) -> Result<Vec<f64>> {
    if expansion.input_dim() != t.input_dim() {
        return Err(Error::input("expansion dimension does not match the tuned kernel"));
    }
    let mut acc = vec![0.0; expansion.len()];
    for (a, &w) in t.aux_points.iter().zip(&t.alpha) {
        for (slot, f) in acc.iter_mut().zip(expansion.features(a)) {
            *slot += w * f;
        }
    }
    Ok(acc.iter().zip(&expansion.weights).map(|(s, tau)| s * tau).collect())
}
