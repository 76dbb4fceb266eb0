//! Explicit (truncated) feature maps of the free kernels.
//!
//! These are the reference route for the closed forms: every dot-product
//! family is `k(<x, ..., x''''>_m)` with Taylor coefficients `xi_k >= 0`, and
//! the log-ratio family is a direct product of a one-dimensional series. Both
//! expand over the monomial features `x_0^{i_0} ... x_{n-1}^{i_{n-1}}`.

use crate::error::{Error, Result};

use super::{sq_norm, FreeKernelSpec, KernelFamily};

pub const DEFAULT_TRUNCATION_DEGREE: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionKind {
    DotProduct,
    DirectProduct,
}

#[derive(Debug, Clone)]
pub struct FeatureExpansion {
    pub multi_indices: Vec<Vec<u32>>,
    /// `xi_k` for `k = 0..=max_degree`.
    pub taylor_coeffs: Vec<f64>,
    /// Feature weights `tau`, one per multi-index.
    pub weights: Vec<f64>,
    pub kind: ExpansionKind,
    /// SE features carry the factor `exp(-nu/2 ||x||^2)`.
    pub normalization_nu: Option<f64>,
}

/// Builds the feature expansion of `spec` over `n` inputs up to total degree `max_degree`.
///
/// Multi-indices whose weight is exactly zero are dropped, so the linear
/// family yields the identity features and sinh only odd degrees.
pub fn expand_features(spec: &FreeKernelSpec, n: usize, max_degree: u32) -> Result<FeatureExpansion> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::input("expansion needs input dimension >= 1"));
    }
    let max_degree = match spec.family {
        KernelFamily::Linear => 1,
        KernelFamily::Polynomial => spec.degree.min(max_degree),
        _ => max_degree,
    };
    let xi = taylor_coefficients(spec, max_degree)?;
    let kind = match spec.family {
        KernelFamily::LogRatio => ExpansionKind::DirectProduct,
        _ => ExpansionKind::DotProduct,
    };

    let mut multi_indices = Vec::new();
    let mut weights = Vec::new();
    for degree in 0..=max_degree {
        for idx in multi_indices_of_degree(n, degree) {
            let tau_sq = match kind {
                ExpansionKind::DotProduct => multinomial(&idx) * xi[degree as usize],
                ExpansionKind::DirectProduct => idx.iter().map(|&i| xi[i as usize]).product(),
            };
            if tau_sq != 0.0 {
                weights.push(tau_sq.sqrt());
                multi_indices.push(idx);
            }
        }
    }

    Ok(FeatureExpansion {
        multi_indices,
        taylor_coeffs: xi,
        weights,
        kind,
        normalization_nu: (spec.family == KernelFamily::Se).then_some(spec.nu),
    })
}

fn taylor_coefficients(spec: &FreeKernelSpec, max_degree: u32) -> Result<Vec<f64>> {
    let nu = spec.nu;
    let xi: Vec<f64> = (0..=max_degree)
        .map(|k| {
            let kf = k as i32;
            match spec.family {
                KernelFamily::Linear => (k == 1) as u8 as f64,
                KernelFamily::Polynomial => {
                    binomial(spec.degree, k) * spec.offset.powi(spec.degree as i32 - kf)
                }
                KernelFamily::HyperbolicSine => {
                    if k % 2 == 1 {
                        nu.powi(kf) / factorial(k)
                    } else {
                        0.0
                    }
                }
                KernelFamily::Exponential | KernelFamily::Se => nu.powi(kf) / factorial(k),
                KernelFamily::LogRatio => {
                    if k % 2 == 1 {
                        2.0 / k as f64
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    if let Some(k) = xi.iter().position(|&c| c < 0.0) {
        return Err(Error::Domain(format!(
            "taylor coefficient xi_{k} = {} is negative; the family has no real feature expansion",
            xi[k]
        )));
    }
    Ok(xi)
}

/// Multi-indices of total `degree`: single-variable powers first, then mixed
/// terms, each group in descending lexicographic order.
fn multi_indices_of_degree(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    compositions(degree, 0, &mut current, &mut out);
    out.sort_by(|a, b| {
        let nz = |v: &Vec<u32>| v.iter().filter(|&&i| i > 0).count();
        nz(a).cmp(&nz(b)).then_with(|| b.cmp(a))
    });
    out
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for i in 0..=remaining {
        current[pos] = i;
        compositions(remaining - i, pos + 1, current, out);
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn multinomial(idx: &[u32]) -> f64 {
    let total: u32 = idx.iter().sum();
    // product of binomials avoids overflow for moderate degrees
    let mut acc = 1.0;
    let mut used = 0;
    for &i in idx {
        used += i;
        acc *= binomial(used, i);
    }
    debug_assert_eq!(used, total);
    acc
}

impl FeatureExpansion {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.multi_indices.first().map_or(0, Vec::len)
    }

    /// Unweighted features `theta(x)`.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let scale = self
            .normalization_nu
            .map_or(1.0, |nu| (-0.5 * nu * sq_norm(x)).exp());
        self.multi_indices
            .iter()
            .map(|idx| {
                scale
                    * idx
                        .iter()
                        .zip(x)
                        .map(|(&p, &xi)| xi.powi(p as i32))
                        .product::<f64>()
            })
            .collect()
    }

    /// Truncated kernel value `sum_k tau_k^2 prod_args theta_k(arg)`.
    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        let feats: Vec<Vec<f64>> = args.iter().map(|a| self.features(a)).collect();
        self.weights
            .iter()
            .enumerate()
            .map(|(k, t)| t * t * feats.iter().map(|f| f[k]).product::<f64>())
            .sum()
    }

    /// The same feature map with a replacement weight vector.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<FeatureExpansion> {
        if weights.len() != self.weights.len() {
            return Err(Error::input(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        Ok(FeatureExpansion { weights, ..self.clone() })
    }
}
