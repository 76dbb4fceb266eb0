//! m-dot-products and free m-kernels.
//!
//! An m-kernel takes `m` inputs and generalizes the Mercer kernel (`m = 2`).
//! The families here are *free*: they share an unweighted feature map and a
//! weight vector that do not depend on `m`, so the same family can be
//! evaluated at arity 2 (SVM training) and arity 4 (prior reweighting).

mod expansion;
mod tuned;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expansion::{expand_features, ExpansionKind, FeatureExpansion, DEFAULT_TRUNCATION_DEGREE};
pub use tuned::{tuned_weights_oracle, vanishing_tolerance, TunedKernel, VANISHING_TOLERANCE};

/// Sum over coordinates of the element-wise product of all argument vectors.
///
/// The arity `m = args.len()` must be even and at least 2, and every vector
/// must share the same dimension.
pub fn m_dot(args: &[&[f64]]) -> Result<f64> {
    check_args(args)?;
    Ok(m_dot_unchecked(args))
}

#[inline]
pub(crate) fn m_dot_unchecked(args: &[&[f64]]) -> f64 {
    let n = args[0].len();
    (0..n)
        .map(|k| args.iter().map(|v| v[k]).product::<f64>())
        .sum()
}

fn check_args(args: &[&[f64]]) -> Result<usize> {
    let m = args.len();
    if m < 2 || m % 2 != 0 {
        return Err(Error::input(format!("arity must be even and >= 2, got {m}")));
    }
    let n = args[0].len();
    if n == 0 {
        return Err(Error::input("argument vectors must have dimension >= 1"));
    }
    if let Some(bad) = args.iter().position(|v| v.len() != n) {
        return Err(Error::input(format!(
            "dimension mismatch: argument {bad} has length {}, expected {n}",
            args[bad].len()
        )));
    }
    Ok(n)
}

/// The free-kernel families of the m-kernel table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Linear,
    Polynomial,
    #[serde(rename = "sinh")]
    HyperbolicSine,
    Exponential,
    LogRatio,
    Se,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 6] = [
        KernelFamily::Linear,
        KernelFamily::Polynomial,
        KernelFamily::HyperbolicSine,
        KernelFamily::Exponential,
        KernelFamily::LogRatio,
        KernelFamily::Se,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Polynomial => "polynomial",
            KernelFamily::HyperbolicSine => "sinh",
            KernelFamily::Exponential => "exponential",
            KernelFamily::LogRatio => "log-ratio",
            KernelFamily::Se => "se",
        }
    }

    /// Whether the family reads the scale hyperparameter `nu`.
    pub fn uses_nu(self) -> bool {
        matches!(
            self,
            KernelFamily::HyperbolicSine | KernelFamily::Exponential | KernelFamily::Se
        )
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(KernelFamily::Linear),
            "polynomial" | "poly" => Ok(KernelFamily::Polynomial),
            "sinh" | "hyperbolic-sine" => Ok(KernelFamily::HyperbolicSine),
            "exponential" | "exp" => Ok(KernelFamily::Exponential),
            "log-ratio" | "logratio" => Ok(KernelFamily::LogRatio),
            "se" | "rbf" => Ok(KernelFamily::Se),
            other => Err(Error::input(format!(
                "unknown kernel family '{other}' (expected one of: linear, poly, sinh, exp, log-ratio, se)"
            ))),
        }
    }
}

/// A free kernel family together with its hyperparameters.
///
/// `nu` is the scale for sinh/exponential/SE, `degree` and `offset` are the
/// `p` and additive constant of the polynomial family. Fields a family does
/// not read are carried along unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeKernelSpec {
    pub family: KernelFamily,
    pub nu: f64,
    pub degree: u32,
    pub offset: f64,
}

impl FreeKernelSpec {
    pub fn new(family: KernelFamily, nu: f64, degree: u32, offset: f64) -> Result<Self> {
        let spec = FreeKernelSpec { family, nu, degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear() -> Self {
        FreeKernelSpec { family: KernelFamily::Linear, nu: 1.0, degree: 1, offset: 0.0 }
    }

    pub fn polynomial(degree: u32, offset: f64) -> Self {
        FreeKernelSpec { family: KernelFamily::Polynomial, nu: 1.0, degree, offset }
    }

    pub fn sinh(nu: f64) -> Self {
        FreeKernelSpec { family: KernelFamily::HyperbolicSine, nu, degree: 1, offset: 0.0 }
    }

    pub fn exponential(nu: f64) -> Self {
        FreeKernelSpec { family: KernelFamily::Exponential, nu, degree: 1, offset: 0.0 }
    }

    pub fn log_ratio() -> Self {
        FreeKernelSpec { family: KernelFamily::LogRatio, nu: 1.0, degree: 1, offset: 0.0 }
    }

    pub fn se(nu: f64) -> Self {
        FreeKernelSpec { family: KernelFamily::Se, nu, degree: 1, offset: 0.0 }
    }

    /// Same family and other hyperparameters, with `nu` replaced.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::input(format!("nu must be finite and >= 0, got {}", self.nu)));
        }
        if self.degree < 1 {
            return Err(Error::input("polynomial degree must be >= 1"));
        }
        if !self.offset.is_finite() {
            return Err(Error::input("polynomial offset must be finite"));
        }
        Ok(())
    }

    /// Evaluates the kernel at arity `m = args.len()`.
    pub fn eval(&self, args: &[&[f64]]) -> Result<f64> {
        check_args(args)?;
        let n = args[0].len();
        match self.family {
            KernelFamily::LogRatio => {
                let mut value = 1.0;
                for k in 0..n {
                    let p: f64 = args.iter().map(|v| v[k]).product();
                    value *= log_ratio_term(p)?;
                }
                Ok(value)
            }
            KernelFamily::Se => {
                let s = m_dot_unchecked(args);
                let sq: f64 = args.iter().map(|v| sq_norm(v)).sum();
                Ok((0.5 * self.nu * (2.0 * s - sq)).exp())
            }
            _ => Ok(self.dot_profile(m_dot_unchecked(args))),
        }
    }

    /// Arity-2 evaluation. Inputs must share a dimension.
    #[inline]
    pub fn eval2(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.family {
            KernelFamily::Se => (-0.5 * self.nu * sq_dist(x, y)).exp(),
            KernelFamily::LogRatio => x
                .iter()
                .zip(y)
                .map(|(a, b)| log_ratio_term(a * b).unwrap_or(f64::NAN))
                .product(),
            _ => self.dot_profile(dot(x, y)),
        }
    }

    /// Profile `k(s)` of a dot-product family, or the exponential part of SE.
    #[inline]
    pub(crate) fn dot_profile(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Linear => s,
            KernelFamily::Polynomial => (s + self.offset).powi(self.degree as i32),
            KernelFamily::HyperbolicSine => (self.nu * s).sinh(),
            KernelFamily::Exponential | KernelFamily::Se => (self.nu * s).exp(),
            KernelFamily::LogRatio => unreachable!("log-ratio is a direct-product kernel"),
        }
    }
}

pub(crate) fn log_ratio_term(p: f64) -> Result<f64> {
    if p.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "log-ratio kernel requires |coordinate product| < 1, got {p}"
        )));
    }
    Ok(((1.0 + p) / (1.0 - p)).ln())
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum()
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
