use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ei,
    Ucb,
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Ucb => "ucb",
        })
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ei" => Ok(AcquisitionKind::Ei),
            "ucb" | "gp-ucb" | "gpucb" => Ok(AcquisitionKind::Ucb),
            other => Err(Error::input(format!("unknown acquisition '{other}' (expected ei or ucb)"))),
        }
    }
}

pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Confidence parameter of the UCB schedule.
    pub delta: f64,
    pub dim: usize,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind, delta: f64, dim: usize) -> Result<Self> {
        let spec = AcquisitionSpec { kind, delta, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ei(dim: usize) -> Self {
        AcquisitionSpec { kind: AcquisitionKind::Ei, delta: DEFAULT_DELTA, dim }
    }

    pub fn ucb(dim: usize) -> Self {
        AcquisitionSpec { kind: AcquisitionKind::Ucb, delta: DEFAULT_DELTA, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.dim == 0 {
            return Err(Error::input("acquisition dimension must be >= 1"));
        }
        Ok(())
    }

    /// Acquisition value from posterior mean and standard deviation.
    pub fn value(&self, mean: f64, sd: f64, y_plus: f64, t: usize) -> f64 {
        match self.kind {
            AcquisitionKind::Ei => ei(mean, sd, y_plus),
            AcquisitionKind::Ucb => ucb(mean, sd, t, self),
        }
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Expected improvement over `y_plus`; `max(mean - y_plus, 0)` when `sd = 0`.
pub fn ei(mean: f64, sd: f64, y_plus: f64) -> f64 {
    let diff = mean - y_plus;
    if !(sd > 0.0) {
        return diff.max(0.0);
    }
    let z = diff / sd;
    (diff * std_normal_cdf(z) + sd * std_normal_pdf(z)).max(0.0)
}

/// `beta_t = 2 log(n (t+1)^2 pi^2 / (6 delta))`.
pub fn ucb_beta(t: usize, dim: usize, delta: f64) -> f64 {
    let t1 = (t + 1) as f64;
    2.0 * (dim as f64 * t1 * t1 * PI * PI / (6.0 * delta)).ln()
}

pub fn ucb(mean: f64, sd: f64, t: usize, spec: &AcquisitionSpec) -> f64 {
    ucb_with_beta(mean, sd, ucb_beta(t, spec.dim, spec.delta))
}

pub fn ucb_with_beta(mean: f64, sd: f64, beta: f64) -> f64 {
    mean + beta.max(0.0).sqrt() * sd
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_degenerate_and_centered() {
        assert_eq!(ei(0.3, 0.0, 0.5), 0.0);
        assert_eq!(ei(2.5, 0.0, 0.5), 2.0);
        assert!((ei(1.0, 1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn ucb_values() {
        let spec = AcquisitionSpec::ucb(2);
        assert_eq!(ucb(1.5, 0.0, 3, &spec), 1.5);
        assert_eq!(ucb_with_beta(1.0, 2.0, 4.0), 5.0);
        let want = 2.0 * (2.0 * PI * PI / (6.0 * 0.1)).ln();
        assert!((ucb_beta(0, 2, 0.1) - want).abs() < 1e-14);
    }

    #[test]
    fn delta_validated() {
        assert!(AcquisitionSpec::new(AcquisitionKind::Ucb, 1.0, 2).is_err());
        assert!(AcquisitionSpec::new(AcquisitionKind::Ucb, 0.0, 2).is_err());
        assert!(AcquisitionSpec::new(AcquisitionKind::Ei, 0.5, 0).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("EI".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Ei);
        assert_eq!("gp-ucb".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Ucb);
        assert!("pi".parse::<AcquisitionKind>().is_err());
    }
}
