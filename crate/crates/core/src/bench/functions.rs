//! Two-dimensional global-optimization test functions (minimization form).

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    HolderTable,
    Himmelblau,
    Ackley,
    StyblinskiTang,
    Eggholder,
    Rastrigin,
}

impl TestFunction {
    pub const ALL: [TestFunction; 6] = [
        TestFunction::HolderTable,
        TestFunction::Himmelblau,
        TestFunction::Ackley,
        TestFunction::StyblinskiTang,
        TestFunction::Eggholder,
        TestFunction::Rastrigin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::HolderTable => "holder_table",
            TestFunction::Himmelblau => "himmelblau",
            TestFunction::Ackley => "ackley",
            TestFunction::StyblinskiTang => "styblinski_tang",
            TestFunction::Eggholder => "eggholder",
            TestFunction::Rastrigin => "rastrigin",
        }
    }

    /// Symmetric native domain `[-r, r]^2`; returns `r`.
    pub fn half_width(self) -> f64 {
        match self {
            TestFunction::HolderTable => 10.0,
            TestFunction::Himmelblau | TestFunction::Ackley | TestFunction::StyblinskiTang => 5.0,
            TestFunction::Eggholder => 512.0,
            TestFunction::Rastrigin => 5.12,
        }
    }

    pub fn native_domain(self) -> ([f64; 2], [f64; 2]) {
        let r = self.half_width();
        ([-r, -r], [r, r])
    }

    /// Value at a native-domain point.
    pub fn value(self, p: [f64; 2]) -> f64 {
        let [x, y] = p;
        match self {
            TestFunction::HolderTable => {
                let r = (x * x + y * y).sqrt();
                -(x.sin() * y.cos() * (1.0 - r / PI).abs().exp()).abs()
            }
            TestFunction::Himmelblau => (x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2),
            TestFunction::Ackley => {
                -20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp()
                    - (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp()
                    + E
                    + 20.0
            }
            TestFunction::StyblinskiTang => {
                0.5 * [x, y].iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
            }
            TestFunction::Eggholder => {
                -(y + 47.0) * (x / 2.0 + y + 47.0).abs().sqrt().sin() - x * (x - (y + 47.0)).abs().sqrt().sin()
            }
            TestFunction::Rastrigin => {
                20.0 + [x, y].iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = TestFunction::ALL.iter().map(|f| f.name()).collect();
                Error::input(format!("unknown test function '{s}' (valid: {})", names.join(", ")))
            })
    }
}
