//! On-disk state for ask/tell sessions driven by external experiments.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Covariance;
use crate::json;

use super::{AcquisitionKind, AcquisitionSpec, BoSession};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn unit_box(dim: usize) -> Self {
        Domain { lo: vec![-1.0; dim], hi: vec![1.0; dim] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationLog {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub kind: AcquisitionKind,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    /// Path of the model file the covariance is built from.
    pub model_ref: String,
    pub domain: Domain,
    pub iteration: usize,
    pub observations: ObservationLog,
    pub pending: Option<Vec<f64>>,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
}

impl SessionFile {
    pub fn new(model_ref: impl Into<String>, dim: usize, seed: u64, acquisition: AcquisitionConfig) -> Self {
        SessionFile {
            model_ref: model_ref.into(),
            domain: Domain::unit_box(dim),
            iteration: 0,
            observations: ObservationLog::default(),
            pending: None,
            seed,
            acquisition,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.lo.len()
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 || self.domain.hi.len() != dim {
            return Err(Error::input("session domain must have matching nonzero lo/hi"));
        }
        if self.domain.lo.iter().any(|&v| v != -1.0) || self.domain.hi.iter().any(|&v| v != 1.0) {
            return Err(Error::input("session domain must be the normalized box [-1, 1]^n"));
        }
        if self.observations.x.len() != self.observations.y.len() {
            return Err(Error::input("session observations have mismatched x and y"));
        }
        if self.iteration != self.observations.y.len() {
            return Err(Error::input(format!(
                "session iteration {} does not match {} recorded observations",
                self.iteration,
                self.observations.y.len()
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: SessionFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(json::to_string(self)?.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Live session over this file's observations.
    pub fn to_session(&self, kernel: Arc<dyn Covariance>, noise_var: f64) -> Result<BoSession> {
        self.validate()?;
        let spec = AcquisitionSpec::new(self.acquisition.kind, self.acquisition.delta, self.dim())?;
        BoSession::restore(kernel, spec, noise_var, self.seed, &self.observations, self.pending.clone())
    }

    /// Appends an observation, clears the pending point and reports whether one was pending.
    pub fn record(&mut self, x: Vec<f64>, y: f64) -> Result<bool> {
        self.validate()?;
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::input(format!("point has dimension {}, expected {dim}", x.len())));
        }
        if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::input(format!("point {x:?} lies outside the domain [-1, 1]^{dim}")));
        }
        if !y.is_finite() {
            return Err(Error::input(format!("observed value must be finite, got {y}")));
        }
        self.observations.x.push(x);
        self.observations.y.push(y);
        self.iteration += 1;
        Ok(self.pending.take().is_some())
    }

    /// Copies observations and the pending point back from a live session.
    pub fn update_from(&mut self, session: &BoSession) {
        let obs = session.observations();
        self.observations = ObservationLog { x: obs.points.clone(), y: obs.values.clone() };
        self.iteration = session.iteration();
        self.pending = session.pending().map(<[f64]>::to_vec);
    }
}
