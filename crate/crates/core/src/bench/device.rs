//! Synthetic pair of related 5-D devices sharing their dominant features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::pretrain::{AuxDataset, Task};

pub const DEVICE_DIM: usize = 5;
pub const DEVICE_AUX_SIZE: usize = 162;
/// The response both devices are tuned toward.
pub const DEVICE_TARGET: f64 = 500.0;

const FEATURES: usize = 6;

/// `g(x) = c + sum_k a_k cos(w_k . x + phi_k)` for two amplitude vectors.
#[derive(Debug, Clone)]
pub struct TwoDevice {
    pub directions: Vec<[f64; DEVICE_DIM]>,
    pub phases: Vec<f64>,
    pub amplitudes_a: Vec<f64>,
    pub amplitudes_b: Vec<f64>,
    pub offset: f64,
    /// Device-A observations `(g_A(x) - 500)^2`, normalized.
    pub aux: AuxDataset,
}

impl TwoDevice {
    fn response(&self, amps: &[f64], x: &[f64]) -> f64 {
        response(self.offset, &self.directions, &self.phases, amps, x)
    }

    pub fn g_a(&self, x: &[f64]) -> f64 {
        self.response(&self.amplitudes_a, x)
    }

    pub fn g_b(&self, x: &[f64]) -> f64 {
        self.response(&self.amplitudes_b, x)
    }

    /// `(g_B(x) - 500)^2`, to be minimized.
    pub fn raw_objective(&self, x: &[f64]) -> f64 {
        (self.g_b(x) - DEVICE_TARGET).powi(2)
    }

    /// Upper bound of [`TwoDevice::raw_objective`] over the whole input space.
    pub fn raw_bound(&self) -> f64 {
        let spread: f64 = self.amplitudes_b.iter().map(|a| a.abs()).sum();
        ((self.offset - DEVICE_TARGET).abs() + spread).powi(2)
    }

    /// Normalized objective in `[0, 1]` to maximize.
    pub fn objective(&self, x: &[f64]) -> f64 {
        1.0 - self.raw_objective(x) / self.raw_bound()
    }

    /// Index of the largest-amplitude feature of device A and of device B.
    pub fn top_features(&self) -> (usize, usize) {
        let top = |a: &[f64]| {
            (0..a.len()).max_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs())).expect("non-empty")
        };
        (top(&self.amplitudes_a), top(&self.amplitudes_b))
    }
}

fn response(offset: f64, directions: &[[f64; DEVICE_DIM]], phases: &[f64], amps: &[f64], x: &[f64]) -> f64 {
    offset
        + amps
            .iter()
            .zip(directions.iter().zip(phases))
            .map(|(a, (w, phi))| a * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + phi).cos())
            .sum::<f64>()
}

pub fn synthetic_two_device(seed: u64) -> Result<TwoDevice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<[f64; DEVICE_DIM]> = (0..FEATURES)
        .map(|k| {
            let freq = if k == 0 { 1.0 } else { 2.0 };
            std::array::from_fn(|_| freq * rng.gen_range(-1.0..1.0))
        })
        .collect();
    let phases: Vec<f64> = (0..FEATURES).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let amplitudes_a: Vec<f64> =
        (0..FEATURES).map(|k| if k == 0 { 120.0 } else { rng.gen_range(10.0..40.0) }).collect();
    let amplitudes_b: Vec<f64> = amplitudes_a.iter().map(|a| a * rng.gen_range(0.8..1.2)).collect();
    let offset = 480.0;

    let inputs: Vec<Vec<f64>> = (0..DEVICE_AUX_SIZE)
        .map(|_| (0..DEVICE_DIM).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let targets: Vec<f64> = inputs
        .iter()
        .map(|x| (response(offset, &directions, &phases, &amplitudes_a, x) - DEVICE_TARGET).powi(2))
        .collect();
    let aux = AuxDataset::from_raw_with_bounds(
        inputs,
        targets,
        Task::Regression,
        vec![-1.0; DEVICE_DIM],
        vec![1.0; DEVICE_DIM],
    )?;
    Ok(TwoDevice { directions, phases, amplitudes_a, amplitudes_b, offset, aux })
}
