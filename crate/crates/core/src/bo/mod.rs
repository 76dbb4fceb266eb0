//! Bayesian optimization over the box `[-1, 1]^n`.
//!
//! [`BoSession`] holds the GP over observed data and splits each iteration
//! into [`BoSession::ask`] (maximize the acquisition) and [`BoSession::tell`]
//! (record the experiment), so the loop can be driven by a callback
//! ([`BoSession::step`]) or by an external experimenter through a session file.

mod acquisition;
mod nelder_mead;
mod session_file;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{Covariance, GpPosterior, Observations};

pub use acquisition::{ei, ucb, ucb_beta, ucb_with_beta, AcquisitionKind, AcquisitionSpec, DEFAULT_DELTA};
pub use nelder_mead::{minimize_in_box, Minimum, NelderMeadOptions};
pub use session_file::{AcquisitionConfig, Domain, ObservationLog, SessionFile};

#[derive(Debug, Clone, Copy)]
pub struct MaximizerOptions {
    /// Latin-hypercube starts per input dimension.
    pub starts_per_dim: usize,
    /// How many of the best starts are refined; `None` refines all of them.
    pub refine_top: Option<usize>,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for MaximizerOptions {
    fn default() -> Self {
        MaximizerOptions { starts_per_dim: 32, refine_top: None, nelder_mead: NelderMeadOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub value: f64,
    /// The acquisition was constant over the probe set; `x` is a seeded uniform draw.
    pub flat: bool,
}

/// Seeded Latin-hypercube sample of `count` points in `[-1, 1]^dim`.
pub fn latin_hypercube(count: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; count];
    for k in 0..dim {
        let mut perm: Vec<usize> = (0..count).collect();
        for i in (1..count).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        for (i, p) in points.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            p[k] = -1.0 + 2.0 * (perm[i] as f64 + u) / count as f64;
        }
    }
    points
}

pub fn uniform_point(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Maximizes `f` over `[-1, 1]^dim` by multistart Nelder-Mead.
pub fn maximize_in_box<F>(f: F, dim: usize, opts: &MaximizerOptions, rng: &mut ChaCha8Rng) -> Suggestion
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let lo = vec![-1.0; dim];
    let hi = vec![1.0; dim];
    let probes = latin_hypercube((opts.starts_per_dim * dim).max(1), dim, rng);
    let values: Vec<f64> = probes.par_iter().map(|p| sanitize(f(p))).collect();

    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max.is_finite()) || max - min <= 1e-12 * max.abs().max(1.0) {
        let x = uniform_point(dim, rng);
        let value = f(&x);
        return Suggestion { x, value, flat: true };
    }

    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let refine = opts.refine_top.unwrap_or(order.len()).min(order.len());
    let refined: Vec<Minimum> = order[..refine]
        .par_iter()
        .map(|&i| minimize_in_box(|x| -sanitize(f(x)), &probes[i], &lo, &hi, &opts.nelder_mead))
        .collect();

    let mut best_x = probes[order[0]].clone();
    let mut best_v = values[order[0]];
    for m in refined {
        if -m.value > best_v {
            best_v = -m.value;
            best_x = m.x;
        }
    }
    for v in &mut best_x {
        *v = v.clamp(-1.0, 1.0);
    }
    Suggestion { x: best_x, value: best_v, flat: false }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    pub maximizer: MaximizerOptions,
    /// Suggestions are seeded uniform draws until this many observations exist.
    pub init_design: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { maximizer: MaximizerOptions::default(), init_design: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TellOutcome {
    /// False when the observation did not answer a pending suggestion.
    pub answered_pending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub y: f64,
    pub best_value: f64,
    pub flat: bool,
}

/// State of one optimization run.
#[derive(Debug, Clone)]
pub struct BoSession {
    gp: GpPosterior,
    acquisition: AcquisitionSpec,
    initial_count: usize,
    best: Option<(Vec<f64>, f64)>,
    seed: u64,
    pending: Option<Vec<f64>>,
    options: SessionOptions,
}

impl BoSession {
    pub fn new(kernel: Arc<dyn Covariance>, acquisition: AcquisitionSpec, noise_var: f64, seed: u64) -> Result<Self> {
        acquisition.validate()?;
        Ok(BoSession {
            gp: GpPosterior::new(kernel, noise_var)?,
            acquisition,
            initial_count: 0,
            best: None,
            seed,
            pending: None,
            options: SessionOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SessionOptions) -> Self {
        self.options = options;
        self
    }

    /// Seeds the run with the initial design `D_0`; these do not count as iterations.
    pub fn with_initial_observations(mut self, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::input("initial design has mismatched points and values"));
        }
        for (x, y) in points.into_iter().zip(values) {
            self.record(x, y)?;
        }
        self.initial_count = self.gp.len();
        Ok(self)
    }

    /// Restores a session whose observations were all gathered through tells.
    pub fn restore(
        kernel: Arc<dyn Covariance>,
        acquisition: AcquisitionSpec,
        noise_var: f64,
        seed: u64,
        log: &ObservationLog,
        pending: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mut session = BoSession::new(kernel, acquisition, noise_var, seed)?;
        if log.x.len() != log.y.len() {
            return Err(Error::input("session observations have mismatched x and y"));
        }
        for (x, &y) in log.x.iter().zip(&log.y) {
            session.record(x.clone(), y)?;
        }
        if let Some(p) = &pending {
            session.check_point(p)?;
        }
        session.pending = pending;
        Ok(session)
    }

    pub fn dim(&self) -> usize {
        self.acquisition.dim
    }

    pub fn gp(&self) -> &GpPosterior {
        &self.gp
    }

    pub fn acquisition(&self) -> &AcquisitionSpec {
        &self.acquisition
    }

    pub fn iteration(&self) -> usize {
        self.gp.len() - self.initial_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pending(&self) -> Option<&[f64]> {
        self.pending.as_deref()
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, y)| (x.as_slice(), *y))
    }

    pub fn observations(&self) -> &Observations {
        self.gp.observations()
    }

    /// Replaces the covariance (and noise), e.g. after re-tuning hyperparameters.
    pub fn set_kernel(&mut self, kernel: Arc<dyn Covariance>, noise_var: f64) -> Result<()> {
        let mut obs = self.gp.observations().clone();
        obs.noise_var = noise_var;
        self.gp = GpPosterior::from_observations(kernel, obs)?;
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.gp.len() as u64);
        rng
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::input(format!("point has dimension {}, expected {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::input(format!("point {x:?} lies outside the domain [-1, 1]^{}", self.dim())));
        }
        Ok(())
    }

    fn record(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        self.check_point(&x)?;
        if !y.is_finite() {
            return Err(Error::input(format!("observed value must be finite, got {y}")));
        }
        let improves = self.best.as_ref().map_or(true, |(_, b)| y > *b);
        self.gp = self.gp.add_observation(x.clone(), y)?;
        if improves {
            self.best = Some((x, y));
        }
        Ok(())
    }

    /// Acquisition at `x` under the current posterior. With no data EI is flat.
    pub fn acquisition_at(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.gp.posterior(x);
        let sd = var.sqrt();
        match (self.acquisition.kind, &self.best) {
            (AcquisitionKind::Ei, None) => 0.0,
            (AcquisitionKind::Ei, Some((_, y_plus))) => ei(mean, sd, *y_plus),
            (AcquisitionKind::Ucb, _) => ucb(mean, sd, self.iteration(), &self.acquisition),
        }
    }

    /// `argmax_x a_t(x)` over the box; deterministic given the seed and data.
    pub fn maximize_acquisition(&self) -> Result<Suggestion> {
        let mut rng = self.rng();
        Ok(maximize_in_box(|x| self.acquisition_at(x), self.dim(), &self.options.maximizer, &mut rng))
    }

    /// Next point to evaluate. Repeated calls return the same pending point.
    pub fn ask(&mut self) -> Result<Suggestion> {
        if let Some(p) = &self.pending {
            return Ok(Suggestion { x: p.clone(), value: self.acquisition_at(p), flat: false });
        }
        let suggestion = if self.gp.len() < self.options.init_design {
            let mut rng = self.rng();
            let x = uniform_point(self.dim(), &mut rng);
            Suggestion { value: self.acquisition_at(&x), x, flat: false }
        } else {
            self.maximize_acquisition()?
        };
        self.pending = Some(suggestion.x.clone());
        Ok(suggestion)
    }

    /// Records an observation and clears the pending suggestion.
    pub fn tell(&mut self, x: Vec<f64>, y: f64) -> Result<TellOutcome> {
        self.check_point(&x)?;
        let answered_pending = self.pending.is_some();
        self.record(x, y)?;
        self.pending = None;
        Ok(TellOutcome { answered_pending })
    }

    /// One select/evaluate/update cycle.
    pub fn step<F>(&mut self, mut objective: F) -> Result<StepRecord>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let suggestion = self.ask()?;
        let y = objective(&suggestion.x);
        self.tell(suggestion.x.clone(), y)?;
        let best_value = self.best.as_ref().map_or(y, |(_, b)| *b);
        Ok(StepRecord { x: suggestion.x, y, best_value, flat: suggestion.flat })
    }
}
