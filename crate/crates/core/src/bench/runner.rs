use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bo::{uniform_point, AcquisitionKind, AcquisitionSpec, BoSession, MaximizerOptions, SessionOptions};
use crate::error::{Error, Result};
use crate::gp::{ArdSquaredExp, Covariance, SquaredExp, DEFAULT_NOISE_VAR};
use crate::mkernel::FreeKernelSpec;
use crate::pretrain::{build_tuned, loo_error, pretrain, AuxDataset, HyperGrid, Task};

use super::problem::{make_flipped_aux, normalize_problem, NormalizedProblem, DEFAULT_GRID_RESOLUTION};
use super::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TpEi,
    TpUcb,
    Ei,
    Ucb,
    ArdEi,
    ArdUcb,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::TpEi, Method::TpUcb, Method::Ei, Method::Ucb, Method::ArdEi, Method::ArdUcb];

    pub fn name(self) -> &'static str {
        match self {
            Method::TpEi => "tp-ei",
            Method::TpUcb => "tp-ucb",
            Method::Ei => "ei",
            Method::Ucb => "ucb",
            Method::ArdEi => "ard-ei",
            Method::ArdUcb => "ard-ucb",
        }
    }

    pub fn acquisition(self) -> AcquisitionKind {
        match self {
            Method::TpEi | Method::Ei | Method::ArdEi => AcquisitionKind::Ei,
            Method::TpUcb | Method::Ucb | Method::ArdUcb => AcquisitionKind::Ucb,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL.into_iter().find(|m| m.name() == key).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            Error::input(format!("unknown method '{s}' (valid: {})", names.join(", ")))
        })
    }
}

/// Starts refined per acquisition maximization in benchmark runs.
pub const BENCH_REFINE_TOP: usize = 4;

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub functions: Vec<TestFunction>,
    pub methods: Vec<Method>,
    /// Number of seeds; seed indices run `0..seeds`.
    pub seeds: usize,
    pub iterations: usize,
    pub aux_size: usize,
    pub init_size: usize,
    pub base_seed: u64,
    pub grid: HyperGrid,
    pub noise_var: f64,
    pub grid_resolution: usize,
    pub maximizer: MaximizerOptions,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            functions: TestFunction::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            seeds: 10,
            iterations: 40,
            aux_size: 50,
            init_size: 2,
            base_seed: 0,
            grid: HyperGrid::default(),
            noise_var: DEFAULT_NOISE_VAR,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            maximizer: MaximizerOptions { refine_top: Some(BENCH_REFINE_TOP), ..MaximizerOptions::default() },
            threads: None,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty() || self.methods.is_empty() {
            return Err(Error::input("benchmark needs at least one function and one method"));
        }
        if self.seeds == 0 || self.iterations == 0 || self.aux_size == 0 || self.init_size == 0 {
            return Err(Error::input("seeds, iterations, aux_size and init_size must all be >= 1"));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::input("noise variance must be non-negative"));
        }
        if self.threads == Some(0) {
            return Err(Error::input("thread count must be >= 1"));
        }
        self.grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub method: Method,
    pub function: TestFunction,
    pub seed: usize,
    pub iteration: usize,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRun {
    pub method: Method,
    pub function: TestFunction,
    pub seed: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkOutput {
    /// Sorted by `(method, function, seed, iteration)`.
    pub records: Vec<RegretRecord>,
    pub skipped: Vec<SkippedRun>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-(function, seed) seed shared by every method.
fn cell_seed(base: u64, function: TestFunction, seed: usize) -> u64 {
    splitmix(splitmix(base ^ splitmix(function as u64)) ^ seed as u64)
}

const AUX_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;

fn stream_seed(cell: u64, stream: u64) -> u64 {
    splitmix(cell ^ splitmix(stream))
}

/// `(nu, noise)` minimizing LOO error of a zero-mean SE GP on `(x, y)`.
pub fn tune_se_on_data(x: &[Vec<f64>], y: &[f64], grid: &HyperGrid) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for &nu in &sorted(&grid.nu_values) {
        let gram = se_gram(&SquaredExp { nu }, x);
        for &lambda in &sorted(&grid.lambda_values) {
            let loo = loo_error(&gram, y, lambda, Task::Regression)?;
            if !loo.is_nan() && best.map_or(true, |(_, _, b)| loo < b) {
                best = Some((nu, lambda, loo));
            }
        }
    }
    best.map(|(nu, lambda, _)| (nu, lambda)).ok_or_else(|| Error::numerical("SE tuning produced only NaN errors"))
}

/// Per-dimension `nu` by greedy coordinate descent over the grid (two passes),
/// starting from the best isotropic setting; the LOO objective uses centered targets.
pub fn tune_ard(data: &AuxDataset, grid: &HyperGrid) -> Result<Vec<f64>> {
    let mean = data.targets.iter().sum::<f64>() / data.len() as f64;
    let y: Vec<f64> = data.targets.iter().map(|v| v - mean).collect();
    let (nu0, _) = tune_se_on_data(&data.inputs, &y, grid)?;
    let nus_grid = sorted(&grid.nu_values);
    let lambdas = sorted(&grid.lambda_values);
    let score = |nus: &[f64]| -> Result<f64> {
        let gram = se_gram(&ArdSquaredExp { nus: nus.to_vec() }, &data.inputs);
        let mut best = f64::INFINITY;
        for &lambda in &lambdas {
            let loo = loo_error(&gram, &y, lambda, Task::Regression)?;
            if loo < best {
                best = loo;
            }
        }
        Ok(best)
    };
    let mut nus = vec![nu0; data.input_dim()];
    let mut current = score(&nus)?;
    for _pass in 0..2 {
        for k in 0..nus.len() {
            for &cand in &nus_grid {
                if cand == nus[k] {
                    continue;
                }
                let mut trial = nus.clone();
                trial[k] = cand;
                let s = score(&trial)?;
                if s < current {
                    current = s;
                    nus = trial;
                }
            }
        }
    }
    Ok(nus)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn se_gram(k: &dyn Covariance, x: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let n = x.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| k.eval(&x[i], &x[j]))
}

/// The auxiliary set used for `(problem, seed)`.
pub fn flipped_aux_for(spec: &BenchmarkSpec, problem: &NormalizedProblem, seed: usize) -> Result<AuxDataset> {
    let cs = cell_seed(spec.base_seed, problem.function, seed);
    make_flipped_aux(problem, spec.aux_size, stream_seed(cs, AUX_STREAM))
}

/// The initial design `D_0` shared by every method for `(problem, seed)`.
pub fn initial_design(spec: &BenchmarkSpec, problem: &NormalizedProblem, seed: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let cs = cell_seed(spec.base_seed, problem.function, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cs, INIT_STREAM));
    let x: Vec<Vec<f64>> = (0..spec.init_size).map(|_| uniform_point(2, &mut rng)).collect();
    let y = x.iter().map(|p| problem.eval(p)).collect();
    (x, y)
}

struct Cell {
    function: TestFunction,
    seed: usize,
}

/// Runs every `(method, function, seed)` cell and returns sorted records.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkOutput> {
    spec.validate()?;
    match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?
            .install(|| run_cells(spec)),
        None => run_cells(spec),
    }
}

fn run_cells(spec: &BenchmarkSpec) -> Result<BenchmarkOutput> {
    let mut functions = spec.functions.clone();
    functions.sort();
    functions.dedup();
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();

    let problems: Vec<NormalizedProblem> =
        functions.par_iter().map(|&f| normalize_problem(f, spec.grid_resolution)).collect();
    let cells: Vec<(usize, Cell)> = (0..functions.len())
        .flat_map(|fi| {
            let function = functions[fi];
            (0..spec.seeds).map(move |seed| (fi, Cell { function, seed }))
        })
        .collect();

    let results: Vec<Result<BenchmarkOutput>> =
        cells.par_iter().map(|(fi, cell)| run_cell(spec, &problems[*fi], cell, &methods)).collect();

    let mut out = BenchmarkOutput::default();
    for r in results {
        let r = r?;
        out.records.extend(r.records);
        out.skipped.extend(r.skipped);
    }
    out.records.sort_by(|a, b| {
        (a.method, a.function, a.seed, a.iteration).cmp(&(b.method, b.function, b.seed, b.iteration))
    });
    out.skipped.sort_by(|a, b| (a.method, a.function, a.seed).cmp(&(b.method, b.function, b.seed)));
    Ok(out)
}

fn run_cell(spec: &BenchmarkSpec, problem: &NormalizedProblem, cell: &Cell, methods: &[Method]) -> Result<BenchmarkOutput> {
    let cs = cell_seed(spec.base_seed, cell.function, cell.seed);
    let aux = flipped_aux_for(spec, problem, cell.seed)?;
    let (init_x, init_y) = initial_design(spec, problem, cell.seed);

    let needs_tp = methods.iter().any(|m| matches!(m, Method::TpEi | Method::TpUcb));
    let tuned: Option<std::result::Result<Arc<dyn Covariance>, Error>> = needs_tp.then(|| {
        let model = pretrain(&aux, FreeKernelSpec::se(1.0), &spec.grid)?;
        Ok(Arc::new(build_tuned(&model)?) as Arc<dyn Covariance>)
    });
    let needs_ard = methods.iter().any(|m| matches!(m, Method::ArdEi | Method::ArdUcb));
    let ard: Option<Arc<dyn Covariance>> = if needs_ard {
        Some(Arc::new(ArdSquaredExp { nus: tune_ard(&aux, &spec.grid)? }))
    } else {
        None
    };

    let mut out = BenchmarkOutput::default();
    for &method in methods {
        let (kernel, retune) = match method {
            Method::TpEi | Method::TpUcb => match tuned.as_ref().expect("pretrained") {
                Ok(k) => (k.clone(), false),
                Err(Error::VanishingKernel { max_abs_alpha, tolerance }) => {
                    out.skipped.push(SkippedRun {
                        method,
                        function: cell.function,
                        seed: cell.seed,
                        reason: format!("vanishing kernel (max |alpha| = {max_abs_alpha:e} < {tolerance:e})"),
                    });
                    continue;
                }
                Err(e) => return Err(Error::numerical(format!("{method} on {}: {e}", cell.function))),
            },
            Method::Ei | Method::Ucb => (Arc::new(SquaredExp { nu: 1.0 }) as Arc<dyn Covariance>, true),
            Method::ArdEi | Method::ArdUcb => (ard.clone().expect("ard tuned"), false),
        };
        let acq = AcquisitionSpec { kind: method.acquisition(), ..AcquisitionSpec::ei(2) };
        let options = SessionOptions { maximizer: spec.maximizer, init_design: spec.init_size };
        let mut session = BoSession::new(kernel, acq, spec.noise_var, cs)?
            .with_options(options)
            .with_initial_observations(init_x.clone(), init_y.clone())?;
        for t in 1..=spec.iterations {
            if retune {
                let obs = session.observations();
                let (nu, noise) = tune_se_on_data(&obs.points, &obs.values, &spec.grid)?;
                session.set_kernel(Arc::new(SquaredExp { nu }), noise)?;
            }
            let rec = session.step(|x| problem.eval(x))?;
            out.records.push(RegretRecord {
                method,
                function: cell.function,
                seed: cell.seed,
                iteration: t,
                best_value: rec.best_value,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub function: TestFunction,
    pub iteration: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and quartiles over seeds per `(method, function, iteration)`.
pub fn summarize(records: &[RegretRecord]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(Method, TestFunction, usize), Vec<f64>> = Default::default();
    for r in records {
        groups.entry((r.method, r.function, r.iteration)).or_default().push(r.best_value);
    }
    groups
        .into_iter()
        .map(|((method, function, iteration), mut v)| {
            v.sort_by(f64::total_cmp);
            SummaryRow {
                method,
                function,
                iteration,
                median: quantile(&v, 0.5),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
            }
        })
        .collect()
}

pub fn write_results_csv<W: Write>(records: &[RegretRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "function", "seed", "iteration", "best_value"])?;
    for r in records {
        out.write_record([
            r.method.name().to_string(),
            r.function.name().to_string(),
            r.seed.to_string(),
            r.iteration.to_string(),
            format!("{:.17e}", r.best_value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "function", "iteration", "median", "q25", "q75"])?;
    for r in rows {
        out.write_record([
            r.method.name().to_string(),
            r.function.name().to_string(),
            r.iteration.to_string(),
            format!("{:.17e}", r.median),
            format!("{:.17e}", r.q25),
            format!("{:.17e}", r.q75),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "pi".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("tp-ei") && err.contains("ard-ucb"));
    }

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn cell_seeds_differ() {
        let a = cell_seed(0, TestFunction::Ackley, 0);
        assert_ne!(a, cell_seed(0, TestFunction::Ackley, 1));
        assert_ne!(a, cell_seed(0, TestFunction::Himmelblau, 0));
        assert_ne!(stream_seed(a, AUX_STREAM), stream_seed(a, INIT_STREAM));
    }
}
