//! Benchmarks on flipped test functions and a synthetic two-device surrogate.

mod device;
mod functions;
mod problem;
mod runner;

pub use device::{synthetic_two_device, TwoDevice, DEVICE_AUX_SIZE, DEVICE_DIM, DEVICE_TARGET};
pub use functions::TestFunction;
pub use problem::{make_flipped_aux, normalize_problem, NormalizedProblem, DEFAULT_GRID_RESOLUTION};
pub use runner::{
    flipped_aux_for, initial_design, run_benchmark, summarize, tune_ard, tune_se_on_data, write_results_csv, write_summary_csv, BenchmarkOutput,
    BenchmarkSpec, Method, BENCH_REFINE_TOP, RegretRecord, SkippedRun, SummaryRow,
};
