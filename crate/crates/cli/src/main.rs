use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use tpbo_core::bench::{
    normalize_problem, run_benchmark, summarize, write_results_csv, write_summary_csv, BenchmarkSpec, Method,
    TestFunction, BENCH_REFINE_TOP, DEFAULT_GRID_RESOLUTION,
};
use tpbo_core::bo::{AcquisitionConfig, AcquisitionKind, AcquisitionSpec, BoSession, SessionFile, SessionOptions};
use tpbo_core::gp::{Covariance, DEFAULT_NOISE_VAR};
use tpbo_core::pretrain::{build_tuned, pretrain, read_xy_csv, AuxDataset};
use tpbo_core::{AuxModel, Error, FreeKernelSpec, HyperGrid, KernelFamily, Task};

#[derive(Parser)]
#[command(name = "tpbo", version, about = "Tuned-prior Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the SVM on auxiliary data and write the model JSON.
    Pretrain(PretrainArgs),
    /// Run the flipped test-function benchmark and write result CSVs.
    Bench(BenchArgs),
    /// Optimize a built-in test function with a pre-trained model.
    Optimize(OptimizeArgs),
    /// Propose the next experiment of an ask/tell session.
    Suggest(SuggestArgs),
    /// Record an experiment result in an ask/tell session.
    Tell(TellArgs),
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long)]
    aux: PathBuf,
    #[arg(long, default_value = "regression")]
    task: String,
    #[arg(long, default_value = "se")]
    kernel: String,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Fixed nu for families that use it; ignored when --nu-grid is given.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    nu_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Replace each target y by (y - value)^2 before normalization.
    #[arg(long)]
    target_square_distance: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated names, or `all`.
    #[arg(long, default_value = "all")]
    functions: String,
    /// Comma-separated names, or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 40)]
    iters: usize,
    #[arg(long, default_value_t = 50)]
    aux_size: usize,
    #[arg(long, default_value_t = 2)]
    init_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_VAR)]
    noise: f64,
    #[arg(long, default_value_t = BENCH_REFINE_TOP)]
    refine_top: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    function: String,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 40)]
    iters: usize,
    #[arg(long, default_value = "ei")]
    acq: String,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_VAR)]
    noise: f64,
    #[arg(long, default_value_t = BENCH_REFINE_TOP)]
    refine_top: usize,
}

#[derive(Args)]
struct SuggestArgs {
    #[arg(long)]
    session: PathBuf,
    /// Model JSON; defaults to the session's `model_ref`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "ei")]
    acq: String,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_VAR)]
    noise: f64,
}

#[derive(Args)]
struct TellArgs {
    #[arg(long)]
    session: PathBuf,
    /// Comma-separated point on the normalized scale.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y: f64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::VanishingKernel { .. } => 3,
        Error::Numerical(_) => 4,
        Error::Input(_) | Error::Domain(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("TPBO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let result = match cli.command {
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Suggest(a) => cmd_suggest(a),
        Command::Tell(a) => cmd_tell(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_pretrain(a: PretrainArgs) -> tpbo_core::Result<()> {
    let task: Task = a.task.parse()?;
    let family: KernelFamily = a.kernel.parse()?;
    let mut grid = HyperGrid::default();
    if let Some(lambdas) = a.lambda_grid {
        grid.lambda_values = lambdas;
    }
    let nu = a.nu.unwrap_or(1.0);
    match (a.nu_grid, a.nu) {
        (Some(nus), _) => grid.nu_values = nus,
        (None, Some(nu)) => grid.nu_values = vec![nu],
        (None, None) => {}
    }
    let template = FreeKernelSpec::new(family, nu, a.degree, a.offset)?;

    let (inputs, mut targets) = read_xy_csv(&a.aux)?;
    if let Some(target) = a.target_square_distance {
        for y in &mut targets {
            *y = (*y - target).powi(2);
        }
    }
    let data = AuxDataset::from_raw(inputs, targets, task)?;
    let model = pretrain(&data, template, &grid)?;
    model.save(&a.out)?;
    println!(
        "family={} nu={} lambda={} loo_error={} n={} -> {}",
        model.kernel.family.name(),
        model.kernel.nu,
        model.lambda,
        model.loo_error,
        model.alpha.len(),
        a.out.display()
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr<Err = Error>>(text: &str, all: &[T]) -> tpbo_core::Result<Vec<T>>
where
    T: Copy,
{
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    text.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect()
}

fn cmd_bench(a: BenchArgs) -> tpbo_core::Result<()> {
    let mut spec = BenchmarkSpec {
        functions: parse_list(&a.functions, &TestFunction::ALL)?,
        methods: parse_list(&a.methods, &Method::ALL)?,
        seeds: a.seeds,
        iterations: a.iters,
        aux_size: a.aux_size,
        init_size: a.init_size,
        base_seed: a.seed,
        noise_var: a.noise,
        ..BenchmarkSpec::default()
    };
    spec.maximizer.refine_top = Some(a.refine_top);
    let out = run_benchmark(&spec)?;
    for s in &out.skipped {
        eprintln!("skipped {} on {} seed {}: {}", s.method, s.function, s.seed, s.reason);
    }
    write_results_csv(&out.records, BufWriter::new(File::create(&a.out)?))?;
    if let Some(path) = &a.summary {
        write_summary_csv(&summarize(&out.records), BufWriter::new(File::create(path)?))?;
    }
    println!("{} records -> {}", out.records.len(), a.out.display());
    Ok(())
}

fn tuned_kernel(path: &Path) -> tpbo_core::Result<(AuxModel, Arc<dyn Covariance>)> {
    let model = AuxModel::load(path)?;
    let kernel = build_tuned(&model)?;
    Ok((model, Arc::new(kernel)))
}

fn format_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_optimize(a: OptimizeArgs) -> tpbo_core::Result<()> {
    let function: TestFunction = a.function.parse()?;
    let kind: AcquisitionKind = a.acq.parse()?;
    let (model, kernel) = tuned_kernel(&a.model)?;
    if model.input_dim != 2 {
        return Err(Error::Input(format!("model has input dimension {}, test functions are 2-D", model.input_dim)));
    }
    let problem = normalize_problem(function, DEFAULT_GRID_RESOLUTION);
    let spec = AcquisitionSpec::new(kind, a.delta, 2)?;
    let mut options = SessionOptions::default();
    options.maximizer.refine_top = Some(a.refine_top);
    let mut session = BoSession::new(kernel, spec, a.noise, a.seed)?.with_options(options);
    for t in 1..=a.iters {
        let rec = session.step(|x| problem.eval(x))?;
        println!("t={t} x={} y={:?} best={:?}", format_point(&rec.x), rec.y, rec.best_value);
    }
    if let Some((x, y)) = session.best() {
        println!("best x={} native={} f={y:?}", format_point(x), format_point(&problem.to_native(x)));
    }
    Ok(())
}

fn cmd_suggest(a: SuggestArgs) -> tpbo_core::Result<()> {
    let mut file = if a.session.exists() {
        SessionFile::load(&a.session)?
    } else {
        let model = a
            .model
            .as_ref()
            .ok_or_else(|| Error::Input("a new session needs --model".into()))?;
        let dim = AuxModel::load(model)?.input_dim;
        let acq = AcquisitionConfig { kind: a.acq.parse()?, delta: a.delta };
        AcquisitionSpec::new(acq.kind, acq.delta, dim)?;
        SessionFile::new(model.to_string_lossy(), dim, a.seed, acq)
    };
    let model_path = a.model.clone().unwrap_or_else(|| PathBuf::from(&file.model_ref));
    let (model, kernel) = tuned_kernel(&model_path)?;
    if model.input_dim != file.dim() {
        return Err(Error::Input(format!(
            "model dimension {} does not match session dimension {}",
            model.input_dim,
            file.dim()
        )));
    }
    let mut session = file.to_session(kernel, a.noise)?;
    let suggestion = session.ask()?;
    file.update_from(&session);
    file.save(&a.session)?;
    println!("x={}", format_point(&suggestion.x));
    println!("raw={}", format_point(&model.normalization.denormalize_x(&suggestion.x)));
    Ok(())
}

fn cmd_tell(a: TellArgs) -> tpbo_core::Result<()> {
    let mut file = SessionFile::load(&a.session)?;
    let answered = file.record(a.x, a.y)?;
    if !answered {
        eprintln!("note: no suggestion was pending; recorded as an extra observation");
    }
    file.save(&a.session)?;
    println!("iteration={}", file.iteration);
    Ok(())
}
