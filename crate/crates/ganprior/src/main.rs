use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ganprior::analysis::{report_json, theory_report, TheoryRun};
use ganprior::config::{Algorithm, ExperimentConfig, SyntheticSpec};
use ganprior::{emit_csv, emit_summary, io, run_sweep, HarnessError};
use ganprior_core::{
    evaluate, gaussian_matrix, ista_lasso, latent_gd, pgd_gan, project_to_range, sample_standard_normal, Activation,
    Basis, GaussianScale, GeneratorNet, IstaConfig, LatentInit, LinearOperator, RngStream, SolverConfig, SolverError,
};

#[derive(Parser)]
#[command(name = "ganprior", version, about = "Compressive sensing with generative priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one signal from Gaussian measurements.
    Recover(RecoverArgs),
    /// Run a measurement sweep from a JSON config and write CSV.
    Sweep(SweepArgs),
    /// Report empirical S-REC, operator norm and contraction estimates.
    Theory(TheoryArgs),
    /// Write a synthetic generator as a GPW1 file.
    Gen(GenArgs),
    /// Project one vector onto the generator range.
    Project(ProjectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ActArg {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
}

impl From<ActArg> for Activation {
    fn from(a: ActArg) -> Self {
        match a {
            ActArg::Linear => Activation::Linear,
            ActArg::Relu => Activation::Relu,
            ActArg::Sigmoid => Activation::Sigmoid,
            ActArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    VarianceInvM,
    StddevInvM,
}

impl From<ScaleArg> for GaussianScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::VarianceInvM => GaussianScale::VarianceInvM,
            ScaleArg::StddevInvM => GaussianScale::StddevInvM,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    #[value(alias = "pgd_gan")]
    PgdGan,
    #[value(alias = "latent_gd")]
    LatentGd,
    #[value(alias = "ista_lasso")]
    IstaLasso,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    WarmStart,
    SeededRandom,
}

/// Generator from a GPW1 file, or a synthetic one when no file is given.
#[derive(Args, Clone)]
struct GeneratorArgs {
    /// GPW1 weight file.
    #[arg(long)]
    generator: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 784)]
    n: usize,
    #[arg(long, value_enum, default_value = "relu")]
    activation: ActArg,
    #[arg(long, value_enum, default_value = "linear")]
    output_activation: ActArg,
    #[arg(long, default_value_t = 0)]
    net_seed: u64,
}

impl GeneratorArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            k: self.k,
            hidden_dims: self.hidden.clone(),
            n: self.n,
            activation: self.activation.into(),
            output_activation: self.output_activation.into(),
            seed: self.net_seed,
        }
    }

    fn build(&self) -> Result<GeneratorNet, HarnessError> {
        match &self.generator {
            Some(path) => io::load_generator(path),
            None => io::synthetic(&self.spec()),
        }
    }
}

#[derive(Args, Clone)]
struct PgdArgs {
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long = "outer-iters", short = 'T', default_value_t = 15)]
    outer_iters: usize,
    #[arg(long, default_value_t = 0.01)]
    eta_in: f64,
    #[arg(long = "inner-iters", default_value_t = 200)]
    inner_iters: usize,
    #[arg(long, value_enum, default_value = "warm-start")]
    z_init: InitArg,
}

impl PgdArgs {
    fn solver(&self, seed: u64, initial_latent: Option<Vec<f64>>) -> SolverConfig {
        SolverConfig {
            eta: self.eta,
            outer_iters: self.outer_iters,
            eta_in: self.eta_in,
            inner_iters: self.inner_iters,
            z_init: match self.z_init {
                InitArg::Zero => LatentInit::Zero,
                InitArg::WarmStart => LatentInit::WarmStart,
                InitArg::SeededRandom => LatentInit::SeededRandom { seed },
            },
            initial_latent,
            record_trace: true,
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    pgd: PgdArgs,
    #[arg(long, value_enum, default_value = "pgd-gan")]
    algorithm: AlgArg,
    /// Number of measurements.
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "variance-inv-m")]
    scale: ScaleArg,
    /// Ground-truth signal file (first line used); in-range sample when absent.
    #[arg(long)]
    x_star: Option<PathBuf>,
    /// Start latent from N(0, I) instead of zero.
    #[arg(long)]
    random_start: bool,
    /// Latent-GD step size.
    #[arg(long, default_value_t = 0.01)]
    latent_eta: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_stddev: f64,
    /// Write the estimate x̂ here (one line).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated measurement counts.
    #[arg(long, value_delimiter = ',')]
    measurements: Option<Vec<usize>>,
    /// Comma-separated subset of pgd_gan, latent_gd, ista_lasso.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the mean ± std summary table to stderr.
    #[arg(long)]
    summary: bool,
    /// Write per-trial records with loss traces as JSON lines.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Write 0 for wall_ms so reruns are byte-identical.
    #[arg(long)]
    no_wall_clock: bool,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    pgd: PgdArgs,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "variance-inv-m")]
    scale: ScaleArg,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long, default_value_t = 1000)]
    power_iters: usize,
    /// Position of the probe step inside the admissible interval, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    eta_position: f64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Vector to project (first line of the file).
    #[arg(long)]
    w: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    eta_in: f64,
    #[arg(long = "inner-iters", default_value_t = 200)]
    inner_iters: usize,
    /// Starting latent (first line); zero when absent.
    #[arg(long)]
    z_start: Option<PathBuf>,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit_bytes(bytes: &[u8]) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(bytes).and_then(|_| out.flush());
}

fn emit(text: &str) {
    emit_bytes(format!("{text}\n").as_bytes());
}

fn first_signal(path: &PathBuf, len: usize) -> Result<Vec<f64>, HarnessError> {
    let v = io::read_signals(path)?.swap_remove(0);
    if v.len() != len {
        return Err(HarnessError::Config(format!("{}: expected {len} values, found {}", path.display(), v.len())));
    }
    Ok(v)
}

fn recover(args: RecoverArgs) -> Result<(), HarnessError> {
    let net = args.generator.build()?;
    let (k, n) = (net.latent_dim(), net.output_dim());
    if args.m == 0 {
        return Err(HarnessError::Config("m must be at least 1".into()));
    }
    let a = LinearOperator::dense(gaussian_matrix(args.m, n, &mut RngStream::derive(args.seed, &[0]), args.scale.into()));
    let x_star = match &args.x_star {
        Some(p) => first_signal(p, n)?,
        None => net.eval(&sample_standard_normal(k, &mut RngStream::derive(args.seed, &[1])))?,
    };
    let mut y = a.apply(&x_star)?;
    if args.noise_stddev > 0.0 {
        let mut rng = RngStream::derive(args.seed, &[3]);
        y.iter_mut().for_each(|v| *v += args.noise_stddev * rng.standard_normal());
    }
    let z0 = if args.random_start {
        sample_standard_normal(k, &mut RngStream::derive(args.seed, &[2]))
    } else {
        vec![0.0; k]
    };
    let budget = args.pgd.outer_iters * args.pgd.inner_iters;
    let outcome = match args.algorithm {
        AlgArg::PgdGan => pgd_gan(&y, &a, &net, &args.pgd.solver(args.seed, Some(z0))),
        AlgArg::LatentGd => latent_gd(&y, &a, &net, budget, args.latent_eta, &z0),
        AlgArg::IstaLasso => {
            ista_lasso(&y, &a, &Basis::dct(n)?, &IstaConfig { lambda: args.lambda, steps: budget, step_size: None })
        }
    };
    let res = match outcome {
        Ok(r) => r,
        Err(SolverError::Diverged { iteration, partial }) => {
            eprintln!("diverged at iteration {iteration}; partial trace: {:?}", partial.loss_trace);
            return Err(SolverError::Diverged { iteration, partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let metrics = evaluate(&res.x_hat, &x_star, None, 1.0)?;
    let summary = serde_json::json!({
        "recon_error": metrics.recon_error,
        "psnr_db": metrics.psnr_db,
        "updates_used": res.updates_used,
        "alpha_hat": ganprior_core::contraction_factor(&res.loss_trace),
        "loss_trace": res.loss_trace,
        "inner_loss_final": res.inner_loss_final,
        "warnings": res.warnings.len(),
    });
    emit(&serde_json::to_string_pretty(&summary).expect("json"));
    if let Some(p) = &args.output {
        io::write_signal(p, &res.x_hat)?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|source| HarnessError::Io { path: args.config.clone(), source })?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = args.master_seed {
        cfg.master_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials_per_m = t;
    }
    if let Some(ms) = args.measurements {
        cfg.measurement_counts = ms;
    }
    if let Some(algs) = args.algorithms {
        cfg.algorithms = algs
            .iter()
            .map(|s| Algorithm::parse(s).ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if args.no_wall_clock {
        cfg.record_wall_clock = false;
    }
    cfg.validate()?;
    let records = run_sweep(&cfg)?;
    let csv = emit_csv(&records);
    match &args.out {
        Some(p) => fs::write(p, &csv).map_err(|source| HarnessError::Io { path: p.clone(), source })?,
        None => emit_bytes(&csv),
    }
    if let Some(p) = &args.traces {
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).expect("record serializes")).collect();
        fs::write(p, lines.join("\n") + "\n").map_err(|source| HarnessError::Io { path: p.clone(), source })?;
    }
    if args.summary {
        eprint!("{}", emit_summary(&records));
    }
    Ok(())
}

fn theory(args: TheoryArgs) -> Result<(), HarnessError> {
    let net = args.generator.build()?;
    let run = TheoryRun {
        m: args.m,
        seed: args.seed,
        scale: args.scale.into(),
        num_pairs: args.pairs,
        power_iters: args.power_iters,
        eta_position: args.eta_position,
        solver: args.pgd.solver(args.seed, None),
    };
    if args.m == 0 || !(0.0 < run.eta_position && run.eta_position < 1.0) {
        return Err(HarnessError::Config("need m >= 1 and 0 < eta-position < 1".into()));
    }
    emit(&report_json(&theory_report(&net, &run)?));
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), HarnessError> {
    let net = args.generator.build()?;
    io::save_generator(&args.output, &net)?;
    eprintln!(
        "wrote {} ({} -> {}, {} layers)",
        args.output.display(),
        net.latent_dim(),
        net.output_dim(),
        net.layers().len()
    );
    Ok(())
}

fn project(args: ProjectArgs) -> Result<(), HarnessError> {
    let net = args.generator.build()?;
    let w = first_signal(&args.w, net.output_dim())?;
    let z_start = match &args.z_start {
        Some(p) => first_signal(p, net.latent_dim())?,
        None => vec![0.0; net.latent_dim()],
    };
    let p = project_to_range(&net, &w, args.eta_in, args.inner_iters, &z_start)?;
    let out = serde_json::json!({
        "x": p.x,
        "z": p.z,
        "inner_loss": p.inner_loss,
        "start_loss": p.start_loss,
        "updates": p.updates,
    });
    emit(&serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as config errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Recover(a) => recover(a),
        Command::Sweep(a) => sweep(a),
        Command::Theory(a) => theory(a),
        Command::Gen(a) => gen(a),
        Command::Project(a) => project(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
