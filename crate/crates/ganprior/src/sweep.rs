//! Measurement sweeps: for every `(m, trial)` draw a fresh operator and truth,
//! then run each selected algorithm under the same update budget.

use std::time::Instant;

use ganprior_core::theory::contraction_factor;
use ganprior_core::{
    evaluate, gaussian_matrix, ista_lasso, latent_gd, pgd_gan, sample_standard_normal, Basis, GeneratorNet,
    IstaConfig, LinearOperator, RecoveryResult, RngStream, SolverConfig, SolverError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, GroundTruthMode};
use crate::{io, HarnessError, THREADS_ENV};

/// Stream indices under `(master_seed, m, trial)`.
const STREAM_OPERATOR: u64 = 0;
const STREAM_TRUTH: u64 = 1;
const STREAM_LATENT_START: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub recon_error: f64,
    pub psnr_db: f64,
    pub ssim: Option<f64>,
    pub updates_used: usize,
    pub wall_ms: f64,
    pub alpha_hat: f64,
    pub diverged: bool,
    /// Per-iteration loss history, for diagnosis. Not part of the CSV.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
    #[serde(default)]
    pub warnings: usize,
}

/// One sampled recovery problem.
#[derive(Clone, Debug)]
pub struct TrialInstance {
    pub a: LinearOperator,
    pub x_star: Vec<f64>,
    pub y: Vec<f64>,
    pub z0: Vec<f64>,
}

/// Everything a trial needs that does not depend on `(m, trial)`.
pub struct SweepContext<'a> {
    config: &'a ExperimentConfig,
    net: GeneratorNet,
    signals: Option<Vec<Vec<f64>>>,
    basis: Basis,
}

impl<'a> SweepContext<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let net = io::build_generator(&config.generator_source)?;
        let n = net.output_dim();
        let signals = match &config.ground_truth_mode {
            GroundTruthMode::InRange => None,
            GroundTruthMode::FromFile { path } => {
                let s = io::read_signals(path)?;
                if s[0].len() != n {
                    return Err(HarnessError::Config(format!(
                        "ground-truth signals have length {}, generator output is {n}",
                        s[0].len()
                    )));
                }
                Some(s)
            }
        };
        let basis = match config.image_shape {
            Some((h, w)) if h * w == n => Basis::dct2d(h, w)?,
            Some((h, w)) => {
                return Err(HarnessError::Config(format!("image_shape {h}x{w} does not match n = {n}")))
            }
            None => Basis::dct(n)?,
        };
        Ok(Self { config, net, signals, basis })
    }

    pub fn net(&self) -> &GeneratorNet {
        &self.net
    }

    /// The random problem for one `(m, trial)`: operator, truth, measurements
    /// and the latent start shared by the latent-space solvers.
    pub fn instance(&self, m: usize, trial: usize) -> Result<TrialInstance, HarnessError> {
        let cfg = self.config;
        let (k, n) = (self.net.latent_dim(), self.net.output_dim());
        let stream = |purpose: u64| RngStream::derive(cfg.master_seed, &[m as u64, trial as u64, purpose]);

        let a = LinearOperator::dense(gaussian_matrix(m, n, &mut stream(STREAM_OPERATOR), cfg.scale));
        let x_star = match &self.signals {
            Some(s) => s[trial % s.len()].clone(),
            None => self.net.eval(&sample_standard_normal(k, &mut stream(STREAM_TRUTH)))?,
        };
        let mut y = a.apply(&x_star)?;
        if cfg.noise_stddev > 0.0 {
            let mut rng = stream(STREAM_NOISE);
            y.iter_mut().for_each(|v| *v += cfg.noise_stddev * rng.standard_normal());
        }
        let z0 = sample_standard_normal(k, &mut stream(STREAM_LATENT_START));
        Ok(TrialInstance { a, x_star, y, z0 })
    }

    /// Runs every selected algorithm on one `(m, trial)` instance. Depends only
    /// on the config and `(m, trial)`, never on other trials.
    pub fn run_trial(&self, m: usize, trial: usize) -> Result<Vec<TrialRecord>, HarnessError> {
        let cfg = self.config;
        let TrialInstance { a, x_star, y, z0 } = self.instance(m, trial)?;
        let budget = cfg.budget();

        let mut records = Vec::with_capacity(cfg.algorithms.len());
        let mut algorithms = cfg.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        for alg in algorithms {
            let start = Instant::now();
            let outcome = match alg {
                Algorithm::PgdGan => {
                    let p = &cfg.pgd_gan;
                    let solver = SolverConfig {
                        eta: p.eta,
                        outer_iters: p.outer_iters,
                        eta_in: p.eta_in,
                        inner_iters: p.inner_iters,
                        z_init: p.z_init,
                        initial_latent: Some(z0.clone()),
                        record_trace: true,
                    };
                    pgd_gan(&y, &a, &self.net, &solver)
                }
                Algorithm::LatentGd => latent_gd(&y, &a, &self.net, budget, cfg.latent_gd.eta, &z0),
                Algorithm::IstaLasso => {
                    let ista = IstaConfig {
                        lambda: cfg.ista_lasso.lambda,
                        steps: budget,
                        step_size: cfg.ista_lasso.step_size,
                    };
                    ista_lasso(&y, &a, &self.basis, &ista)
                }
            };
            let wall_ms = if cfg.record_wall_clock { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let (result, diverged) = match outcome {
                Ok(r) => (r, false),
                Err(SolverError::Diverged { partial, .. }) => (*partial, true),
                Err(e) => return Err(e.into()),
            };
            records.push(self.record(m, trial, alg, &x_star, result, diverged, wall_ms)?);
        }
        Ok(records)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        m: usize,
        trial: usize,
        algorithm: Algorithm,
        x_star: &[f64],
        result: RecoveryResult,
        diverged: bool,
        wall_ms: f64,
    ) -> Result<TrialRecord, HarnessError> {
        let x_hat = if result.x_hat.len() == x_star.len() { result.x_hat } else { vec![f64::NAN; x_star.len()] };
        let metrics = evaluate(&x_hat, x_star, self.config.image_shape, self.config.dynamic_range)?;
        Ok(TrialRecord {
            m,
            trial,
            algorithm,
            recon_error: metrics.recon_error,
            psnr_db: metrics.psnr_db,
            ssim: metrics.ssim,
            updates_used: result.updates_used,
            wall_ms,
            alpha_hat: contraction_factor(&result.loss_trace),
            diverged,
            warnings: result.warnings.len(),
            loss_trace: result.loss_trace,
        })
    }
}

/// Re-runs a single `(m, trial)` in isolation.
pub fn run_trial(config: &ExperimentConfig, m: usize, trial: usize) -> Result<Vec<TrialRecord>, HarnessError> {
    SweepContext::new(config)?.run_trial(m, trial)
}

/// Parallelism from `GANPRIOR_THREADS`; `None` means the rayon default.
pub fn thread_limit() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs the full protocol. Records are sorted by `(m, trial, algorithm)`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    let ctx = SweepContext::new(config)?;
    let jobs: Vec<(usize, usize)> = config
        .measurement_counts
        .iter()
        .flat_map(|&m| (0..config.trials_per_m).map(move |t| (m, t)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Config(e.to_string()))?;
    let batches: Vec<Vec<TrialRecord>> =
        pool.install(|| jobs.par_iter().map(|&(m, t)| ctx.run_trial(m, t)).collect::<Result<_, _>>())?;
    let mut records: Vec<TrialRecord> = batches.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.m, a.trial, a.algorithm).cmp(&(b.m, b.trial, b.algorithm)));
    Ok(records)
}
