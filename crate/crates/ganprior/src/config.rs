//! Experiment configuration (a single JSON document).

use std::fmt;
use std::path::PathBuf;

use ganprior_core::{Activation, GaussianScale, LatentInit};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorSource {
    File { path: PathBuf },
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    pub n: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_output_activation")]
    pub output_activation: Activation,
    #[serde(default)]
    pub seed: u64,
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_output_activation() -> Activation {
    Activation::Linear
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PgdGan,
    LatentGd,
    IstaLasso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::PgdGan, Algorithm::LatentGd, Algorithm::IstaLasso];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PgdGan => "pgd_gan",
            Algorithm::LatentGd => "latent_gd",
            Algorithm::IstaLasso => "ista_lasso",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthMode {
    /// `x* = G(z*)` with `z* ~ N(0, I)`.
    InRange,
    /// One signal per line (whitespace or comma separated); trial `i` uses
    /// line `i mod count`.
    FromFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgdParams {
    pub eta: f64,
    pub outer_iters: usize,
    pub eta_in: f64,
    pub inner_iters: usize,
    pub z_init: LatentInit,
}

impl Default for PgdParams {
    fn default() -> Self {
        Self { eta: 0.5, outer_iters: 15, eta_in: 0.01, inner_iters: 200, z_init: LatentInit::WarmStart }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatentGdParams {
    pub eta: f64,
}

impl Default for LatentGdParams {
    fn default() -> Self {
        Self { eta: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IstaParams {
    pub lambda: f64,
    pub step_size: Option<f64>,
}

impl Default for IstaParams {
    fn default() -> Self {
        Self { lambda: 0.01, step_size: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator_source: GeneratorSource,
    pub measurement_counts: Vec<usize>,
    #[serde(default = "one")]
    pub trials_per_m: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub pgd_gan: PgdParams,
    #[serde(default)]
    pub latent_gd: LatentGdParams,
    #[serde(default)]
    pub ista_lasso: IstaParams,
    #[serde(default = "in_range")]
    pub ground_truth_mode: GroundTruthMode,
    #[serde(default)]
    pub noise_stddev: f64,
    #[serde(default)]
    pub scale: GaussianScale,
    /// `(h, w)` when signals are images; enables SSIM and a 2-D DCT for ISTA.
    #[serde(default)]
    pub image_shape: Option<(usize, usize)>,
    #[serde(default = "unit")]
    pub dynamic_range: f64,
    /// When false, `wall_ms` is written as 0 so reruns produce identical output.
    #[serde(default = "yes")]
    pub record_wall_clock: bool,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn all_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn in_range() -> GroundTruthMode {
    GroundTruthMode::InRange
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Total update budget shared by every algorithm, `T × T_in`.
    pub fn budget(&self) -> usize {
        self.pgd_gan.outer_iters * self.pgd_gan.inner_iters
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.measurement_counts.is_empty() {
            return bad("measurement_counts must be nonempty");
        }
        if self.measurement_counts.contains(&0) {
            return bad("every measurement count must be at least 1");
        }
        if self.trials_per_m == 0 {
            return bad("trials_per_m must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must be nonempty");
        }
        if !(self.noise_stddev >= 0.0) {
            return bad("noise_stddev must be nonnegative");
        }
        if !(self.dynamic_range > 0.0) {
            return bad("dynamic_range must be positive");
        }
        if !(self.pgd_gan.eta > 0.0 && self.pgd_gan.eta_in > 0.0 && self.latent_gd.eta > 0.0) {
            return bad("step sizes must be positive");
        }
        if !(self.ista_lasso.lambda >= 0.0) {
            return bad("ista_lasso.lambda must be nonnegative");
        }
        if let GeneratorSource::Synthetic(s) = &self.generator_source {
            if s.k == 0 || s.n == 0 || s.hidden_dims.contains(&0) {
                return bad("synthetic generator dimensions must be positive");
            }
        }
        Ok(())
    }
}
