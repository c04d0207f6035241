//! Empirical checks of the convergence hypotheses: the set-restricted
//! eigenvalue constant `γ`, the global operator norm `ρ`, the admissible outer
//! step interval and the observed contraction factor of a loss trace.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{GeneratorError, GeneratorNet};
use crate::math;
use crate::numkit::{sample_standard_normal, RngStream};
use crate::operators::{LinearOperator, OperatorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("num_pairs must be at least 1")]
    NoPairs,
    #[error("all {0} sampled pairs had coincident images (degenerate generator range)")]
    DegenerateRange(usize),
    #[error("step interval undefined for gamma_hat = {0}")]
    UndefinedInterval(f64),
    #[error("operator input dim {found} does not match generator output dim {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Image pairs closer than this are skipped by [`estimate_srec`].
pub const MIN_PAIR_DISTANCE: f64 = 1e-9;

/// Losses at or below this are excluded from [`contraction_factor`].
pub const MIN_TRACE_LOSS: f64 = 1e-12;

const HISTOGRAM_BINS: usize = 10;

/// Summary of the sampled ratios `‖A(x₁−x₂)‖² / ‖x₁−x₂‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    /// Equal-width bin counts over `[min, max]`.
    pub bins: Vec<usize>,
}

impl RatioStats {
    fn from_samples(mut r: Vec<f64>) -> Self {
        r.sort_by(f64::total_cmp);
        let count = r.len();
        let q = |p: f64| r[((count - 1) as f64 * p + 0.5) as usize];
        let mean = r.iter().sum::<f64>() / count as f64;
        let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        let (min, max) = (r[0], r[count - 1]);
        let mut bins = vec![0usize; HISTOGRAM_BINS];
        let width = (max - min) / HISTOGRAM_BINS as f64;
        for v in &r {
            let b = if width > 0.0 { ((v - min) / width) as usize } else { 0 };
            bins[b.min(HISTOGRAM_BINS - 1)] += 1;
        }
        Self { count, min, p05: q(0.05), median: q(0.5), p95: q(0.95), max, mean, std: math::sqrt(var), bins }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrecEstimate {
    /// Minimum sampled ratio: an empirical `δ = 0` estimate, not a certificate.
    pub gamma_hat: f64,
    pub stats: RatioStats,
    pub num_pairs: usize,
    pub skipped: usize,
}

/// Samples `num_pairs` latent pairs and returns the smallest restricted ratio.
pub fn estimate_srec(
    net: &GeneratorNet,
    a: &LinearOperator,
    num_pairs: usize,
    rng: &mut RngStream,
) -> Result<SrecEstimate, TheoryError> {
    if num_pairs == 0 {
        return Err(TheoryError::NoPairs);
    }
    if a.in_dim() != net.output_dim() {
        return Err(TheoryError::Dimension { expected: net.output_dim(), found: a.in_dim() });
    }
    let k = net.latent_dim();
    let mut ratios = Vec::with_capacity(num_pairs);
    let mut skipped = 0;
    for _ in 0..num_pairs {
        let x1 = net.eval(&sample_standard_normal(k, rng))?;
        let x2 = net.eval(&sample_standard_normal(k, rng))?;
        let d: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b).collect();
        let dn = math::norm_sq(&d);
        if math::sqrt(dn) < MIN_PAIR_DISTANCE {
            skipped += 1;
            continue;
        }
        ratios.push(math::norm_sq(&a.apply(&d)?) / dn);
    }
    if ratios.is_empty() {
        return Err(TheoryError::DegenerateRange(num_pairs));
    }
    let stats = RatioStats::from_samples(ratios);
    Ok(SrecEstimate { gamma_hat: stats.min, stats, num_pairs, skipped })
}

/// Power iteration on `AᵀA`; returns the estimate of `‖A‖₂`.
///
/// The estimate is the running maximum of `‖A v‖` over unit iterates, so it
/// is nondecreasing in `iters` for a fixed stream. Stops early once the
/// relative change of `‖A v‖²` drops to `tol` (pass 0 to run all iterations).
pub fn spectral_norm(a: &LinearOperator, iters: usize, tol: f64, rng: &mut RngStream) -> f64 {
    let n = a.in_dim();
    let mut v = sample_standard_normal(n, rng);
    let nv = math::norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut best: f64 = 0.0;
    let mut prev = f64::NAN;
    for _ in 0..iters.max(1) {
        let u = a.apply(&v).expect("dims match");
        let lambda = math::norm_sq(&u);
        best = best.max(lambda);
        if tol > 0.0 && math::abs(lambda - prev) <= tol * lambda {
            break;
        }
        prev = lambda;
        let w = a.adjoint(&u).expect("dims match");
        let nw = math::norm(&w);
        if nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    math::sqrt(best)
}

/// `max_t ψ_{t+1}/ψ_t` over steps with `ψ_t > 1e-12`; 0 if there are none.
pub fn contraction_factor(trace: &[f64]) -> f64 {
    trace
        .windows(2)
        .filter(|w| w[0] > MIN_TRACE_LOSS)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

/// `(1/(2γ̂), 1/γ̂)`.
pub fn admissible_step_interval(gamma_hat: f64) -> Result<(f64, f64), TheoryError> {
    if !(gamma_hat > 0.0) || !gamma_hat.is_finite() {
        return Err(TheoryError::UndefinedInterval(gamma_hat));
    }
    Ok((1.0 / (2.0 * gamma_hat), 1.0 / gamma_hat))
}

pub const GAMMA_NOTE: &str = "gamma_hat is the minimum sampled ratio with delta = 0; an empirical estimate, not a certificate";

/// Flat summary of the empirical checks; serializes with these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub gamma_hat: f64,
    pub ratio_histogram: RatioStats,
    pub rho_hat: f64,
    /// `None` when `gamma_hat` is not positive.
    pub eta_interval: Option<(f64, f64)>,
    pub rho_condition_met: bool,
    pub alpha_hat: Option<f64>,
    pub num_pairs: usize,
    pub skipped_pairs: usize,
    pub note: &'static str,
}

impl TheoryReport {
    pub fn new(srec: SrecEstimate, rho_hat: f64, alpha_hat: Option<f64>) -> Self {
        Self {
            gamma_hat: srec.gamma_hat,
            eta_interval: admissible_step_interval(srec.gamma_hat).ok(),
            rho_condition_met: rho_hat * rho_hat <= srec.gamma_hat,
            ratio_histogram: srec.stats,
            rho_hat,
            alpha_hat,
            num_pairs: srec.num_pairs,
            skipped_pairs: srec.skipped,
            note: GAMMA_NOTE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{synthetic_net, Activation, Layer};
    use crate::numkit::{gaussian_matrix, GaussianScale, Matrix};

    #[test]
    fn identity_operator_gives_unit_gamma() {
        let net = synthetic_net(3, &[6], 8, Activation::Relu, &mut RngStream::new(1)).unwrap();
        let est = estimate_srec(&net, &LinearOperator::identity(8), 200, &mut RngStream::new(2)).unwrap();
        assert!((est.gamma_hat - 1.0).abs() < 1e-12);
        assert!((est.stats.max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_has_no_interval() {
        let net = synthetic_net(3, &[], 5, Activation::Linear, &mut RngStream::new(1)).unwrap();
        let a = LinearOperator::dense(Matrix::zeros(4, 5));
        let est = estimate_srec(&net, &a, 50, &mut RngStream::new(2)).unwrap();
        assert_eq!(est.gamma_hat, 0.0);
        assert!(admissible_step_interval(est.gamma_hat).is_err());
        let report = TheoryReport::new(est, 0.0, None);
        assert_eq!(report.eta_interval, None);
    }

    #[test]
    fn constant_generator_is_degenerate() {
        let layer = Layer { weight: Matrix::zeros(4, 2), bias: vec![1.0; 4], activation: Activation::Linear };
        let net = GeneratorNet::new(vec![layer]).unwrap();
        let err = estimate_srec(&net, &LinearOperator::identity(4), 10, &mut RngStream::new(0)).unwrap_err();
        assert_eq!(err, TheoryError::DegenerateRange(10));
        assert_eq!(
            estimate_srec(&net, &LinearOperator::identity(4), 0, &mut RngStream::new(0)).unwrap_err(),
            TheoryError::NoPairs
        );
    }

    #[test]
    fn spectral_norm_simple() {
        let mut rng = RngStream::new(3);
        assert!((spectral_norm(&LinearOperator::identity(5), 10, 0.0, &mut rng) - 1.0).abs() < 1e-10);
        let d = LinearOperator::dense(Matrix::diagonal(&[3.0, 1.0]));
        assert!((spectral_norm(&d, 100, 0.0, &mut rng) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_nondecreasing_in_iters() {
        let a = LinearOperator::dense(gaussian_matrix(9, 7, &mut RngStream::new(4), GaussianScale::default()));
        let mut last = 0.0;
        for iters in 1..40 {
            let r = spectral_norm(&a, iters, 0.0, &mut RngStream::new(77));
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_factor(&[4.0, 2.0, 1.0]), 0.5);
        assert_eq!(contraction_factor(&[3.0, 3.0, 3.0]), 1.0);
        assert_eq!(contraction_factor(&[1e-13, 1.0]), 0.0);
        assert_eq!(contraction_factor(&[2.0, 1.0, 1e-14, 1e-13]), 0.5);
    }

    #[test]
    fn step_intervals() {
        assert_eq!(admissible_step_interval(1.0).unwrap(), (0.5, 1.0));
        assert_eq!(admissible_step_interval(0.25).unwrap(), (2.0, 4.0));
        assert!(admissible_step_interval(-1.0).is_err());
        assert!(admissible_step_interval(f64::NAN).is_err());
    }
}
