//! Recovery algorithms: projected gradient descent onto the range of a
//! generator, gradient descent in latent space, and ISTA over a basis.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{GeneratorError, GeneratorNet};
use crate::math;
use crate::numkit::{sample_standard_normal, RngStream};
use crate::operators::{Basis, LinearOperator, OperatorError};
use crate::theory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("projection diverged at inner iteration {iteration}")]
    ProjectionDiverged { iteration: usize },
    #[error("diverged at iteration {iteration} (non-finite loss)")]
    Diverged { iteration: usize, partial: Box<RecoveryResult> },
}

/// Where each projection's latent search starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentInit {
    /// Every projection starts from the zero vector.
    Zero,
    /// The first projection starts from `initial_latent` (zero if unset); later
    /// ones reuse the previous projection's final latent.
    #[default]
    WarmStart,
    /// Every projection starts from a fresh `N(0, I)` draw.
    SeededRandom { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Outer step size.
    pub eta: f64,
    pub outer_iters: usize,
    /// Inner (projection) step size.
    pub eta_in: f64,
    pub inner_iters: usize,
    pub z_init: LatentInit,
    pub initial_latent: Option<Vec<f64>>,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            outer_iters: 15,
            eta_in: 0.01,
            inner_iters: 200,
            z_init: LatentInit::WarmStart,
            initial_latent: None,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    /// Total generator-gradient evaluations, `outer_iters × inner_iters`.
    pub fn budget(&self) -> usize {
        self.outer_iters * self.inner_iters
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SolverWarning {
    /// The projection ended farther from its target than where it started.
    ProjectionNotImproved { outer_iter: usize, start: f64, end: f64 },
    /// The ISTA objective went up between two iterations.
    ObjectiveIncreased { iter: usize, before: f64, after: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub z_hat: Option<Vec<f64>>,
    /// Basis coefficients (ISTA only).
    pub coefficients: Option<Vec<f64>>,
    /// Loss history including the initial point. For `pgd_gan` this is
    /// `‖y − A x_t‖²` per outer iteration; for `latent_gd` one entry per step;
    /// for ISTA the penalized objective.
    pub loss_trace: Vec<f64>,
    pub inner_loss_final: Option<f64>,
    /// Generator-gradient evaluations (ISTA: iterations).
    pub updates_used: usize,
    pub warnings: Vec<SolverWarning>,
}

impl RecoveryResult {
    fn new(x_hat: Vec<f64>) -> Self {
        Self {
            x_hat,
            z_hat: None,
            coefficients: None,
            loss_trace: Vec::new(),
            inner_loss_final: None,
            updates_used: 0,
            warnings: Vec::new(),
        }
    }
}

/// Output of [`project_to_range`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// `‖w − G(z_end)‖` (unsquared).
    pub inner_loss: f64,
    /// `‖w − G(z_start)‖` (unsquared).
    pub start_loss: f64,
    pub updates: usize,
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), SolverError> {
    if v.len() != expected {
        return Err(SolverError::Dimension { what, expected, found: v.len() });
    }
    Ok(())
}

fn residual(y: &[f64], a: &LinearOperator, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    let ax = a.apply(x)?;
    Ok(y.iter().zip(&ax).map(|(yi, ai)| yi - ai).collect())
}

/// Approximates `G(argmin_z ‖w − G(z)‖)` by `inner_iters` gradient steps on
/// the squared loss, starting at `z_start`.
pub fn project_to_range(
    net: &GeneratorNet,
    w: &[f64],
    eta_in: f64,
    inner_iters: usize,
    z_start: &[f64],
) -> Result<Projection, SolverError> {
    check_len("w", w, net.output_dim())?;
    check_len("z_start", z_start, net.latent_dim())?;
    let mut z = z_start.to_vec();
    let mut tape = net.forward_tape(&z)?;
    let start_loss = math::sqrt(math::dist_sq(w, tape.output()));
    let mut cot = vec![0.0; w.len()];
    for it in 0..inner_iters {
        for ((c, g), wi) in cot.iter_mut().zip(tape.output()).zip(w) {
            *c = 2.0 * (g - wi);
        }
        let grad = net.vjp(&tape, &cot)?;
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi -= eta_in * gi;
        }
        if !math::all_finite(&z) {
            return Err(SolverError::ProjectionDiverged { iteration: it });
        }
        tape = net.forward_tape(&z)?;
    }
    let x = tape.into_output();
    if !math::all_finite(&x) {
        return Err(SolverError::ProjectionDiverged { iteration: inner_iters });
    }
    let inner_loss = math::sqrt(math::dist_sq(w, &x));
    Ok(Projection { x, z, inner_loss, start_loss, updates: inner_iters })
}

/// Projected gradient descent over the range of `net`:
/// `w_t = x_t + η Aᵀ(y − A x_t)`, `x_{t+1} = P_G(w_t)`, starting at `x_0 = 0`.
pub fn pgd_gan(
    y: &[f64],
    a: &LinearOperator,
    net: &GeneratorNet,
    cfg: &SolverConfig,
) -> Result<RecoveryResult, SolverError> {
    let (k, n) = (net.latent_dim(), net.output_dim());
    check_len("y", y, a.out_dim())?;
    if a.in_dim() != n {
        return Err(SolverError::Dimension { what: "operator input", expected: n, found: a.in_dim() });
    }
    if !(cfg.eta > 0.0 && cfg.eta_in > 0.0) {
        return Err(SolverError::InvalidConfig("step sizes must be positive"));
    }
    let mut rng = match cfg.z_init {
        LatentInit::SeededRandom { seed } => Some(RngStream::new(seed)),
        _ => None,
    };
    let mut z = match &cfg.initial_latent {
        Some(z0) => {
            check_len("initial_latent", z0, k)?;
            z0.clone()
        }
        None => vec![0.0; k],
    };

    let mut out = RecoveryResult::new(vec![0.0; n]);
    let mut psi = math::norm_sq(y);
    if cfg.record_trace {
        out.loss_trace.push(psi);
    }
    for t in 0..cfg.outer_iters {
        let r = residual(y, a, &out.x_hat)?;
        let step = a.adjoint(&r)?;
        let w: Vec<f64> = out.x_hat.iter().zip(&step).map(|(x, g)| x + cfg.eta * g).collect();
        let z_start = match (cfg.z_init, rng.as_mut()) {
            (LatentInit::Zero, _) => vec![0.0; k],
            (LatentInit::SeededRandom { .. }, Some(rng)) => sample_standard_normal(k, rng),
            _ => z,
        };
        let proj = match project_to_range(net, &w, cfg.eta_in, cfg.inner_iters, &z_start) {
            Ok(p) => p,
            Err(SolverError::ProjectionDiverged { .. }) => {
                return Err(SolverError::Diverged { iteration: t, partial: Box::new(out) });
            }
            Err(e) => return Err(e),
        };
        out.updates_used += proj.updates;
        if proj.inner_loss > proj.start_loss {
            out.warnings.push(SolverWarning::ProjectionNotImproved {
                outer_iter: t,
                start: proj.start_loss,
                end: proj.inner_loss,
            });
        }
        out.x_hat = proj.x;
        out.inner_loss_final = Some(proj.inner_loss);
        z = proj.z;
        psi = math::norm_sq(&residual(y, a, &out.x_hat)?);
        if cfg.record_trace {
            out.loss_trace.push(psi);
        }
        if !psi.is_finite() {
            out.z_hat = Some(z);
            return Err(SolverError::Diverged { iteration: t, partial: Box::new(out) });
        }
    }
    out.z_hat = Some(z);
    Ok(out)
}

/// Gradient descent on `h(z) = ‖y − A G(z)‖²` from a single start `z0`.
pub fn latent_gd(
    y: &[f64],
    a: &LinearOperator,
    net: &GeneratorNet,
    total_steps: usize,
    eta: f64,
    z0: &[f64],
) -> Result<RecoveryResult, SolverError> {
    let n = net.output_dim();
    check_len("y", y, a.out_dim())?;
    check_len("z0", z0, net.latent_dim())?;
    if a.in_dim() != n {
        return Err(SolverError::Dimension { what: "operator input", expected: n, found: a.in_dim() });
    }
    if !(eta > 0.0) {
        return Err(SolverError::InvalidConfig("step size must be positive"));
    }
    let mut z = z0.to_vec();
    let mut tape = net.forward_tape(&z)?;
    let mut out = RecoveryResult::new(Vec::new());
    for step in 0..=total_steps {
        let r = residual(y, a, tape.output())?;
        let loss = math::norm_sq(&r);
        out.loss_trace.push(loss);
        if !loss.is_finite() {
            out.x_hat = tape.into_output();
            out.z_hat = Some(z);
            return Err(SolverError::Diverged { iteration: step, partial: Box::new(out) });
        }
        if step == total_steps {
            break;
        }
        let mut cot = a.adjoint(&r)?;
        cot.iter_mut().for_each(|c| *c *= -2.0);
        let grad = net.vjp(&tape, &cot)?;
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi -= eta * gi;
        }
        out.updates_used += 1;
        tape = net.forward_tape(&z)?;
    }
    out.x_hat = tape.into_output();
    out.z_hat = Some(z);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IstaConfig {
    pub lambda: f64,
    pub steps: usize,
    /// Defaults to `1 / (2 L̂)` with `L̂` the squared spectral norm of
    /// `A ∘ synthesis`, estimated by 50 power iterations.
    pub step_size: Option<f64>,
}

/// Power iterations used for the default ISTA step size.
pub const ISTA_POWER_ITERS: usize = 50;

/// `sign(v) · max(|v| − τ, 0)`.
#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// ISTA on `F(s) = ‖y − A·synthesis(s)‖² + λ‖s‖₁`, starting at `s = 0`.
pub fn ista_lasso(
    y: &[f64],
    a: &LinearOperator,
    basis: &Basis,
    cfg: &IstaConfig,
) -> Result<RecoveryResult, SolverError> {
    check_len("y", y, a.out_dim())?;
    if !(cfg.lambda >= 0.0) {
        return Err(SolverError::InvalidConfig("lambda must be nonnegative"));
    }
    let op = LinearOperator::compose(a.clone(), LinearOperator::Synthesis(basis.clone()))?;
    let step = match cfg.step_size {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(SolverError::InvalidConfig("step size must be positive")),
        None => {
            let rho = theory::spectral_norm(&op, ISTA_POWER_ITERS, 0.0, &mut RngStream::new(0x15_7A));
            if rho <= 0.0 {
                return Err(SolverError::InvalidConfig("operator is zero"));
            }
            1.0 / (2.0 * rho * rho)
        }
    };
    let objective = |s: &[f64], r: &[f64]| math::norm_sq(r) + cfg.lambda * s.iter().map(|v| v.abs()).sum::<f64>();

    let mut s = vec![0.0; op.in_dim()];
    let mut r = residual(y, &op, &s)?;
    let mut f = objective(&s, &r);
    let mut out = RecoveryResult::new(Vec::new());
    out.loss_trace.push(f);
    let tau = step * cfg.lambda;
    for it in 0..cfg.steps {
        let g = op.adjoint(&r)?;
        for (si, gi) in s.iter_mut().zip(&g) {
            *si = soft_threshold(*si + 2.0 * step * gi, tau);
        }
        r = residual(y, &op, &s)?;
        let f_next = objective(&s, &r);
        out.updates_used += 1;
        if !f_next.is_finite() {
            out.loss_trace.push(f_next);
            out.coefficients = Some(s.clone());
            out.x_hat = basis.synthesis(&s)?;
            return Err(SolverError::Diverged { iteration: it, partial: Box::new(out) });
        }
        if f_next > f + 1e-12 * f.max(1.0) {
            out.warnings.push(SolverWarning::ObjectiveIncreased { iter: it, before: f, after: f_next });
        }
        f = f_next;
        out.loss_trace.push(f);
    }
    out.x_hat = basis.synthesis(&s)?;
    out.coefficients = Some(s);
    Ok(out)
}
