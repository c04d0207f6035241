//! Builds a theory report for one generator and one Gaussian operator.

use ganprior_core::{
    admissible_step_interval, contraction_factor, estimate_srec, gaussian_matrix, pgd_gan, sample_standard_normal,
    spectral_norm, GaussianScale, GeneratorNet, LinearOperator, RngStream, SolverConfig, TheoryReport,
};

use crate::HarnessError;

#[derive(Clone, Debug)]
pub struct TheoryRun {
    pub m: usize,
    pub seed: u64,
    pub scale: GaussianScale,
    pub num_pairs: usize,
    pub power_iters: usize,
    /// Where inside the admissible interval the probe run's step sits, in `(0, 1)`.
    pub eta_position: f64,
    /// Solver settings for the probe run; `eta` is overwritten.
    pub solver: SolverConfig,
}

impl Default for TheoryRun {
    fn default() -> Self {
        Self {
            m: 100,
            seed: 0,
            scale: GaussianScale::VarianceInvM,
            num_pairs: 2000,
            power_iters: 1000,
            eta_position: 0.5,
            solver: SolverConfig::default(),
        }
    }
}

/// Estimates `γ̂` and `ρ̂`, then (if the step interval exists) runs PGD on an
/// in-range truth with a step inside the interval to measure `α̂`.
pub fn theory_report(net: &GeneratorNet, run: &TheoryRun) -> Result<TheoryReport, HarnessError> {
    let n = net.output_dim();
    let a = LinearOperator::dense(gaussian_matrix(run.m, n, &mut RngStream::derive(run.seed, &[0]), run.scale));
    let srec = estimate_srec(net, &a, run.num_pairs, &mut RngStream::derive(run.seed, &[1]))?;
    let rho_hat = spectral_norm(&a, run.power_iters, 1e-14, &mut RngStream::derive(run.seed, &[2]));
    let alpha_hat = match admissible_step_interval(srec.gamma_hat) {
        Ok((lo, hi)) => {
            let mut rng = RngStream::derive(run.seed, &[3]);
            let x_star = net.eval(&sample_standard_normal(net.latent_dim(), &mut rng))?;
            let y = a.apply(&x_star)?;
            let mut cfg = run.solver.clone();
            cfg.eta = lo + run.eta_position * (hi - lo);
            cfg.record_trace = true;
            if cfg.initial_latent.is_none() {
                cfg.initial_latent = Some(sample_standard_normal(net.latent_dim(), &mut rng));
            }
            match pgd_gan(&y, &a, net, &cfg) {
                Ok(res) => Some(contraction_factor(&res.loss_trace)),
                Err(ganprior_core::SolverError::Diverged { partial, .. }) => {
                    Some(contraction_factor(&partial.loss_trace))
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(_) => None,
    };
    Ok(TheoryReport::new(srec, rho_hat, alpha_hat))
}

pub fn report_json(report: &TheoryReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
