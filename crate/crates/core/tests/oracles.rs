//! Reference checks against closed forms and nalgebra.

use ganprior_core::theory::{estimate_srec, spectral_norm};
use ganprior_core::{
    gaussian_matrix, latent_gd, pgd_gan, random_orthonormal, sample_standard_normal, Basis, GaussianScale,
    GeneratorNet, LatentInit, LinearOperator, Matrix, RngStream, SolverConfig,
};
use nalgebra::{DMatrix, DVector};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Orthonormal DCT-II matrix written out from its definition.
fn dct_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |k, i| {
        let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        c * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n as f64)).cos()
    })
}

#[test]
fn composed_dense_synthesis_matches_explicit_product() {
    let n = 16;
    let mut rng = RngStream::new(11);
    let a = gaussian_matrix(10, n, &mut rng, GaussianScale::VarianceInvM);
    let op = LinearOperator::compose(LinearOperator::dense(a.clone()), LinearOperator::Synthesis(Basis::dct(n).unwrap()))
        .unwrap();
    let explicit = to_na(&a) * dct_matrix(n).transpose();
    assert!((to_na(&op.to_matrix()) - &explicit).abs().max() < 1e-12);
    for _ in 0..10 {
        let s = sample_standard_normal(n, &mut rng);
        let want = &explicit * DVector::from_column_slice(&s);
        assert!(max_abs_diff(&op.apply(&s).unwrap(), want.as_slice()) < 1e-12);
        let r = sample_standard_normal(10, &mut rng);
        let want_t = explicit.transpose() * DVector::from_column_slice(&r);
        assert!(max_abs_diff(&op.adjoint(&r).unwrap(), want_t.as_slice()) < 1e-12);
    }
}

#[test]
fn latent_gd_linear_generator_matches_normal_equations() {
    let (k, n, m) = (5, 20, 12);
    let mut rng = RngStream::new(21);
    let w = Matrix::from_fn(n, k, |_, _| rng.standard_normal() / (n as f64).sqrt());
    let net = GeneratorNet::linear(w.clone()).unwrap();
    let a = gaussian_matrix(m, n, &mut rng, GaussianScale::VarianceInvM);
    // y is generic, not in the range, so the least-squares residual is nonzero.
    let y = sample_standard_normal(m, &mut rng);

    let mw = to_na(&a) * to_na(&w);
    let gram = mw.transpose() * &mw;
    let z_ls = gram.clone().lu().solve(&(mw.transpose() * DVector::from_column_slice(&y))).unwrap();
    let lmax = gram.symmetric_eigenvalues().max();

    let op = LinearOperator::dense(a);
    let res = latent_gd(&y, &op, &net, 20_000, 0.5 / lmax, &[0.0; 5]).unwrap();
    let z = res.z_hat.unwrap();
    assert!(max_abs_diff(&z, z_ls.as_slice()) < 1e-6, "{z:?} vs {z_ls}");
    assert_eq!(res.loss_trace.len(), 20_001);
}

#[test]
fn pgd_gan_linear_generator_matches_explicit_recurrence() {
    let (k, n, m) = (4, 16, 12);
    let mut rng = RngStream::new(31);
    let w = random_orthonormal(n, k, &mut rng);
    let net = GeneratorNet::linear(w.clone()).unwrap();
    let a = gaussian_matrix(m, n, &mut rng, GaussianScale::VarianceInvM);
    let x_star = net.eval(&sample_standard_normal(k, &mut rng)).unwrap();
    let op = LinearOperator::dense(a.clone());
    let y = op.apply(&x_star).unwrap();

    // With an orthonormal W, one inner step of size 1/2 lands exactly on W Wᵀ w.
    let cfg = SolverConfig {
        eta: 0.4,
        outer_iters: 25,
        eta_in: 0.5,
        inner_iters: 3,
        z_init: LatentInit::Zero,
        initial_latent: None,
        record_trace: true,
    };
    let res = pgd_gan(&y, &op, &net, &cfg).unwrap();

    let (wn, an, yn) = (to_na(&w), to_na(&a), DVector::from_column_slice(&y));
    let proj = &wn * wn.transpose();
    let mut x = DVector::zeros(n);
    let mut trace = vec![(&yn - &an * &x).norm_squared()];
    for _ in 0..cfg.outer_iters {
        let step = &x + cfg.eta * an.transpose() * (&yn - &an * &x);
        x = &proj * step;
        trace.push((&yn - &an * &x).norm_squared());
    }
    assert!(max_abs_diff(&res.x_hat, x.as_slice()) < 1e-10);
    assert_eq!(res.loss_trace.len(), trace.len());
    for (got, want) in res.loss_trace.iter().zip(&trace) {
        assert!((got - want).abs() <= 1e-10 * want.max(1.0));
    }
    assert_eq!(res.updates_used, 75);
}

#[test]
fn srec_estimate_of_linear_generator_matches_svd() {
    let (k, n, m) = (4, 32, 32);
    let mut rng = RngStream::new(41);
    let w = random_orthonormal(n, k, &mut rng);
    let net = GeneratorNet::linear(w.clone()).unwrap();
    let a = gaussian_matrix(m, n, &mut rng, GaussianScale::VarianceInvM);
    let sv = (to_na(&a) * to_na(&w)).singular_values();
    let (smin2, smax2) = (sv.min() * sv.min(), sv.max() * sv.max());

    let est = estimate_srec(&net, &LinearOperator::dense(a), 10_000, &mut RngStream::new(42)).unwrap();
    assert!(est.gamma_hat >= smin2 * (1.0 - 1e-12));
    assert!((est.gamma_hat - smin2).abs() <= 0.1 * smin2, "{} vs {smin2}", est.gamma_hat);
    assert!(est.stats.max <= smax2 * (1.0 + 1e-12));
    assert_eq!(est.stats.count, 10_000);
}

#[test]
fn spectral_norm_matches_svd() {
    let mut rng = RngStream::new(51);
    for _ in 0..5 {
        let a = gaussian_matrix(10, 10, &mut rng, GaussianScale::VarianceInvM);
        let want = to_na(&a).singular_values().max();
        let got = spectral_norm(&LinearOperator::dense(a), 500, 0.0, &mut rng);
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
        assert!(got <= want * (1.0 + 1e-12));
    }
}

#[test]
fn identity_operator_norm_is_one() {
    let got = spectral_norm(&LinearOperator::identity(7), 3, 0.0, &mut RngStream::new(1));
    assert!((got - 1.0).abs() < 1e-12);
}
