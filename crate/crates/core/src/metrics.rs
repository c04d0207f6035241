//! Reconstruction quality measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

/// PSNR reported when the mean squared error underflows.
pub const PSNR_CAP_DB: f64 = 300.0;
const MSE_FLOOR: f64 = 1e-30;
/// SSIM window side length.
pub const SSIM_WINDOW: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("image shape {h}x{w} does not match length {len}")]
    Shape { h: usize, w: usize, len: usize },
    #[error("dynamic range must be positive, got {0}")]
    DynamicRange(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖x̂ − x*‖²`.
    pub recon_error: f64,
    pub recon_error_per_pixel: f64,
    pub psnr_db: f64,
    pub ssim: Option<f64>,
}

pub fn evaluate(
    x_hat: &[f64],
    x_star: &[f64],
    image_shape: Option<(usize, usize)>,
    dynamic_range: f64,
) -> Result<Metrics, MetricsError> {
    if x_hat.len() != x_star.len() {
        return Err(MetricsError::Length(x_hat.len(), x_star.len()));
    }
    if !(dynamic_range > 0.0) {
        return Err(MetricsError::DynamicRange(dynamic_range));
    }
    if let Some((h, w)) = image_shape {
        if h * w != x_hat.len() {
            return Err(MetricsError::Shape { h, w, len: x_hat.len() });
        }
    }
    let recon_error = math::dist_sq(x_hat, x_star);
    let mse = recon_error / x_hat.len().max(1) as f64;
    let psnr_db = if mse.is_nan() {
        f64::NAN
    } else if mse < MSE_FLOOR {
        PSNR_CAP_DB
    } else {
        (10.0 * math::log10(dynamic_range * dynamic_range / mse)).min(PSNR_CAP_DB)
    };
    let ssim = image_shape.map(|(h, w)| ssim(x_hat, x_star, h, w, dynamic_range));
    Ok(Metrics { recon_error, recon_error_per_pixel: mse, psnr_db, ssim })
}

/// Mean single-scale SSIM over non-overlapping 8×8 windows. Partial windows at
/// the right and bottom edges are dropped; images smaller than 8 in a
/// dimension use one window spanning that dimension.
pub fn ssim(a: &[f64], b: &[f64], h: usize, w: usize, dynamic_range: f64) -> f64 {
    let c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    let c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    let (wh, ww) = (SSIM_WINDOW.min(h), SSIM_WINDOW.min(w));
    let mut total = 0.0;
    let mut windows = 0usize;
    for r0 in (0..=h - wh).step_by(wh) {
        for c0 in (0..=w - ww).step_by(ww) {
            let idx = |i: usize| (r0 + i / ww) * w + c0 + i % ww;
            let count = (wh * ww) as f64;
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for i in 0..wh * ww {
                mu_a += a[idx(i)];
                mu_b += b[idx(i)];
            }
            mu_a /= count;
            mu_b /= count;
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..wh * ww {
                let (da, db) = (a[idx(i)] - mu_a, b[idx(i)] - mu_b);
                va += da * da;
                vb += db * db;
                cov += da * db;
            }
            va /= count;
            vb /= count;
            cov /= count;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    total / windows as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{sample_standard_normal, RngStream};
    use alloc::vec;

    #[test]
    fn identical_inputs() {
        let x = sample_standard_normal(64, &mut RngStream::new(1));
        let m = evaluate(&x, &x, Some((8, 8)), 1.0).unwrap();
        assert_eq!(m.recon_error, 0.0);
        assert_eq!(m.psnr_db, PSNR_CAP_DB);
        assert_eq!(m.ssim, Some(1.0));
    }

    #[test]
    fn unit_basis_error() {
        let mut e1 = vec![0.0; 5];
        e1[0] = 1.0;
        let m = evaluate(&e1, &[0.0; 5], None, 1.0).unwrap();
        assert_eq!(m.recon_error, 1.0);
        assert_eq!(m.recon_error_per_pixel, 0.2);
        assert!((m.psnr_db - 10.0 * math::log10(5.0)).abs() < 1e-12);
        assert_eq!(m.ssim, None);
    }

    #[test]
    fn errors() {
        assert_eq!(evaluate(&[0.0], &[0.0, 1.0], None, 1.0), Err(MetricsError::Length(1, 2)));
        assert!(matches!(evaluate(&[0.0], &[0.0], None, 0.0), Err(MetricsError::DynamicRange(_))));
        assert!(matches!(evaluate(&[0.0; 6], &[0.0; 6], Some((2, 2)), 1.0), Err(MetricsError::Shape { .. })));
    }

    #[test]
    fn ssim_symmetric_and_bounded() {
        let mut rng = RngStream::new(2);
        let a = sample_standard_normal(28 * 28, &mut rng);
        let b = sample_standard_normal(28 * 28, &mut rng);
        let s1 = ssim(&a, &b, 28, 28, 4.0);
        let s2 = ssim(&b, &a, 28, 28, 4.0);
        assert_eq!(s1, s2);
        assert!((-1.0..=1.0).contains(&s1));
        assert!(s1 < 0.5);
        // Smaller than one window.
        assert_eq!(ssim(&a[..12], &a[..12], 3, 4, 1.0), 1.0);
    }
}
