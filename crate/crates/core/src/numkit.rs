//! Dense linear algebra and seeded sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Returns `None` if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        math::all_finite(&self.data)
    }

    /// `A x`. Panics if `x.len() != cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// `Aᵀ r`. Panics if `r.len() != rows`.
    pub fn matvec_t(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.rows, "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ri;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Seeded pseudo-random stream (ChaCha20).
///
/// Streams are single-owner. Independent streams for parallel work are
/// derived from a master seed plus an index path with [`RngStream::derive`].
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    /// Deterministically derives a stream from `master` and an index path,
    /// e.g. `(master_seed, [m, trial, purpose])`.
    pub fn derive(master: u64, path: &[u64]) -> Self {
        let mut s = splitmix64(master);
        for &p in path {
            s = splitmix64(s ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
        }
        Self::new(s)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }
}

/// How the entries of a Gaussian measurement matrix are scaled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianScale {
    /// Variance `1/m`, i.e. standard deviation `1/√m`.
    #[default]
    VarianceInvM,
    /// Standard deviation `1/m`.
    StddevInvM,
}

impl GaussianScale {
    pub fn stddev(self, m: usize) -> f64 {
        match self {
            GaussianScale::VarianceInvM => 1.0 / math::sqrt(m as f64),
            GaussianScale::StddevInvM => 1.0 / m as f64,
        }
    }
}

/// `m × n` matrix with i.i.d. zero-mean Gaussian entries.
pub fn gaussian_matrix(m: usize, n: usize, rng: &mut RngStream, scale: GaussianScale) -> Matrix {
    let sd = scale.stddev(m);
    Matrix::from_fn(m, n, |_, _| sd * rng.standard_normal())
}

/// `k` i.i.d. standard normal samples.
pub fn sample_standard_normal(k: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..k).map(|_| rng.standard_normal()).collect()
}

/// `n × k` matrix with orthonormal columns (`k ≤ n`), from modified
/// Gram-Schmidt on Gaussian columns.
pub fn random_orthonormal(n: usize, k: usize, rng: &mut RngStream) -> Matrix {
    assert!(k <= n, "cannot fit {k} orthonormal columns in dimension {n}");
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v = sample_standard_normal(n, rng);
        for c in &cols {
            let d = math::dot(&v, c);
            v.iter_mut().zip(c).for_each(|(vi, ci)| *vi -= d * ci);
        }
        let nv = math::norm(&v);
        if nv < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|vi| *vi /= nv);
        cols.push(v);
    }
    Matrix::from_fn(n, k, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_columns_are_orthonormal() {
        let q = random_orthonormal(12, 4, &mut RngStream::new(3));
        let g = q.transpose().matmul(&q);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_matrix_shape_and_std() {
        let mut rng = RngStream::new(7);
        let a = gaussian_matrix(100, 784, &mut rng, GaussianScale::VarianceInvM);
        assert_eq!((a.rows(), a.cols()), (100, 784));
        let n = a.as_slice().len() as f64;
        let mean = a.as_slice().iter().sum::<f64>() / n;
        let var = a.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((math::sqrt(var) - 0.1).abs() < 0.002);
    }

    #[test]
    fn gaussian_matrix_statistics_large() {
        let m = 1000;
        let mut rng = RngStream::new(11);
        let a = gaussian_matrix(m, m, &mut rng, GaussianScale::VarianceInvM);
        let n = (m * m) as f64;
        let mean = a.as_slice().iter().sum::<f64>() / n;
        let var = a.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = 1.0 / math::sqrt(m as f64);
        assert!(mean.abs() < 3.0 * sd / math::sqrt(n), "mean {mean}");
        assert!((var - 1.0 / m as f64).abs() < 0.01 / m as f64, "var {var}");
    }

    #[test]
    fn stddev_scale() {
        let mut rng = RngStream::new(3);
        let a = gaussian_matrix(50, 2000, &mut rng, GaussianScale::StddevInvM);
        let n = a.as_slice().len() as f64;
        let var = a.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
        assert!((math::sqrt(var) - 0.02).abs() < 0.0005);
    }

    #[test]
    fn determinism() {
        let a = gaussian_matrix(5, 9, &mut RngStream::new(42), GaussianScale::default());
        let b = gaussian_matrix(5, 9, &mut RngStream::new(42), GaussianScale::default());
        assert_eq!(a, b);
        let z1 = sample_standard_normal(20, &mut RngStream::new(1));
        let z2 = sample_standard_normal(20, &mut RngStream::new(1));
        assert_eq!(z1.len(), 20);
        assert_eq!(z1, z2);
        let d1 = RngStream::derive(9, &[1, 2]).next_u64();
        assert_eq!(d1, RngStream::derive(9, &[1, 2]).next_u64());
        assert_ne!(d1, RngStream::derive(9, &[2, 1]).next_u64());
    }

    #[test]
    fn standard_normal_statistics() {
        let z = sample_standard_normal(100_000, &mut RngStream::new(5));
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn adjoint_consistency() {
        let mut rng = RngStream::new(8);
        let a = gaussian_matrix(13, 21, &mut rng, GaussianScale::default());
        let u = sample_standard_normal(21, &mut rng);
        let v = sample_standard_normal(13, &mut rng);
        let lhs = math::dot(&a.matvec(&u), &v);
        let rhs = math::dot(&u, &a.matvec_t(&v));
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn matmul_matches_matvec() {
        let mut rng = RngStream::new(10);
        let a = gaussian_matrix(4, 6, &mut rng, GaussianScale::default());
        let b = gaussian_matrix(6, 3, &mut rng, GaussianScale::default());
        let x = sample_standard_normal(3, &mut rng);
        let lhs = a.matmul(&b).matvec(&x);
        let rhs = a.matvec(&b.matvec(&x));
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-12);
        }
        assert_eq!(a.transpose().transpose(), a);
    }
}
