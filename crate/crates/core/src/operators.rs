//! Measurement operators and sparsifying bases.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;
use crate::numkit::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("vector has length {found}, operator expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("cannot compose: inner output dim {inner_out} != outer input dim {outer_in}")]
    Compose { outer_in: usize, inner_out: usize },
    #[error("basis size must be positive")]
    EmptyBasis,
}

/// Orthonormal DCT-II kernel of one size: `table[k * n + i] = c_k cos(π (2i+1) k / 2n)`
/// with `c_0 = √(1/n)` and `c_k = √(2/n)` otherwise.
#[derive(Clone, Debug, PartialEq)]
struct DctKernel {
    n: usize,
    table: Vec<f64>,
}

impl DctKernel {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let mut table = Vec::with_capacity(n * n);
        for k in 0..n {
            let c = if k == 0 { math::sqrt(1.0 / nf) } else { math::sqrt(2.0 / nf) };
            for i in 0..n {
                let arg = core::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf);
                table.push(c * math::cos(arg));
            }
        }
        Self { n, table }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = math::dot(&self.table[k * self.n..(k + 1) * self.n], x);
        }
    }

    fn inverse(&self, c: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &ck) in c.iter().enumerate() {
            for (o, t) in out.iter_mut().zip(&self.table[k * self.n..(k + 1) * self.n]) {
                *o += ck * t;
            }
        }
    }
}

/// Sparsifying basis. Analysis maps a signal to coefficients, synthesis inverts it.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Identity(usize),
    Dct1d(DctBasis1d),
    /// Separable 2-D DCT over an `h × w` image vectorized row-major.
    Dct2d(DctBasis2d),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DctBasis1d {
    kernel: DctKernel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DctBasis2d {
    rows: DctKernel,
    cols: DctKernel,
}

impl Basis {
    pub fn identity(n: usize) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::EmptyBasis);
        }
        Ok(Basis::Identity(n))
    }

    pub fn dct(n: usize) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::EmptyBasis);
        }
        Ok(Basis::Dct1d(DctBasis1d { kernel: DctKernel::new(n) }))
    }

    pub fn dct2d(h: usize, w: usize) -> Result<Self, OperatorError> {
        if h == 0 || w == 0 {
            return Err(OperatorError::EmptyBasis);
        }
        Ok(Basis::Dct2d(DctBasis2d { rows: DctKernel::new(h), cols: DctKernel::new(w) }))
    }

    pub fn size(&self) -> usize {
        match self {
            Basis::Identity(n) => *n,
            Basis::Dct1d(b) => b.kernel.n,
            Basis::Dct2d(b) => b.rows.n * b.cols.n,
        }
    }

    fn check(&self, v: &[f64]) -> Result<(), OperatorError> {
        if v.len() != self.size() {
            return Err(OperatorError::Dimension { expected: self.size(), found: v.len() });
        }
        Ok(())
    }

    pub fn analysis(&self, signal: &[f64]) -> Result<Vec<f64>, OperatorError> {
        self.check(signal)?;
        Ok(self.transform(signal, true))
    }

    pub fn synthesis(&self, coeffs: &[f64]) -> Result<Vec<f64>, OperatorError> {
        self.check(coeffs)?;
        Ok(self.transform(coeffs, false))
    }

    fn transform(&self, v: &[f64], forward: bool) -> Vec<f64> {
        let apply = |k: &DctKernel, x: &[f64], out: &mut [f64]| {
            if forward {
                k.forward(x, out)
            } else {
                k.inverse(x, out)
            }
        };
        match self {
            Basis::Identity(_) => v.to_vec(),
            Basis::Dct1d(b) => {
                let mut out = vec![0.0; v.len()];
                apply(&b.kernel, v, &mut out);
                out
            }
            Basis::Dct2d(b) => {
                let (h, w) = (b.rows.n, b.cols.n);
                let mut tmp = vec![0.0; h * w];
                for r in 0..h {
                    apply(&b.cols, &v[r * w..(r + 1) * w], &mut tmp[r * w..(r + 1) * w]);
                }
                let mut out = vec![0.0; h * w];
                let mut col = vec![0.0; h];
                let mut res = vec![0.0; h];
                for c in 0..w {
                    for r in 0..h {
                        col[r] = tmp[r * w + c];
                    }
                    apply(&b.rows, &col, &mut res);
                    for r in 0..h {
                        out[r * w + c] = res[r];
                    }
                }
                out
            }
        }
    }
}

/// Linear map `R^n → R^m` with an exact adjoint.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOperator {
    Dense(Matrix),
    /// Keeps the entries where the mask is true, in order.
    Selection { mask: Vec<bool>, kept: Vec<usize> },
    /// `outer ∘ inner`.
    Composed(Box<LinearOperator>, Box<LinearOperator>),
    /// Basis synthesis (coefficients to signal).
    Synthesis(Basis),
    /// Basis analysis (signal to coefficients).
    Analysis(Basis),
}

impl LinearOperator {
    pub fn dense(a: Matrix) -> Self {
        LinearOperator::Dense(a)
    }

    pub fn selection(mask: Vec<bool>) -> Self {
        let kept = mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        LinearOperator::Selection { mask, kept }
    }

    pub fn identity(n: usize) -> Self {
        Self::selection(vec![true; n])
    }

    pub fn compose(outer: LinearOperator, inner: LinearOperator) -> Result<Self, OperatorError> {
        if outer.in_dim() != inner.out_dim() {
            return Err(OperatorError::Compose { outer_in: outer.in_dim(), inner_out: inner.out_dim() });
        }
        Ok(LinearOperator::Composed(Box::new(outer), Box::new(inner)))
    }

    pub fn in_dim(&self) -> usize {
        match self {
            LinearOperator::Dense(a) => a.cols(),
            LinearOperator::Selection { mask, .. } => mask.len(),
            LinearOperator::Composed(_, inner) => inner.in_dim(),
            LinearOperator::Synthesis(b) | LinearOperator::Analysis(b) => b.size(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearOperator::Dense(a) => a.rows(),
            LinearOperator::Selection { kept, .. } => kept.len(),
            LinearOperator::Composed(outer, _) => outer.out_dim(),
            LinearOperator::Synthesis(b) | LinearOperator::Analysis(b) => b.size(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if x.len() != self.in_dim() {
            return Err(OperatorError::Dimension { expected: self.in_dim(), found: x.len() });
        }
        Ok(match self {
            LinearOperator::Dense(a) => a.matvec(x),
            LinearOperator::Selection { kept, .. } => kept.iter().map(|&i| x[i]).collect(),
            LinearOperator::Composed(outer, inner) => outer.apply(&inner.apply(x)?)?,
            LinearOperator::Synthesis(b) => b.synthesis(x)?,
            LinearOperator::Analysis(b) => b.analysis(x)?,
        })
    }

    pub fn adjoint(&self, r: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if r.len() != self.out_dim() {
            return Err(OperatorError::Dimension { expected: self.out_dim(), found: r.len() });
        }
        Ok(match self {
            LinearOperator::Dense(a) => a.matvec_t(r),
            LinearOperator::Selection { mask, kept } => {
                let mut out = vec![0.0; mask.len()];
                for (&i, &v) in kept.iter().zip(r) {
                    out[i] = v;
                }
                out
            }
            LinearOperator::Composed(outer, inner) => inner.adjoint(&outer.adjoint(r)?)?,
            // Orthonormal: the adjoint of synthesis is analysis and vice versa.
            LinearOperator::Synthesis(b) => b.analysis(r)?,
            LinearOperator::Analysis(b) => b.synthesis(r)?,
        })
    }

    /// Explicit matrix of the operator, built column by column.
    pub fn to_matrix(&self) -> Matrix {
        let (m, n) = (self.out_dim(), self.in_dim());
        let mut out = Matrix::zeros(m, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e).expect("dims match");
            for (i, v) in col.into_iter().enumerate() {
                out.set(i, j, v);
            }
            e[j] = 0.0;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{gaussian_matrix, sample_standard_normal, GaussianScale, RngStream};

    #[test]
    fn selection_identity_and_adjoint() {
        let op = LinearOperator::identity(4);
        assert_eq!(op.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let sel = LinearOperator::selection(vec![false, true, false]);
        assert_eq!(sel.adjoint(&[5.0]).unwrap(), vec![0.0, 5.0, 0.0]);
        assert_eq!(sel.apply(&[7.0, 8.0, 9.0]).unwrap(), vec![8.0]);
    }

    #[test]
    fn dense_matches_matvec() {
        let mut rng = RngStream::new(2);
        let a = gaussian_matrix(3, 5, &mut rng, GaussianScale::default());
        let x = sample_standard_normal(5, &mut rng);
        let r = sample_standard_normal(3, &mut rng);
        let op = LinearOperator::dense(a.clone());
        assert_eq!(op.apply(&x).unwrap(), a.matvec(&x));
        assert_eq!(op.adjoint(&r).unwrap(), a.matvec_t(&r));
    }

    #[test]
    fn dimension_errors() {
        let op = LinearOperator::identity(3);
        assert_eq!(op.apply(&[1.0]), Err(OperatorError::Dimension { expected: 3, found: 1 }));
        assert!(op.adjoint(&[1.0; 4]).is_err());
        assert!(LinearOperator::compose(LinearOperator::identity(3), LinearOperator::identity(2)).is_err());
        assert!(Basis::dct(4).unwrap().analysis(&[0.0; 3]).is_err());
    }

    #[test]
    fn dct_constant_signal_is_dc_only() {
        let b = Basis::dct(16).unwrap();
        let c = b.analysis(&[3.0; 16]).unwrap();
        assert!((c[0] - 3.0 * 4.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dct_round_trip_and_parseval() {
        let mut rng = RngStream::new(5);
        for b in [Basis::dct(64).unwrap(), Basis::dct2d(8, 8).unwrap(), Basis::dct2d(4, 6).unwrap()] {
            let x = sample_standard_normal(b.size(), &mut rng);
            let c = b.analysis(&x).unwrap();
            let back = b.synthesis(&c).unwrap();
            for (a, y) in x.iter().zip(&back) {
                assert!((a - y).abs() < 1e-10);
            }
            assert!((math::norm(&c) - math::norm(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn dct2d_is_separable_product() {
        let (h, w) = (3, 5);
        let b = Basis::dct2d(h, w).unwrap();
        let rows = Basis::dct(h).unwrap();
        let cols = Basis::dct(w).unwrap();
        let m2 = LinearOperator::Analysis(b).to_matrix();
        let mh = LinearOperator::Analysis(rows).to_matrix();
        let mw = LinearOperator::Analysis(cols).to_matrix();
        // Kronecker product of the 1-D kernels for row-major vectorization.
        for i in 0..h * w {
            for j in 0..h * w {
                let kron = mh.get(i / w, j / w) * mw.get(i % w, j % w);
                assert!((m2.get(i, j) - kron).abs() < 1e-12);
            }
        }
    }
}
