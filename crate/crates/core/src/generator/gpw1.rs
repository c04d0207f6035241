//! GPW1 weight files.
//!
//! Layout (all integers and floats little-endian, no padding):
//!
//! ```text
//! b"GPW1"
//! u32 layer_count
//! per layer:
//!     u32 in_dim, u32 out_dim, u8 activation (0 linear, 1 relu, 2 sigmoid, 3 tanh)
//!     out_dim * in_dim f64 weights, row-major
//!     out_dim f64 biases
//! ```
//!
//! Trailing bytes are rejected.

use alloc::vec::Vec;

use thiserror::Error;

use super::{Activation, GeneratorError, GeneratorNet, Layer};
use crate::numkit::Matrix;

pub const MAGIC: [u8; 4] = *b"GPW1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}, expected \"GPW1\"")]
    BadMagic([u8; 4]),
    #[error("truncated stream at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("file declares zero layers")]
    NoLayers,
    #[error("layer {layer} has a zero dimension")]
    ZeroDim { layer: usize },
    #[error("unknown activation code {code} in layer {layer}")]
    UnknownActivation { layer: usize, code: u8 },
    #[error("layer {layer} input dim {expected} does not match previous output dim {found}")]
    DimensionChain { layer: usize, expected: usize, found: usize },
    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },
    #[error("{0} trailing bytes after last layer")]
    TrailingBytes(usize),
}

/// Serializes a network to GPW1 bytes.
pub fn encode(net: &GeneratorNet) -> Vec<u8> {
    let size = 8 + net
        .layers()
        .iter()
        .map(|l| 9 + 8 * (l.weight.as_slice().len() + l.bias.len()))
        .sum::<usize>();
    let mut out = Vec::with_capacity(size);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim() as u32).to_le_bytes());
        out.push(l.activation.code());
        for v in l.weight.as_slice().iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let remaining = self.buf.len() - self.pos;
        if remaining < n {
            return Err(FormatError::Truncated { offset: self.pos, needed: n - remaining });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64s(&mut self, count: usize, layer: usize) -> Result<Vec<f64>, FormatError> {
        let bytes = count
            .checked_mul(8)
            .ok_or(FormatError::Truncated { offset: self.pos, needed: usize::MAX })?;
        let raw = self.take(bytes)?;
        let vals: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { layer });
        }
        Ok(vals)
    }
}

/// Parses GPW1 bytes into a validated network.
pub fn decode(bytes: &[u8]) -> Result<GeneratorNet, FormatError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic([magic[0], magic[1], magic[2], magic[3]]));
    }
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(FormatError::NoLayers);
    }
    let mut layers: Vec<Layer> = Vec::new();
    for i in 0..count {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let code = r.take(1)?[0];
        if in_dim == 0 || out_dim == 0 {
            return Err(FormatError::ZeroDim { layer: i });
        }
        if let Some(prev) = layers.last() {
            if prev.out_dim() != in_dim {
                return Err(FormatError::DimensionChain { layer: i, expected: in_dim, found: prev.out_dim() });
            }
        }
        let activation =
            Activation::from_code(code).ok_or(FormatError::UnknownActivation { layer: i, code })?;
        let weights = r.f64s(out_dim * in_dim, i)?;
        let bias = r.f64s(out_dim, i)?;
        let weight = Matrix::from_row_major(out_dim, in_dim, weights).expect("length checked by reader");
        layers.push(Layer { weight, bias, activation });
    }
    if r.pos != bytes.len() {
        return Err(FormatError::TrailingBytes(bytes.len() - r.pos));
    }
    GeneratorNet::new(layers).map_err(|e| match e {
        GeneratorError::NonFinite { layer } => FormatError::NonFinite { layer },
        GeneratorError::DimensionChain { layer, expected, found } => {
            FormatError::DimensionChain { layer, expected, found }
        }
        GeneratorError::ZeroDim { layer } => FormatError::ZeroDim { layer },
        _ => FormatError::NoLayers,
    })
}
