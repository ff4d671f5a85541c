//! Rotary positional embedding.
//!
//! Coordinate pair `(2t, 2t+1)` is rotated by `m * base^(-2t/dim)` at position
//! `m`. Dot products of two rotated vectors depend only on the difference of
//! their positions, which is what lets cached frames be re-indexed freely.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RotaryConfig {
    dim: usize,
    base: f64,
    inv_freq: Vec<f64>,
}

impl RotaryConfig {
    pub fn new(dim: usize, base: f64) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::config(format!(
                "rotary dim must be even and positive, got {dim}"
            )));
        }
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::config(format!("rotary base must be positive, got {base}")));
        }
        let inv_freq = (0..dim / 2)
            .map(|t| base.powf(-((2 * t) as f64) / dim as f64))
            .collect();
        Ok(Self { dim, base, inv_freq })
    }

    pub fn with_dim(dim: usize) -> Result<Self> {
        Self::new(dim, 10_000.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn rotate(&self, v: &[f64], position: usize) -> Result<Vec<f64>> {
        let mut out = v.to_vec();
        self.rotate_in_place(&mut out, position)?;
        Ok(out)
    }

    pub fn rotate_in_place(&self, v: &mut [f64], position: usize) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let m = position as f64;
        for (pair, &freq) in v.chunks_exact_mut(2).zip(&self.inv_freq) {
            let (sin, cos) = (m * freq).sin_cos();
            let (x, y) = (pair[0], pair[1]);
            pair[0] = x * cos - y * sin;
            pair[1] = x * sin + y * cos;
        }
        Ok(())
    }
}

/// Frame-granular position of offset `k` inside a block embedded at index `j`.
pub fn position_of(j: usize, k: usize, block_size: usize) -> usize {
    block_size * j + k
}
