//! Latent frames and blocks.
//!
//! A latent frame is a fixed-length real vector; a block is an ordered run of
//! `frames` latent frames generated together in one autoregressive step.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    /// Latent frames per block.
    pub frames: usize,
    /// Width of each latent frame.
    pub dim: usize,
}

impl BlockShape {
    pub fn new(frames: usize, dim: usize) -> Self {
        Self { frames, dim }
    }

    pub fn len(&self) -> usize {
        self.frames * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major `frames x dim` storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    shape: BlockShape,
    data: Vec<f64>,
}

impl Block {
    pub fn zeros(shape: BlockShape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: BlockShape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: BlockShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_frames(frames: &[Vec<f64>]) -> Result<Self> {
        let dim = frames.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(frames.len() * dim);
        for f in frames {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.len(),
                });
            }
            data.extend_from_slice(f);
        }
        Ok(Self {
            shape: BlockShape::new(frames.len(), dim),
            data,
        })
    }

    pub fn shape(&self) -> BlockShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let d = self.shape.dim;
        &self.data[k * d..(k + 1) * d]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f64] {
        let d = self.shape.dim;
        &mut self.data[k * d..(k + 1) * d]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.shape.dim.max(1))
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub(crate) fn ensure_shape(&self, shape: BlockShape) -> Result<()> {
        if self.shape != shape {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                got: self.data.len(),
            });
        }
        Ok(())
    }
}
