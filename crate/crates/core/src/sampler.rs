//! Few-step denoising loop.
//!
//! Starting from pure noise at `t_T = 1000`, each step asks the denoiser for a
//! clean estimate and re-noises it to the next, lower timestep:
//!
//! ```text
//! y(t_{j-1}) = Ψ(G(y(t_j), t_j, context), ε_{j-1}, t_{j-1})
//! Ψ(x, ε, t) = (1 - σ(t)) x + σ(t) ε,   σ(t) = t / 1000
//! ```
//!
//! The last step lands on `t_0 = 0`, where Ψ is the identity, so the result is
//! the final clean estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::denoisers::{Context, Denoiser};
use crate::{Block, BlockShape, Error, Result};

pub const T_MAX: f64 = 1000.0;

/// Linear noise level of a timestep.
pub fn sigma(t: f64) -> f64 {
    t / T_MAX
}

/// Strictly decreasing timesteps from 1000 down to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepSchedule {
    steps: Vec<f64>,
}

impl Default for TimestepSchedule {
    fn default() -> Self {
        Self::uniform(4).expect("4 > 0")
    }
}

impl TimestepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.len() < 2 {
            return Err(Error::config("timestep schedule needs at least two entries"));
        }
        if steps[0] != T_MAX || *steps.last().unwrap() != 0.0 {
            return Err(Error::config("timestep schedule must start at 1000 and end at 0"));
        }
        if steps
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::config("timesteps must be strictly decreasing"));
        }
        Ok(Self { steps })
    }

    /// `count` evenly spaced denoising steps; `uniform(4)` is {1000, 750, 500, 250, 0}.
    pub fn uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::config("need at least one denoising step"));
        }
        let steps = (0..=count)
            .map(|j| T_MAX * (count - j) as f64 / count as f64)
            .collect();
        Self::new(steps)
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Number of denoiser applications (T).
    pub fn count(&self) -> usize {
        self.steps.len() - 1
    }
}

/// Seeded stream of unit Gaussian draws.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    drawn: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            drawn: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of scalars drawn so far.
    pub fn position(&self) -> u64 {
        self.drawn
    }

    pub fn gaussian(&mut self) -> f64 {
        self.drawn += 1;
        self.rng.sample(StandardNormal)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.gaussian();
        }
    }

    pub fn gaussian_block(&mut self, shape: BlockShape) -> Block {
        let mut b = Block::zeros(shape);
        self.fill_gaussian(b.as_mut_slice());
        b
    }
}

/// Deterministic child seed for stream `index` of `seed` (splitmix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ψ: interpolate a clean estimate toward `eps` at noise level `σ(t)`.
pub fn forward_noise(x_hat: &Block, eps: &Block, t: f64) -> Result<Block> {
    if !(0.0..=T_MAX).contains(&t) {
        return Err(Error::TimestepOutOfRange(t));
    }
    eps.ensure_shape(x_hat.shape())?;
    let s = sigma(t);
    let data = x_hat
        .as_slice()
        .iter()
        .zip(eps.as_slice())
        .map(|(x, e)| (1.0 - s) * x + s * e)
        .collect();
    Block::from_vec(x_hat.shape(), data)
}

/// Runs the full denoising loop for one block.
///
/// Fresh noise is drawn from `noise` for the initial sample and for every
/// re-noising step above `t = 0`; denoisers that need randomness draw from the
/// same stream.
pub fn sample_block(
    denoiser: &dyn Denoiser,
    schedule: &TimestepSchedule,
    shape: BlockShape,
    context: &Context,
    noise: &mut NoiseSource,
) -> Result<Block> {
    let mut y = noise.gaussian_block(shape);
    for pair in schedule.steps().windows(2) {
        let (t, t_next) = (pair[0], pair[1]);
        let x_hat = denoiser.estimate(&y, t, context, noise)?;
        x_hat.ensure_shape(shape)?;
        y = if t_next == 0.0 {
            x_hat
        } else {
            let eps = noise.gaussian_block(shape);
            forward_noise(&x_hat, &eps, t_next)?
        };
    }
    Ok(y)
}
