//! Toy denoisers that consume the expanded cache context.
//!
//! Every denoiser maps a noisy block at timestep `t` plus the conditioning
//! context to a clean estimate of the same shape.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rope::RotaryConfig;
use crate::sampler::{sigma, NoiseSource};
use crate::{Block, Error, Result};

/// A cached latent frame at its embedding position.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFrame {
    pub position: usize,
    pub values: Vec<f64>,
}

/// Expanded conditioning for one autoregressive step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    pub frames: Vec<ContextFrame>,
    /// Position of the first frame of the block being generated.
    pub query_start: usize,
    /// Optional fixed conditioning vector (prompt slot); unused by the toy denoisers.
    pub conditioning: Option<Vec<f64>>,
}

impl Context {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(frames: Vec<ContextFrame>, query_start: usize) -> Self {
        Self {
            frames,
            query_start,
            conditioning: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The context frame embedded at the highest position.
    pub fn most_recent(&self) -> Option<&ContextFrame> {
        self.frames.iter().max_by_key(|f| f.position)
    }

    /// Same context with every position (context and query) moved by `delta`.
    pub fn shifted(&self, delta: usize) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|f| ContextFrame {
                    position: f.position + delta,
                    values: f.values.clone(),
                })
                .collect(),
            query_start: self.query_start + delta,
            conditioning: self.conditioning.clone(),
        }
    }
}

pub trait Denoiser {
    /// Clean estimate of `noisy` at timestep `t`.
    fn estimate(&self, noisy: &Block, t: f64, context: &Context, noise: &mut NoiseSource) -> Result<Block>;
}

fn check_context_width(context: &Context, dim: usize) -> Result<()> {
    match context.frames.iter().find(|f| f.values.len() != dim) {
        Some(f) => Err(Error::DimensionMismatch {
            expected: dim,
            got: f.values.len(),
        }),
        None => Ok(()),
    }
}

/// Always predicts a block filled with `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDenoiser {
    value: f64,
}

impl ConstantDenoiser {
    pub fn new(value: f64) -> Self {
        Self { value }
    }
}

impl Denoiser for ConstantDenoiser {
    fn estimate(&self, noisy: &Block, _t: f64, _: &Context, _: &mut NoiseSource) -> Result<Block> {
        Ok(Block::filled(noisy.shape(), self.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMode {
    /// Return `E[x | y, context]`.
    #[default]
    Mean,
    /// Return a draw from `p(x | y, context)`. Composed with the re-noising loop
    /// this samples the data model exactly.
    Sample,
}

/// Exact Gaussian posterior under an AR(1) frame model.
///
/// Frames follow `z_{n+1} = ρ z_n + sqrt(1-ρ²) w` independently per coordinate,
/// so the stationary variance is 1. The prior for a block is conditioned on the
/// most recent context frame; the observation is `y = (1-σ) x + σ ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticGaussianDenoiser {
    rho: f64,
    mode: PosteriorMode,
}

/// Posterior of one coordinate's frame chain, shared across coordinates.
struct Posterior {
    /// Prior mean coefficients: `m_k = prior_gain[k] * c`.
    prior_gain: Vec<f64>,
    /// `gain[k][a]`: weight of residual `y_a - a m_a` in the mean of frame `k`.
    gain: Vec<Vec<f64>>,
    /// Lower Cholesky factor of the posterior covariance.
    chol: Vec<Vec<f64>>,
}

impl AnalyticGaussianDenoiser {
    pub fn new(rho: f64, mode: PosteriorMode) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::config(format!("rho must lie in (-1, 1), got {rho}")));
        }
        Ok(Self { rho, mode })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mode(&self) -> PosteriorMode {
        self.mode
    }

    /// Prior mean gains and covariance of `n` frames, optionally conditioned on
    /// the frame immediately preceding them.
    pub fn prior(&self, n: usize, conditioned: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
        let rho = self.rho;
        let gain: Vec<f64> = (0..n)
            .map(|k| if conditioned { rho.powi(k as i32 + 1) } else { 0.0 })
            .collect();
        let cov = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| rho.powi((a as i32 - b as i32).abs()) - gain[a] * gain[b])
                    .collect()
            })
            .collect();
        (gain, cov)
    }

    fn posterior(&self, n: usize, s: f64, conditioned: bool) -> Posterior {
        let (prior_gain, c) = self.prior(n, conditioned);
        let a = 1.0 - s;
        // M = a² C + s² I
        let mut m = c.clone();
        for (i, row) in m.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= a * a;
            }
            row[i] += s * s;
        }
        let l = cholesky(&m);
        // gain = a C M^{-1}  (M, C symmetric)
        let m_inv_c: Vec<Vec<f64>> = transpose(
            &(0..n)
                .map(|j| solve_chol(&l, &c.iter().map(|r| r[j]).collect::<Vec<_>>()))
                .collect::<Vec<_>>(),
        );
        let gain: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n).map(|j| a * m_inv_c[j][k]).collect())
            .collect();
        // cov = C - a² C M^{-1} C
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|p| {
                (0..n)
                    .map(|q| {
                        let corr: f64 = (0..n).map(|j| c[p][j] * m_inv_c[j][q]).sum();
                        c[p][q] - a * a * corr
                    })
                    .collect()
            })
            .collect();
        Posterior {
            prior_gain,
            gain,
            chol: cholesky(&cov),
        }
    }
}

impl Denoiser for AnalyticGaussianDenoiser {
    fn estimate(&self, noisy: &Block, t: f64, context: &Context, noise: &mut NoiseSource) -> Result<Block> {
        let shape = noisy.shape();
        check_context_width(context, shape.dim)?;
        if !(0.0..=crate::sampler::T_MAX).contains(&t) {
            return Err(Error::TimestepOutOfRange(t));
        }
        let s = sigma(t);
        if s == 0.0 {
            return Ok(noisy.clone());
        }
        let last = context.most_recent();
        let post = self.posterior(shape.frames, s, last.is_some());
        let a = 1.0 - s;
        let n = shape.frames;
        let mut out = Block::zeros(shape);
        let mut z = vec![0.0; n];
        for d in 0..shape.dim {
            let c = last.map_or(0.0, |f| f.values[d]);
            let prior_mean: Vec<f64> = post.prior_gain.iter().map(|g| g * c).collect();
            let resid: Vec<f64> = (0..n).map(|k| noisy.frame(k)[d] - a * prior_mean[k]).collect();
            if self.mode == PosteriorMode::Sample {
                noise.fill_gaussian(&mut z);
            }
            for k in 0..n {
                let mut v = prior_mean[k] + dot(&post.gain[k], &resid);
                if self.mode == PosteriorMode::Sample {
                    v += dot(&post.chol[k][..=k], &z[..=k]);
                }
                out.frame_mut(k)[d] = v;
            }
        }
        Ok(out)
    }
}

/// Pulls each frame toward the mean of the context, plus a controllable drift.
///
/// `estimate = w * mean(context) + (1 - w) * E0[x | y] + bias + innovation * N(0, 1)`,
/// where `E0[x | y] = a y / (a² + s²)` is the posterior mean under a unit
/// Gaussian prior. With an empty context `w` is treated as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextMeanDenoiser {
    anchor_weight: f64,
    innovation_scale: f64,
    bias: f64,
}

impl ContextMeanDenoiser {
    pub fn new(anchor_weight: f64, innovation_scale: f64, bias: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&anchor_weight) {
            return Err(Error::config(format!(
                "anchor_weight must lie in [0, 1], got {anchor_weight}"
            )));
        }
        if innovation_scale.is_nan() || innovation_scale < 0.0 {
            return Err(Error::config("innovation_scale must be non-negative"));
        }
        if !bias.is_finite() {
            return Err(Error::config("bias must be finite"));
        }
        Ok(Self {
            anchor_weight,
            innovation_scale,
            bias,
        })
    }
}

impl Denoiser for ContextMeanDenoiser {
    fn estimate(&self, noisy: &Block, t: f64, context: &Context, noise: &mut NoiseSource) -> Result<Block> {
        let shape = noisy.shape();
        check_context_width(context, shape.dim)?;
        let s = sigma(t);
        let a = 1.0 - s;
        let shrink = a / (a * a + s * s);

        let mut mean = vec![0.0; shape.dim];
        let w = if context.is_empty() {
            0.0
        } else {
            for f in &context.frames {
                for (m, v) in mean.iter_mut().zip(&f.values) {
                    *m += v;
                }
            }
            let n = context.frames.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            self.anchor_weight
        };

        let mut out = Block::zeros(shape);
        for k in 0..shape.frames {
            let y = noisy.frame(k);
            let frame = out.frame_mut(k);
            for d in 0..shape.dim {
                frame[d] = w * mean[d] + (1.0 - w) * shrink * y[d] + self.bias;
            }
        }
        if self.innovation_scale > 0.0 {
            for v in out.as_mut_slice() {
                *v += self.innovation_scale * noise.gaussian();
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct AttentionLayer {
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
    wo: Matrix,
}

/// Fixed-random-weight multi-head attention over frame tokens.
///
/// Context frames and current-block frames are embedded by the same input
/// projection. Queries come only from current-block tokens; keys and values are
/// the context tokens followed by the current-block tokens. RoPE is applied to
/// queries and keys at their frame positions, per head.
#[derive(Debug, Clone)]
pub struct TinyAttentionDenoiser {
    frame_dim: usize,
    head_count: usize,
    head_dim: usize,
    rope: RotaryConfig,
    w_in: Matrix,
    t_embed: Vec<f64>,
    layers: Vec<AttentionLayer>,
    w_out: Matrix,
}

impl TinyAttentionDenoiser {
    pub fn new(
        frame_dim: usize,
        model_dim: usize,
        head_count: usize,
        layer_count: usize,
        weight_seed: u64,
        rope_base: f64,
    ) -> Result<Self> {
        if frame_dim == 0 || model_dim == 0 || head_count == 0 || layer_count == 0 {
            return Err(Error::config("attention dimensions must be positive"));
        }
        if !model_dim.is_multiple_of(head_count) {
            return Err(Error::config(format!(
                "model_dim {model_dim} is not divisible by head_count {head_count}"
            )));
        }
        let head_dim = model_dim / head_count;
        let rope = RotaryConfig::new(head_dim, rope_base)?;
        let mut rng = ChaCha8Rng::seed_from_u64(weight_seed);
        let w_in = Matrix::random(model_dim, frame_dim, &mut rng);
        let t_embed = Matrix::random(model_dim, 1, &mut rng).data;
        let layers = (0..layer_count)
            .map(|_| AttentionLayer {
                wq: Matrix::random(model_dim, model_dim, &mut rng),
                wk: Matrix::random(model_dim, model_dim, &mut rng),
                wv: Matrix::random(model_dim, model_dim, &mut rng),
                wo: Matrix::random(model_dim, model_dim, &mut rng),
            })
            .collect();
        let w_out = Matrix::random(frame_dim, model_dim, &mut rng);
        Ok(Self {
            frame_dim,
            head_count,
            head_dim,
            rope,
            w_in,
            t_embed,
            layers,
            w_out,
        })
    }

    fn rotate_heads(&self, v: &mut [f64], position: usize) {
        for head in v.chunks_exact_mut(self.head_dim) {
            self.rope
                .rotate_in_place(head, position)
                .expect("head width matches rotary dim");
        }
    }
}

impl Denoiser for TinyAttentionDenoiser {
    fn estimate(&self, noisy: &Block, t: f64, context: &Context, _: &mut NoiseSource) -> Result<Block> {
        let shape = noisy.shape();
        if shape.dim != self.frame_dim {
            return Err(Error::DimensionMismatch {
                expected: self.frame_dim,
                got: shape.dim,
            });
        }
        check_context_width(context, self.frame_dim)?;

        let ctx_tokens: Vec<Vec<f64>> = context
            .frames
            .iter()
            .map(|f| self.w_in.apply(&f.values))
            .collect();
        let ctx_pos: Vec<usize> = context.frames.iter().map(|f| f.position).collect();
        let query_pos: Vec<usize> = (0..shape.frames).map(|k| context.query_start + k).collect();
        let level = sigma(t);
        let mut hidden: Vec<Vec<f64>> = noisy
            .frames()
            .map(|f| {
                let mut h = self.w_in.apply(f);
                for (x, e) in h.iter_mut().zip(&self.t_embed) {
                    *x += level * e;
                }
                h
            })
            .collect();

        let scale = 1.0 / (self.head_dim as f64).sqrt();
        for layer in &self.layers {
            let mut keys = Vec::with_capacity(ctx_tokens.len() + hidden.len());
            let mut values = Vec::with_capacity(keys.capacity());
            for (tok, &p) in ctx_tokens
                .iter()
                .zip(&ctx_pos)
                .chain(hidden.iter().zip(&query_pos))
            {
                let mut k = layer.wk.apply(tok);
                self.rotate_heads(&mut k, p);
                keys.push(k);
                values.push(layer.wv.apply(tok));
            }
            let mut next = Vec::with_capacity(hidden.len());
            for (h, &p) in hidden.iter().zip(&query_pos) {
                let mut q = layer.wq.apply(h);
                self.rotate_heads(&mut q, p);
                let mut attended = vec![0.0; q.len()];
                for head in 0..self.head_count {
                    let r = head * self.head_dim..(head + 1) * self.head_dim;
                    let logits: Vec<f64> = keys
                        .iter()
                        .map(|k| scale * dot(&q[r.clone()], &k[r.clone()]))
                        .collect();
                    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                    let total: f64 = weights.iter().sum();
                    for (w, v) in weights.iter().zip(&values) {
                        for (o, x) in attended[r.clone()].iter_mut().zip(&v[r.clone()]) {
                            *o += w / total * x;
                        }
                    }
                }
                let delta = layer.wo.apply(&attended);
                next.push(h.iter().zip(&delta).map(|(a, b)| a + b).collect());
            }
            hidden = next;
        }

        let frames: Vec<Vec<f64>> = hidden.iter().map(|h| self.w_out.apply(h)).collect();
        Block::from_frames(&frames)
    }
}

/// Denoiser selection as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DenoiserSpec {
    Constant {
        #[serde(default)]
        value: f64,
    },
    Analytic {
        rho: f64,
        #[serde(default)]
        posterior: PosteriorMode,
    },
    ContextMean {
        #[serde(default = "one")]
        anchor_weight: f64,
        #[serde(default)]
        innovation_scale: f64,
        #[serde(default)]
        bias: f64,
    },
    Attention {
        #[serde(default = "default_model_dim")]
        model_dim: usize,
        #[serde(default = "one_usize")]
        head_count: usize,
        #[serde(default = "one_usize")]
        layer_count: usize,
        #[serde(default)]
        weight_seed: u64,
        #[serde(default = "default_rope_base")]
        rope_base: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_model_dim() -> usize {
    16
}
fn default_rope_base() -> f64 {
    10_000.0
}

impl DenoiserSpec {
    pub fn build(&self, frame_dim: usize) -> Result<Box<dyn Denoiser>> {
        Ok(match *self {
            DenoiserSpec::Constant { value } => Box::new(ConstantDenoiser::new(value)),
            DenoiserSpec::Analytic { rho, posterior } => {
                Box::new(AnalyticGaussianDenoiser::new(rho, posterior)?)
            }
            DenoiserSpec::ContextMean {
                anchor_weight,
                innovation_scale,
                bias,
            } => Box::new(ContextMeanDenoiser::new(anchor_weight, innovation_scale, bias)?),
            DenoiserSpec::Attention {
                model_dim,
                head_count,
                layer_count,
                weight_seed,
                rope_base,
            } => Box::new(TinyAttentionDenoiser::new(
                frame_dim,
                model_dim,
                head_count,
                layer_count,
                weight_seed,
                rope_base,
            )?),
        })
    }
}

#[derive(Debug, Clone)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (cols as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        Self { rows, cols, data }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(&self.data[r * self.cols..(r + 1) * self.cols], x))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect()
}

/// Lower Cholesky factor of a symmetric positive semi-definite matrix.
/// Zero pivots produce zero columns.
fn cholesky(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (m[i][i] - s).max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

fn solve_chol(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}
