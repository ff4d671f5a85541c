//! Blockwise autoregressive rollout.
//!
//! Each step builds the policy schedule, expands it to positioned frames from
//! the bounded history, samples the next block and records a trace entry.

use std::collections::VecDeque;

use crate::denoisers::{Context, ContextFrame, Denoiser, DenoiserSpec};
use crate::sampler::{derive_seed, sample_block, NoiseSource, TimestepSchedule};
use crate::schedule::{self, CacheSlot, Orientation, Policy, PolicyConfig, Schedule};
use crate::{Block, BlockShape, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutConfig {
    pub policy: PolicyConfig,
    pub timesteps: TimestepSchedule,
    pub denoiser: DenoiserSpec,
    /// Number of blocks to generate.
    pub horizon: usize,
    pub seed: u64,
    pub frame_dim: usize,
    /// Keep raw frames in trace records.
    pub record_frames: bool,
}

impl RolloutConfig {
    pub fn new(policy: PolicyConfig, denoiser: DenoiserSpec, horizon: usize) -> Self {
        Self {
            policy,
            timesteps: TimestepSchedule::default(),
            denoiser,
            horizon,
            seed: 0,
            frame_dim: 8,
            record_frames: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_frame_dim(mut self, dim: usize) -> Self {
        self.frame_dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be >= 1"));
        }
        if self.frame_dim == 0 {
            return Err(Error::config("frame_dim must be >= 1"));
        }
        Ok(())
    }

    pub fn block_shape(&self) -> BlockShape {
        BlockShape::new(self.policy.block_size(), self.frame_dim)
    }
}

/// Generated blocks the schedules may still reference.
///
/// Sink-bearing policies keep the first `K` blocks forever; every policy keeps
/// a ring of the last `K`. Retained storage is therefore at most `2K` blocks,
/// and `K` under the sliding window.
#[derive(Debug, Clone)]
pub struct HistoryStore {
    capacity: usize,
    keep_permanent: bool,
    permanent: Vec<Block>,
    recent: VecDeque<Block>,
    /// Id the next pushed block receives.
    next_id: usize,
    peak: usize,
}

impl HistoryStore {
    pub fn new(capacity: usize, keep_permanent: bool) -> Self {
        Self {
            capacity,
            keep_permanent,
            permanent: Vec::with_capacity(if keep_permanent { capacity } else { 0 }),
            recent: VecDeque::with_capacity(capacity),
            next_id: 0,
            peak: 0,
        }
    }

    pub fn push(&mut self, block: Block) {
        if self.keep_permanent && self.permanent.len() < self.capacity {
            self.permanent.push(block.clone());
        }
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(block);
        self.next_id += 1;
        self.peak = self.peak.max(self.retained());
    }

    pub fn get(&self, id: usize) -> Option<&Block> {
        let oldest_recent = self.next_id - self.recent.len();
        if id >= oldest_recent && id < self.next_id {
            return self.recent.get(id - oldest_recent);
        }
        self.permanent.get(id)
    }

    /// Blocks currently held.
    pub fn retained(&self) -> usize {
        self.permanent.len() + self.recent.len()
    }

    /// Largest `retained()` observed so far.
    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn generated(&self) -> usize {
        self.next_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub mean: f64,
    pub var: f64,
}

impl FrameStats {
    pub fn of(frame: &[f64]) -> Self {
        let n = frame.len().max(1) as f64;
        let mean = frame.iter().sum::<f64>() / n;
        let var = frame.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, var }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub schedule: Vec<CacheSlot>,
    pub frame_stats: Vec<FrameStats>,
    pub frames: Option<Vec<Vec<f64>>>,
    /// Seed of the step's noise stream, derived from the rollout seed.
    pub seed: u64,
}

impl TraceRecord {
    /// Mean over all values of the block.
    pub fn block_mean(&self) -> f64 {
        if self.frame_stats.is_empty() {
            return 0.0;
        }
        self.frame_stats.iter().map(|s| s.mean).sum::<f64>() / self.frame_stats.len() as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutTrace {
    pub records: Vec<TraceRecord>,
}

impl RolloutTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A rollout in progress.
pub struct Rollout {
    cfg: RolloutConfig,
    denoiser: Box<dyn Denoiser>,
    history: HistoryStore,
}

impl Rollout {
    pub fn new(cfg: RolloutConfig) -> Result<Self> {
        cfg.validate()?;
        let denoiser = cfg.denoiser.build(cfg.frame_dim)?;
        Ok(Self::with_denoiser(cfg, denoiser))
    }

    /// Uses `denoiser` instead of building one from `cfg.denoiser`.
    pub fn with_denoiser(cfg: RolloutConfig, denoiser: Box<dyn Denoiser>) -> Self {
        let history = HistoryStore::new(cfg.policy.k(), cfg.policy.policy().uses_sink());
        Self {
            cfg,
            denoiser,
            history,
        }
    }

    pub fn history(&self) -> &HistoryStore {
        &self.history
    }

    pub fn next_step(&self) -> usize {
        self.history.generated()
    }

    /// Positioned frames for a schedule of step `i`.
    pub fn context_for(&self, sched: &Schedule) -> Result<Context> {
        let bs = self.cfg.policy.block_size();
        let mut frames = Vec::with_capacity(sched.len() * bs);
        for &slot in &sched.slots {
            let block = self.history.get(slot.content_id).ok_or(Error::MissingBlock {
                step: sched.step,
                content_id: slot.content_id,
            })?;
            for r in schedule::frame_expand(slot, bs) {
                let (_, offset) = r.source(bs);
                frames.push(ContextFrame {
                    position: r.position,
                    values: block.frame(offset).to_vec(),
                });
            }
        }
        Ok(Context::new(frames, crate::rope::position_of(sched.step, 0, bs)))
    }

    /// Generates the next block and returns its trace record.
    pub fn step(&mut self) -> Result<(Block, TraceRecord)> {
        let i = self.next_step();
        let sched = schedule::schedule(&self.cfg.policy, i);
        let context = self.context_for(&sched)?;
        let seed = derive_seed(self.cfg.seed, i as u64);
        let mut noise = NoiseSource::new(seed);
        let block = sample_block(
            self.denoiser.as_ref(),
            &self.cfg.timesteps,
            self.cfg.block_shape(),
            &context,
            &mut noise,
        )?;
        let record = TraceRecord {
            step: i,
            schedule: sched.slots,
            frame_stats: block.frames().map(FrameStats::of).collect(),
            frames: self
                .cfg
                .record_frames
                .then(|| block.frames().map(<[f64]>::to_vec).collect()),
            seed,
        };
        self.history.push(block.clone());
        Ok((block, record))
    }

    /// Runs the remaining steps up to the configured horizon.
    pub fn finish(mut self) -> Result<RolloutTrace> {
        let mut records = Vec::with_capacity(self.cfg.horizon);
        while self.next_step() < self.cfg.horizon {
            records.push(self.step()?.1);
        }
        Ok(RolloutTrace { records })
    }
}

pub fn run(cfg: &RolloutConfig) -> Result<RolloutTrace> {
    Rollout::new(cfg.clone())?.finish()
}

/// Every sink slot of a record (the slots preceding the `K-S` recent ones).
pub fn sink_slots(record: &TraceRecord, cfg: &PolicyConfig) -> Vec<CacheSlot> {
    if record.step <= cfg.k() || cfg.policy() == Policy::SlidingWindow {
        return Vec::new();
    }
    record.schedule[..cfg.s()].to_vec()
}

/// Whether any slot in the record is frame-reversed.
pub fn has_reversed(record: &TraceRecord) -> bool {
    record
        .schedule
        .iter()
        .any(|s| s.orientation == Orientation::Reversed)
}
