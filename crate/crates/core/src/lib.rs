//! Blockwise autoregressive rollout with bounded, re-indexed KV-cache schedules.
//!
//! The crate is organised bottom-up:
//!
//! - [`schedule`]: which cached blocks condition step `i`, in which orientation and
//!   at which time index, for the four cache policies (sliding window, attention
//!   sink, sliding indices, rolling sink).
//! - [`rope`]: rotary positional embedding on frame-granular positions.
//! - [`sampler`]: the few-step denoising loop with forward re-noising.
//! - [`denoisers`]: toy denoisers that consume the expanded cache context.
//! - [`engine`]: drives the rollout, owns the bounded history, emits traces.
//! - [`metrics`]: drift, flicker and repetition series over traces.
//! - [`cli`]: config file, trace file and CSV formats plus the operator commands
//!   behind the `rollsink` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod block;
pub mod cli;
pub mod denoisers;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rope;
pub mod sampler;
pub mod schedule;

pub use block::{Block, BlockShape};
pub use error::{Error, Result};
pub use schedule::{CacheSlot, Orientation, Policy, PolicyConfig, RollConvention, Schedule};
