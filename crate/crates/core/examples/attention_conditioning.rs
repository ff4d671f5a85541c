//! Drives a rollout with the tiny RoPE attention denoiser step by step and
//! shows which cached frames each block attends to.

use rollsink::denoisers::DenoiserSpec;
use rollsink::engine::{Rollout, RolloutConfig};
use rollsink::schedule::{self, expand_schedule};
use rollsink::{Policy, PolicyConfig, RollConvention};

fn main() -> rollsink::Result<()> {
    let policy = PolicyConfig::new(4, 2, 2, Policy::RollingSink, RollConvention::Palindrome)?;
    let denoiser = DenoiserSpec::Attention {
        model_dim: 16,
        head_count: 2,
        layer_count: 2,
        weight_seed: 3,
        rope_base: 10_000.0,
    };
    let cfg = RolloutConfig::new(policy, denoiser, 12).with_frame_dim(4);
    let mut rollout = Rollout::new(cfg)?;
    for _ in 0..12 {
        let i = rollout.next_step();
        let sched = schedule::schedule(&policy, i);
        let context = rollout.context_for(&sched)?;
        let (block, _) = rollout.step()?;
        let refs: Vec<String> = expand_schedule(&sched, policy.block_size())
            .iter()
            .map(|f| format!("{}@{}", f.frame_id, f.position))
            .collect();
        println!(
            "i={i:>2} query from {:>2}  mean {:+.3}  ctx [{}]",
            context.query_start,
            block.mean(),
            refs.join(" ")
        );
    }
    println!(
        "retained blocks: {} (peak {})",
        rollout.history().retained(),
        rollout.history().peak()
    );
    Ok(())
}
