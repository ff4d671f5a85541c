//! Long rollouts with a slightly biased denoiser: the sliding window
//! accumulates the bias while the rolling sink keeps pulling the rollout back
//! to its first blocks.

use rollsink::denoisers::DenoiserSpec;
use rollsink::engine::{run, RolloutConfig};
use rollsink::metrics::mean_drift;
use rollsink::{Policy, PolicyConfig, RollConvention};

fn main() -> rollsink::Result<()> {
    let denoiser = DenoiserSpec::ContextMean {
        anchor_weight: 1.0,
        innovation_scale: 0.1,
        bias: 0.05,
    };
    let horizon = 1000;
    println!(
        "{:>16} {:>8} {:>8} {:>8} {:>8}",
        "policy", "i=10", "i=100", "i=500", "i=999"
    );
    for (policy, s) in [
        (Policy::SlidingWindow, 0),
        (Policy::AttentionSink, 5),
        (Policy::SlidingIndices, 5),
        (Policy::RollingSink, 5),
    ] {
        let cfg = PolicyConfig::new(6, s, 3, policy, RollConvention::Palindrome)?;
        let mut rollout = RolloutConfig::new(cfg, denoiser.clone(), horizon);
        rollout.record_frames = false;
        let drift = mean_drift(&run(&rollout)?);
        let at = |i| drift.get(i).unwrap_or(f64::NAN);
        println!(
            "{:>16} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            policy.name(),
            at(10),
            at(100),
            at(500),
            at(999)
        );
    }
    Ok(())
}
