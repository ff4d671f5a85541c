//! Prints the KV-cache schedule of every policy at a few steps, then the
//! reflected walk the rolling sink reads from.

use rollsink::schedule::{self, roll_slot};
use rollsink::{Policy, PolicyConfig, RollConvention};

fn main() -> rollsink::Result<()> {
    let (k, s) = (6, 2);
    for policy in Policy::ALL {
        let cfg = PolicyConfig::new(k, s, 3, policy, RollConvention::Palindrome)?;
        println!("{policy} (K={k}, S={s})");
        for i in [3, 6, 7, 14, 20] {
            let slots: Vec<String> = schedule::schedule(&cfg, i)
                .slots
                .iter()
                .map(|x| x.to_string())
                .collect();
            println!("  i={i:>2}  {}", slots.join(" "));
        }
    }

    for conv in [RollConvention::Palindrome, RollConvention::LiteralMod] {
        let cfg = PolicyConfig::new(k, 0, 3, Policy::RollingSink, conv)?;
        let walk: Vec<String> = (0..3 * k).map(|l| roll_slot(&cfg, l).to_string()).collect();
        println!("roll {}: {}", conv.name(), walk.join(" "));
    }
    Ok(())
}
