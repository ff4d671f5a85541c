//! Rotary embeddings make attention scores depend only on position offsets,
//! which is what lets a schedule re-index cached blocks freely.

use rollsink::rope::{position_of, RotaryConfig};
use rollsink::schedule::{frame_expand, CacheSlot};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn main() -> rollsink::Result<()> {
    let rope = RotaryConfig::new(8, 10_000.0)?;
    let q = [0.3, -1.2, 0.8, 0.1, -0.5, 0.9, 0.4, -0.7];
    let k = [1.0, 0.2, -0.3, 0.6, 0.5, -0.1, 0.2, 0.8];

    println!("score for query at m, key at m - 5:");
    for m in [5, 50, 500, 5000] {
        let s = dot(&rope.rotate(&q, m)?, &rope.rotate(&k, m - 5)?);
        println!("  m={m:>4}  {s:.12}");
    }

    let bs = 3;
    for slot in [CacheSlot::forward(2, 9), CacheSlot::reversed(2, 9)] {
        let frames: Vec<String> = frame_expand(slot, bs)
            .iter()
            .map(|f| format!("frame {} @ {}", f.frame_id, f.position))
            .collect();
        println!("{slot}: {}", frames.join(", "));
    }
    println!("current block 12 starts at position {}", position_of(12, 0, bs));
    Ok(())
}
