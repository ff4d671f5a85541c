//! Conditioning schedules for bounded KV caches.
//!
//! Given a cache capacity `K` (in blocks) and a sink size `S`, each policy decides
//! which previously generated blocks condition step `i`, in which orientation,
//! and at which block-level time index they are embedded. Everything here is
//! pure index arithmetic.
//!
//! For `i <= K` every policy returns the full within-duration history
//! `[0, i)` at native indices. Past that point:
//!
//! | policy           | sink slots                                   | recent slots                 |
//! |------------------|----------------------------------------------|------------------------------|
//! | `SlidingWindow`  | none                                         | `[i-K, i)` native            |
//! | `AttentionSink`  | `[0, S)` at native indices                   | `[i-(K-S), i)` native        |
//! | `SlidingIndices` | block `l` at index `i-K+l`                   | `[i-(K-S), i)` native        |
//! | `RollingSink`    | [`roll_slot`] for `l` in `[i-K, i-(K-S))`    | `[i-(K-S), i)` native        |
//!
//! Sink slots always precede recent slots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    SlidingWindow,
    AttentionSink,
    SlidingIndices,
    RollingSink,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::SlidingWindow,
        Policy::AttentionSink,
        Policy::SlidingIndices,
        Policy::RollingSink,
    ];

    /// Whether the policy needs the first `K` blocks for the whole rollout.
    pub fn uses_sink(self) -> bool {
        !matches!(self, Policy::SlidingWindow)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::SlidingWindow => "sliding-window",
            Policy::AttentionSink => "attention-sink",
            Policy::SlidingIndices => "sliding-indices",
            Policy::RollingSink => "rolling-sink",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .or(match s {
                "sink" => Some(Policy::AttentionSink),
                "window" => Some(Policy::SlidingWindow),
                _ => None,
            })
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown policy `{s}` (valid: sliding-window, attention-sink, sliding-indices, rolling-sink)"
                ))
            })
    }
}

/// How odd (reversed) cycles of the roll walk pick their content block.
///
/// Even cycles read block `l mod K`. In odd cycles the printed index
/// `K - (l mod K)` equals `K` at the cycle start, one past the last block.
/// `Palindrome` reads `K-1-(l mod K)` (a reflecting walk, frame-continuous);
/// `LiteralMod` reads `(K - (l mod K)) mod K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RollConvention {
    #[default]
    Palindrome,
    LiteralMod,
}

impl RollConvention {
    pub fn name(self) -> &'static str {
        match self {
            RollConvention::Palindrome => "palindrome",
            RollConvention::LiteralMod => "literal-mod",
        }
    }
}

impl FromStr for RollConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "palindrome" => Ok(RollConvention::Palindrome),
            "literal-mod" | "literal" => Ok(RollConvention::LiteralMod),
            _ => Err(Error::config(format!(
                "unknown roll convention `{s}` (valid: palindrome, literal-mod)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Reversed,
}

/// One entry of a conditioning schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheSlot {
    /// Which generated block supplies the content.
    pub content_id: usize,
    pub orientation: Orientation,
    /// Block-level time index used for the positional embedding.
    pub assigned_index: usize,
}

impl CacheSlot {
    pub const fn forward(content_id: usize, assigned_index: usize) -> Self {
        Self {
            content_id,
            orientation: Orientation::Forward,
            assigned_index,
        }
    }

    /// Block at its own time index.
    pub const fn native(id: usize) -> Self {
        Self::forward(id, id)
    }

    pub const fn reversed(content_id: usize, assigned_index: usize) -> Self {
        Self {
            content_id,
            orientation: Orientation::Reversed,
            assigned_index,
        }
    }
}

impl fmt::Display for CacheSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orientation {
            Orientation::Forward => "F",
            Orientation::Reversed => "R",
        };
        write!(f, "{}{}@{}", self.content_id, o, self.assigned_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub step: usize,
    pub slots: Vec<CacheSlot>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i={}:", self.step)?;
        for s in &self.slots {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolicyConfig {
    k: usize,
    s: usize,
    block_size: usize,
    policy: Policy,
    convention: RollConvention,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            k: 6,
            s: 5,
            block_size: 3,
            policy: Policy::RollingSink,
            convention: RollConvention::Palindrome,
        }
    }
}

impl PolicyConfig {
    pub fn new(
        k: usize,
        s: usize,
        block_size: usize,
        policy: Policy,
        convention: RollConvention,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("K must be positive"));
        }
        if s >= k {
            return Err(Error::config(format!(
                "S must be < K (got S={s}, K={k}); at least one recent block is required"
            )));
        }
        if block_size == 0 {
            return Err(Error::config("block_size must be >= 1"));
        }
        Ok(Self {
            k,
            s,
            block_size,
            policy,
            convention,
        })
    }

    /// Shorthand with the default block size of 3.
    pub fn with(policy: Policy, k: usize, s: usize, convention: RollConvention) -> Result<Self> {
        Self::new(k, s, 3, policy, convention)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn convention(&self) -> RollConvention {
        self.convention
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }
}

/// Dispatches to the schedule of `cfg.policy()`.
pub fn schedule(cfg: &PolicyConfig, i: usize) -> Schedule {
    match cfg.policy {
        Policy::SlidingWindow => window_schedule(cfg, i),
        Policy::AttentionSink => sink_schedule(cfg, i),
        Policy::SlidingIndices => sliding_index_schedule(cfg, i),
        Policy::RollingSink => rolling_sink_schedule(cfg, i),
    }
}

/// Blocks `[max(0, i-K), i)` at their own indices.
pub fn window_schedule(cfg: &PolicyConfig, i: usize) -> Schedule {
    Schedule {
        step: i,
        slots: (i.saturating_sub(cfg.k)..i).map(CacheSlot::native).collect(),
    }
}

/// Static prefix `[0, S)` plus the last `K-S` blocks, all at native indices.
pub fn sink_schedule(cfg: &PolicyConfig, i: usize) -> Schedule {
    if i <= cfg.k {
        return window_schedule(cfg, i);
    }
    let slots = (0..cfg.s).map(CacheSlot::native).chain(recent(cfg, i)).collect();
    Schedule { step: i, slots }
}

/// Sink blocks `[0, S)` re-indexed onto `[i-K, i-(K-S))` directly before the recent window.
pub fn sliding_index_schedule(cfg: &PolicyConfig, i: usize) -> Schedule {
    if i <= cfg.k {
        return window_schedule(cfg, i);
    }
    let base = i - cfg.k;
    let slots = (0..cfg.s)
        .map(|l| CacheSlot::forward(l, base + l))
        .chain(recent(cfg, i))
        .collect();
    Schedule { step: i, slots }
}

/// Sink slots drawn from the roll walk over the first `K` blocks.
pub fn rolling_sink_schedule(cfg: &PolicyConfig, i: usize) -> Schedule {
    if i <= cfg.k {
        return window_schedule(cfg, i);
    }
    let slots = (i - cfg.k..i - (cfg.k - cfg.s))
        .map(|l| roll_slot(cfg, l))
        .chain(recent(cfg, i))
        .collect();
    Schedule { step: i, slots }
}

fn recent(cfg: &PolicyConfig, i: usize) -> impl Iterator<Item = CacheSlot> {
    (i - (cfg.k - cfg.s)..i).map(CacheSlot::native)
}

/// Entry `l` of the infinite forward/reversed walk over blocks `[0, K)`.
///
/// Even cycles (`floor(l/K)` even) are forward copies of block `l mod K`; odd
/// cycles are frame-reversed, with the content index chosen by the config's
/// [`RollConvention`]. The slot is always embedded at index `l`. Period `2K`.
pub fn roll_slot(cfg: &PolicyConfig, l: usize) -> CacheSlot {
    let k = cfg.k;
    let r = l % k;
    if (l / k).is_multiple_of(2) {
        return CacheSlot::forward(r, l);
    }
    let content = match cfg.convention {
        RollConvention::Palindrome => k - 1 - r,
        RollConvention::LiteralMod => (k - r) % k,
    };
    CacheSlot::reversed(content, l)
}

/// The first `len` entries of the roll walk, built by stepping a walker
/// rather than by evaluating [`roll_slot`]. Used as a cross-check.
pub fn oracle_boustrophedon(cfg: &PolicyConfig, len: usize) -> Vec<CacheSlot> {
    let k = cfg.k;
    let mut out = Vec::with_capacity(len);
    let mut content = 0usize;
    let mut orientation = Orientation::Forward;
    // Slots emitted in the current pass over the K blocks.
    let mut emitted = 0usize;
    while out.len() < len {
        let position = out.len();
        out.push(CacheSlot {
            content_id: content,
            orientation,
            assigned_index: position,
        });
        emitted += 1;
        if emitted == k {
            // Pass complete: flip direction. The reflecting walk stays on the
            // boundary block; the literal walk re-enters the reversed pass at 0.
            emitted = 0;
            orientation = match orientation {
                Orientation::Forward => Orientation::Reversed,
                Orientation::Reversed => Orientation::Forward,
            };
            content = match (cfg.convention, orientation) {
                (_, Orientation::Forward) => 0,
                (RollConvention::Palindrome, Orientation::Reversed) => k - 1,
                (RollConvention::LiteralMod, Orientation::Reversed) => 0,
            };
            continue;
        }
        content = match (cfg.convention, orientation) {
            (_, Orientation::Forward) => content + 1,
            (RollConvention::Palindrome, Orientation::Reversed) => content - 1,
            (RollConvention::LiteralMod, Orientation::Reversed) => {
                if content == 0 {
                    k - 1
                } else {
                    content - 1
                }
            }
        };
    }
    out
}

/// A cached frame paired with the position at which it is embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRef {
    /// Global latent-frame index (`block_size * content_id + offset`).
    pub frame_id: usize,
    /// Frame-granular position (`block_size * assigned_index + k`).
    pub position: usize,
}

impl FrameRef {
    /// Block holding the frame and the frame's offset inside it.
    pub fn source(&self, block_size: usize) -> (usize, usize) {
        (self.frame_id / block_size, self.frame_id % block_size)
    }
}

/// Expands a block slot into per-frame (content, position) pairs.
///
/// Positions always ascend. A reversed slot reads its frames back to front.
pub fn frame_expand(slot: CacheSlot, block_size: usize) -> Vec<FrameRef> {
    (0..block_size)
        .map(|k| {
            let offset = match slot.orientation {
                Orientation::Forward => k,
                Orientation::Reversed => block_size - 1 - k,
            };
            FrameRef {
                frame_id: block_size * slot.content_id + offset,
                position: crate::rope::position_of(slot.assigned_index, k, block_size),
            }
        })
        .collect()
}

/// Expands every slot of a schedule, in schedule order.
pub fn expand_schedule(schedule: &Schedule, block_size: usize) -> Vec<FrameRef> {
    schedule
        .slots
        .iter()
        .flat_map(|&s| frame_expand(s, block_size))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(policy: Policy, k: usize, s: usize) -> PolicyConfig {
        PolicyConfig::with(policy, k, s, RollConvention::Palindrome).unwrap()
    }

    fn slots(list: &[(usize, usize)]) -> Vec<CacheSlot> {
        list.iter().map(|&(c, j)| CacheSlot::forward(c, j)).collect()
    }

    #[test]
    fn window_examples() {
        let c = cfg(Policy::SlidingWindow, 6, 0);
        assert!(window_schedule(&c, 0).is_empty());
        assert_eq!(window_schedule(&c, 3).slots, slots(&[(0, 0), (1, 1), (2, 2)]));
        assert_eq!(
            window_schedule(&c, 10).slots,
            (4..10).map(CacheSlot::native).collect::<Vec<_>>()
        );
    }

    #[test]
    fn sink_examples() {
        let c = cfg(Policy::AttentionSink, 6, 2);
        assert_eq!(
            sink_schedule(&c, 10).slots,
            slots(&[(0, 0), (1, 1), (6, 6), (7, 7), (8, 8), (9, 9)])
        );
        let c0 = cfg(Policy::AttentionSink, 6, 0);
        assert_eq!(sink_schedule(&c0, 10), window_schedule(&c0, 10));
        assert_eq!(
            sink_schedule(&c, 6).slots,
            (0..6).map(CacheSlot::native).collect::<Vec<_>>()
        );
    }

    #[test]
    fn sliding_index_examples() {
        let c = cfg(Policy::SlidingIndices, 6, 2);
        assert_eq!(
            sliding_index_schedule(&c, 10).slots,
            slots(&[(0, 4), (1, 5), (6, 6), (7, 7), (8, 8), (9, 9)])
        );
        assert_eq!(
            sliding_index_schedule(&c, 7).slots,
            slots(&[(0, 1), (1, 2), (3, 3), (4, 4), (5, 5), (6, 6)])
        );
        assert_eq!(sliding_index_schedule(&c, 6), sink_schedule(&c, 6));
    }

    #[test]
    fn roll_slot_examples() {
        let pal = cfg(Policy::RollingSink, 6, 5);
        let lit = PolicyConfig::with(Policy::RollingSink, 6, 5, RollConvention::LiteralMod).unwrap();
        assert_eq!(roll_slot(&pal, 4), CacheSlot::forward(4, 4));
        assert_eq!(roll_slot(&pal, 8), CacheSlot::reversed(3, 8));
        assert_eq!(roll_slot(&lit, 8), CacheSlot::reversed(4, 8));
        assert_eq!(roll_slot(&pal, 12), CacheSlot::forward(0, 12));
        // odd-cycle start: the printed index would be K
        assert_eq!(roll_slot(&pal, 6), CacheSlot::reversed(5, 6));
        assert_eq!(roll_slot(&lit, 6), CacheSlot::reversed(0, 6));
    }

    #[test]
    fn rolling_sink_examples() {
        let c = cfg(Policy::RollingSink, 6, 2);
        assert_eq!(
            rolling_sink_schedule(&c, 10).slots,
            slots(&[(4, 4), (5, 5), (6, 6), (7, 7), (8, 8), (9, 9)])
        );
        let mut expected = vec![CacheSlot::reversed(3, 8), CacheSlot::reversed(2, 9)];
        expected.extend((10..14).map(CacheSlot::native));
        assert_eq!(rolling_sink_schedule(&c, 14).slots, expected);

        let c5 = cfg(Policy::RollingSink, 6, 5);
        assert_eq!(
            rolling_sink_schedule(&c5, 7).slots,
            (1..7).map(CacheSlot::native).collect::<Vec<_>>()
        );
    }

    #[test]
    fn oracle_examples() {
        let k2 = cfg(Policy::RollingSink, 2, 0);
        let walk: Vec<String> = oracle_boustrophedon(&k2, 8)
            .iter()
            .map(|s| format!("{}", s).split('@').next().unwrap().to_owned())
            .collect();
        assert_eq!(walk, ["0F", "1F", "1R", "0R", "0F", "1F", "1R", "0R"]);

        let k1 = cfg(Policy::RollingSink, 1, 0);
        let o = oracle_boustrophedon(&k1, 3);
        assert_eq!(
            o,
            vec![
                CacheSlot::forward(0, 0),
                CacheSlot::reversed(0, 1),
                CacheSlot::forward(0, 2)
            ]
        );

        let k6 = cfg(Policy::RollingSink, 6, 5);
        let o = oracle_boustrophedon(&k6, 6);
        assert_eq!(o, (0..6).map(|l| roll_slot(&k6, l)).collect::<Vec<_>>());
    }

    #[test]
    fn frame_expand_examples() {
        let f = |slot| {
            frame_expand(slot, 3)
                .into_iter()
                .map(|r| (r.frame_id, r.position))
                .collect::<Vec<_>>()
        };
        assert_eq!(f(CacheSlot::native(2)), [(6, 6), (7, 7), (8, 8)]);
        assert_eq!(f(CacheSlot::reversed(4, 8)), [(14, 24), (13, 25), (12, 26)]);
        assert_eq!(f(CacheSlot::forward(0, 4)), [(0, 12), (1, 13), (2, 14)]);
    }

    #[test]
    fn sink_equal_to_capacity_is_rejected() {
        let err = PolicyConfig::with(Policy::RollingSink, 6, 6, RollConvention::Palindrome)
            .unwrap_err()
            .to_string();
        assert!(err.contains("S must be < K"), "{err}");
        assert!(PolicyConfig::new(0, 0, 3, Policy::SlidingWindow, RollConvention::Palindrome).is_err());
        assert!(PolicyConfig::new(4, 1, 0, Policy::SlidingWindow, RollConvention::Palindrome).is_err());
    }

    #[test]
    fn policy_names_parse() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("rolling".parse::<Policy>().is_err());
    }
}
