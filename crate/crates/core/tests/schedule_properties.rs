use proptest::prelude::*;

use rollsink::schedule::{self, expand_schedule, frame_expand, oracle_boustrophedon, roll_slot};
use rollsink::{Orientation, Policy, PolicyConfig, RollConvention};

fn arb_cfg() -> impl Strategy<Value = PolicyConfig> {
    (1usize..10, 0usize..10, 1usize..5, 0usize..4, any::<bool>()).prop_map(|(k, s, bs, p, literal)| {
        let conv = if literal {
            RollConvention::LiteralMod
        } else {
            RollConvention::Palindrome
        };
        PolicyConfig::new(k, s % k, bs, Policy::ALL[p], conv).unwrap()
    })
}

proptest! {
    #[test]
    fn slot_count_is_bounded_by_capacity(cfg in arb_cfg(), i in 0usize..400) {
        let sched = schedule::schedule(&cfg, i);
        prop_assert_eq!(sched.len(), i.min(cfg.k()));
        prop_assert_eq!(sched.step, i);
    }

    #[test]
    fn assigned_indices_strictly_increase(cfg in arb_cfg(), i in 0usize..400) {
        let sched = schedule::schedule(&cfg, i);
        prop_assert!(sched.slots.windows(2).all(|w| w[0].assigned_index < w[1].assigned_index));
    }

    #[test]
    fn index_sets_per_policy(cfg in arb_cfg(), extra in 1usize..400) {
        let (k, s) = (cfg.k(), cfg.s());
        let i = k + extra;
        let idx: Vec<usize> = schedule::schedule(&cfg, i).slots.iter().map(|s| s.assigned_index).collect();
        let expected: Vec<usize> = match cfg.policy() {
            Policy::SlidingWindow | Policy::SlidingIndices | Policy::RollingSink => (i - k..i).collect(),
            Policy::AttentionSink => (0..s).chain(i - (k - s)..i).collect(),
        };
        prop_assert_eq!(idx, expected);
    }

    #[test]
    fn rolling_sink_contents(cfg in arb_cfg(), extra in 1usize..400) {
        let cfg = cfg.with_policy(Policy::RollingSink);
        let (k, s) = (cfg.k(), cfg.s());
        let i = k + extra;
        let sched = schedule::schedule(&cfg, i);
        for slot in &sched.slots[..s] {
            prop_assert!(slot.content_id < k);
        }
        for slot in &sched.slots[s..] {
            prop_assert!((i - (k - s)..i).contains(&slot.content_id));
            prop_assert_eq!(slot.orientation, Orientation::Forward);
        }
    }

    #[test]
    fn reversed_only_under_rolling_sink(cfg in arb_cfg(), i in 0usize..400) {
        let sched = schedule::schedule(&cfg, i);
        if cfg.policy() != Policy::RollingSink {
            prop_assert!(sched.slots.iter().all(|s| s.orientation == Orientation::Forward));
        }
        // content has been generated before step i
        prop_assert!(sched.slots.iter().all(|s| s.content_id < i));
    }

    #[test]
    fn warm_up_is_policy_independent(cfg in arb_cfg(), i in 0usize..10) {
        let i = i.min(cfg.k());
        let window = schedule::window_schedule(&cfg, i);
        for p in Policy::ALL {
            prop_assert_eq!(&schedule::schedule(&cfg.with_policy(p), i), &window);
        }
    }

    #[test]
    fn roll_is_periodic(cfg in arb_cfg(), l in 0usize..5000) {
        let a = roll_slot(&cfg, l);
        let b = roll_slot(&cfg, l + 2 * cfg.k());
        prop_assert_eq!((a.content_id, a.orientation), (b.content_id, b.orientation));
        prop_assert_eq!(a.assigned_index, l);
        prop_assert!(a.content_id < cfg.k());
    }

    #[test]
    fn frame_positions_ascend(cfg in arb_cfg(), i in 0usize..200) {
        let frames = expand_schedule(&schedule::schedule(&cfg, i), cfg.block_size());
        prop_assert_eq!(frames.len(), i.min(cfg.k()) * cfg.block_size());
        prop_assert!(frames.windows(2).all(|w| w[0].position < w[1].position));
    }

    #[test]
    fn schedules_are_pure(cfg in arb_cfg(), i in 0usize..400) {
        prop_assert_eq!(schedule::schedule(&cfg, i), schedule::schedule(&cfg, i));
    }
}

#[test]
fn roll_matches_walk_oracle() {
    for conv in [RollConvention::Palindrome, RollConvention::LiteralMod] {
        for k in 1..=8 {
            let cfg = PolicyConfig::new(k, 0, 3, Policy::RollingSink, conv).unwrap();
            let walk = oracle_boustrophedon(&cfg, 10 * k);
            assert_eq!(walk.len(), 10 * k);
            for (l, slot) in walk.iter().enumerate() {
                assert_eq!(*slot, roll_slot(&cfg, l), "K={k} l={l} {conv:?}");
            }
        }
    }
}

#[test]
fn palindrome_walk_is_frame_continuous() {
    for bs in 1..=4 {
        for k in 1..=8 {
            let cfg = PolicyConfig::new(k, 0, bs, Policy::RollingSink, RollConvention::Palindrome).unwrap();
            let mut frames = Vec::new();
            let mut reflection_after = Vec::new();
            for l in 0..6 * k {
                frames.extend(
                    frame_expand(roll_slot(&cfg, l), bs)
                        .into_iter()
                        .map(|f| f.frame_id as i64),
                );
                if (l + 1) % k == 0 {
                    reflection_after.push(frames.len() - 1);
                }
            }
            for (n, w) in frames.windows(2).enumerate() {
                let d = w[1] - w[0];
                assert!(d.abs() <= 1, "bs={bs} K={k} jump {d} at frame {n}");
                assert_eq!(
                    d == 0,
                    reflection_after.contains(&n),
                    "bs={bs} K={k} at frame {n}"
                );
            }
        }
    }
}

#[test]
fn literal_walk_jumps_at_cycle_start() {
    // (K - l mod K) mod K re-enters the reversed pass at block 0
    let cfg = PolicyConfig::new(6, 0, 3, Policy::RollingSink, RollConvention::LiteralMod).unwrap();
    let contents: Vec<usize> = (6..12).map(|l| roll_slot(&cfg, l).content_id).collect();
    assert_eq!(contents, [0, 5, 4, 3, 2, 1]);
}
