//! Scalar drift series over rollout traces.
//!
//! These are declared proxies for the visual failure modes of long rollouts:
//! `mean_drift` for colour saturation, `flicker_proxy` for frame flicker at
//! block boundaries and `repetition_score` for repetition collapse.

use crate::engine::{RolloutTrace, TraceRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    /// `(step, value)` with strictly increasing steps.
    pub values: Vec<(usize, f64)>,
}

impl MetricSeries {
    pub fn last(&self) -> Option<f64> {
        self.values.last().map(|&(_, v)| v)
    }

    pub fn get(&self, step: usize) -> Option<f64> {
        self.values
            .binary_search_by_key(&step, |&(s, _)| s)
            .ok()
            .map(|i| self.values[i].1)
    }
}

pub const METRIC_NAMES: [&str; 3] = ["mean_drift", "flicker_proxy", "repetition_score"];

fn frames<'a>(r: &'a TraceRecord, metric: &str) -> Result<&'a [Vec<f64>]> {
    r.frames.as_deref().ok_or_else(|| Error::Trace {
        line: r.step + 1,
        message: format!("{metric} needs recorded frames"),
    })
}

/// `|mean(block i) - mean(block 0)|` per step.
pub fn mean_drift(trace: &RolloutTrace) -> MetricSeries {
    let base = trace.records.first().map_or(0.0, TraceRecord::block_mean);
    MetricSeries {
        name: "mean_drift".into(),
        values: trace
            .records
            .iter()
            .map(|r| (r.step, (r.block_mean() - base).abs()))
            .collect(),
    }
}

/// Mean absolute difference between the last frame of block `i-1` and the
/// first frame of block `i`, for `i >= 1`.
pub fn flicker_proxy(trace: &RolloutTrace) -> Result<MetricSeries> {
    let mut values = Vec::with_capacity(trace.len().saturating_sub(1));
    for pair in trace.records.windows(2) {
        let prev = frames(&pair[0], "flicker_proxy")?;
        let cur = frames(&pair[1], "flicker_proxy")?;
        let (Some(a), Some(b)) = (prev.last(), cur.first()) else {
            continue;
        };
        let n = a.len().max(1) as f64;
        let mad = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n;
        values.push((pair[1].step, mad));
    }
    Ok(MetricSeries {
        name: "flicker_proxy".into(),
        values,
    })
}

/// Highest cosine similarity between block `i` and any of the `window`
/// blocks preceding it, for `i >= 1`.
pub fn repetition_score(trace: &RolloutTrace, window: usize) -> Result<MetricSeries> {
    if window == 0 {
        return Err(Error::config("repetition window must be >= 1"));
    }
    let flat: Vec<Vec<f64>> = trace
        .records
        .iter()
        .map(|r| frames(r, "repetition_score").map(|f| f.concat()))
        .collect::<Result<_>>()?;
    let values = (1..flat.len())
        .map(|i| {
            let best = flat[i.saturating_sub(window)..i]
                .iter()
                .map(|prev| cosine(&flat[i], prev))
                .fold(f64::NEG_INFINITY, f64::max);
            (trace.records[i].step, best)
        })
        .collect();
    Ok(MetricSeries {
        name: "repetition_score".into(),
        values,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Computes a metric by name.
pub fn compute(trace: &RolloutTrace, name: &str, window: usize) -> Result<MetricSeries> {
    match name {
        "mean_drift" => Ok(mean_drift(trace)),
        "flicker_proxy" => flicker_proxy(trace),
        "repetition_score" => repetition_score(trace, window),
        _ => Err(Error::UnknownMetric {
            name: name.to_owned(),
            valid: METRIC_NAMES.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FrameStats;

    fn trace_of(blocks: &[Vec<Vec<f64>>]) -> RolloutTrace {
        RolloutTrace {
            records: blocks
                .iter()
                .enumerate()
                .map(|(i, frames)| TraceRecord {
                    step: i,
                    schedule: vec![],
                    frame_stats: frames.iter().map(|f| FrameStats::of(f)).collect(),
                    frames: Some(frames.clone()),
                    seed: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn constant_trace_is_flat() {
        let t = trace_of(&vec![vec![vec![0.3; 4]; 3]; 10]);
        assert!(mean_drift(&t).values.iter().all(|&(_, v)| v == 0.0));
        assert!(flicker_proxy(&t).unwrap().values.iter().all(|&(_, v)| v == 0.0));
        assert!(repetition_score(&t, 4)
            .unwrap()
            .values
            .iter()
            .all(|&(_, v)| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn drift_starts_at_zero() {
        let t = trace_of(&[vec![vec![1.0]], vec![vec![3.0]], vec![vec![-1.0]]]);
        assert_eq!(mean_drift(&t).values, vec![(0, 0.0), (1, 2.0), (2, 2.0)]);
    }

    #[test]
    fn flicker_uses_boundary_frames() {
        let t = trace_of(&[
            vec![vec![0.0, 0.0], vec![1.0, 3.0]],
            vec![vec![2.0, 2.0], vec![9.0, 9.0]],
        ]);
        assert_eq!(flicker_proxy(&t).unwrap().values, vec![(1, 1.0)]);
    }

    #[test]
    fn repetition_window_limits_lookback() {
        let a = vec![vec![1.0, 0.0]];
        let b = vec![vec![0.0, 1.0]];
        let t = trace_of(&[a.clone(), b.clone(), b.clone(), a.clone()]);
        let w1 = repetition_score(&t, 1).unwrap();
        assert_eq!(w1.get(2), Some(1.0));
        assert_eq!(w1.get(3), Some(0.0));
        let w3 = repetition_score(&t, 3).unwrap();
        assert_eq!(w3.get(3), Some(1.0));
        assert!(repetition_score(&t, 0).is_err());
    }

    #[test]
    fn frame_metrics_need_frames() {
        let mut t = trace_of(&[vec![vec![1.0]], vec![vec![2.0]]]);
        t.records[1].frames = None;
        assert!(flicker_proxy(&t).is_err());
        assert!(compute(&t, "mean_drift", 1).is_ok());
        let err = compute(&t, "ssim", 1).unwrap_err().to_string();
        assert!(
            err.contains("mean_drift, flicker_proxy, repetition_score"),
            "{err}"
        );
    }
}
