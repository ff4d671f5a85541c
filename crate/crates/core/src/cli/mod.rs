//! Operator commands behind the `rollsink` binary, plus the file formats they
//! read and write.
//!
//! - `schedule`: print the conditioning schedule of a policy over a step range.
//! - `rollout`: run a config and write a line-delimited trace.
//! - `metrics`: turn a trace into a per-step CSV.
//! - `sweep`: run the sink-ratio grid and write one summary row per cell.

pub mod config;
pub mod trace;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use rayon::prelude::*;

use crate::engine::{self, RolloutTrace};
use crate::metrics::{self, MetricSeries};
use crate::schedule::{self, Orientation, Policy, PolicyConfig};
use crate::{Error, Result};

pub use config::ConfigFile;

/// Parses `N`, `A..B` (half-open) or `A..=B`.
pub fn parse_step_range(text: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::config(format!("bad step range `{text}` (use N, A..B or A..=B)"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..=") {
        return Ok(num(a)?..=num(b)?);
    }
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if b <= a {
            return Err(bad());
        }
        return Ok(a..=b - 1);
    }
    let n = num(text)?;
    Ok(n..=n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleRow {
    pub step: usize,
    pub slot_rank: usize,
    pub content_id: usize,
    pub orientation: Orientation,
    pub assigned_index: usize,
}

pub fn cmd_schedule(cfg: &PolicyConfig, steps: RangeInclusive<usize>) -> Vec<ScheduleRow> {
    steps
        .flat_map(|i| {
            schedule::schedule(cfg, i)
                .slots
                .into_iter()
                .enumerate()
                .map(move |(rank, s)| ScheduleRow {
                    step: i,
                    slot_rank: rank,
                    content_id: s.content_id,
                    orientation: s.orientation,
                    assigned_index: s.assigned_index,
                })
        })
        .collect()
}

const SCHEDULE_HEADER: [&str; 5] = ["i", "slot_rank", "content_id", "orientation", "assigned_index"];

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Forward => "forward",
        Orientation::Reversed => "reversed",
    }
}

pub fn write_schedule_table(out: &mut impl Write, rows: &[ScheduleRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>6} {:>9} {:>10} {:>11} {:>14}",
        SCHEDULE_HEADER[0], SCHEDULE_HEADER[1], SCHEDULE_HEADER[2], SCHEDULE_HEADER[3], SCHEDULE_HEADER[4]
    )?;
    for r in rows {
        writeln!(
            out,
            "{:>6} {:>9} {:>10} {:>11} {:>14}",
            r.step,
            r.slot_rank,
            r.content_id,
            orientation_name(r.orientation),
            r.assigned_index
        )?;
    }
    Ok(())
}

pub fn write_schedule_csv(out: impl Write, rows: &[ScheduleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.slot_rank.to_string(),
            r.content_id.to_string(),
            orientation_name(r.orientation).to_owned(),
            r.assigned_index.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Runs a rollout and streams its trace to `out_path`.
pub fn cmd_rollout(config_path: &Path, out_path: &Path) -> Result<()> {
    let cfg = ConfigFile::load(config_path)?.rollout_config()?;
    let file = File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    let mut out = BufWriter::new(file);
    let mut rollout = engine::Rollout::new(cfg.clone())?;
    while rollout.next_step() < cfg.horizon {
        let (_, record) = rollout.step()?;
        trace::write_record(&mut out, &record).map_err(|e| Error::io(out_path, e))?;
    }
    out.flush().map_err(|e| Error::io(out_path, e))
}

pub fn load_trace(path: &Path) -> Result<RolloutTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    trace::read_trace(BufReader::new(file))
}

/// Computes every named metric; unknown names are rejected before any work.
pub fn compute_metrics(trace: &RolloutTrace, names: &[String], window: usize) -> Result<Vec<MetricSeries>> {
    for n in names {
        if !metrics::METRIC_NAMES.contains(&n.as_str()) {
            return Err(Error::UnknownMetric {
                name: n.clone(),
                valid: metrics::METRIC_NAMES.join(", "),
            });
        }
    }
    names.iter().map(|n| metrics::compute(trace, n, window)).collect()
}

/// Header `step,<metric...>`, one row per trace step. Metrics undefined at a
/// step (flicker and repetition at step 0) leave the cell empty.
pub fn write_metrics_csv(out: impl Write, trace: &RolloutTrace, series: &[MetricSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_owned()];
    header.extend(series.iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.step.to_string()];
        row.extend(
            series
                .iter()
                .map(|s| s.get(r.step).map_or_else(String::new, |v| v.to_string())),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn cmd_metrics(trace_path: &Path, names: &[String], window: usize, out: impl Write) -> Result<()> {
    let trace = load_trace(trace_path)?;
    let series = compute_metrics(&trace, names, window)?;
    write_metrics_csv(out, &trace, &series)
}

/// Policy variants compared at every sweep cell.
pub const SWEEP_POLICIES: [Policy; 3] = [Policy::AttentionSink, Policy::SlidingIndices, Policy::RollingSink];

/// Maps a sink ratio in percent to an integer sink size.
///
/// Accepted when some `S` in `[0, K)` has `100*S/K` within half a percent of
/// the ratio (so 17% of 6 is S=1, while 25% of 6 is rejected).
pub fn sink_size_for_ratio(ratio_percent: f64, k: usize) -> Result<usize> {
    let s = (ratio_percent * k as f64 / 100.0).round();
    let exact = 100.0 * s / k as f64;
    if ratio_percent.is_nan() || ratio_percent < 0.0 || (exact - ratio_percent).abs() >= 0.5 || s < 0.0 {
        return Err(Error::config(format!(
            "sink ratio {ratio_percent}% of K={k} is not an integer sink size"
        )));
    }
    let s = s as usize;
    if s >= k {
        return Err(Error::config(format!(
            "sink ratio {ratio_percent}% gives S={s}; S must be < K={k}"
        )));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub k: usize,
    pub s: usize,
    pub horizon: usize,
    pub policy: Policy,
    pub seed: u64,
    pub mean_drift: f64,
    pub flicker_proxy: f64,
    pub repetition_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub ratios: Vec<f64>,
    pub horizons: Vec<usize>,
    pub seeds: u64,
    /// Lookback for the repetition score; defaults to K.
    pub window: Option<usize>,
}

/// Runs every (ratio, horizon, policy, seed) cell of the grid.
///
/// Seeds are `base.seed .. base.seed + seeds`. Cells run in parallel; rows come
/// back ordered by ratio, horizon, policy variant and seed as listed.
pub fn cmd_sweep(base: &ConfigFile, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.horizons.is_empty() || spec.ratios.is_empty() || spec.seeds == 0 {
        return Err(Error::config("sweep needs at least one ratio, horizon and seed"));
    }
    if spec.horizons.contains(&0) {
        return Err(Error::config("horizon must be >= 1"));
    }
    let sizes: Vec<usize> = spec
        .ratios
        .iter()
        .map(|&r| sink_size_for_ratio(r, base.k))
        .collect::<Result<_>>()?;
    let window = spec.window.unwrap_or(base.k).max(1);

    let mut cells = Vec::new();
    for (&ratio, &s) in spec.ratios.iter().zip(&sizes) {
        for &horizon in &spec.horizons {
            for policy in SWEEP_POLICIES {
                for offset in 0..spec.seeds {
                    cells.push((ratio, s, horizon, policy, base.seed.wrapping_add(offset)));
                }
            }
        }
    }

    cells
        .into_par_iter()
        .map(|(ratio, s, horizon, policy, seed)| {
            let mut file = base.clone();
            file.policy = policy;
            file.s = s;
            file.horizon = horizon;
            file.seed = seed;
            file.record_frames = true;
            let trace = engine::run(&file.rollout_config()?)?;
            let terminal = |m: MetricSeries| m.last().unwrap_or(0.0);
            Ok(SweepRow {
                ratio,
                k: base.k,
                s,
                horizon,
                policy,
                seed,
                mean_drift: terminal(metrics::mean_drift(&trace)),
                flicker_proxy: terminal(metrics::flicker_proxy(&trace)?),
                repetition_score: terminal(metrics::repetition_score(&trace, window)?),
            })
        })
        .collect()
}

pub fn write_sweep_csv(out: impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "ratio",
        "k",
        "s",
        "horizon",
        "policy",
        "seed",
        "mean_drift",
        "flicker_proxy",
        "repetition_score",
    ])?;
    for r in rows {
        w.write_record([
            r.ratio.to_string(),
            r.k.to_string(),
            r.s.to_string(),
            r.horizon.to_string(),
            r.policy.name().to_owned(),
            r.seed.to_string(),
            r.mean_drift.to_string(),
            r.flicker_proxy.to_string(),
            r.repetition_score.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CacheSlot, RollConvention};

    #[test]
    fn step_ranges() {
        assert_eq!(parse_step_range("14").unwrap(), 14..=14);
        assert_eq!(parse_step_range("0..20").unwrap(), 0..=19);
        assert_eq!(parse_step_range("3..=5").unwrap(), 3..=5);
        assert!(parse_step_range("5..5").is_err());
        assert!(parse_step_range("x").is_err());
    }

    #[test]
    fn schedule_rows() {
        let cfg = PolicyConfig::with(Policy::RollingSink, 6, 2, RollConvention::Palindrome).unwrap();
        let rows = cmd_schedule(&cfg, 14..=14);
        let slots: Vec<CacheSlot> = rows
            .iter()
            .map(|r| CacheSlot {
                content_id: r.content_id,
                orientation: r.orientation,
                assigned_index: r.assigned_index,
            })
            .collect();
        assert_eq!(slots, schedule::rolling_sink_schedule(&cfg, 14).slots);
        assert_eq!(
            rows.iter().map(|r| r.slot_rank).collect::<Vec<_>>(),
            (0..6).collect::<Vec<_>>()
        );

        let w = PolicyConfig::with(Policy::SlidingWindow, 6, 0, RollConvention::Palindrome).unwrap();
        assert!(cmd_schedule(&w, 0..=0).is_empty());
    }

    #[test]
    fn ratios_to_sink_sizes() {
        let sizes: Vec<usize> = [0.0, 17.0, 33.0, 50.0, 67.0, 83.0]
            .iter()
            .map(|&r| sink_size_for_ratio(r, 6).unwrap())
            .collect();
        assert_eq!(sizes, [0, 1, 2, 3, 4, 5]);
        assert!(sink_size_for_ratio(25.0, 6).is_err());
        assert!(sink_size_for_ratio(100.0, 6).is_err());
        assert!(sink_size_for_ratio(-17.0, 6).is_err());
        assert_eq!(sink_size_for_ratio(25.0, 8).unwrap(), 2);
    }

    #[test]
    fn single_cell_sweep() {
        let base = ConfigFile::parse("frame_dim = 2\n").unwrap();
        let rows = cmd_sweep(
            &base,
            &SweepSpec {
                ratios: vec![83.0],
                horizons: vec![12],
                seeds: 1,
                window: None,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.policy).collect::<Vec<_>>(), SWEEP_POLICIES);
        assert!(rows.iter().all(|r| r.s == 5 && r.horizon == 12));
    }

    #[test]
    fn metrics_csv_layout() {
        let base = ConfigFile::parse("frame_dim = 2\nhorizon = 4\n").unwrap();
        let trace = engine::run(&base.rollout_config().unwrap()).unwrap();
        let names = vec!["mean_drift".to_owned(), "flicker_proxy".to_owned()];
        let series = compute_metrics(&trace, &names, 2).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &trace, &series).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,mean_drift,flicker_proxy");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,0,");
        assert!(compute_metrics(&trace, &["psnr".to_owned()], 2).is_err());
    }
}
