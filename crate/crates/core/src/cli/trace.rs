//! Line-delimited trace files.
//!
//! One JSON object per step:
//!
//! ```text
//! {"step":7,"schedule":[{"content":1,"orient":"forward","index":1},...],
//!  "frame_stats":[{"mean":0.1,"var":0.9},...],"frames":[[...],...],"seed":123}
//! ```
//!
//! `frames` is omitted when frame recording is off.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{FrameStats, RolloutTrace, TraceRecord};
use crate::schedule::{CacheSlot, Orientation};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotLine {
    content: usize,
    orient: Orientation,
    index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsLine {
    mean: f64,
    var: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    step: usize,
    schedule: Vec<SlotLine>,
    frame_stats: Vec<StatsLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<Vec<Vec<f64>>>,
    seed: u64,
}

impl From<&TraceRecord> for RecordLine {
    fn from(r: &TraceRecord) -> Self {
        Self {
            step: r.step,
            schedule: r
                .schedule
                .iter()
                .map(|s| SlotLine {
                    content: s.content_id,
                    orient: s.orientation,
                    index: s.assigned_index,
                })
                .collect(),
            frame_stats: r
                .frame_stats
                .iter()
                .map(|s| StatsLine {
                    mean: s.mean,
                    var: s.var,
                })
                .collect(),
            frames: r.frames.clone(),
            seed: r.seed,
        }
    }
}

impl From<RecordLine> for TraceRecord {
    fn from(l: RecordLine) -> Self {
        Self {
            step: l.step,
            schedule: l
                .schedule
                .into_iter()
                .map(|s| CacheSlot {
                    content_id: s.content,
                    orientation: s.orient,
                    assigned_index: s.index,
                })
                .collect(),
            frame_stats: l
                .frame_stats
                .into_iter()
                .map(|s| FrameStats {
                    mean: s.mean,
                    var: s.var,
                })
                .collect(),
            frames: l.frames,
            seed: l.seed,
        }
    }
}

pub fn write_record(out: &mut impl Write, record: &TraceRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, &RecordLine::from(record))?;
    out.write_all(b"\n")
}

pub fn write_trace(out: &mut impl Write, trace: &RolloutTrace) -> std::io::Result<()> {
    for r in &trace.records {
        write_record(out, r)?;
    }
    Ok(())
}

pub fn to_string(trace: &RolloutTrace) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Parses a trace; steps must be strictly increasing. Blank lines are skipped.
pub fn read_trace(input: impl BufRead) -> Result<RolloutTrace> {
    let mut records: Vec<TraceRecord> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Trace {
            line: n + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Trace {
            line: n + 1,
            message: e.to_string(),
        })?;
        if records.last().is_some_and(|p| p.step >= rec.step) {
            return Err(Error::Trace {
                line: n + 1,
                message: format!("step {} does not increase", rec.step),
            });
        }
        records.push(rec.into());
    }
    Ok(RolloutTrace { records })
}

pub fn parse(text: &str) -> Result<RolloutTrace> {
    read_trace(text.as_bytes())
}
