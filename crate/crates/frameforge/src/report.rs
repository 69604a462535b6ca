//! Report serialization and timing capture.
//!
//! Every JSON artifact goes through [`to_sorted_json`], which rebuilds the
//! document as `serde_json::Value` — whose object type keeps keys in
//! sorted order — before pretty-printing. Combined with the fixed-order
//! numerics underneath, identical configs produce byte-identical reports.
//!
//! Wall-clock timings are the one output that legitimately differs
//! between runs, so they never enter the deterministic report: the report
//! carries a constant pointer (`"timings": {"recorded_in": "timings.json"}`)
//! and the measured durations go to that sidecar file next to it.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::csvio;

/// Serialize with sorted keys and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Write `value` as sorted-key JSON to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    csvio::write_text(path, &to_sorted_json(value)?)
}

/// The constant value a deterministic report carries under `"timings"`.
pub fn timings_pointer() -> serde_json::Value {
    serde_json::json!({ "recorded_in": "timings.json" })
}

/// Accumulates named stage durations.
pub struct Timings {
    started: Instant,
    stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn new() -> Timings {
        Timings {
            started: Instant::now(),
            stages: Vec::new(),
        }
    }

    /// Time one stage and keep its result.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
        let t0 = Instant::now();
        let out = f();
        self.stages.push((name.to_string(), t0.elapsed().as_secs_f64()));
        out
    }

    /// Write the sidecar file with per-stage and total seconds.
    pub fn write_sidecar(&self, path: &Path) -> anyhow::Result<()> {
        let mut doc = serde_json::Map::new();
        let mut stages = serde_json::Map::new();
        for (name, secs) in &self.stages {
            stages.insert(name.clone(), serde_json::json!(secs));
        }
        doc.insert("stages_seconds".into(), serde_json::Value::Object(stages));
        doc.insert(
            "total_seconds".into(),
            serde_json::json!(self.started.elapsed().as_secs_f64()),
        );
        crate::csvio::write_text(path, &serde_json::to_string_pretty(&serde_json::Value::Object(doc))?)
    }
}

impl Default for Timings {
    fn default() -> Self {
        Self::new()
    }
}
