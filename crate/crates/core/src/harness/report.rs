use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{RunConfig, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing to judge; the report only carries results.
    Info,
}

/// Wall time and creation time; the only members excluded from diffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub wall_time_ms: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    /// Subcommand and its arguments.
    pub command: Value,
    pub config: RunConfig,
    /// Per-item results in input order.
    pub items: Vec<Value>,
    pub summary: Value,
    pub verdict: Verdict,
    pub timing: Timing,
}

impl Report {
    pub fn new(command: Value, config: RunConfig, items: Vec<Value>, summary: Value, verdict: Verdict, elapsed: Duration) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            config,
            items,
            summary,
            verdict,
            timing: Timing { wall_time_ms: elapsed.as_secs_f64() * 1e3, timestamp },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The report without `timing`: identical bytes for identical inputs and seed.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }
}
