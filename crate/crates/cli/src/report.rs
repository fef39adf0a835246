//! Report envelope and renderers.

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    SkippedBudget,
    HypothesesUnmet,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SkippedBudget => "skipped-budget",
            Status::HypothesesUnmet => "hypotheses-unmet",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub status: Status,
    pub data: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Record {
    pub fn new(name: impl Into<String>, status: Status, data: Value) -> Record {
        Record { name: name.into(), status, data, timing_ms: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(command: &str, config_hash: Option<String>) -> Report {
        Report { tool: "normcompat", version: env!("CARGO_PKG_VERSION"), command: command.into(), config_hash, records: Vec::new() }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    /// 1 if anything failed, else 2 if anything was skipped, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.status == Status::Fail) {
            1
        } else if self.records.iter().any(|r| r.status != Status::Pass) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.tool, self.version, self.command);
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "config sha256 {h}");
        }
        for r in &self.records {
            let _ = write!(s, "{:<17}{}", r.status.as_str(), r.name);
            if let Some(t) = r.timing_ms {
                let _ = write!(s, " ({t} ms)");
            }
            s.push('\n');
            if let Value::Object(m) = &r.data {
                for (k, v) in m {
                    let v = match v {
                        Value::String(x) => x.clone(),
                        other => other.to_string(),
                    };
                    let _ = writeln!(s, "    {k}: {v}");
                }
            }
        }
        s
    }
}
