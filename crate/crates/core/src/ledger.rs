//! Candidate records: the append-only history of a discovery run.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::promptkit::PromptKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Valid,
    ParseError,
    TypeError,
    RuntimeError,
    Degenerate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Valid => "VALID",
            Status::ParseError => "PARSE_ERROR",
            Status::TypeError => "TYPE_ERROR",
            Status::RuntimeError => "RUNTIME_ERROR",
            Status::Degenerate => "DEGENERATE",
        })
    }
}

/// One proposed feature. `gain` is present exactly when `status` is VALID.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub iteration: usize,
    pub reasoning_type: PromptKind,
    pub feature_name: String,
    /// Canonical DSL text when the code parsed, otherwise the raw code.
    pub expression: String,
    /// The code exactly as the generator wrote it.
    pub code: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub error_detail: String,
}

impl CandidateRecord {
    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid && self.gain.is_some_and(f64::is_finite)
    }
}

/// Reads a `ledger.jsonl` body: one record per non-blank line.
pub fn parse_jsonl(text: &str) -> Result<Vec<CandidateRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}
