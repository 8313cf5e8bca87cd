//! Prompt templates, context rendering and response parsing.
//!
//! Each reasoning type has its own template asset; the no-guide template
//! replaces the reasoning-steps block with a single generic instruction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit::ReasoningType;
use crate::ledger::CandidateRecord;
use crate::tabular::{ColumnKind, DatasetMeta, Schema};

pub const TASK_DESCRIPTION: &str = "<TASK DESCRIPTION>";
pub const FEATURE_DESCRIPTION: &str = "<FEATURE DESCRIPTION>";
pub const FEW_SHOT: &str = "<FEW-SHOT EXAMPLES>";
pub const PREVIOUS_RESULTS: &str = "[PREVIOUS FEATURE RESULTS]";
const PLACEHOLDERS: [&str; 4] = [TASK_DESCRIPTION, FEATURE_DESCRIPTION, FEW_SHOT, PREVIOUS_RESULTS];

/// First line of the shared scaffold after the reasoning-steps block.
pub const OPERATION_TABLE_INTRO: &str = "Here below is the supported operation_type.";

pub const DEFAULT_MAX_CANDIDATES: usize = 3;
pub const DEFAULT_PREVIOUS_RESULTS_LIMIT: usize = 10;

/// The prompt a record was generated under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptKind {
    Reasoning(ReasoningType),
    NoGuide,
}

impl PromptKind {
    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Reasoning(r) => r.name(),
            PromptKind::NoGuide => "no_guide",
        }
    }

    pub fn reasoning(self) -> Option<ReasoningType> {
        match self {
            PromptKind::Reasoning(r) => Some(r),
            PromptKind::NoGuide => None,
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_guide" | "noguide" | "no-guide" => Ok(PromptKind::NoGuide),
            other => other.parse().map(PromptKind::Reasoning),
        }
    }
}

impl Serialize for PromptKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PromptKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<ReasoningType> for PromptKind {
    fn from(r: ReasoningType) -> Self {
        PromptKind::Reasoning(r)
    }
}

pub fn template(kind: PromptKind) -> &'static str {
    match kind {
        PromptKind::Reasoning(ReasoningType::Deductive) => include_str!("../templates/deductive.txt"),
        PromptKind::Reasoning(ReasoningType::Inductive) => include_str!("../templates/inductive.txt"),
        PromptKind::Reasoning(ReasoningType::Abductive) => include_str!("../templates/abductive.txt"),
        PromptKind::Reasoning(ReasoningType::Analogical) => include_str!("../templates/analogical.txt"),
        PromptKind::Reasoning(ReasoningType::Counterfactual) => include_str!("../templates/counterfactual.txt"),
        PromptKind::Reasoning(ReasoningType::Causal) => include_str!("../templates/causal.txt"),
        PromptKind::NoGuide => include_str!("../templates/no_guide.txt"),
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("template contains unknown placeholder `{0}`")]
    UnknownPlaceholder(String),
    #[error("template must contain `{0}` exactly once")]
    PlaceholderCount(&'static str),
    #[error("context field `{0}` is empty")]
    EmptyField(&'static str),
}

/// Dataset context substituted into a template.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptContext {
    pub task_description: String,
    pub feature_description: String,
    pub few_shot: String,
    /// Empty on the first iteration; rendered as `none`.
    pub previous_results: String,
}

pub fn render(kind: PromptKind, ctx: &PromptContext) -> Result<String, PromptError> {
    render_template(template(kind), ctx)
}

/// Substitutes the four placeholders. Placeholder-shaped tokens other than
/// the known four are rejected before substitution, so context text is
/// never mistaken for a placeholder.
pub fn render_template(body: &str, ctx: &PromptContext) -> Result<String, PromptError> {
    if let Some(unknown) = placeholder_tokens(body)
        .into_iter()
        .find(|t| !PLACEHOLDERS.contains(&t.as_str()))
    {
        return Err(PromptError::UnknownPlaceholder(unknown));
    }
    for p in PLACEHOLDERS {
        if body.matches(p).count() != 1 {
            return Err(PromptError::PlaceholderCount(p));
        }
    }
    for (name, value) in [
        ("task_description", &ctx.task_description),
        ("feature_description", &ctx.feature_description),
        ("few_shot", &ctx.few_shot),
    ] {
        if value.trim().is_empty() {
            return Err(PromptError::EmptyField(name));
        }
    }
    let previous = if ctx.previous_results.trim().is_empty() {
        "none"
    } else {
        ctx.previous_results.trim_end()
    };
    // Single pass so substituted text is never rescanned.
    let mut out = String::with_capacity(body.len() + 256);
    let mut rest = body;
    while let Some((pos, p)) = PLACEHOLDERS
        .iter()
        .filter_map(|p| rest.find(p).map(|i| (i, *p)))
        .min_by_key(|(i, _)| *i)
    {
        out.push_str(&rest[..pos]);
        out.push_str(match p {
            TASK_DESCRIPTION => ctx.task_description.trim_end(),
            FEATURE_DESCRIPTION => ctx.feature_description.trim_end(),
            FEW_SHOT => ctx.few_shot.trim_end(),
            _ => previous,
        });
        rest = &rest[pos + p.len()..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Tokens shaped like `<UPPER CASE>` or `[UPPER CASE]`.
fn placeholder_tokens(body: &str) -> Vec<String> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        let close = match b {
            b'<' => b'>',
            b'[' => b']',
            _ => continue,
        };
        let Some(first) = bytes.get(i + 1) else { continue };
        if !first.is_ascii_uppercase() {
            continue;
        }
        let mut j = i + 2;
        while j < bytes.len() && (bytes[j].is_ascii_uppercase() || bytes[j] == b'-' || bytes[j] == b' ') {
            j += 1;
        }
        if j > i + 2 && bytes.get(j) == Some(&close) {
            out.push(body[i..=j].to_string());
        }
    }
    out
}

/// Removes the reasoning-steps block: everything between the role line and
/// the operation-table introduction.
pub fn strip_steps_block(prompt: &str) -> String {
    match (prompt.find('\n'), prompt.find(OPERATION_TABLE_INTRO)) {
        (Some(nl), Some(intro)) if nl < intro => format!("{}{}", &prompt[..=nl], &prompt[intro..]),
        _ => prompt.to_string(),
    }
}

/// One line per non-target column: `name (kind): description`.
pub fn describe_columns(schema: &Schema, meta: &DatasetMeta, order: &[String]) -> String {
    order
        .iter()
        .filter_map(|name| schema.get(name).map(|k| (name, k)))
        .map(|(name, kind)| {
            let kind = match kind {
                ColumnKind::Numeric => "numeric",
                ColumnKind::Categorical => "categorical",
            };
            match meta.column_descriptions.get(name).map(|d| d.trim()) {
                Some(d) if !d.is_empty() => format!("\n- {name} ({kind}): {d}"),
                _ => format!("\n- {name} ({kind})"),
            }
        })
        .collect()
}

/// The `limit` most recent VALID candidates, newest last, or `none`.
pub fn summarize_ledger(records: &[CandidateRecord], limit: usize) -> String {
    let valid: Vec<&CandidateRecord> = records.iter().filter(|r| r.is_valid()).collect();
    let start = valid.len().saturating_sub(limit);
    let lines: Vec<String> = valid[start..]
        .iter()
        .map(|r| format!("{}: {} → {:.4}", r.feature_name, r.expression, r.gain.unwrap_or(0.0)))
        .collect();
    if lines.is_empty() {
        "none".to_string()
    } else {
        lines.join("\n")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub feature_name: String,
    pub code: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedResponse {
    pub thinking: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ResponseError {
    #[error("response has no <Result> block")]
    MissingResult,
    #[error("malformed JSON in <Result> block: {0}")]
    MalformedJson(String),
    #[error("<Result> block holds no candidates")]
    Empty,
    #[error("candidate {index} is missing string field `{field}`")]
    MissingField { index: usize, field: &'static str },
}

/// Body after `open` up to `close` (or the end of text), matching tags
/// case-insensitively. The flag tells whether `close` was found.
fn tag_body<'a>(text: &'a str, open: &str, close: &str) -> Option<(&'a str, bool)> {
    // ASCII lowercasing keeps byte offsets aligned with `text`.
    let lower = text.to_ascii_lowercase();
    let start = lower.find(&open.to_ascii_lowercase())? + open.len();
    match lower[start..].find(&close.to_ascii_lowercase()) {
        Some(end) => Some((&text[start..start + end], true)),
        None => Some((&text[start..], false)),
    }
}

/// Extracts the thinking text and up to `max_candidates` candidates.
pub fn parse_response(text: &str, max_candidates: usize) -> Result<ParsedResponse, ResponseError> {
    let thinking = match tag_body(text, "<thinking>", "</thinking>") {
        Some((body, true)) => body.trim().to_string(),
        _ => String::new(),
    };
    let (body, _) = tag_body(text, "<Result>", "</Result>").ok_or(ResponseError::MissingResult)?;
    let values = parse_array(body)?;
    if values.is_empty() {
        return Err(ResponseError::Empty);
    }
    let mut candidates = Vec::new();
    for (index, v) in values.iter().enumerate().take(max_candidates) {
        let field = |name: &'static str| -> Result<String, ResponseError> {
            match v.get(name).and_then(|s| s.as_str()).map(str::trim) {
                Some(s) if !s.is_empty() => Ok(s.to_string()),
                _ => Err(ResponseError::MissingField { index, field: name }),
            }
        };
        candidates.push(Candidate {
            feature_name: field("feature_name")?,
            code: field("code")?,
        });
    }
    Ok(ParsedResponse { thinking, candidates })
}

fn parse_array(body: &str) -> Result<Vec<serde_json::Value>, ResponseError> {
    if let Ok(v) = serde_json::from_str::<Vec<serde_json::Value>>(body.trim()) {
        return Ok(v);
    }
    let slice = balanced_array(body).ok_or_else(|| ResponseError::MalformedJson("no balanced `[...]`".into()))?;
    let repaired = repair_json(slice);
    serde_json::from_str(&repaired).map_err(|e| ResponseError::MalformedJson(e.to_string()))
}

/// The first bracket-balanced `[...]` span, skipping brackets inside
/// single- or double-quoted strings.
fn balanced_array(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Converts single-quoted strings to JSON strings and drops trailing commas.
fn repair_json(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                out.push(c);
                i += 1;
                while i < chars.len() {
                    out.push(chars[i]);
                    if chars[i] == '\\' && i + 1 < chars.len() {
                        out.push(chars[i + 1]);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    if chars[i - 1] == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                out.push('"');
                i += 1;
                while i < chars.len() && chars[i] != '\'' {
                    match chars[i] {
                        '\\' if i + 1 < chars.len() => {
                            let next = chars[i + 1];
                            if next == '\'' {
                                out.push('\'');
                            } else {
                                out.push('\\');
                                out.push(next);
                            }
                            i += 2;
                            continue;
                        }
                        '"' => out.push_str("\\\""),
                        other => out.push(other),
                    }
                    i += 1;
                }
                out.push('"');
                i += 1;
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some(']') | Some('}')) {
                    out.push(c);
                }
                i += 1;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}
