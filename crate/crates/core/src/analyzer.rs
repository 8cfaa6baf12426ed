// SPDX-License-Identifier: Apache-2.0
//! Per-signal extraction of structured descriptions from the specification.

use std::fmt;

use assertforge_hdl::signal::{SignalDefinition, SignalKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::SpecDocument;
use crate::llm::{ChatRequest, Gateway, LlmError};
use crate::prompts;
use crate::util::par_map;
use crate::waveform::extract_json;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub width: u32,
    #[serde(default)]
    pub signal_type: String,
    #[serde(default)]
    pub direction: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidthMismatch {
    pub spec: u32,
    pub declared: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFlags {
    /// The document never mentions the signal; no request was issued.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_described: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_mismatch: Option<WidthMismatch>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub name: String,
    pub definition: Definition,
    #[serde(default)]
    pub functionality: String,
    #[serde(default)]
    pub interconnection: String,
    #[serde(default)]
    pub additional: String,
    #[serde(default)]
    pub interconnection_signals: Vec<String>,
    #[serde(default)]
    pub flags: SpecFlags,
}

impl SignalSpec {
    /// The model-facing part of the spec, without local flags.
    pub fn prompt_json(&self) -> String {
        let v = serde_json::json!({
            "name": self.name,
            "definition": self.definition,
            "functionality": self.functionality,
            "interconnection": self.interconnection,
            "additional": self.additional,
            "interconnection_signals": self.interconnection_signals,
        });
        serde_json::to_string_pretty(&v).expect("spec serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    UnknownTarget(String),
    NameMismatch { expected: String, got: String },
    UnknownSignal(String),
    SelfInterconnection,
    WidthMismatch { spec: u32, declared: u32 },
}

impl Violation {
    /// Width disagreement is recorded but does not block generation.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, Violation::WidthMismatch { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownTarget(n) => write!(f, "spec names undeclared signal {n}"),
            Violation::NameMismatch { expected, got } => write!(f, "response describes {got}, expected {expected}"),
            Violation::UnknownSignal(n) => write!(f, "unknown signal {n}"),
            Violation::SelfInterconnection => f.write_str("self-interconnection"),
            Violation::WidthMismatch { spec, declared } => write!(f, "width mismatch {spec}≠{declared}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalyzerError {
    #[error("{signal}: response does not match the extraction schema")]
    ExtractionUnparseable { signal: String, raw: String },
    #[error("{signal}: validation failed: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed { signal: String, violations: Vec<Violation> },
    #[error("{signal}: {source}")]
    Llm { signal: String, source: LlmError },
}

impl AnalyzerError {
    pub fn signal(&self) -> &str {
        match self {
            AnalyzerError::ExtractionUnparseable { signal, .. }
            | AnalyzerError::ValidationFailed { signal, .. }
            | AnalyzerError::Llm { signal, .. } => signal,
        }
    }
}

pub fn validate_spec(spec: &SignalSpec, defs: &[SignalDefinition]) -> Vec<Violation> {
    let mut out = Vec::new();
    match defs.iter().find(|d| d.name == spec.name) {
        None => out.push(Violation::UnknownTarget(spec.name.clone())),
        Some(d) if d.width != spec.definition.width => {
            out.push(Violation::WidthMismatch { spec: spec.definition.width, declared: d.width })
        }
        Some(_) => {}
    }
    for s in &spec.interconnection_signals {
        if *s == spec.name {
            if !out.contains(&Violation::SelfInterconnection) {
                out.push(Violation::SelfInterconnection);
            }
        } else if !defs.iter().any(|d| d.name == *s) {
            out.push(Violation::UnknownSignal(s.clone()));
        }
    }
    out
}

/// Case-insensitive whole-word search.
fn mentions(text: &str, name: &str) -> bool {
    let hay = text.to_ascii_lowercase();
    let needle = name.to_ascii_lowercase();
    let word = |c: char| c.is_ascii_alphanumeric() || c == '_';
    hay.match_indices(&needle).any(|(i, _)| {
        !hay[..i].chars().next_back().is_some_and(word) && !hay[i + needle.len()..].chars().next().is_some_and(word)
    })
}

pub fn document_listing(doc: &SpecDocument) -> String {
    let mut out = String::new();
    for s in &doc.sections {
        if !s.title.is_empty() {
            out.push_str(&format!("## {}\n", s.title));
        }
        out.push_str(s.body.trim());
        out.push_str("\n\n");
    }
    out
}

pub fn extraction_request(doc: &SpecDocument, sig: &SignalDefinition) -> ChatRequest {
    let system = prompts::fill(prompts::NL_ANALYZER, &[("SIGNAL_NAME", &sig.name)]);
    let user = format!("Specification document:\n\n{}Target signal: {}", document_listing(doc), sig.name);
    ChatRequest::new(system, user)
}

pub fn parse_extraction(raw: &str, signal: &str) -> Result<SignalSpec, AnalyzerError> {
    let unparseable = || AnalyzerError::ExtractionUnparseable { signal: signal.to_string(), raw: raw.to_string() };
    let v = extract_json(raw, '{').ok_or_else(unparseable)?;
    let mut spec: SignalSpec = serde_json::from_value(v).map_err(|_| unparseable())?;
    spec.flags = SpecFlags::default();
    Ok(spec)
}

pub fn extract_signal_spec(gw: &Gateway, doc: &SpecDocument, sig: &SignalDefinition, defs: &[SignalDefinition]) -> Result<SignalSpec, AnalyzerError> {
    if !mentions(&doc.text(), &sig.name) {
        return Ok(SignalSpec {
            name: sig.name.clone(),
            definition: Definition { width: sig.width, signal_type: String::new(), direction: String::new() },
            functionality: String::new(),
            interconnection: String::new(),
            additional: String::new(),
            interconnection_signals: Vec::new(),
            flags: SpecFlags { not_described: true, width_mismatch: None },
        });
    }
    let resp = gw
        .complete(&extraction_request(doc, sig))
        .map_err(|source| AnalyzerError::Llm { signal: sig.name.clone(), source })?;
    let mut spec = parse_extraction(&resp.content, &sig.name)?;
    let mut violations = validate_spec(&spec, defs);
    if spec.name != sig.name {
        violations.insert(0, Violation::NameMismatch { expected: sig.name.clone(), got: spec.name.clone() });
    }
    if violations.iter().any(Violation::is_fatal) {
        return Err(AnalyzerError::ValidationFailed { signal: sig.name.clone(), violations });
    }
    if let Some(Violation::WidthMismatch { spec: s, declared }) = violations.first() {
        spec.flags.width_mismatch = Some(WidthMismatch { spec: *s, declared: *declared });
        log::warn!("{}: {}", sig.name, violations[0]);
    }
    Ok(spec)
}

/// Extracts every signal; results follow `defs` order, failures are isolated.
pub fn extract_all(gw: &Gateway, doc: &SpecDocument, defs: &[SignalDefinition]) -> (Vec<SignalSpec>, Vec<AnalyzerError>) {
    let results = par_map(defs, gw.cap(), |d| extract_signal_spec(gw, doc, d, defs));
    let mut specs = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(s) => specs.push(s),
            Err(e) => errors.push(e),
        }
    }
    (specs, errors)
}

/// Paragraph lines are joined; table rows, list items and headings stand alone.
fn sentences(text: &str) -> Vec<String> {
    let mut units: Vec<String> = Vec::new();
    let mut para = String::new();
    for line in text.lines() {
        let t = line.trim();
        let standalone = t.starts_with(['|', '-', '*', '#']) || t.split_once(". ").is_some_and(|(n, _)| n.parse::<u32>().is_ok());
        if t.is_empty() || standalone {
            if !para.is_empty() {
                units.push(std::mem::take(&mut para));
            }
            if standalone {
                units.push(t.trim_start_matches(['-', '*', '|', '#']).trim().to_string());
            }
        } else {
            if !para.is_empty() {
                para.push(' ');
            }
            para.push_str(t);
        }
    }
    if !para.is_empty() {
        units.push(para);
    }
    let mut out = Vec::new();
    for u in units {
        let mut cur = String::new();
        let mut chars = u.chars().peekable();
        while let Some(c) = chars.next() {
            cur.push(c);
            if c == '.' && chars.peek().is_none_or(|n| n.is_whitespace()) {
                out.push(std::mem::take(&mut cur).trim().to_string());
            }
        }
        if !cur.trim().is_empty() {
            out.push(cur.trim().to_string());
        }
    }
    out
}

/// Deterministic extraction without a model: sentences naming the signal
/// become its functionality; those also naming other declared signals become
/// its interconnection.
pub fn extract_local(doc: &SpecDocument, defs: &[SignalDefinition]) -> Vec<SignalSpec> {
    let all = sentences(&document_listing(doc));
    defs.iter()
        .map(|d| {
            let own: Vec<&String> = all.iter().filter(|s| mentions(s, &d.name)).collect();
            let others = |s: &str| -> Vec<String> {
                defs.iter().filter(|o| o.name != d.name && mentions(s, &o.name)).map(|o| o.name.clone()).collect()
            };
            let mut inter_signals = Vec::new();
            let mut inter = Vec::new();
            for s in &own {
                let o = others(s);
                if !o.is_empty() {
                    inter.push(s.as_str());
                }
                for n in o {
                    if !inter_signals.contains(&n) {
                        inter_signals.push(n);
                    }
                }
            }
            let direction = match d.kind {
                SignalKind::Input => "input",
                SignalKind::Output => "output",
                SignalKind::Inout => "inout",
                SignalKind::Reg | SignalKind::Wire => "internal",
            };
            let role = crate::generator::infer_role(d, None);
            SignalSpec {
                name: d.name.clone(),
                definition: Definition { width: d.width, signal_type: role.to_string(), direction: direction.to_string() },
                functionality: own.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "),
                interconnection: inter.join(" "),
                additional: String::new(),
                interconnection_signals: inter_signals,
                flags: SpecFlags { not_described: own.is_empty(), width_mismatch: None },
            }
        })
        .collect()
}
