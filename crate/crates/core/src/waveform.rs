// SPDX-License-Identifier: Apache-2.0
//! Timing diagrams, behavior templates and behavior descriptions.
//!
//! The LLM path asks a model to invent templates and then describe a diagram
//! with them. The local path uses five built-in templates and emits a
//! description only when its pattern holds at every occurrence in the diagram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatRequest, Content, Gateway, LlmError, Message, Role};
use crate::prompts;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sym {
    Zero,
    One,
    X,
    Z,
    Bus(u64),
    Hold,
}

/// Concrete per-cycle value after hold expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    V(u64),
    X,
    Z,
}

impl Level {
    fn high(self) -> bool {
        matches!(self, Level::V(v) if v != 0)
    }

    fn low(self) -> bool {
        self == Level::V(0)
    }

    fn known(self) -> Option<u64> {
        match self {
            Level::V(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WaveformError {
    #[error("malformed timing diagram: {0}")]
    Malformed(String),
    #[error("lane `{0}` starts with a hold")]
    LeadingHold(String),
    #[error("lane `{signal}` has {got} cycles, diagram declares {expected}")]
    LengthMismatch { signal: String, expected: usize, got: usize },
    #[error("no templates could be parsed from the response")]
    NoTemplates,
    #[error("description response could not be parsed: {0}")]
    DescriptionUnparseable(String),
    #[error("description refers to `{0}`, which is not in the diagram")]
    InvalidSignalRef(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct RawLane {
    name: String,
    wave: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct RawDiagram {
    cycles: usize,
    signals: Vec<RawLane>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lane {
    pub name: String,
    pub wave: String,
    pub levels: Vec<Level>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimingDiagram {
    pub cycles: usize,
    pub signals: Vec<Lane>,
}

/// Splits a wave string into symbols.
pub fn parse_wave(wave: &str) -> Result<Vec<Sym>, WaveformError> {
    let mut out = Vec::new();
    let mut chars = wave.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(match c {
            '0' => Sym::Zero,
            '1' => Sym::One,
            'x' | 'X' => Sym::X,
            'z' | 'Z' => Sym::Z,
            '.' => Sym::Hold,
            '=' => {
                let mut digits = String::new();
                loop {
                    match chars.next() {
                        Some(';') => break,
                        Some(d) if d.is_ascii_digit() => digits.push(d),
                        _ => return Err(WaveformError::Malformed(format!("bad bus value in {wave:?}"))),
                    }
                }
                let v = digits.parse().map_err(|_| WaveformError::Malformed(format!("bad bus value in {wave:?}")))?;
                Sym::Bus(v)
            }
            ' ' | '\t' | '|' => continue,
            other => return Err(WaveformError::Malformed(format!("unexpected {other:?} in {wave:?}"))),
        });
    }
    Ok(out)
}

/// Replaces each hold with the previous concrete value.
pub fn expand_lane(name: &str, syms: &[Sym]) -> Result<Vec<Level>, WaveformError> {
    let mut out = Vec::with_capacity(syms.len());
    let mut prev = None;
    for s in syms {
        let l = match s {
            Sym::Zero => Level::V(0),
            Sym::One => Level::V(1),
            Sym::X => Level::X,
            Sym::Z => Level::Z,
            Sym::Bus(v) => Level::V(*v),
            Sym::Hold => prev.ok_or_else(|| WaveformError::LeadingHold(name.to_string()))?,
        };
        prev = Some(l);
        out.push(l);
    }
    Ok(out)
}

impl TimingDiagram {
    pub fn from_json(text: &str) -> Result<Self, WaveformError> {
        let raw: RawDiagram = serde_json::from_str(text).map_err(|e| WaveformError::Malformed(e.to_string()))?;
        if raw.cycles == 0 {
            return Err(WaveformError::Malformed("cycles must be positive".into()));
        }
        let mut signals: Vec<Lane> = Vec::new();
        for l in raw.signals {
            if signals.iter().any(|s| s.name == l.name) {
                return Err(WaveformError::Malformed(format!("lane `{}` appears twice", l.name)));
            }
            let levels = expand_lane(&l.name, &parse_wave(&l.wave)?)?;
            if levels.len() != raw.cycles {
                return Err(WaveformError::LengthMismatch { signal: l.name, expected: raw.cycles, got: levels.len() });
            }
            signals.push(Lane { name: l.name, wave: l.wave, levels });
        }
        Ok(TimingDiagram { cycles: raw.cycles, signals })
    }

    pub fn to_json(&self) -> String {
        let raw = RawDiagram {
            cycles: self.cycles,
            signals: self.signals.iter().map(|l| RawLane { name: l.name.clone(), wave: l.wave.clone() }).collect(),
        };
        serde_json::to_string(&raw).expect("diagram serializes")
    }

    pub fn names(&self) -> Vec<&str> {
        self.signals.iter().map(|s| s.name.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTemplate {
    pub id: String,
    pub pattern: String,
}

pub const SLOTS: [&str; 4] = ["SIG", "SIG2", "N", "VAL"];

pub const LATENCY: &str = "response_latency";
pub const STABILITY: &str = "stability";
pub const EDGE_CAUSE: &str = "edge_cause";
pub const MUTEX: &str = "mutual_exclusion";
pub const VALUE_HOLD: &str = "value_hold";
pub const EXTENDED: &str = "extended";

pub fn builtin_templates() -> Vec<BehaviorTemplate> {
    [
        (LATENCY, "When {{SIG}} is asserted, {{SIG2}} becomes valid within {{N}} cycles"),
        (STABILITY, "{{SIG}} remains stable for {{N}} cycles"),
        (EDGE_CAUSE, "A rising edge on {{SIG}} causes {{SIG2}} to change in the next cycle"),
        (MUTEX, "{{SIG}} and {{SIG2}} are never asserted in the same cycle"),
        (VALUE_HOLD, "{{SIG}} holds value {{VAL}} while {{SIG2}} is high"),
    ]
    .into_iter()
    .map(|(id, pattern)| BehaviorTemplate { id: id.into(), pattern: pattern.into() })
    .collect()
}

/// Slot names used in `pattern`, in order of appearance.
pub fn slots_of(pattern: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(i) = rest.find("{{") {
        let after = &rest[i + 2..];
        match after.find("}}") {
            Some(j) => {
                out.push(after[..j].to_string());
                rest = &after[j + 2..];
            }
            None => break,
        }
    }
    out
}

impl BehaviorTemplate {
    pub fn instantiate(&self, params: &BTreeMap<String, String>) -> String {
        let vars: Vec<(&str, &str)> = params.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        prompts::fill(&self.pattern, &vars)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorDescription {
    pub template_id: String,
    pub text: String,
    pub involved_signals: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
}

/// A description tagged with the diagram it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behavior {
    pub waveform: String,
    #[serde(flatten)]
    pub description: BehaviorDescription,
}

/// First JSON value of the given shape (`'['` or `'{'`) embedded in `text`.
pub fn extract_json(text: &str, open: char) -> Option<serde_json::Value> {
    let mut start = 0;
    while let Some(off) = text[start..].find(open) {
        let i = start + off;
        let mut it = serde_json::Deserializer::from_str(&text[i..]).into_iter::<serde_json::Value>();
        if let Some(Ok(v)) = it.next() {
            return Some(v);
        }
        start = i + open.len_utf8();
    }
    None
}

/// Parses model-proposed templates, dropping entries with unknown slots.
pub fn parse_templates(text: &str) -> Result<(Vec<BehaviorTemplate>, Vec<String>), WaveformError> {
    let mut warnings = Vec::new();
    let Some(serde_json::Value::Array(items)) = extract_json(text, '[') else {
        return Err(WaveformError::NoTemplates);
    };
    let mut out: Vec<BehaviorTemplate> = Vec::new();
    for item in items {
        let t: BehaviorTemplate = match serde_json::from_value(item) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("dropped malformed template: {e}"));
                continue;
            }
        };
        if let Some(bad) = slots_of(&t.pattern).into_iter().find(|s| !SLOTS.contains(&s.as_str())) {
            warnings.push(format!("dropped template `{}`: undefined slot {{{{{bad}}}}}", t.id));
            continue;
        }
        if t.id == EXTENDED || out.iter().any(|o| o.id == t.id) {
            warnings.push(format!("dropped template with reserved or duplicate id `{}`", t.id));
            continue;
        }
        out.push(t);
    }
    if out.is_empty() {
        return Err(WaveformError::NoTemplates);
    }
    if out.len() < 3 {
        warnings.push(format!("only {} templates proposed", out.len()));
    }
    Ok((out, warnings))
}

pub fn gen_templates(gw: &Gateway, hint: &str) -> Result<(Vec<BehaviorTemplate>, Vec<String>), WaveformError> {
    let system = prompts::fill(prompts::WAVEFORM_TEMPLATE, &[("DIAGRAM_HINT", hint)]);
    let resp = gw.complete(&ChatRequest::new(system, "Propose the templates."))?;
    parse_templates(&resp.content)
}

/// Checks every description against the diagram's signal names.
pub fn validate_descriptions(descs: &[BehaviorDescription], names: &[&str]) -> Result<(), WaveformError> {
    for d in descs {
        if d.involved_signals.is_empty() {
            return Err(WaveformError::DescriptionUnparseable(format!("no involved signals in {:?}", d.text)));
        }
        if let Some(bad) = d.involved_signals.iter().find(|s| !names.contains(&s.as_str())) {
            return Err(WaveformError::InvalidSignalRef(bad.clone()));
        }
    }
    Ok(())
}

pub fn parse_descriptions(text: &str) -> Result<Vec<BehaviorDescription>, WaveformError> {
    let Some(v @ serde_json::Value::Array(_)) = extract_json(text, '[') else {
        return Err(WaveformError::DescriptionUnparseable("no JSON array in response".into()));
    };
    serde_json::from_value(v).map_err(|e| WaveformError::DescriptionUnparseable(e.to_string()))
}

/// What the model is shown: a textual diagram or an opaque image.
pub enum DiagramPayload<'a> {
    Timing(&'a TimingDiagram),
    Image { media_type: &'a str, bytes: &'a [u8], signals: &'a [&'a str] },
}

pub fn describe_llm(
    gw: &Gateway,
    payload: &DiagramPayload<'_>,
    templates: &[BehaviorTemplate],
) -> Result<Vec<BehaviorDescription>, WaveformError> {
    let listing = serde_json::to_string_pretty(templates).expect("templates serialize");
    let system = prompts::fill(prompts::WAVEFORM_DESCRIBE, &[("TEMPLATES", &listing)]);
    let (req, names): (ChatRequest, Vec<&str>) = match payload {
        DiagramPayload::Timing(d) => {
            (ChatRequest::new(system, format!("Timing diagram:\n{}", d.to_json())), d.names())
        }
        DiagramPayload::Image { media_type, bytes, signals } => {
            let mut r = ChatRequest::new(system, format!("Signals in the waveform: {}", signals.join(", ")));
            r.messages.push(Message {
                role: Role::User,
                content: Content::Image { media_type: media_type.to_string(), bytes: bytes.to_vec() },
            });
            (r, signals.to_vec())
        }
    };
    let resp = gw.complete(&req)?;
    let descs = parse_descriptions(&resp.content)?;
    validate_descriptions(&descs, &names)?;
    Ok(descs)
}

fn is_bit_lane(l: &Lane) -> bool {
    l.levels.iter().all(|v| matches!(v, Level::V(0) | Level::V(1) | Level::X | Level::Z))
}

/// Cycles where `l` goes high: asserted now and not asserted the cycle before.
fn rising_starts(l: &Lane) -> Vec<usize> {
    (0..l.levels.len()).filter(|&t| l.levels[t].high() && (t == 0 || !l.levels[t - 1].high())).collect()
}

/// Latency bound N for `sig` -> `sig2`, if the pattern holds at every occurrence.
pub fn response_latency(sig: &Lane, sig2: &Lane) -> Option<usize> {
    let starts = rising_starts(sig);
    if starts.is_empty() {
        return None;
    }
    let mut n = 0;
    for t in starts {
        if sig2.levels[t].high() {
            return None;
        }
        let d = (t + 1..sig2.levels.len()).find(|&u| sig2.levels[u].high())? - t;
        n = n.max(d);
    }
    Some(n)
}

fn stable_for(l: &Lane) -> Option<usize> {
    let first = l.levels[0].known()?;
    l.levels.iter().all(|v| *v == Level::V(first)).then_some(l.levels.len())
}

fn edge_cause(sig: &Lane, sig2: &Lane) -> bool {
    let len = sig.levels.len();
    let edges: Vec<usize> =
        (1..len.saturating_sub(1)).filter(|&t| sig.levels[t - 1].low() && sig.levels[t] == Level::V(1)).collect();
    !edges.is_empty()
        && edges.iter().all(|&t| match (sig2.levels[t].known(), sig2.levels[t + 1].known()) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        })
}

fn mutually_exclusive(a: &Lane, b: &Lane) -> bool {
    let known = a.levels.iter().chain(&b.levels).all(|v| v.known().is_some());
    known
        && a.levels.iter().any(|v| v.high())
        && b.levels.iter().any(|v| v.high())
        && a.levels.iter().zip(&b.levels).all(|(x, y)| !(x.high() && y.high()))
}

/// Value `sig` holds whenever `sig2` is high, if it is unique and `sig` is not constant.
fn value_hold(sig: &Lane, sig2: &Lane) -> Option<u64> {
    if stable_for(sig).is_some() || !sig2.levels.iter().any(|v| v.high()) {
        return None;
    }
    let mut val = None;
    for (v, g) in sig.levels.iter().zip(&sig2.levels) {
        if g.high() {
            let k = v.known()?;
            if *val.get_or_insert(k) != k {
                return None;
            }
        }
    }
    val
}

/// Rule-based description of a diagram with whichever built-in templates are
/// present in `templates`. Pure and deterministic.
pub fn describe_local(d: &TimingDiagram, templates: &[BehaviorTemplate]) -> Vec<BehaviorDescription> {
    let mut out = Vec::new();
    let lanes = &d.signals;
    for t in templates {
        let mut emit = |sigs: &[&str], mut params: BTreeMap<String, String>| {
            params.insert("SIG".into(), sigs[0].to_string());
            if sigs.len() > 1 {
                params.insert("SIG2".into(), sigs[1].to_string());
            }
            out.push(BehaviorDescription {
                template_id: t.id.clone(),
                text: t.instantiate(&params),
                involved_signals: sigs.iter().map(|s| s.to_string()).collect(),
                parameters: params,
            });
        };
        let pairs = || {
            lanes.iter().flat_map(move |a| lanes.iter().filter(move |b| b.name != a.name).map(move |b| (a, b)))
        };
        match t.id.as_str() {
            LATENCY => {
                for (a, b) in pairs().filter(|(a, b)| is_bit_lane(a) && is_bit_lane(b)) {
                    if let Some(n) = response_latency(a, b) {
                        emit(&[&a.name, &b.name], BTreeMap::from([("N".into(), n.to_string())]));
                    }
                }
            }
            STABILITY => {
                for l in lanes {
                    if let Some(n) = stable_for(l) {
                        emit(&[&l.name], BTreeMap::from([("N".into(), n.to_string())]));
                    }
                }
            }
            EDGE_CAUSE => {
                for (a, b) in pairs().filter(|(a, _)| is_bit_lane(a)) {
                    if edge_cause(a, b) {
                        emit(&[&a.name, &b.name], BTreeMap::new());
                    }
                }
            }
            MUTEX => {
                for (i, a) in lanes.iter().enumerate() {
                    for b in &lanes[i + 1..] {
                        if is_bit_lane(a) && is_bit_lane(b) && mutually_exclusive(a, b) {
                            emit(&[&a.name, &b.name], BTreeMap::new());
                        }
                    }
                }
            }
            VALUE_HOLD => {
                for (a, b) in pairs().filter(|(_, b)| is_bit_lane(b)) {
                    if let Some(v) = value_hold(a, b) {
                        emit(&[&a.name, &b.name], BTreeMap::from([("VAL".into(), v.to_string())]));
                    }
                }
            }
            _ => {}
        }
    }
    out
}
