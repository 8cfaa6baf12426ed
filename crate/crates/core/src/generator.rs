// SPDX-License-Identifier: Apache-2.0
//! Assertion generation: per-signal plans, prompts, response parsing and the
//! deterministic fallback used when no model is available.

use std::collections::BTreeMap;
use std::fmt;

use assertforge_hdl::signal::{Hierarchy, SignalDefinition, SignalRole};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::SignalSpec;
use crate::knowledge::{LexicalIndex, DEFAULT_BUDGET, DEFAULT_K};
use crate::llm::{ChatRequest, Gateway, LlmError};
use crate::prompts;
use crate::util::par_map;
use crate::waveform::{Behavior, EDGE_CAUSE, LATENCY, MUTEX, STABILITY, VALUE_HOLD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Width,
    Connectivity,
    Function,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Width => "width",
            Category::Connectivity => "connectivity",
            Category::Function => "function",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    NaturalLanguage,
    Waveform,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub signal: String,
    pub category: Category,
    pub source: Source,
    pub text: String,
}

/// Report grouping of a signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Io,
    Reg,
    Waveform,
}

fn has_word(text: &str, words: &[&str]) -> bool {
    text.split(|c: char| !c.is_ascii_alphanumeric()).any(|w| words.contains(&w.to_ascii_lowercase().as_str()))
}

/// Role from the signal file, else the extracted signal type, else the name.
pub fn infer_role(def: &SignalDefinition, spec: Option<&SignalSpec>) -> SignalRole {
    if let Some(r) = def.role {
        return r;
    }
    if let Some(s) = spec {
        let t = &s.definition.signal_type;
        if has_word(t, &["clock", "clk"]) {
            return SignalRole::Clock;
        }
        if has_word(t, &["reset", "rst"]) {
            return SignalRole::Reset;
        }
        if has_word(t, &["control", "status", "command", "strobe", "enable", "interrupt"]) {
            return SignalRole::Control;
        }
        if has_word(t, &["data", "address", "bus"]) {
            return SignalRole::Data;
        }
    }
    let n = def.name.to_ascii_lowercase();
    let parts: Vec<&str> = n.split('_').collect();
    let any = |ws: &[&str]| parts.iter().any(|p| ws.contains(p));
    if any(&["clk", "clock"]) {
        SignalRole::Clock
    } else if any(&["rst", "reset", "arst", "rstn", "resetn"]) {
        SignalRole::Reset
    } else if any(&["en", "ena", "enable", "we", "stb", "cyc", "ack", "req", "irq", "inta", "int", "sel", "valid", "ready", "ctrl", "ctr", "cr", "sr", "start", "stop", "done", "busy"]) {
        SignalRole::Control
    } else {
        SignalRole::Data
    }
}

pub fn categories_for(group: Group, role: SignalRole) -> &'static [Category] {
    use Category::*;
    match (group, role) {
        (Group::Waveform, _) => &[Function],
        (Group::Io, SignalRole::Control) => &[Width, Connectivity],
        (Group::Io, _) => &[Width],
        (Group::Reg, SignalRole::Control) => &[Width, Connectivity, Function],
        (Group::Reg, _) => &[Width, Function],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub signal: String,
    pub group: Group,
    pub role: SignalRole,
    pub categories: Vec<Category>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub signals: Vec<SignalPlan>,
    /// One function request per waveform behavior, in behavior order.
    pub behaviors: usize,
}

impl GenerationPlan {
    pub fn requests(&self) -> usize {
        self.signals.iter().map(|s| s.categories.len()).sum::<usize>() + self.behaviors
    }
}

pub fn plan(specs: &[SignalSpec], defs: &[SignalDefinition], behaviors: &[Behavior]) -> GenerationPlan {
    let signals = defs
        .iter()
        .filter_map(|d| {
            let group = match d.hierarchy {
                Hierarchy::IoPort => Group::Io,
                Hierarchy::ArchRegister => Group::Reg,
                Hierarchy::Internal => return None,
            };
            let role = infer_role(d, specs.iter().find(|s| s.name == d.name));
            Some(SignalPlan { signal: d.name.clone(), group, role, categories: categories_for(group, role).to_vec() })
        })
        .collect();
    GenerationPlan { signals, behaviors: behaviors.len() }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no clock signal declared")]
    NoClock,
    #[error("clock is ambiguous among {0:?}")]
    AmbiguousClock(Vec<String>),
    #[error("{signal}/{category}: no SVA code block in response")]
    GenerationUnparseable { signal: String, category: Category, raw: String },
    #[error("{signal}: interconnection list is empty")]
    EmptyInterconnection { signal: String },
    #[error("{signal}: width is unknown")]
    WidthUnknown { signal: String },
    #[error("{signal}/{category}: {source}")]
    Llm { signal: String, category: Category, source: LlmError },
}

pub fn resolve_clock(defs: &[SignalDefinition], specs: &[SignalSpec]) -> Result<String, GenError> {
    let clocks: Vec<&str> = defs
        .iter()
        .filter(|d| infer_role(d, specs.iter().find(|s| s.name == d.name)) == SignalRole::Clock)
        .map(|d| d.name.as_str())
        .collect();
    match clocks.as_slice() {
        [] => Err(GenError::NoClock),
        [one] => Ok(one.to_string()),
        many => {
            let preferred: Vec<&&str> =
                many.iter().filter(|n| **n == "clk" || **n == "wb_clk_i" || n.ends_with("_clk")).collect();
            match preferred.as_slice() {
                [one] => Ok(one.to_string()),
                _ => Err(GenError::AmbiguousClock(many.iter().map(|s| s.to_string()).collect())),
            }
        }
    }
}

/// A reset signal and the level at which it is active.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResetInfo {
    pub name: String,
    pub active_low: bool,
}

impl ResetInfo {
    pub fn active_expr(&self) -> String {
        if self.active_low {
            format!("!{}", self.name)
        } else {
            self.name.clone()
        }
    }
}

pub fn name_is_active_low(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.ends_with("_n") || n.ends_with("_ni") || n.ends_with("_l") || n.ends_with("rstn") || n.ends_with("resetn")
}

/// The first reset-role signal in declaration order, if any.
pub fn primary_reset(defs: &[SignalDefinition], specs: &[SignalSpec]) -> Option<ResetInfo> {
    defs.iter()
        .find(|d| infer_role(d, specs.iter().find(|s| s.name == d.name)) == SignalRole::Reset)
        .map(|d| ResetInfo { name: d.name.clone(), active_low: name_is_active_low(&d.name) })
}

fn strip_line_comments(block: &str) -> String {
    block.lines().map(|l| l.find("//").map_or(l, |i| &l[..i])).collect::<Vec<_>>().join("\n")
}

fn find_assert(s: &str, from: usize) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut i = from;
    while let Some(off) = s[i..].find("assert") {
        let at = i + off;
        let before_ok = at == 0 || !(bytes[at - 1].is_ascii_alphanumeric() || bytes[at - 1] == b'_');
        let rest = &s[at + 6..];
        let trimmed = rest.trim_start();
        let gap = rest.len() - trimmed.len();
        if before_ok && gap > 0 && trimmed.starts_with("property") {
            return Some(at);
        }
        i = at + 6;
    }
    None
}

/// Splits one code block into `assert property` statements. A statement ends
/// at the first `;` outside parentheses.
/// Assertion statements in `block`, line comments removed.
pub fn split_statements(block: &str) -> Vec<String> {
    let s = strip_line_comments(block);
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(start) = find_assert(&s, pos) {
        let mut depth = 0i32;
        let mut end = s.len();
        for (i, c) in s[start..].char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ';' if depth <= 0 => {
                    end = start + i + 1;
                    break;
                }
                _ => {}
            }
        }
        out.push(s[start..end].trim().to_string());
        pos = end;
    }
    if out.is_empty() && !s.trim().is_empty() {
        out.push(s.trim().to_string());
    }
    out
}

/// Fenced code blocks of a response, split into assertion statements.
pub fn parse_response_blocks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let (block, next) = match body.find("```") {
            Some(close) => (&body[..close], &body[close + 3..]),
            None => (body, ""),
        };
        out.extend(split_statements(block));
        rest = next;
    }
    out
}

pub fn width_fallback(clock: &str, name: &str, width: u32) -> String {
    format!("assert property (@(posedge {clock}) ($bits({name}) == {width}));")
}

pub fn connectivity_fallback(clock: &str, name: &str, other: &str) -> String {
    format!("assert property (@(posedge {clock}) !$stable({other}) |-> ##1 {name} == $past({other}));")
}

/// Reset value stated in a functionality narrative, e.g. "reset value is 0x00".
pub fn reset_value(text: &str) -> Option<u64> {
    let lower = text.to_ascii_lowercase();
    for anchor in ["reset value", "resets to", "reset to", "cleared to", "value after reset"] {
        let Some(i) = lower.find(anchor) else { continue };
        let tail = &lower[i + anchor.len()..];
        // "reset value of prer is 0xffff": the first number within a few words
        let v = tail
            .split(|c: char| c.is_whitespace() || c == ',')
            .map(|t| t.trim_matches(|c: char| "().:;`".contains(c)))
            .filter(|t| !t.is_empty())
            .take(5)
            .find_map(parse_number);
        if v.is_some() {
            return v;
        }
    }
    None
}

fn parse_number(tok: &str) -> Option<u64> {
    let t = tok.replace('_', "");
    if let Some(h) = t.strip_prefix("0x") {
        return u64::from_str_radix(h, 16).ok();
    }
    if let Some((_, rest)) = t.split_once('\'') {
        let (base, digits) = rest.split_at(1.min(rest.len()));
        let radix = match base {
            "h" => 16,
            "b" => 2,
            "d" => 10,
            "o" => 8,
            _ => return None,
        };
        return u64::from_str_radix(digits, radix).ok();
    }
    if t == "zero" {
        return Some(0);
    }
    t.parse().ok()
}

pub fn function_fallback(clock: &str, spec: &SignalSpec, reset: Option<&ResetInfo>) -> Vec<String> {
    match (reset_value(&spec.functionality), reset) {
        (Some(v), Some(r)) => {
            vec![format!("assert property (@(posedge {clock}) {} |=> {} == {v});", r.active_expr(), spec.name)]
        }
        _ => Vec::new(),
    }
}

/// SVA for a built-in behavior template, or `None` for anything else.
pub fn behavior_fallback(clock: &str, b: &Behavior) -> Option<String> {
    let p = &b.description.parameters;
    let get = |k: &str| p.get(k).map(String::as_str);
    let body = match b.description.template_id.as_str() {
        LATENCY => format!("{} |-> ##[1:{}] {}", get("SIG")?, get("N")?, get("SIG2")?),
        STABILITY => format!("##1 $stable({})", get("SIG")?),
        EDGE_CAUSE => format!("$rose({}) |=> !$stable({})", get("SIG")?, get("SIG2")?),
        MUTEX => format!("!({} && {})", get("SIG")?, get("SIG2")?),
        VALUE_HOLD => format!("{} |-> {} == {}", get("SIG2")?, get("SIG")?, get("VAL")?),
        _ => return None,
    };
    Some(format!("assert property (@(posedge {clock}) {body});"))
}

/// Where generated text comes from.
#[derive(Clone, Copy)]
pub enum Engine<'a> {
    Model(&'a Gateway),
    Local,
}

pub struct GenContext<'a> {
    pub engine: Engine<'a>,
    pub index: &'a LexicalIndex,
    pub clock: String,
    pub reset: Option<ResetInfo>,
    pub architecture: String,
    pub defs: &'a [SignalDefinition],
}

#[derive(Clone, Debug, Default)]
pub struct GenOutput {
    pub assertions: Vec<Assertion>,
    pub errors: Vec<GenError>,
    pub warnings: Vec<String>,
}

fn rag_query(category: Category, signal_type: &str, functionality: &str) -> String {
    format!("SVA {category} assertion for {signal_type} signal {functionality}")
}

fn signal_type(spec: &SignalSpec, role: SignalRole) -> String {
    if spec.definition.signal_type.trim().is_empty() {
        role.to_string()
    } else {
        spec.definition.signal_type.clone()
    }
}

/// Spec with the declared width, which takes precedence over the extracted one.
fn declared(spec: &SignalSpec, defs: &[SignalDefinition]) -> SignalSpec {
    let mut s = spec.clone();
    if let Some(d) = defs.iter().find(|d| d.name == spec.name) {
        s.definition.width = d.width;
    }
    s
}

impl GenContext<'_> {
    fn ask(&self, gw: &Gateway, system: String, signal: &str, category: Category) -> Result<Vec<String>, GenError> {
        let user = format!("Generate the {category} assertions for {signal}.");
        let resp = gw
            .complete(&ChatRequest::new(system, user))
            .map_err(|source| GenError::Llm { signal: signal.into(), category, source })?;
        let blocks = parse_response_blocks(&resp.content);
        if blocks.is_empty() {
            return Err(GenError::GenerationUnparseable { signal: signal.into(), category, raw: resp.content });
        }
        Ok(blocks)
    }

    fn rag(&self, category: Category, stype: &str, functionality: &str) -> String {
        self.index.context(&rag_query(category, stype, functionality), DEFAULT_K, DEFAULT_BUDGET)
    }

    pub fn generate_width(&self, spec: &SignalSpec, role: SignalRole) -> Result<Vec<String>, GenError> {
        let spec = declared(spec, self.defs);
        if spec.definition.width == 0 {
            return Err(GenError::WidthUnknown { signal: spec.name.clone() });
        }
        match self.engine {
            Engine::Local => Ok(vec![width_fallback(&self.clock, &spec.name, spec.definition.width)]),
            Engine::Model(gw) => {
                let rag = self.rag(Category::Width, &signal_type(&spec, role), "$bits width");
                let system = prompts::fill(
                    prompts::SVA_WIDTH,
                    &[("CLOCK", &self.clock), ("SPEC_JSON", &spec.prompt_json()), ("RAG_CHUNKS", &rag)],
                );
                // one width assertion per signal
                Ok(self.ask(gw, system, &spec.name, Category::Width)?.into_iter().take(1).collect())
            }
        }
    }

    pub fn generate_connectivity(&self, spec: &SignalSpec, role: SignalRole) -> Result<Vec<String>, GenError> {
        if spec.interconnection_signals.is_empty() {
            return Err(GenError::EmptyInterconnection { signal: spec.name.clone() });
        }
        let spec = declared(spec, self.defs);
        match self.engine {
            Engine::Local => Ok(spec
                .interconnection_signals
                .iter()
                .map(|o| connectivity_fallback(&self.clock, &spec.name, o))
                .collect()),
            Engine::Model(gw) => {
                let rag = self.rag(Category::Connectivity, &signal_type(&spec, role), &spec.interconnection);
                let system = prompts::fill(
                    prompts::SVA_CONNECTIVITY,
                    &[
                        ("CLOCK", &self.clock),
                        ("ARCHITECTURE", &self.architecture),
                        ("SPEC_JSON", &spec.prompt_json()),
                        ("RAG_CHUNKS", &rag),
                    ],
                );
                self.ask(gw, system, &spec.name, Category::Connectivity)
            }
        }
    }

    fn function_prompt(&self, spec_json: &str, behavior: &str, stype: &str, functionality: &str) -> String {
        let rag = self.rag(Category::Function, stype, functionality);
        prompts::fill(
            prompts::SVA_FUNCTION,
            &[
                ("CLOCK", &self.clock),
                ("ARCHITECTURE", &self.architecture),
                ("SPEC_JSON", spec_json),
                ("BEHAVIOR", behavior),
                ("RAG_CHUNKS", &rag),
            ],
        )
    }

    pub fn generate_function(&self, spec: &SignalSpec, role: SignalRole) -> Result<Vec<String>, GenError> {
        let spec = declared(spec, self.defs);
        match self.engine {
            Engine::Local => Ok(function_fallback(&self.clock, &spec, self.reset.as_ref())),
            Engine::Model(gw) => {
                let stype = signal_type(&spec, role);
                let system = self.function_prompt(&spec.prompt_json(), &spec.functionality, &stype, &spec.functionality);
                self.ask(gw, system, &spec.name, Category::Function)
            }
        }
    }

    pub fn generate_behavior(&self, b: &Behavior, specs: &[SignalSpec]) -> Result<Vec<String>, GenError> {
        let signal = b.description.involved_signals.first().cloned().unwrap_or_default();
        match self.engine {
            Engine::Local => Ok(behavior_fallback(&self.clock, b).into_iter().collect()),
            Engine::Model(gw) => {
                let spec_json = specs.iter().find(|s| s.name == signal).map_or("{}".to_string(), |s| declared(s, self.defs).prompt_json());
                let system = self.function_prompt(&spec_json, &b.description.text, "waveform", &b.description.text);
                self.ask(gw, system, &signal, Category::Function)
            }
        }
    }
}

enum Task<'a> {
    Signal(&'a SignalPlan, Category),
    Behavior(&'a Behavior),
}

/// Runs every planned request. Output order is signal order, then category
/// order, then waveform behaviors in order.
pub fn generate_all(ctx: &GenContext<'_>, plan: &GenerationPlan, specs: &[SignalSpec], behaviors: &[Behavior]) -> GenOutput {
    let mut tasks = Vec::new();
    for sp in &plan.signals {
        for c in &sp.categories {
            tasks.push(Task::Signal(sp, *c));
        }
    }
    tasks.extend(behaviors.iter().map(Task::Behavior));
    let cap = match ctx.engine {
        Engine::Model(gw) => gw.cap(),
        Engine::Local => 1,
    };
    let specs_by_name: BTreeMap<&str, &SignalSpec> = specs.iter().map(|s| (s.name.as_str(), s)).collect();
    let results = par_map(&tasks, cap, |t| -> (Vec<Assertion>, Option<GenError>, Option<String>) {
        match t {
            Task::Signal(sp, cat) => {
                let Some(spec) = specs_by_name.get(sp.signal.as_str()) else {
                    return (Vec::new(), None, Some(format!("{}: no extracted spec, {cat} skipped", sp.signal)));
                };
                if *cat == Category::Function && (spec.flags.not_described || spec.functionality.trim().is_empty()) {
                    return (Vec::new(), None, Some(format!("{}: not described, function skipped", sp.signal)));
                }
                let r = match cat {
                    Category::Width => ctx.generate_width(spec, sp.role),
                    Category::Connectivity => ctx.generate_connectivity(spec, sp.role),
                    Category::Function => ctx.generate_function(spec, sp.role),
                };
                match r {
                    Ok(texts) => {
                        let warn = texts.is_empty().then(|| format!("{}: no {cat} assertion produced", sp.signal));
                        let a = texts
                            .into_iter()
                            .map(|text| Assertion { signal: sp.signal.clone(), category: *cat, source: Source::NaturalLanguage, text })
                            .collect();
                        (a, None, warn)
                    }
                    Err(e) => (Vec::new(), Some(e), None),
                }
            }
            Task::Behavior(b) => match ctx.generate_behavior(b, specs) {
                Ok(texts) => {
                    let signal = b.description.involved_signals.first().cloned().unwrap_or_default();
                    let warn = texts
                        .is_empty()
                        .then(|| format!("{}: no assertion for behavior {:?}", b.waveform, b.description.text));
                    let a = texts
                        .into_iter()
                        .map(|text| Assertion { signal: signal.clone(), category: Category::Function, source: Source::Waveform, text })
                        .collect();
                    (a, None, warn)
                }
                Err(e) => (Vec::new(), Some(e), None),
            },
        }
    });
    let mut out = GenOutput::default();
    for (a, e, w) in results {
        out.assertions.extend(a);
        out.errors.extend(e);
        out.warnings.extend(w);
    }
    out
}
