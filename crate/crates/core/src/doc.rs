// SPDX-License-Identifier: Apache-2.0
//! Specification bundles: the document, its sections, the signal file and
//! waveform attachments.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use assertforge_hdl::signal::{is_identifier, Hierarchy, SignalDefinition, SignalKind, SignalRole};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::waveform::TimingDiagram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Introduction,
    IoPorts,
    Registers,
    Operation,
    Architecture,
    Usage,
    Waveform,
    Other,
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SectionKind::Introduction => "introduction",
            SectionKind::IoPorts => "io_ports",
            SectionKind::Registers => "registers",
            SectionKind::Operation => "operation",
            SectionKind::Architecture => "architecture",
            SectionKind::Usage => "usage",
            SectionKind::Waveform => "waveform",
            SectionKind::Other => "other",
        })
    }
}

const KEYWORDS: &[(SectionKind, &[&str])] = &[
    (SectionKind::Introduction, &["introduction", "overview", "features"]),
    (SectionKind::IoPorts, &["io", "port", "interface"]),
    (SectionKind::Registers, &["register"]),
    (SectionKind::Operation, &["operation", "protocol", "behavior"]),
    (SectionKind::Architecture, &["architecture", "block diagram"]),
    (SectionKind::Usage, &["usage", "example"]),
    (SectionKind::Waveform, &["waveform", "timing"]),
];

fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(|w| w.to_lowercase()).collect()
}

/// Kind of a heading: the first keyword, in table order, whose words are
/// prefixes of consecutive heading words.
pub fn classify_heading(title: &str) -> SectionKind {
    let hw = words(title);
    for (kind, kws) in KEYWORDS {
        for kw in *kws {
            let kw: Vec<&str> = kw.split(' ').collect();
            if hw.windows(kw.len()).any(|win| win.iter().zip(&kw).all(|(w, k)| w.starts_with(k))) {
                return *kind;
            }
        }
    }
    SectionKind::Other
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub title: String,
    /// Heading exactly as written, including the line break that precedes it.
    pub heading: String,
    pub body: String,
}

fn atx_title(line: &str) -> Option<String> {
    let line = line.trim_end_matches(['\n', '\r']);
    let rest = line.trim_start_matches('#');
    let level = line.len() - rest.len();
    if level == 0 || !(rest.is_empty() || rest.starts_with([' ', '\t'])) {
        return None;
    }
    Some(rest.trim().trim_end_matches('#').trim_end().to_string())
}

fn caps_title(line: &str) -> Option<String> {
    let t = line.trim();
    let letters = t.chars().filter(|c| c.is_alphabetic()).count();
    let ok = letters >= 2
        && t.split_whitespace().count() <= 8
        && t.chars().all(|c| !c.is_alphabetic() || c.is_uppercase())
        && !t.ends_with(['.', ',', ';']);
    ok.then(|| t.to_string())
}

/// Splits a document at headings. Concatenating `heading + body` over the
/// result gives back `text` exactly.
pub fn split_sections(text: &str) -> Vec<Section> {
    let mut atx = Vec::new();
    let mut caps = Vec::new();
    let mut fenced = false;
    let mut off = 0;
    for line in text.split_inclusive('\n') {
        let start = off;
        off += line.len();
        if line.trim_start().starts_with("```") {
            fenced = !fenced;
            continue;
        }
        if fenced {
            continue;
        }
        if let Some(title) = atx_title(line) {
            atx.push((start, off, title));
        } else if let Some(title) = caps_title(line) {
            caps.push((start, off, title));
        }
    }
    let heads = if atx.is_empty() { caps } else { atx };
    if heads.is_empty() {
        return vec![Section { kind: SectionKind::Other, title: String::new(), heading: String::new(), body: text.into() }];
    }
    // a heading claims the line break before it unless the previous heading owns it
    let starts: Vec<usize> = (0..heads.len())
        .map(|i| {
            let prev_end = if i == 0 { 0 } else { heads[i - 1].1 };
            heads[i].0.saturating_sub(1).max(prev_end)
        })
        .collect();
    let mut out = Vec::new();
    let pre = &text[..starts[0]];
    if !pre.is_empty() {
        out.push(Section { kind: SectionKind::Other, title: String::new(), heading: String::new(), body: pre.into() });
    }
    for (i, (_, e, title)) in heads.iter().enumerate() {
        let body_end = starts.get(i + 1).copied().unwrap_or(text.len());
        out.push(Section {
            kind: classify_heading(title),
            title: title.clone(),
            heading: text[starts[i]..*e].into(),
            body: text[*e..body_end].into(),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentKind {
    TimingJson,
    ImageOpaque,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveformAttachment {
    pub id: String,
    pub kind: AttachmentKind,
    pub payload: Vec<u8>,
    pub media_type: Option<String>,
    pub referenced_signals: Vec<String>,
}

impl WaveformAttachment {
    pub fn diagram(&self) -> Option<TimingDiagram> {
        match self.kind {
            AttachmentKind::TimingJson => TimingDiagram::from_json(std::str::from_utf8(&self.payload).ok()?).ok(),
            AttachmentKind::ImageOpaque => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecDocument {
    pub sections: Vec<Section>,
    pub waveforms: Vec<WaveformAttachment>,
    pub source_path: PathBuf,
}

impl SpecDocument {
    pub fn from_text(text: &str, source_path: impl Into<PathBuf>) -> Self {
        SpecDocument { sections: split_sections(text), waveforms: Vec::new(), source_path: source_path.into() }
    }

    pub fn text(&self) -> String {
        self.sections.iter().flat_map(|s| [s.heading.as_str(), s.body.as_str()]).collect()
    }

    /// Headings and bodies of all sections of `kind`, in order.
    pub fn text_of(&self, kind: SectionKind) -> String {
        let parts: Vec<String> = self
            .sections
            .iter()
            .filter(|s| s.kind == kind)
            .map(|s| format!("{}\n{}", s.title, s.body.trim()))
            .collect();
        parts.join("\n\n")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("malformed signals.json at {path}: {message}")]
    MalformedSignals { path: String, message: String },
    #[error("duplicate signal `{0}`")]
    DuplicateSignal(String),
    #[error("malformed waveform {file}: {message}")]
    MalformedWaveform { file: String, message: String },
    #[error("cannot read {file}: {message}")]
    Io { file: String, message: String },
}

fn malformed(path: String, message: impl Into<String>) -> DocError {
    DocError::MalformedSignals { path, message: message.into() }
}

fn enum_field<T: for<'de> Deserialize<'de>>(obj: &serde_json::Map<String, Value>, i: usize, key: &str) -> Result<T, DocError> {
    let v = obj.get(key).ok_or_else(|| malformed(format!("[{i}].{key}"), "missing"))?;
    serde_json::from_value(v.clone()).map_err(|_| malformed(format!("[{i}].{key}"), format!("unexpected value {v}")))
}

/// Parses and validates the signal definition file.
pub fn parse_signals(text: &str) -> Result<Vec<SignalDefinition>, DocError> {
    let v: Value = serde_json::from_str(text).map_err(|e| malformed("$".into(), e.to_string()))?;
    let Value::Array(items) = v else {
        return Err(malformed("$".into(), "expected an array"));
    };
    let mut out: Vec<SignalDefinition> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let Value::Object(obj) = item else {
            return Err(malformed(format!("[{i}]"), "expected an object"));
        };
        if let Some(k) = obj.keys().find(|k| !["name", "width", "kind", "hierarchy", "role"].contains(&k.as_str())) {
            return Err(malformed(format!("[{i}].{k}"), "unknown field"));
        }
        let name = match obj.get("name") {
            Some(Value::String(s)) if is_identifier(s) => s.clone(),
            Some(Value::String(s)) => return Err(malformed(format!("[{i}].name"), format!("`{s}` is not an identifier"))),
            Some(_) => return Err(malformed(format!("[{i}].name"), "expected a string")),
            None => return Err(malformed(format!("[{i}].name"), "missing")),
        };
        let width = match obj.get("width").and_then(Value::as_u64) {
            Some(w) if (1..=64).contains(&w) => w as u32,
            Some(w) => return Err(malformed(format!("[{i}].width"), format!("{w} is outside 1..=64"))),
            None => return Err(malformed(format!("[{i}].width"), "expected a positive integer")),
        };
        let kind: SignalKind = enum_field(obj, i, "kind")?;
        let hierarchy: Hierarchy = enum_field(obj, i, "hierarchy")?;
        let role: Option<SignalRole> = if obj.contains_key("role") { Some(enum_field(obj, i, "role")?) } else { None };
        if out.iter().any(|d| d.name == name) {
            return Err(DocError::DuplicateSignal(name));
        }
        out.push(SignalDefinition { name, width, kind, hierarchy, role });
    }
    Ok(out)
}

fn read(path: &Path) -> Result<Vec<u8>, DocError> {
    fs::read(path).map_err(|e| DocError::Io { file: path.display().to_string(), message: e.to_string() })
}

fn load_waveforms(dir: &Path) -> Result<Vec<WaveformAttachment>, DocError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|e| DocError::Io { file: dir.display().to_string(), message: e.to_string() })?;
    let mut files: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
    files.sort();
    let mut out = Vec::new();
    for p in files {
        let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let payload = read(&p)?;
        let att = match ext.as_str() {
            "json" => {
                let text = String::from_utf8(payload.clone()).map_err(|e| DocError::MalformedWaveform {
                    file: p.display().to_string(),
                    message: e.to_string(),
                })?;
                let d = TimingDiagram::from_json(&text)
                    .map_err(|e| DocError::MalformedWaveform { file: p.display().to_string(), message: e.to_string() })?;
                WaveformAttachment {
                    id,
                    kind: AttachmentKind::TimingJson,
                    payload,
                    media_type: None,
                    referenced_signals: d.names().into_iter().map(String::from).collect(),
                }
            }
            "png" | "jpg" | "jpeg" => WaveformAttachment {
                id,
                kind: AttachmentKind::ImageOpaque,
                payload,
                media_type: Some(if ext == "png" { "image/png" } else { "image/jpeg" }.into()),
                referenced_signals: Vec::new(),
            },
            _ => continue,
        };
        out.push(att);
    }
    Ok(out)
}

/// Loads `spec.md` (or `spec.txt`), `signals.json` and `waveforms/` from `dir`.
pub fn load_bundle(dir: &Path) -> Result<(SpecDocument, Vec<SignalDefinition>), DocError> {
    let spec_path = ["spec.md", "spec.txt"]
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| DocError::MissingFile(dir.join("spec.md").display().to_string()))?;
    let sig_path = dir.join("signals.json");
    if !sig_path.is_file() {
        return Err(DocError::MissingFile(sig_path.display().to_string()));
    }
    let text = String::from_utf8(read(&spec_path)?)
        .map_err(|e| DocError::Io { file: spec_path.display().to_string(), message: e.to_string() })?;
    let sig_text = String::from_utf8(read(&sig_path)?).map_err(|e| malformed("$".into(), e.to_string()))?;
    let defs = parse_signals(&sig_text)?;
    let mut doc = SpecDocument::from_text(&text, spec_path);
    doc.waveforms = load_waveforms(&dir.join("waveforms"))?;
    Ok((doc, defs))
}
