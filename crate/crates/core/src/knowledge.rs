// SPDX-License-Identifier: Apache-2.0
//! Lexical retrieval over a corpus of SVA reference notes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHUNK_MAX: usize = 1200;
pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
pub const DEFAULT_K: usize = 4;
pub const DEFAULT_BUDGET: usize = 4800;

const BUILTIN: &[(&str, &str)] = &[
    ("corpus/01_concurrent_assertions.md", include_str!("../../../corpus/01_concurrent_assertions.md")),
    ("corpus/02_sequences_and_delays.md", include_str!("../../../corpus/02_sequences_and_delays.md")),
    ("corpus/03_implication_and_vacuity.md", include_str!("../../../corpus/03_implication_and_vacuity.md")),
    ("corpus/04_sampled_value_functions.md", include_str!("../../../corpus/04_sampled_value_functions.md")),
    ("corpus/05_reset_and_disable.md", include_str!("../../../corpus/05_reset_and_disable.md")),
    ("corpus/06_width_and_connectivity.md", include_str!("../../../corpus/06_width_and_connectivity.md")),
    ("corpus/07_register_behavior.md", include_str!("../../../corpus/07_register_behavior.md")),
];

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("corpus contains no text")]
    EmptyCorpus,
    #[error("cannot read {file}: {message}")]
    Io { file: String, message: String },
    #[error("malformed index: {0}")]
    Malformed(String),
}

/// Lowercased alphanumeric runs; `$name` stays one token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if c == '$' && chars.peek().is_some_and(|n| n.is_alphanumeric()) {
                cur.push('$');
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn floor_char(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// Byte spans of paragraph units: each paragraph with its trailing blank
/// lines, further cut at line ends and then characters when over the limit.
fn units(text: &str) -> Vec<(usize, usize)> {
    let mut paras = Vec::new();
    let mut start = 0;
    let mut off = 0;
    let mut prev_blank = false;
    for line in text.split_inclusive('\n') {
        let blank = line.trim().is_empty();
        if !blank && prev_blank && off > start {
            paras.push((start, off));
            start = off;
        }
        prev_blank = blank;
        off += line.len();
    }
    if off > start {
        paras.push((start, off));
    }
    let mut out = Vec::new();
    for (s, e) in paras {
        let mut s = s;
        while e - s > CHUNK_MAX {
            let window = &text[s..floor_char(text, s + CHUNK_MAX)];
            let cut = match window.rfind('\n') {
                Some(i) if i > 0 => s + i + 1,
                _ => s + window.len().max(text[s..].chars().next().map_or(1, char::len_utf8)),
            };
            out.push((s, cut));
            s = cut;
        }
        out.push((s, e));
    }
    out
}

/// Partitions `text` into contiguous chunks of at most `CHUNK_MAX` bytes.
pub fn chunk_text(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, usize)> = None;
    for (s, e) in units(text) {
        cur = match cur {
            Some((cs, _)) if e - cs <= CHUNK_MAX => Some((cs, e)),
            Some(c) => {
                out.push(&text[c.0..c.1]);
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some((s, e)) = cur {
        out.push(&text[s..e]);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeChunk {
    pub id: usize,
    pub source: String,
    pub text: String,
    pub term_counts: BTreeMap<String, u32>,
    pub len: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexicalIndex {
    pub chunks: Vec<KnowledgeChunk>,
    pub doc_freq: BTreeMap<String, u32>,
    pub avg_len: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hit<'a> {
    pub chunk: &'a KnowledgeChunk,
    pub score: f64,
}

impl LexicalIndex {
    /// Indexes `(source, text)` pairs in the given order.
    pub fn from_sources<S: AsRef<str>, T: AsRef<str>>(sources: &[(S, T)]) -> Result<Self, KnowledgeError> {
        let mut chunks = Vec::new();
        for (src, text) in sources {
            for piece in chunk_text(text.as_ref()) {
                if piece.trim().is_empty() {
                    continue;
                }
                let toks = tokenize(piece);
                let mut term_counts = BTreeMap::new();
                for t in &toks {
                    *term_counts.entry(t.clone()).or_insert(0) += 1;
                }
                chunks.push(KnowledgeChunk {
                    id: chunks.len(),
                    source: src.as_ref().to_string(),
                    text: piece.to_string(),
                    term_counts,
                    len: toks.len() as u32,
                });
            }
        }
        if chunks.is_empty() {
            return Err(KnowledgeError::EmptyCorpus);
        }
        let mut doc_freq = BTreeMap::new();
        for c in &chunks {
            for t in c.term_counts.keys() {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let avg_len = chunks.iter().map(|c| c.len as f64).sum::<f64>() / chunks.len() as f64;
        Ok(LexicalIndex { chunks, doc_freq, avg_len })
    }

    /// The corpus shipped with the tool.
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN).expect("built-in corpus is not empty")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, KnowledgeError> {
        serde_json::from_str(text).map_err(|e| KnowledgeError::Malformed(e.to_string()))
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.chunks.len() as f64;
        let df = *self.doc_freq.get(term).unwrap_or(&0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn score(&self, chunk: &KnowledgeChunk, query: &[String]) -> f64 {
        let norm = K1 * (1.0 - B + B * chunk.len as f64 / self.avg_len.max(f64::MIN_POSITIVE));
        query
            .iter()
            .map(|q| {
                let tf = *chunk.term_counts.get(q).unwrap_or(&0) as f64;
                if tf == 0.0 {
                    0.0
                } else {
                    self.idf(q) * tf * (K1 + 1.0) / (tf + norm)
                }
            })
            .sum()
    }

    /// Top `k` chunks by BM25 score; zero scores are dropped, ties go to the lower id.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<Hit<'_>> {
        let q = tokenize(query);
        if q.is_empty() {
            return Vec::new();
        }
        let mut hits: Vec<Hit<'_>> = self
            .chunks
            .iter()
            .map(|c| Hit { chunk: c, score: self.score(c, &q) })
            .filter(|h| h.score > 0.0)
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.chunk.id.cmp(&b.chunk.id)));
        hits.truncate(k);
        hits
    }

    /// Retrieved passages joined for a prompt, stopping before `budget` chars.
    pub fn context(&self, query: &str, k: usize, budget: usize) -> String {
        let mut out = String::new();
        for h in self.retrieve(query, k) {
            let piece = h.chunk.text.trim();
            let sep = if out.is_empty() { 0 } else { 2 };
            if out.chars().count() + sep + piece.chars().count() > budget {
                break;
            }
            if sep > 0 {
                out.push_str("\n\n");
            }
            out.push_str(piece);
        }
        out
    }
}

/// Indexes every `.md`/`.txt` file directly in `dir`, in file-name order.
pub fn build_index(dir: &Path) -> Result<LexicalIndex, KnowledgeError> {
    let io = |e: std::io::Error| KnowledgeError::Io { file: dir.display().to_string(), message: e.to_string() };
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("md" | "txt")))
        .collect();
    files.sort();
    let mut sources = Vec::new();
    for p in files {
        let text = fs::read_to_string(&p)
            .map_err(|e| KnowledgeError::Io { file: p.display().to_string(), message: e.to_string() })?;
        sources.push((p.display().to_string(), text));
    }
    LexicalIndex::from_sources(&sources)
}
