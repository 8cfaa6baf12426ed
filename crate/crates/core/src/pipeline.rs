// SPDX-License-Identifier: Apache-2.0
//! Stage orchestration: bundle to assertions, assertions plus RTL to report.

use std::fs;
use std::path::{Path, PathBuf};

use assertforge_hdl::rtl::{parse_verilog, RtlDesign};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{extract_all, extract_local, SignalSpec};
use crate::doc::{load_bundle, AttachmentKind, SpecDocument};
use crate::eval::adjudicate::Budget;
use crate::eval::evaluate;
use crate::eval::report::{render_markdown, EvalReport};
use crate::generator::{generate_all, plan, primary_reset, resolve_clock, Assertion, Engine, GenContext, GenerationPlan};
use crate::knowledge::{build_index, LexicalIndex};
use crate::llm::{Gateway, LiveBackend, RecordBackend, ReplayBackend};
use crate::util::{write_atomic, write_json_atomic};
use crate::waveform::{builtin_templates, describe_llm, describe_local, gen_templates, Behavior, DiagramPayload};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Live,
    Record,
    Replay,
    #[default]
    LocalFallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub bundle_dir: Option<PathBuf>,
    pub rtl_path: Option<PathBuf>,
    pub mode: Mode,
    pub transcript_dir: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    pub budget: Budget,
    pub output_dir: PathBuf,
    /// Inputs treated as resets in addition to the detected ones.
    pub extra_resets: Vec<String>,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bundle_dir: None,
            rtl_path: None,
            mode: Mode::LocalFallback,
            transcript_dir: None,
            corpus_dir: None,
            budget: Budget::default(),
            output_dir: PathBuf::from("out"),
            extra_resets: Vec::new(),
            workers: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Doc(#[from] crate::doc::DocError),
    #[error(transparent)]
    Knowledge(#[from] crate::knowledge::KnowledgeError),
    #[error(transparent)]
    Gen(#[from] crate::generator::GenError),
    #[error("{file}: {message}")]
    Rtl { file: String, message: String },
    #[error("simulation: {0}")]
    Sim(#[from] assertforge_hdl::rtl::SimError),
    #[error("{file}: {message}")]
    Io { file: String, message: String },
}

impl PipelineError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(p: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io { file: p.display().to_string(), message: e.to_string() }
}

impl PipelineConfig {
    fn need_bundle(&self) -> Result<&Path, PipelineError> {
        self.bundle_dir.as_deref().ok_or_else(|| PipelineError::Config("a bundle directory is required".into()))
    }

    fn need_rtl(&self) -> Result<&Path, PipelineError> {
        self.rtl_path.as_deref().ok_or_else(|| PipelineError::Config("an RTL design is required".into()))
    }

    /// The gateway for model-backed modes; `None` in local-fallback mode.
    pub fn gateway(&self) -> Result<Option<Gateway>, PipelineError> {
        let transcripts = || {
            self.transcript_dir
                .clone()
                .ok_or_else(|| PipelineError::Config(format!("{:?} mode requires a transcript directory", self.mode)))
        };
        let live = || LiveBackend::from_env().map_err(|e| PipelineError::Config(e.to_string()));
        let cap = self.workers.max(1);
        Ok(match self.mode {
            Mode::LocalFallback => None,
            Mode::Replay => Some(Gateway::with_cap(ReplayBackend::new(transcripts()?), cap)),
            Mode::Record => {
                let dir = transcripts()?;
                Some(Gateway::with_cap(RecordBackend::new(live()?, dir), cap))
            }
            Mode::Live => Some(Gateway::with_cap(live()?, cap)),
        })
    }

    pub fn index(&self) -> Result<LexicalIndex, PipelineError> {
        Ok(match &self.corpus_dir {
            Some(d) => build_index(d)?,
            None => LexicalIndex::builtin(),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issues {
    /// Hard errors; any makes the run exit nonzero.
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

pub struct Generated {
    pub specs: Vec<SignalSpec>,
    pub behaviors: Vec<Behavior>,
    pub plan: GenerationPlan,
    pub assertions: Vec<Assertion>,
    pub issues: Issues,
}

fn behaviors(doc: &SpecDocument, gw: Option<&Gateway>, issues: &mut Issues) -> Vec<Behavior> {
    if doc.waveforms.is_empty() {
        return Vec::new();
    }
    let templates = match gw {
        None => builtin_templates(),
        Some(gw) => {
            let names: Vec<String> = doc.waveforms.iter().flat_map(|w| w.referenced_signals.clone()).collect();
            match gen_templates(gw, &names.join(", ")) {
                Ok((t, warns)) => {
                    issues.warnings.extend(warns.into_iter().map(|w| format!("waveform templates: {w}")));
                    t
                }
                Err(e) => {
                    issues.errors.push(format!("waveform templates: {e}"));
                    builtin_templates()
                }
            }
        }
    };
    let mut out = Vec::new();
    for w in &doc.waveforms {
        let descs = match (gw, w.kind) {
            (None, AttachmentKind::TimingJson) => match w.diagram() {
                Some(d) => Ok(describe_local(&d, &templates)),
                None => Err(format!("{}: unreadable timing diagram", w.id)),
            },
            (None, AttachmentKind::ImageOpaque) => {
                issues.warnings.push(format!("{}: image waveform skipped without a model", w.id));
                continue;
            }
            (Some(gw), AttachmentKind::TimingJson) => match w.diagram() {
                Some(d) => describe_llm(gw, &DiagramPayload::Timing(&d), &templates).map_err(|e| format!("{}: {e}", w.id)),
                None => Err(format!("{}: unreadable timing diagram", w.id)),
            },
            (Some(gw), AttachmentKind::ImageOpaque) => {
                let signals: Vec<&str> = w.referenced_signals.iter().map(String::as_str).collect();
                let payload = DiagramPayload::Image {
                    media_type: w.media_type.as_deref().unwrap_or("application/octet-stream"),
                    bytes: &w.payload,
                    signals: &signals,
                };
                describe_llm(gw, &payload, &templates).map_err(|e| format!("{}: {e}", w.id))
            }
        };
        match descs {
            Ok(ds) => out.extend(ds.into_iter().map(|d| Behavior { waveform: w.id.clone(), description: d })),
            Err(e) => issues.errors.push(e),
        }
    }
    out
}

/// Runs extraction, waveform description and generation. Stage failures
/// scoped to one signal or waveform are collected in `issues`.
pub fn generate(cfg: &PipelineConfig) -> Result<Generated, PipelineError> {
    let gw = cfg.gateway()?;
    generate_with(cfg, gw.as_ref())
}

/// As [`generate`], with an explicit gateway instead of the configured mode.
pub fn generate_with(cfg: &PipelineConfig, gw: Option<&Gateway>) -> Result<Generated, PipelineError> {
    let (doc, defs) = load_bundle(cfg.need_bundle()?)?;
    let index = cfg.index()?;
    let mut issues = Issues::default();

    let specs = match gw {
        None => extract_local(&doc, &defs),
        Some(gw) => {
            let (specs, errs) = extract_all(gw, &doc, &defs);
            issues.errors.extend(errs.iter().map(|e| e.to_string()));
            specs
        }
    };
    for s in specs.iter().filter(|s| s.flags.not_described) {
        issues.warnings.push(format!("{}: not described in the document", s.name));
    }
    let behaviors = behaviors(&doc, gw, &mut issues);
    let plan = plan(&specs, &defs, &behaviors);
    let ctx = GenContext {
        engine: gw.map_or(Engine::Local, Engine::Model),
        index: &index,
        clock: resolve_clock(&defs, &specs)?,
        reset: primary_reset(&defs, &specs),
        architecture: doc.text_of(crate::doc::SectionKind::Architecture),
        defs: &defs,
    };
    let out = generate_all(&ctx, &plan, &specs, &behaviors);
    issues.errors.extend(out.errors.iter().map(|e| e.to_string()));
    issues.warnings.extend(out.warnings);
    Ok(Generated { specs, behaviors, plan, assertions: out.assertions, issues })
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, v: &T) -> Result<(), PipelineError> {
    let p = dir.join(name);
    write_json_atomic(&p, v).map_err(io_err(&p))
}

/// Plain `.sva` export, one assertion per line.
pub fn sva_text(assertions: &[Assertion]) -> String {
    let mut out = String::new();
    for a in assertions {
        out.push_str(&format!("// {} {}\n{}\n", a.signal, a.category, a.text));
    }
    out
}

pub fn write_generated(dir: &Path, g: &Generated) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(dir, "signal_specs.json", &g.specs)?;
    write_json(dir, "behaviors.json", &g.behaviors)?;
    write_json(dir, "plan.json", &g.plan)?;
    write_json(dir, "assertions.json", &g.assertions)?;
    write_json(dir, "issues.json", &g.issues)?;
    let p = dir.join("assertions.sva");
    write_atomic(&p, sva_text(&g.assertions).as_bytes()).map_err(io_err(&p))
}

pub fn load_design(path: &Path) -> Result<RtlDesign, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_verilog(&text).map_err(|e| PipelineError::Rtl { file: path.display().to_string(), message: e.to_string() })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Io { file: path.display().to_string(), message: e.to_string() })
}

/// Plan for evaluation: from the bundle when given, else empty so rows are
/// placed from the design itself.
pub fn evaluation_plan(cfg: &PipelineConfig, assertions_dir: Option<&Path>) -> Result<GenerationPlan, PipelineError> {
    if let Some(dir) = assertions_dir {
        let p = dir.join("plan.json");
        if p.is_file() {
            return read_json(&p);
        }
    }
    match &cfg.bundle_dir {
        Some(b) => {
            let (_, defs) = load_bundle(b)?;
            Ok(plan(&[], &defs, &[]))
        }
        None => Ok(GenerationPlan { signals: Vec::new(), behaviors: 0 }),
    }
}

pub fn evaluate_design(cfg: &PipelineConfig, assertions: &[Assertion], plan: &GenerationPlan) -> Result<EvalReport, PipelineError> {
    let design = load_design(cfg.need_rtl()?)?;
    Ok(evaluate(&design, assertions, plan, cfg.budget, &cfg.extra_resets, cfg.workers)?)
}

pub fn write_report(dir: &Path, r: &EvalReport) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(dir, "report.json", r)?;
    let p = dir.join("report.md");
    write_atomic(&p, render_markdown(r).as_bytes()).map_err(io_err(&p))
}

/// Generate, persist, evaluate and persist the report.
pub fn run(cfg: &PipelineConfig) -> Result<(Generated, EvalReport), PipelineError> {
    cfg.need_rtl()?;
    let g = generate(cfg)?;
    write_generated(&cfg.output_dir, &g)?;
    let r = evaluate_design(cfg, &g.assertions, &g.plan)?;
    write_report(&cfg.output_dir, &r)?;
    Ok((g, r))
}
