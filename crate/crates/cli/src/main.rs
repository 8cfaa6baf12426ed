// SPDX-License-Identifier: Apache-2.0
//! `assertforge` command-line entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use assertforge::eval::adjudicate::Budget;
use assertforge::eval::syntax::{check_one, Status};
use assertforge::generator::{split_statements, Assertion, Category, Source};
use assertforge::knowledge::build_index;
use assertforge::pipeline::{
    evaluate_design, evaluation_plan, generate, load_design, read_json, run, write_generated, write_report, Mode,
    PipelineConfig, PipelineError,
};
use assertforge::util::write_atomic;
use assertforge_hdl::rtl::{build_depgraph, coi_coverage};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "assertforge", version, about = "Generate SystemVerilog assertions from specifications and evaluate them against RTL")]
struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// Specification bundle: spec.md, signals.json, waveforms/.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Golden RTL (Verilog subset).
    #[arg(long)]
    design: Option<PathBuf>,
    /// live, record, replay or local-fallback.
    #[arg(long)]
    mode: Option<String>,
    /// Transcript directory for record and replay modes.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Knowledge corpus directory; the built-in notes otherwise.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    traces: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra input to treat as a reset (repeatable).
    #[arg(long = "reset")]
    resets: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Specification bundle to assertions.
    Generate(Common),
    /// Assertions plus RTL to report.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// assertions.json from `generate`.
        #[arg(long)]
        assertions: Option<PathBuf>,
    },
    /// Generate then evaluate.
    Run(Common),
    /// Parse every assertion in a .sva or assertions.json file.
    CheckSva {
        file: PathBuf,
        /// Signal list to bind against (signals.json or a Verilog design).
        #[arg(long)]
        signals: Option<PathBuf>,
    },
    /// Cone-of-influence coverage of assertions over a design.
    Coi {
        design: PathBuf,
        assertions: PathBuf,
    },
    /// Build a retrieval index from a directory of notes.
    Index {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print the top hits for a query after indexing.
        #[arg(long)]
        query: Option<String>,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    bundle: Option<PathBuf>,
    design: Option<PathBuf>,
    mode: Option<String>,
    transcripts: Option<PathBuf>,
    corpus: Option<PathBuf>,
    out: Option<PathBuf>,
    traces: Option<usize>,
    cycles: Option<usize>,
    seed: Option<u64>,
    resets: Option<Vec<String>>,
    workers: Option<usize>,
}

/// Failure with the exit code it maps to.
struct Failure(u8, anyhow::Error);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure(e.exit_code() as u8, e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure(2, e.into())
}

fn failed(e: impl Into<anyhow::Error>) -> Failure {
    Failure(1, e.into())
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    match s {
        "live" => Ok(Mode::Live),
        "record" => Ok(Mode::Record),
        "replay" => Ok(Mode::Replay),
        "local-fallback" | "local" => Ok(Mode::LocalFallback),
        other => Err(usage(anyhow::anyhow!("unknown mode `{other}`"))),
    }
}

fn resolve(file: &FileConfig, c: &Common) -> Result<PipelineConfig, Failure> {
    let d = PipelineConfig::default();
    let mode = c.mode.as_deref().or(file.mode.as_deref()).map(parse_mode).transpose()?.unwrap_or(d.mode);
    let budget = Budget {
        n_traces: c.traces.or(file.traces).unwrap_or(d.budget.n_traces),
        n_cycles: c.cycles.or(file.cycles).unwrap_or(d.budget.n_cycles),
        seed: c.seed.or(file.seed).unwrap_or(d.budget.seed),
    };
    if budget.n_traces == 0 || budget.n_cycles == 0 {
        return Err(usage(anyhow::anyhow!("--traces and --cycles must be positive")));
    }
    Ok(PipelineConfig {
        bundle_dir: c.bundle.clone().or(file.bundle.clone()),
        rtl_path: c.design.clone().or(file.design.clone()),
        mode,
        transcript_dir: c.transcripts.clone().or(file.transcripts.clone()),
        corpus_dir: c.corpus.clone().or(file.corpus.clone()),
        budget,
        output_dir: c.out.clone().or(file.out.clone()).unwrap_or(d.output_dir),
        extra_resets: if c.resets.is_empty() { file.resets.clone().unwrap_or_default() } else { c.resets.clone() },
        workers: c.workers.or(file.workers).unwrap_or(d.workers).max(1),
    })
}

fn report_issues(errors: &[String], warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
    for e in errors {
        eprintln!("error: {e}");
    }
}

fn read_assertions(path: &Path) -> Result<Vec<Assertion>, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        return read_json(path).map_err(Failure::from);
    }
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(failed)?;
    Ok(split_statements(&text)
        .into_iter()
        .map(|text| Assertion { signal: String::new(), category: Category::Function, source: Source::NaturalLanguage, text })
        .collect())
}

fn signal_defs(path: &Path) -> Result<Vec<assertforge_hdl::signal::SignalDefinition>, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(failed)?;
        assertforge::doc::parse_signals(&text).map_err(failed)
    } else {
        Ok(load_design(path)?.signals)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let file: FileConfig = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| p.display().to_string()).map_err(usage)?;
            toml::from_str(&text).with_context(|| p.display().to_string()).map_err(usage)?
        }
        None => FileConfig::default(),
    };
    match cli.cmd {
        Cmd::Generate(c) => {
            let cfg = resolve(&file, &c)?;
            let g = generate(&cfg)?;
            write_generated(&cfg.output_dir, &g)?;
            report_issues(&g.issues.errors, &g.issues.warnings);
            println!("{} assertions written to {}", g.assertions.len(), cfg.output_dir.join("assertions.json").display());
            Ok(u8::from(!g.issues.errors.is_empty()))
        }
        Cmd::Evaluate { common, assertions } => {
            let cfg = resolve(&file, &common)?;
            let path = assertions
                .or_else(|| Some(cfg.output_dir.join("assertions.json")).filter(|p| p.is_file()))
                .ok_or_else(|| usage(anyhow::anyhow!("--assertions is required")))?;
            if cfg.rtl_path.is_none() {
                return Err(usage(anyhow::anyhow!("--design is required")));
            }
            let list = read_assertions(&path)?;
            let plan = evaluation_plan(&cfg, path.parent())?;
            let r = evaluate_design(&cfg, &list, &plan)?;
            write_report(&cfg.output_dir, &r)?;
            println!("{}: {} ({})", r.design, r.design_total.triple(), r.design_total.percent_line());
            Ok(0)
        }
        Cmd::Run(c) => {
            let cfg = resolve(&file, &c)?;
            if cfg.bundle_dir.is_none() || cfg.rtl_path.is_none() {
                return Err(usage(anyhow::anyhow!("run needs --bundle and --design")));
            }
            let (g, r) = run(&cfg)?;
            report_issues(&g.issues.errors, &g.issues.warnings);
            println!("{}: {} ({})", r.design, r.design_total.triple(), r.design_total.percent_line());
            println!("report written to {}", cfg.output_dir.join("report.md").display());
            Ok(u8::from(!g.issues.errors.is_empty()))
        }
        Cmd::CheckSva { file: path, signals } => {
            let list = read_assertions(&path)?;
            let defs = match &signals {
                Some(p) => Some(signal_defs(p)?),
                None => None,
            };
            let mut bad = 0;
            for (i, a) in list.iter().enumerate() {
                let diag = match &defs {
                    Some(d) => match check_one(a, d) {
                        Status::Parsed(_) => None,
                        Status::SyntaxError(m) | Status::Unsupported(m) | Status::BindError(m) => Some(m),
                    },
                    None => assertforge_hdl::sva::parse_sva(&a.text).err().map(|e| e.to_string()),
                };
                match diag {
                    None => println!("{}: OK", i + 1),
                    Some(m) => {
                        bad += 1;
                        println!("{}: {m}\n    {}", i + 1, a.text);
                    }
                }
            }
            println!("{} of {} assertions OK", list.len() - bad, list.len());
            Ok(u8::from(bad > 0))
        }
        Cmd::Coi { design, assertions } => {
            let d = load_design(&design)?;
            let list = read_assertions(&assertions)?;
            let props: Vec<_> = list
                .iter()
                .filter_map(|a| {
                    let ast = assertforge_hdl::sva::parse_sva(&a.text).ok()?;
                    assertforge_hdl::sva::bind_signals(&ast, &d.signals).ok()
                })
                .collect();
            let r = coi_coverage(&build_depgraph(&d), &props);
            println!("{} of {} assertions bound", props.len(), list.len());
            println!("coverage: {}/{} ({:.2}%)", r.counted, r.total, r.coverage * 100.0);
            println!("covered: {}", r.covered.join(" "));
            Ok(0)
        }
        Cmd::Index { corpus, out, query } => {
            let idx = build_index(&corpus).map_err(failed)?;
            write_atomic(&out, idx.to_json().as_bytes()).with_context(|| out.display().to_string()).map_err(failed)?;
            println!("{} chunks from {} written to {}", idx.chunks.len(), corpus.display(), out.display());
            if let Some(q) = query {
                for h in idx.retrieve(&q, assertforge::knowledge::DEFAULT_K) {
                    println!("{:.4} {}#{}", h.score, h.chunk.source, h.chunk.id);
                }
            }
            Ok(0)
        }
    }
}
