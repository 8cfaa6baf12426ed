// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::time::Instant;

use assertforge::llm::ENV_URL;
use assertforge::pipeline::{run, Mode, PipelineConfig};

use crate::{ensure, root};

fn config(mode: Mode, out: &Path) -> PipelineConfig {
    let fixture = root().join("fixtures/mini_i2c");
    PipelineConfig {
        bundle_dir: Some(fixture.clone()),
        rtl_path: Some(fixture.join("rtl/i2c_mini.v")),
        mode,
        transcript_dir: Some(fixture.join("transcripts")),
        output_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

fn read(p: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

pub fn determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let (g, r) = run(&config(Mode::Replay, &out)).map_err(|e| e.to_string())?;
        ensure(g.issues.errors.is_empty(), || format!("replay errors: {:?}", g.issues.errors))?;
        reports.push((read(&out.join("report.json"))?, read(&out.join("assertions.json"))?, r.design_total.triple()));
    }
    ensure(reports[0].0 == reports[1].0, || "report.json differs between runs".into())?;
    let golden = root().join("fixtures/mini_i2c/golden");
    ensure(reports[0].0 == read(&golden.join("report.json"))?, || "report.json differs from the golden report".into())?;
    ensure(reports[0].1 == read(&golden.join("assertions.json"))?, || "assertions.json differs from the golden set".into())?;
    Ok(format!("two replay runs byte-identical and equal to golden ({})", reports[0].2))
}

/// Replay and local-fallback runs with the model endpoint pointed at a
/// closed local port: any attempted request would fail the run.
pub fn offline() -> Result<String, String> {
    std::env::set_var(ENV_URL, "http://127.0.0.1:9/v1/chat/completions");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for mode in [Mode::Replay, Mode::LocalFallback] {
        let start = Instant::now();
        let out = tmp.path().join(format!("{mode:?}"));
        let (g, r) = run(&config(mode, &out)).map_err(|e| format!("{mode:?}: {e}"))?;
        ensure(g.issues.errors.is_empty(), || format!("{mode:?} errors: {:?}", g.issues.errors))?;
        lines.push(format!("{mode:?} {} in {:.1?}", r.design_total.triple(), start.elapsed()));
    }
    let mut live = config(Mode::Live, &tmp.path().join("live"));
    live.workers = 1;
    std::env::remove_var(ENV_URL);
    ensure(run(&live).is_err(), || "live mode without an endpoint should fail".into())?;
    Ok(lines.join("; "))
}
