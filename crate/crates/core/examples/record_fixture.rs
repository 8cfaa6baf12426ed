// SPDX-License-Identifier: Apache-2.0
//! Records replay transcripts for a bundle from a file of hand-written model
//! answers.
//!
//! cargo run -p assertforge-core --example record_fixture -- <bundle> <answers.json> <transcripts>

use std::collections::BTreeMap;
use std::path::PathBuf;

use assertforge::llm::{ChatRequest, Content, Gateway, LlmError, RecordBackend, ScriptedBackend};
use assertforge::pipeline::{generate_with, PipelineConfig};
use serde_json::Value;

fn user_text(req: &ChatRequest) -> String {
    req.messages
        .iter()
        .filter_map(|m| match &m.content {
            Content::Text(t) => Some(t.as_str()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fenced(stmts: &Value) -> String {
    let body: Vec<&str> = stmts.as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    format!("```systemverilog\n{}\n```", body.join("\n"))
}

fn answer(a: &Value, req: &ChatRequest) -> Result<String, LlmError> {
    let user = user_text(req);
    let miss = || LlmError::BadResponse(format!("no scripted answer for: {}", user.lines().last().unwrap_or("")));
    if let Some(sig) = user.lines().find_map(|l| l.strip_prefix("Target signal: ")) {
        return a["specs"].get(sig.trim()).map(|v| v.to_string()).ok_or_else(miss);
    }
    if user.starts_with("Propose the templates") {
        return Ok(a["templates"].to_string());
    }
    if let Some(diagram) = user.strip_prefix("Timing diagram:\n") {
        let d: Value = serde_json::from_str(diagram).map_err(|_| miss())?;
        let names: Vec<&str> = d["signals"].as_array().into_iter().flatten().filter_map(|l| l["name"].as_str()).collect();
        let descs: BTreeMap<&String, &Value> = a["descriptions"].as_object().map(|o| o.iter().collect()).unwrap_or_default();
        for v in descs.values() {
            let first = v[0]["involved_signals"][0].as_str().unwrap_or("");
            if names.contains(&first) {
                return Ok(v.to_string());
            }
        }
        return Err(miss());
    }
    if let Some(rest) = user.strip_prefix("Generate the ") {
        for (text, stmts) in a["behavior_sva"].as_object().into_iter().flatten() {
            if req.system.contains(text.as_str()) {
                return Ok(fenced(stmts));
            }
        }
        let (category, signal) = rest.trim_end_matches('.').split_once(" assertions for ").ok_or_else(miss)?;
        return a["sva"].get(format!("{signal}/{category}")).map(fenced).ok_or_else(miss);
    }
    Err(miss())
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [bundle, answers, transcripts] = args.as_slice() else {
        eprintln!("usage: record_fixture <bundle> <answers.json> <transcripts>");
        std::process::exit(2);
    };
    let a: Value = serde_json::from_str(&std::fs::read_to_string(answers).expect("answers readable")).expect("answers parse");
    std::fs::create_dir_all(transcripts).expect("transcript dir");
    let backend = ScriptedBackend::new("fixture", move |req| answer(&a, req));
    let gw = Gateway::with_cap(RecordBackend::new(backend, transcripts), 1);
    let cfg = PipelineConfig { bundle_dir: Some(PathBuf::from(bundle)), ..PipelineConfig::default() };
    let g = generate_with(&cfg, Some(&gw)).expect("generation runs");
    for e in &g.issues.errors {
        eprintln!("error: {e}");
    }
    println!("{} assertions, {} errors", g.assertions.len(), g.issues.errors.len());
}
