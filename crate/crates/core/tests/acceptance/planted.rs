// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use assertforge::eval::adjudicate::{adjudicate, prepare_traces, replay, Adjudication, Budget};
use assertforge::eval::syntax::check_syntax;
use assertforge::generator::Assertion;
use assertforge_hdl::rtl::{parse_verilog, RtlDesign};
use assertforge_hdl::sva::BoundProperty;

use crate::{ensure, root};

const BUGS: &[&str] = &["ack_stuck", "prer_reset", "ctr_address", "iack_sticky", "rxr_readback"];

fn load(path: &std::path::Path) -> Result<RtlDesign, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_verilog(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Indices of failing assertions, each with its replay result.
fn failures(design: &RtlDesign, assertions: &[Assertion]) -> Result<Vec<(usize, bool)>, String> {
    let checked = check_syntax(assertions, &design.signals);
    let traces = prepare_traces(design, &Budget::default(), &[]).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (i, c) in checked.iter().enumerate() {
        let Some(p): Option<&BoundProperty> = c.status.bound() else { continue };
        if let Adjudication::Fail { counterexample } = adjudicate(p, &traces).outcome {
            let ok = replay(design, p, &counterexample).map_err(|e| e.to_string())?;
            out.push((i, ok));
        }
    }
    Ok(out)
}

pub fn run() -> Result<String, String> {
    let fixture = root().join("fixtures/mini_i2c");
    let text = std::fs::read_to_string(fixture.join("golden/assertions.json")).map_err(|e| e.to_string())?;
    let assertions: Vec<Assertion> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let golden = load(&fixture.join("rtl/i2c_mini.v"))?;
    let baseline: BTreeSet<usize> = failures(&golden, &assertions)?.into_iter().map(|(i, _)| i).collect();

    let mut summary = Vec::new();
    for bug in BUGS {
        let design = load(&root().join(format!("fixtures/bugs/{bug}.v")))?;
        let fails = failures(&design, &assertions)?;
        ensure(!fails.is_empty(), || format!("{bug}: no failing assertion"))?;
        if let Some((i, _)) = fails.iter().find(|(_, ok)| !ok) {
            return Err(format!("{bug}: counterexample of assertion {i} does not replay"));
        }
        let new: Vec<&str> =
            fails.iter().filter(|(i, _)| !baseline.contains(i)).map(|(i, _)| assertions[*i].signal.as_str()).collect();
        ensure(!new.is_empty(), || format!("{bug}: only assertions that also fail on the golden design fail"))?;
        summary.push(format!("{bug} {} ({})", fails.len(), new.join(",")));
    }
    Ok(format!("default budget, all counterexamples replay: {}", summary.join("; ")))
}
