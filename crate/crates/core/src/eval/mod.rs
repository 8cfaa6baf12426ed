// SPDX-License-Identifier: Apache-2.0
//! Syntax checking, trace checking, adjudication against RTL and reporting.

pub mod adjudicate;
pub mod check;
pub mod report;
pub mod syntax;

use assertforge_hdl::rtl::{build_depgraph, coi_coverage, RtlDesign, SimError};
use assertforge_hdl::signal::Hierarchy;
use assertforge_hdl::sva::BoundProperty;

use crate::generator::{infer_role, Assertion, Category, GenerationPlan, Group, Source};
use crate::util::par_map;
use adjudicate::{adjudicate, detect_resets, prepare_traces, Adjudication, Budget};
use report::{aggregate, CoiFigure, CoiSummary, EvalReport, Verdict, VerdictOutcome};
use syntax::{check_syntax, Status};

fn placement(design: &RtlDesign, plan: &GenerationPlan, a: &Assertion) -> (Group, Option<assertforge_hdl::signal::SignalRole>) {
    if a.source == Source::Waveform {
        return (Group::Waveform, None);
    }
    if let Some(p) = plan.signals.iter().find(|p| p.signal == a.signal) {
        return (p.group, Some(p.role));
    }
    match design.signals.iter().find(|d| d.name == a.signal) {
        Some(d) => {
            let group = if d.hierarchy == Hierarchy::IoPort { Group::Io } else { Group::Reg };
            (group, Some(infer_role(d, None)))
        }
        None => (Group::Io, None),
    }
}

/// Checks, adjudicates and aggregates `assertions` against `design`.
pub fn evaluate(
    design: &RtlDesign,
    assertions: &[Assertion],
    plan: &GenerationPlan,
    budget: Budget,
    extra_resets: &[String],
    workers: usize,
) -> Result<EvalReport, SimError> {
    let checked = check_syntax(assertions, &design.signals);
    let traces = prepare_traces(design, &budget, extra_resets)?;
    let results = par_map(&checked, workers, |c| c.status.bound().map(|p| adjudicate(p, &traces)));

    let mut verdicts = Vec::with_capacity(checked.len());
    let mut passing: Vec<(Category, &BoundProperty)> = Vec::new();
    for (index, (c, r)) in checked.iter().zip(results).enumerate() {
        let (group, role) = placement(design, plan, &c.assertion);
        let (outcome, checked_cycles, attempts) = match (&c.status, r) {
            (Status::SyntaxError(m), _) => (VerdictOutcome::SyntaxError { message: m.clone() }, 0, None),
            (Status::Unsupported(m), _) => (VerdictOutcome::Unsupported { message: m.clone() }, 0, None),
            (Status::BindError(m), _) => (VerdictOutcome::BindError { message: m.clone() }, 0, None),
            (Status::Parsed(p), Some(r)) => {
                let o = match r.outcome {
                    Adjudication::Fail { counterexample } => VerdictOutcome::Fail { counterexample },
                    Adjudication::Pass => {
                        passing.push((c.assertion.category, p));
                        VerdictOutcome::Pass
                    }
                    Adjudication::VacuousPass => VerdictOutcome::VacuousPass,
                    Adjudication::Undetermined => VerdictOutcome::Undetermined,
                };
                (o, r.checked_cycles, Some(r.attempts))
            }
            (Status::Parsed(_), None) => unreachable!("parsed assertions are adjudicated"),
        };
        verdicts.push(Verdict {
            index,
            signal: c.assertion.signal.clone(),
            category: c.assertion.category,
            source: c.assertion.source,
            group,
            role: if group == Group::Waveform { None } else { role },
            text: c.assertion.text.clone(),
            outcome,
            checked_cycles,
            attempts,
        });
    }

    let mut graph = build_depgraph(design);
    for r in detect_resets(design, extra_resets) {
        if let Some(i) = design.index_of(&r.name) {
            graph.excluded.insert(i);
        }
    }
    let figure = |cat: Option<Category>| {
        let props: Vec<BoundProperty> =
            passing.iter().filter(|(c, _)| cat.is_none_or(|x| x == *c)).map(|(_, p)| (*p).clone()).collect();
        let r = coi_coverage(&graph, &props);
        CoiFigure { counted: r.counted, total: r.total, coverage: r.coverage }
    };
    let coi = CoiSummary {
        overall: figure(None),
        width: figure(Some(Category::Width)),
        connectivity: figure(Some(Category::Connectivity)),
        function: figure(Some(Category::Function)),
    };
    Ok(aggregate(&design.name, verdicts, plan, coi, budget))
}
