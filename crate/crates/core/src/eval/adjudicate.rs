// SPDX-License-Identifier: Apache-2.0
//! Bounded adjudication of properties against a design: a directed stimulus
//! battery followed by seeded random stimuli.

use std::collections::BTreeMap;

use assertforge_hdl::rtl::{RtlDesign, SimError, Simulator, SimOptions, Stimulus, StimulusValue};
use assertforge_hdl::signal::SignalKind;
use assertforge_hdl::sva::BoundProperty;
use assertforge_hdl::trace::Trace;
use assertforge_hdl::value::mask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check::{eval_on_trace, AttemptCounts, TraceOutcome};
use crate::generator::name_is_active_low;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub n_traces: usize,
    pub n_cycles: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { n_traces: 64, n_cycles: 32, seed: 42 }
    }
}

/// A reset input and its active level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetPort {
    pub name: String,
    pub active: u64,
}

fn looks_like_reset(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.split('_').any(|p| matches!(p, "rst" | "reset" | "rstn" | "resetn" | "arst" | "nreset"))
}

/// Reset inputs of `design`: asynchronous resets, names in `extra`, and inputs
/// whose names look like resets.
pub fn detect_resets(design: &RtlDesign, extra: &[String]) -> Vec<ResetPort> {
    let mut out: Vec<ResetPort> = Vec::new();
    for r in design.async_resets() {
        let d = &design.signals[r.sig];
        if d.kind == SignalKind::Input {
            out.push(ResetPort { name: d.name.clone(), active: r.active_level() });
        }
    }
    for i in design.inputs() {
        let name = &design.signals[i].name;
        if design.signals[i].width != 1 || out.iter().any(|r| &r.name == name) {
            continue;
        }
        if extra.contains(name) || looks_like_reset(name) {
            out.push(ResetPort { name: name.clone(), active: if name_is_active_low(name) { 0 } else { 1 } });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusMeta {
    /// `reset_pulse`, `toggle:<input>`, `all_zeros`, `all_ones` or `random:<i>`.
    pub id: String,
    pub seed: Option<u64>,
    pub index: usize,
}

pub struct PreparedTrace {
    pub meta: StimulusMeta,
    pub stimulus: Stimulus,
    pub trace: Trace,
}

/// Inputs a stimulus must drive, with widths.
fn driven(sim: &Simulator) -> Vec<(String, u32)> {
    sim.driven_inputs().map(|s| (s.name.clone(), s.width)).collect()
}

struct Builder<'a> {
    inputs: &'a [(String, u32)],
    resets: &'a [ResetPort],
    cycles: usize,
}

impl Builder<'_> {
    fn reset(&self, name: &str) -> Option<&ResetPort> {
        self.resets.iter().find(|r| r.name == name)
    }

    /// `f(input, width, cycle)` for ordinary inputs; resets are active at
    /// cycles 0-1 and inactive afterwards.
    fn build(&self, mut f: impl FnMut(&str, u32, usize) -> u64) -> Stimulus {
        let mut inputs = BTreeMap::new();
        for (name, width) in self.inputs {
            let col: Vec<StimulusValue> = (0..self.cycles)
                .map(|t| {
                    let v = match self.reset(name) {
                        Some(r) if t < 2 => r.active,
                        Some(r) => r.active ^ 1,
                        None => f(name, *width, t),
                    };
                    StimulusValue::Int(v & mask(*width))
                })
                .collect();
            inputs.insert(name.clone(), col);
        }
        Stimulus { cycles: self.cycles, inputs }
    }
}

/// Directed battery then random stimuli, `budget.n_traces` in total.
pub fn stimuli(inputs: &[(String, u32)], resets: &[ResetPort], budget: &Budget) -> Vec<(StimulusMeta, Stimulus)> {
    let b = Builder { inputs, resets, cycles: budget.n_cycles };
    let mut out: Vec<(String, Option<u64>, Stimulus)> = Vec::new();
    out.push(("reset_pulse".into(), None, b.build(|_, _, _| 0)));
    for (name, _) in inputs.iter().filter(|(n, _)| b.reset(n).is_none()) {
        let s = b.build(|n, w, t| if n == name && t >= 2 && t % 2 == 0 { mask(w) } else { 0 });
        out.push((format!("toggle:{name}"), None, s));
    }
    out.push(("all_zeros".into(), None, raw(inputs, budget.n_cycles, |_, _| 0)));
    out.push(("all_ones".into(), None, raw(inputs, budget.n_cycles, |w, _| mask(w))));
    out.truncate(budget.n_traces);
    let mut i = 0;
    while out.len() < budget.n_traces {
        let seed = budget.seed.wrapping_add(i as u64);
        out.push((format!("random:{i}"), Some(seed), random_stimulus(inputs, resets, budget.n_cycles, seed)));
        i += 1;
    }
    out.into_iter()
        .enumerate()
        .map(|(index, (id, seed, s))| (StimulusMeta { id, seed, index }, s))
        .collect()
}

/// Reset pulse at cycles 0-1, then rare random resets and uniform values on
/// every other input.
pub fn random_stimulus(inputs: &[(String, u32)], resets: &[ResetPort], cycles: usize, seed: u64) -> Stimulus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = BTreeMap::new();
    for (name, width) in inputs {
        let reset = resets.iter().find(|r| &r.name == name);
        let col: Vec<StimulusValue> = (0..cycles)
            .map(|t| {
                let v = match reset {
                    Some(r) if t < 2 => r.active,
                    Some(r) if rng.random_ratio(1, 32) => r.active,
                    Some(r) => r.active ^ 1,
                    None => rng.random::<u64>() & mask(*width),
                };
                StimulusValue::Int(v)
            })
            .collect();
        cols.insert(name.clone(), col);
    }
    Stimulus { cycles, inputs: cols }
}

/// Every input, resets included, driven by `f(width, cycle)`.
fn raw(inputs: &[(String, u32)], cycles: usize, f: impl Fn(u32, usize) -> u64) -> Stimulus {
    let inputs = inputs
        .iter()
        .map(|(n, w)| (n.clone(), (0..cycles).map(|t| StimulusValue::Int(f(*w, t) & mask(*w))).collect()))
        .collect();
    Stimulus { cycles, inputs }
}

/// Simulates every stimulus of the budget once; traces are shared by all
/// properties of the design.
pub fn prepare_traces(design: &RtlDesign, budget: &Budget, extra_resets: &[String]) -> Result<Vec<PreparedTrace>, SimError> {
    let sim = Simulator::new(design, &SimOptions::default())?;
    let inputs = driven(&sim);
    let resets = detect_resets(design, extra_resets);
    stimuli(&inputs, &resets, budget)
        .into_iter()
        .map(|(meta, stimulus)| {
            let trace = sim.run(&stimulus, budget.n_cycles)?;
            Ok(PreparedTrace { meta, stimulus, trace })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub stimulus_id: String,
    pub seed: Option<u64>,
    pub trace_index: usize,
    /// Start cycle of the earliest failing attempt.
    pub cycle: usize,
    pub stimulus: Stimulus,
    /// Trace rows from cycle 0 through the end of the failing attempt's window.
    pub slice: Trace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Adjudication {
    Fail { counterexample: Box<Counterexample> },
    Pass,
    VacuousPass,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjudicateResult {
    pub outcome: Adjudication,
    pub attempts: AttemptCounts,
    pub checked_cycles: u64,
}

/// Checks `prop` on the prepared traces in order. The first failing trace
/// decides; otherwise any passing attempt gives pass, else any undetermined
/// attempt gives undetermined, else the property held only vacuously.
pub fn adjudicate(prop: &BoundProperty, traces: &[PreparedTrace]) -> AdjudicateResult {
    let mut attempts = AttemptCounts::default();
    let mut checked_cycles = 0;
    for pt in traces {
        let r = eval_on_trace(prop, &pt.trace);
        attempts.merge(&r.attempts);
        checked_cycles += pt.trace.len() as u64;
        if let TraceOutcome::Fail { cycle } = r.outcome {
            let end = match prop.max_span() {
                Some(s) => cycle + s as usize + 1,
                None => pt.trace.len(),
            };
            let cex = Counterexample {
                stimulus_id: pt.meta.id.clone(),
                seed: pt.meta.seed,
                trace_index: pt.meta.index,
                cycle,
                stimulus: pt.stimulus.clone(),
                slice: pt.trace.slice(0, end),
            };
            return AdjudicateResult { outcome: Adjudication::Fail { counterexample: Box::new(cex) }, attempts, checked_cycles };
        }
    }
    let outcome = if attempts.pass > 0 {
        Adjudication::Pass
    } else if attempts.undetermined > 0 {
        Adjudication::Undetermined
    } else {
        Adjudication::VacuousPass
    };
    AdjudicateResult { outcome, attempts, checked_cycles }
}

/// Re-simulates a stored counterexample and checks that it fails at the
/// stored cycle.
pub fn replay(design: &RtlDesign, prop: &BoundProperty, cex: &Counterexample) -> Result<bool, SimError> {
    let trace = Simulator::new(design, &SimOptions::default())?.run(&cex.stimulus, cex.stimulus.cycles)?;
    Ok(eval_on_trace(prop, &trace).outcome == TraceOutcome::Fail { cycle: cex.cycle })
}

/// Regenerates the stimulus of a random trace from its seed.
pub fn regenerate_random(design: &RtlDesign, extra_resets: &[String], seed: u64, n_cycles: usize) -> Result<Stimulus, SimError> {
    let sim = Simulator::new(design, &SimOptions::default())?;
    Ok(random_stimulus(&driven(&sim), &detect_resets(design, extra_resets), n_cycles, seed))
}
