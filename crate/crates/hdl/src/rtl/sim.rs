// SPDX-License-Identifier: Apache-2.0
//! Two-phase cycle simulation.
//!
//! Each cycle: apply inputs and settle combinational logic in topological
//! order; apply any active asynchronous resets and settle again; sample the
//! trace row; then fire every clocked process and commit its nonblocking
//! updates simultaneously. All clocked processes share one abstract clock.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{RtlDesign, Stmt, Trigger};
use crate::expr::{BinaryOp, Expr};
use crate::signal::SignalKind;
use crate::trace::{Trace, TraceSignal};
use crate::value::{compile, mask, CExpr, Env, Logic};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StimulusValue {
    Int(u64),
    /// Only `"x"` (either case) is accepted.
    Text(String),
}

impl StimulusValue {
    fn logic(&self) -> Result<Logic, String> {
        match self {
            StimulusValue::Int(v) => Ok(Some(*v)),
            StimulusValue::Text(s) if s.eq_ignore_ascii_case("x") => Ok(None),
            StimulusValue::Text(s) => Err(format!("invalid stimulus value {s:?}")),
        }
    }
}

impl From<Logic> for StimulusValue {
    fn from(v: Logic) -> Self {
        match v {
            Some(v) => StimulusValue::Int(v),
            None => StimulusValue::Text("x".into()),
        }
    }
}

/// Per-cycle input values: `{"cycles": n, "inputs": {"name": [int|"x", ...]}}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub cycles: usize,
    pub inputs: BTreeMap<String, Vec<StimulusValue>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Initial register values; every other reg starts at X.
    pub initial: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SimError {
    #[error("combinational cycle through {}", signals.join(", "))]
    CombinationalCycle { signals: Vec<String> },
    #[error("stimulus shape mismatch: {message}")]
    StimulusShapeMismatch { message: String },
}

fn shape(message: impl Into<String>) -> SimError {
    SimError::StimulusShapeMismatch { message: message.into() }
}

#[derive(Debug)]
enum CStmt {
    Block(Vec<CStmt>),
    If { cond: CExpr, then: Box<CStmt>, els: Option<Box<CStmt>> },
    Case { arms: Vec<(Vec<CExpr>, CStmt)>, default: Option<Box<CStmt>> },
    Assign { sig: usize, select: Option<(u32, u32)>, rhs: CExpr },
    Null,
}

#[derive(Debug)]
enum Unit {
    Assign { sig: usize, select: Option<(u32, u32)>, rhs: CExpr },
    Process(CStmt),
}

#[derive(Debug)]
struct Clocked {
    reset: Option<(usize, u64)>,
    body: CStmt,
}

/// A design compiled for repeated simulation.
#[derive(Debug)]
pub struct Simulator {
    signals: Vec<TraceSignal>,
    widths: Vec<u32>,
    inputs: Vec<usize>,
    clocks: BTreeSet<usize>,
    comb: Vec<Unit>,
    clocked: Vec<Clocked>,
    init: Vec<Logic>,
}

struct Cur<'a>(&'a [Logic]);

impl Env for Cur<'_> {
    fn sample(&self, sig: usize, back: u32) -> Logic {
        if back == 0 {
            self.0[sig]
        } else {
            None
        }
    }
}

fn write(vals: &mut [Logic], widths: &[u32], sig: usize, select: Option<(u32, u32)>, v: Logic) {
    let w = widths[sig];
    vals[sig] = match select {
        None => v.map(|x| x & mask(w)),
        Some((msb, lsb)) => match (vals[sig], v) {
            (Some(old), Some(x)) => {
                let m = mask(msb - lsb + 1) << lsb;
                Some((old & !m) | ((x << lsb) & m))
            }
            _ => None,
        },
    };
}

impl CStmt {
    /// Runs the statement; assignments go to `sink`, reads come from `vals`.
    fn exec(&self, vals: &[Logic], sink: &mut impl FnMut(usize, Option<(u32, u32)>, Logic)) {
        match self {
            CStmt::Block(items) => items.iter().for_each(|s| s.exec(vals, sink)),
            CStmt::If { cond, then, els } => {
                if matches!(cond.eval(&Cur(vals), 0), Some(v) if v != 0) {
                    then.exec(vals, sink);
                } else if let Some(e) = els {
                    e.exec(vals, sink);
                }
            }
            CStmt::Case { arms, default } => {
                for (eqs, body) in arms {
                    if eqs.iter().any(|e| matches!(e.eval(&Cur(vals), 0), Some(v) if v != 0)) {
                        body.exec(vals, sink);
                        return;
                    }
                }
                if let Some(d) = default {
                    d.exec(vals, sink);
                }
            }
            CStmt::Assign { sig, select, rhs } => sink(*sig, *select, rhs.eval(&Cur(vals), 0)),
            CStmt::Null => {}
        }
    }

    /// Blocking execution: each write is visible to later statements.
    fn exec_blocking(&self, vals: &mut Vec<Logic>, widths: &[u32]) {
        match self {
            CStmt::Block(items) => items.iter().for_each(|s| s.exec_blocking(vals, widths)),
            CStmt::If { cond, then, els } => {
                if matches!(cond.eval(&Cur(vals), 0), Some(v) if v != 0) {
                    then.exec_blocking(vals, widths);
                } else if let Some(e) = els {
                    e.exec_blocking(vals, widths);
                }
            }
            CStmt::Case { arms, default } => {
                for (eqs, body) in arms {
                    if eqs.iter().any(|e| matches!(e.eval(&Cur(vals), 0), Some(v) if v != 0)) {
                        body.exec_blocking(vals, widths);
                        return;
                    }
                }
                if let Some(d) = default {
                    d.exec_blocking(vals, widths);
                }
            }
            CStmt::Assign { sig, select, rhs } => {
                let v = rhs.eval(&Cur(vals), 0);
                write(vals, widths, *sig, *select, v);
            }
            CStmt::Null => {}
        }
    }
}

impl Simulator {
    pub fn new(design: &RtlDesign, opts: &SimOptions) -> Result<Self, SimError> {
        let resolve = |n: &str| design.index_of(n).map(|i| (i, design.signals[i].width));
        let cx = |e: &Expr, ctx: u32| compile(e, ctx, &resolve).expect("checked at parse time");
        let widths: Vec<u32> = design.signals.iter().map(|s| s.width).collect();
        let target_width = |sig: usize, select: Option<(u32, u32)>| match select {
            Some((msb, lsb)) => msb - lsb + 1,
            None => widths[sig],
        };
        fn lower(s: &Stmt, cx: &dyn Fn(&Expr, u32) -> CExpr, tw: &dyn Fn(usize, Option<(u32, u32)>) -> u32) -> CStmt {
            match s {
                Stmt::Block(items) => CStmt::Block(items.iter().map(|i| lower(i, cx, tw)).collect()),
                Stmt::If { cond, then, els } => CStmt::If {
                    cond: cx(cond, 0),
                    then: Box::new(lower(then, cx, tw)),
                    els: els.as_ref().map(|e| Box::new(lower(e, cx, tw))),
                },
                Stmt::Case { sel, arms, default } => CStmt::Case {
                    arms: arms
                        .iter()
                        .map(|a| {
                            let eqs = a
                                .labels
                                .iter()
                                .map(|l| cx(&Expr::binary(BinaryOp::Eq, sel.clone(), l.clone()), 0))
                                .collect();
                            (eqs, lower(&a.body, cx, tw))
                        })
                        .collect(),
                    default: default.as_ref().map(|d| Box::new(lower(d, cx, tw))),
                },
                Stmt::Assign { lhs, rhs, .. } => CStmt::Assign {
                    sig: lhs.sig,
                    select: lhs.select,
                    rhs: cx(rhs, tw(lhs.sig, lhs.select)),
                },
                Stmt::Null => CStmt::Null,
            }
        }

        // combinational units with their read and driven sets
        let mut units = Vec::new();
        let mut reads: Vec<BTreeSet<usize>> = Vec::new();
        let mut drives: Vec<BTreeSet<usize>> = Vec::new();
        for a in &design.assigns {
            let rhs = cx(&a.rhs, target_width(a.lhs.sig, a.lhs.select));
            let mut r = BTreeSet::new();
            rhs.for_each_signal(&mut |s| {
                r.insert(s);
            });
            reads.push(r);
            drives.push(BTreeSet::from([a.lhs.sig]));
            units.push(Unit::Assign { sig: a.lhs.sig, select: a.lhs.select, rhs });
        }
        let mut clocked = Vec::new();
        for p in &design.processes {
            let body = lower(&p.body, &cx, &target_width);
            match p.trigger {
                Trigger::Combinational => {
                    let (mut r, mut d) = (BTreeSet::new(), BTreeSet::new());
                    let mut guards = Vec::new();
                    p.body.for_each_assign(&mut guards, &mut |lhs, rhs, guards| {
                        d.insert(lhs.sig);
                        for e in guards.iter().copied().chain(std::iter::once(rhs)) {
                            for s in e.signals() {
                                r.insert(design.index_of(s).expect("resolved"));
                            }
                        }
                    });
                    reads.push(r);
                    drives.push(d);
                    units.push(Unit::Process(body));
                }
                Trigger::Clocked { reset, .. } => {
                    clocked.push(Clocked { reset: reset.map(|r| (r.sig, r.active_level())), body });
                }
            }
        }

        // Kahn's algorithm, lowest index first
        let n = units.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for u in 0..n {
            for v in 0..n {
                if u != v && !drives[v].is_disjoint(&reads[u]) {
                    succ[v].push(u);
                    indeg[u] += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&u| indeg[u] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for &v in &succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if order.len() < n {
            let stuck: BTreeSet<usize> = (0..n).filter(|u| indeg[*u] > 0).flat_map(|u| drives[u].clone()).collect();
            return Err(SimError::CombinationalCycle {
                signals: stuck.into_iter().map(|s| design.signals[s].name.clone()).collect(),
            });
        }
        let mut slots: Vec<Option<Unit>> = units.into_iter().map(Some).collect();
        let comb = order.into_iter().map(|u| slots[u].take().expect("each unit once")).collect();

        let mut init = vec![None; design.signals.len()];
        for (name, v) in &opts.initial {
            if let Some(i) = design.index_of(name) {
                init[i] = Some(v & mask(widths[i]));
            }
        }
        Ok(Simulator {
            signals: design.signals.iter().map(|s| TraceSignal { name: s.name.clone(), width: s.width }).collect(),
            widths,
            inputs: design.signals.iter().enumerate().filter(|(_, s)| s.kind == SignalKind::Input).map(|(i, _)| i).collect(),
            clocks: design.clocks().into_iter().collect(),
            comb,
            clocked,
            init,
        })
    }

    /// Inputs the stimulus must drive (clock inputs excluded).
    pub fn driven_inputs(&self) -> impl Iterator<Item = &TraceSignal> + '_ {
        self.inputs.iter().filter(|i| !self.clocks.contains(i)).map(|&i| &self.signals[i])
    }

    fn settle(&self, vals: &mut Vec<Logic>) {
        for u in &self.comb {
            match u {
                Unit::Assign { sig, select, rhs } => {
                    let v = rhs.eval(&Cur(vals), 0);
                    write(vals, &self.widths, *sig, *select, v);
                }
                Unit::Process(body) => body.exec_blocking(vals, &self.widths),
            }
        }
    }

    fn fire(&self, procs: &[&Clocked], vals: &mut [Logic]) {
        let mut updates = Vec::new();
        for p in procs {
            p.body.exec(vals, &mut |sig, select, v| updates.push((sig, select, v)));
        }
        for (sig, select, v) in updates {
            write(vals, &self.widths, sig, select, v);
        }
    }

    pub fn run(&self, stim: &Stimulus, n_cycles: usize) -> Result<Trace, SimError> {
        if n_cycles == 0 {
            return Err(shape("n_cycles must be at least 1"));
        }
        if stim.cycles < n_cycles {
            return Err(shape(format!("stimulus has {} cycles, {n_cycles} requested", stim.cycles)));
        }
        let mut columns: Vec<(usize, Vec<Logic>)> = Vec::new();
        for (name, vs) in &stim.inputs {
            let Some(i) = self.signals.iter().position(|s| &s.name == name) else {
                return Err(shape(format!("unknown input `{name}`")));
            };
            if !self.inputs.contains(&i) {
                return Err(shape(format!("`{name}` is not an input")));
            }
            if self.clocks.contains(&i) {
                continue;
            }
            if vs.len() != stim.cycles {
                return Err(shape(format!("`{name}` has {} values for {} cycles", vs.len(), stim.cycles)));
            }
            let mut col = Vec::with_capacity(vs.len());
            for v in vs {
                let l = v.logic().map_err(shape)?;
                if matches!(l, Some(x) if x > mask(self.widths[i])) {
                    return Err(shape(format!("value {} does not fit `{name}`", l.unwrap())));
                }
                col.push(l);
            }
            columns.push((i, col));
        }
        if let Some(missing) = self.driven_inputs().find(|s| !stim.inputs.contains_key(&s.name)) {
            return Err(shape(format!("missing input `{}`", missing.name)));
        }

        let mut vals = self.init.clone();
        for &c in &self.clocks {
            vals[c] = Some(0);
        }
        let all: Vec<&Clocked> = self.clocked.iter().collect();
        let mut trace = Trace::new(self.signals.clone());
        for t in 0..n_cycles {
            for (i, col) in &columns {
                vals[*i] = col[t];
            }
            self.settle(&mut vals);
            let active: Vec<&Clocked> = self
                .clocked
                .iter()
                .filter(|p| matches!(p.reset, Some((r, level)) if vals[r] == Some(level)))
                .collect();
            if !active.is_empty() {
                self.fire(&active, &mut vals);
                self.settle(&mut vals);
            }
            trace.push_row(vals.clone());
            if t + 1 < n_cycles {
                self.fire(&all, &mut vals);
            }
        }
        Ok(trace)
    }
}

pub fn simulate(design: &RtlDesign, stim: &Stimulus, n_cycles: usize) -> Result<Trace, SimError> {
    Simulator::new(design, &SimOptions::default())?.run(stim, n_cycles)
}
