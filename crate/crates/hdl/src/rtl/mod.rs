// SPDX-License-Identifier: Apache-2.0
//! Verilog-subset RTL model: one flat module of continuous assigns and
//! `always` processes.

mod graph;
mod parse;
mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::lex::Pos;
use crate::signal::SignalDefinition;
use crate::sva::Edge;

pub use graph::{build_depgraph, coi_coverage, CoiResult, DepGraph};
pub use parse::parse_verilog;
pub use sim::{simulate, SimError, SimOptions, Simulator, Stimulus, StimulusValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    Wire,
    Reg,
}

/// Assignment target: a whole signal or a constant part of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LValue {
    pub sig: usize,
    pub name: String,
    /// `(msb, lsb)` when a select is present.
    pub select: Option<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContAssign {
    pub lhs: LValue,
    pub rhs: Expr,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AsyncReset {
    pub edge: Edge,
    pub sig: usize,
}

impl AsyncReset {
    /// Level at which the reset is active.
    pub fn active_level(&self) -> u64 {
        match self.edge {
            Edge::Posedge => 1,
            Edge::Negedge => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    Clocked { edge: Edge, clock: usize, reset: Option<AsyncReset> },
    Combinational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Block(Vec<Stmt>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Case { sel: Expr, arms: Vec<CaseArm>, default: Option<Box<Stmt>> },
    Assign { lhs: LValue, rhs: Expr, nonblocking: bool, pos: Pos },
    Null,
}

impl Stmt {
    /// Visits every assignment together with the guard expressions enclosing it.
    pub fn for_each_assign<'a>(&'a self, guards: &mut Vec<&'a Expr>, f: &mut impl FnMut(&'a LValue, &'a Expr, &[&'a Expr])) {
        match self {
            Stmt::Block(items) => items.iter().for_each(|s| s.for_each_assign(guards, f)),
            Stmt::If { cond, then, els } => {
                guards.push(cond);
                then.for_each_assign(guards, f);
                if let Some(e) = els {
                    e.for_each_assign(guards, f);
                }
                guards.pop();
            }
            Stmt::Case { sel, arms, default } => {
                guards.push(sel);
                for arm in arms {
                    let n = arm.labels.len();
                    guards.extend(arm.labels.iter());
                    arm.body.for_each_assign(guards, f);
                    guards.truncate(guards.len() - n);
                }
                if let Some(d) = default {
                    // the default arm is reached by failing every label
                    let n: usize = arms.iter().map(|a| a.labels.len()).sum();
                    guards.extend(arms.iter().flat_map(|a| a.labels.iter()));
                    d.for_each_assign(guards, f);
                    guards.truncate(guards.len() - n);
                }
                guards.pop();
            }
            Stmt::Assign { lhs, rhs, .. } => f(lhs, rhs, guards),
            Stmt::Null => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process {
    pub trigger: Trigger,
    pub body: Stmt,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RtlDesign {
    pub name: String,
    /// Ports in port-list order, then internal declarations in source order.
    pub signals: Vec<SignalDefinition>,
    pub storage: Vec<Storage>,
    pub processes: Vec<Process>,
    pub assigns: Vec<ContAssign>,
}

impl RtlDesign {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = usize> + '_ {
        use crate::signal::SignalKind;
        self.signals.iter().enumerate().filter(|(_, s)| s.kind == SignalKind::Input).map(|(i, _)| i)
    }

    /// Nets used as clocks by some clocked process.
    pub fn clocks(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .processes
            .iter()
            .filter_map(|p| match p.trigger {
                Trigger::Clocked { clock, .. } => Some(clock),
                Trigger::Combinational => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nets used as asynchronous resets, with their edge.
    pub fn async_resets(&self) -> Vec<AsyncReset> {
        let mut out: Vec<AsyncReset> = Vec::new();
        for p in &self.processes {
            if let Trigger::Clocked { reset: Some(r), .. } = p.trigger {
                if !out.iter().any(|o| o.sig == r.sig) {
                    out.push(r);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RtlError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("{line}:{col}: unsupported construct: {construct}")]
    UnsupportedConstruct { line: u32, col: u32, construct: String },
    #[error("{line}:{col}: `{name}` has more than one driver")]
    MultipleDrivers { line: u32, col: u32, name: String },
    #[error("{line}:{col}: {message}")]
    MixedAssignDiscipline { line: u32, col: u32, message: String },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { line: u32, col: u32, name: String },
    #[error("{line}:{col}: cannot drive `{name}`: {message}")]
    DriverKind { line: u32, col: u32, name: String, message: String },
    #[error("{line}:{col}: {message}")]
    Declaration { line: u32, col: u32, message: String },
}

impl RtlError {
    pub fn pos(&self) -> Pos {
        let (line, col) = match self {
            RtlError::Syntax { line, col, .. }
            | RtlError::UnsupportedConstruct { line, col, .. }
            | RtlError::MultipleDrivers { line, col, .. }
            | RtlError::MixedAssignDiscipline { line, col, .. }
            | RtlError::Undeclared { line, col, .. }
            | RtlError::DriverKind { line, col, .. }
            | RtlError::Declaration { line, col, .. } => (*line, *col),
        };
        Pos { line, col }
    }
}
