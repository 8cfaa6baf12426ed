// SPDX-License-Identifier: Apache-2.0
//! Finite-trace checking of bound properties.
//!
//! Every sampled position at or past the end of the trace is unknown, so each
//! attempt is evaluated in three-valued logic. A boolean that samples X is
//! false. For an implication the attempt fails when some antecedent match
//! ending at `p` is followed by a consequent that cannot match from `p` (or
//! `p + 1` for `|=>`).

use assertforge_hdl::sva::{BoundProperty, BoundSequence, Implication};
use assertforge_hdl::trace::Trace;
use assertforge_hdl::value::CExpr;
use serde::{Deserialize, Serialize};

/// Kleene truth value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tri {
    F,
    U,
    T,
}

impl Tri {
    pub fn and(self, o: Tri) -> Tri {
        self.min(o)
    }

    pub fn or(self, o: Tri) -> Tri {
        self.max(o)
    }
}

impl std::ops::Not for Tri {
    type Output = Tri;

    fn not(self) -> Tri {
        match self {
            Tri::F => Tri::T,
            Tri::U => Tri::U,
            Tri::T => Tri::F,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptResult {
    Pass,
    Vacuous,
    Fail,
    Undetermined,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptCounts {
    pub pass: u64,
    pub vacuous: u64,
    pub fail: u64,
    pub undetermined: u64,
}

impl AttemptCounts {
    pub fn add(&mut self, r: AttemptResult) {
        match r {
            AttemptResult::Pass => self.pass += 1,
            AttemptResult::Vacuous => self.vacuous += 1,
            AttemptResult::Fail => self.fail += 1,
            AttemptResult::Undetermined => self.undetermined += 1,
        }
    }

    pub fn merge(&mut self, o: &AttemptCounts) {
        self.pass += o.pass;
        self.vacuous += o.vacuous;
        self.fail += o.fail;
        self.undetermined += o.undetermined;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TraceOutcome {
    Pass,
    VacuousPass,
    /// `cycle` is the start of the earliest failing attempt.
    Fail { cycle: usize },
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCheck {
    pub outcome: TraceOutcome,
    pub attempts: AttemptCounts,
    pub first_fail: Option<usize>,
}

fn sample(e: &CExpr, trace: &Trace, p: usize) -> Tri {
    if p >= trace.len() {
        return Tri::U;
    }
    match e.eval(&trace.at(p), 0) {
        Some(v) if v != 0 => Tri::T,
        _ => Tri::F,
    }
}

/// `out[q]` is the truth of "the sequence, started at `start`, matches ending
/// at `q`"; index `len` stands for every position past the end.
fn matches(seq: &BoundSequence, trace: &Trace, start: usize) -> Vec<Tri> {
    let len = trace.len();
    let mut cur = vec![Tri::F; len + 1];
    cur[start.min(len)] = Tri::T;
    for item in &seq.items {
        let (lo, hi) = match item.delay {
            None => (0usize, Some(0usize)),
            Some(d) => (d.min as usize, d.max.map(|m| m as usize)),
        };
        let mut next = vec![Tri::F; len + 1];
        for (q, &v) in cur.iter().enumerate() {
            if v == Tri::F {
                continue;
            }
            if q == len {
                next[len] = next[len].or(v);
                continue;
            }
            let first = q + lo;
            let last = match hi {
                Some(h) => q + h,
                None => usize::MAX,
            };
            let mut r = first;
            while r <= last && r < len {
                next[r] = next[r].or(v);
                r += 1;
            }
            if last >= len {
                next[len] = next[len].or(v);
            }
        }
        for (q, slot) in next.iter_mut().enumerate() {
            if *slot != Tri::F {
                *slot = slot.and(sample(&item.expr, trace, q));
            }
        }
        cur = next;
    }
    cur
}

fn any(v: &[Tri]) -> Tri {
    v.iter().fold(Tri::F, |a, &b| a.or(b))
}

/// Evaluates the attempt starting at cycle `t`.
pub fn eval_attempt(prop: &BoundProperty, trace: &Trace, t: usize) -> AttemptResult {
    let len = trace.len();
    if let Some(dis) = &prop.disable {
        let end = match prop.max_span() {
            Some(span) => (t + span as usize).min(len - 1),
            None => len - 1,
        };
        if (t..=end).any(|p| sample(dis, trace, p) == Tri::T) {
            return AttemptResult::Vacuous;
        }
    }
    let m = matches(&prop.lhs, trace, t);
    let Some((imp, rhs)) = &prop.implication else {
        return match any(&m) {
            Tri::T => AttemptResult::Pass,
            Tri::F => AttemptResult::Fail,
            Tri::U => AttemptResult::Undetermined,
        };
    };
    let shift = matches!(imp, Implication::NonOverlapped) as usize;
    let mut fail = Tri::F;
    for (p, &mp) in m.iter().enumerate() {
        if mp == Tri::F {
            continue;
        }
        let c = if p >= len { Tri::U } else { any(&matches(rhs, trace, p + shift)) };
        fail = fail.or(mp.and(!c));
    }
    match (fail, any(&m)) {
        (Tri::T, _) => AttemptResult::Fail,
        (Tri::U, _) => AttemptResult::Undetermined,
        (Tri::F, Tri::T) => AttemptResult::Pass,
        (Tri::F, Tri::F) => AttemptResult::Vacuous,
        (Tri::F, Tri::U) => AttemptResult::Undetermined,
    }
}

/// Checks every attempt on one trace. Overall: any failing attempt fails at
/// the earliest failing start; else any undetermined attempt makes the trace
/// undetermined; else any non-vacuous pass passes; else vacuous.
pub fn eval_on_trace(prop: &BoundProperty, trace: &Trace) -> TraceCheck {
    let mut attempts = AttemptCounts::default();
    let mut first_fail = None;
    for t in 0..trace.len() {
        let r = eval_attempt(prop, trace, t);
        if r == AttemptResult::Fail && first_fail.is_none() {
            first_fail = Some(t);
        }
        attempts.add(r);
    }
    let outcome = if let Some(cycle) = first_fail {
        TraceOutcome::Fail { cycle }
    } else if attempts.undetermined > 0 {
        TraceOutcome::Undetermined
    } else if attempts.pass > 0 {
        TraceOutcome::Pass
    } else {
        TraceOutcome::VacuousPass
    };
    TraceCheck { outcome, attempts, first_fail }
}
