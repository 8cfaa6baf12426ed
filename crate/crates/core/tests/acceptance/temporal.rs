// SPDX-License-Identifier: Apache-2.0
//! Brute-force checker: every property is expanded, per attempt start, into
//! an explicit boolean formula over cycle-indexed atoms by enumerating every
//! delay choice. Atoms past the end of the trace are unknown, and the formula
//! is evaluated in three-valued logic.

use std::time::Instant;

use assertforge::eval::check::{eval_attempt, eval_on_trace, AttemptResult, TraceOutcome};
use assertforge_hdl::signal::{Hierarchy, SignalDefinition, SignalKind};
use assertforge_hdl::sva::{bind_signals, parse_sva, BoundProperty};
use assertforge_hdl::trace::{Trace, TraceSignal};

use crate::ensure;

const MAX_LEN: usize = 6;
const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

/// Signal values per cycle, indexed `[t][A|B|C]`.
type Bits = [[bool; 3]];
/// Kleene value; `None` is unknown.
type K = Option<bool>;

fn sig(tr: &Bits, s: usize, t: isize) -> K {
    if t < 0 {
        None
    } else {
        Some(tr[t as usize][s])
    }
}

fn and(a: K, b: K) -> K {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or(a: K, b: K) -> K {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

fn not(a: K) -> K {
    a.map(|x| !x)
}

fn rose(tr: &Bits, s: usize, t: isize) -> K {
    Some(!sig(tr, s, t - 1)? && sig(tr, s, t)?)
}

fn fell(tr: &Bits, s: usize, t: isize) -> K {
    Some(sig(tr, s, t - 1)? && !sig(tr, s, t)?)
}

fn stable(tr: &Bits, s: usize, t: isize) -> K {
    Some(sig(tr, s, t - 1)? == sig(tr, s, t)?)
}

type Atom = fn(&Bits, isize) -> K;

struct Item {
    min: usize,
    /// `None` is `$`.
    max: Option<usize>,
    atom: Atom,
}

const fn at(atom: Atom) -> Item {
    Item { min: 0, max: Some(0), atom }
}

const fn delay(min: usize, max: Option<usize>, atom: Atom) -> Item {
    Item { min, max, atom }
}

struct Spec {
    text: &'static str,
    disable: Option<Atom>,
    lhs: Vec<Item>,
    /// Non-overlapped flag and consequent.
    rhs: Option<(bool, Vec<Item>)>,
}

fn specs() -> Vec<Spec> {
    vec![
        Spec { text: "a |-> b", disable: None, lhs: vec![at(|t, i| sig(t, A, i))], rhs: Some((false, vec![at(|t, i| sig(t, B, i))])) },
        Spec { text: "a |=> b", disable: None, lhs: vec![at(|t, i| sig(t, A, i))], rhs: Some((true, vec![at(|t, i| sig(t, B, i))])) },
        Spec {
            text: "a ##1 b |-> c",
            disable: None,
            lhs: vec![at(|t, i| sig(t, A, i)), delay(1, Some(1), |t, i| sig(t, B, i))],
            rhs: Some((false, vec![at(|t, i| sig(t, C, i))])),
        },
        Spec {
            text: "a |-> ##[1:2] b",
            disable: None,
            lhs: vec![at(|t, i| sig(t, A, i))],
            rhs: Some((false, vec![delay(1, Some(2), |t, i| sig(t, B, i))])),
        },
        Spec {
            text: "a ##[0:2] b |=> c",
            disable: None,
            lhs: vec![at(|t, i| sig(t, A, i)), delay(0, Some(2), |t, i| sig(t, B, i))],
            rhs: Some((true, vec![at(|t, i| sig(t, C, i))])),
        },
        Spec {
            text: "disable iff (c) a |=> b",
            disable: Some(|t, i| sig(t, C, i)),
            lhs: vec![at(|t, i| sig(t, A, i))],
            rhs: Some((true, vec![at(|t, i| sig(t, B, i))])),
        },
        Spec {
            text: "a |-> ##[1:$] b",
            disable: None,
            lhs: vec![at(|t, i| sig(t, A, i))],
            rhs: Some((false, vec![delay(1, None, |t, i| sig(t, B, i))])),
        },
        Spec {
            text: "$rose(a) |=> $fell(b) || c",
            disable: None,
            lhs: vec![at(|t, i| rose(t, A, i))],
            rhs: Some((true, vec![at(|t, i| or(fell(t, B, i), sig(t, C, i)))])),
        },
        Spec {
            text: "a ##1 b ##[0:1] c",
            disable: None,
            lhs: vec![at(|t, i| sig(t, A, i)), delay(1, Some(1), |t, i| sig(t, B, i)), delay(0, Some(1), |t, i| sig(t, C, i))],
            rhs: None,
        },
        Spec {
            text: "disable iff (a && c) ##1 a && !b |-> ##2 $stable(c) && $past(a, 2) != b",
            disable: Some(|t, i| and(sig(t, A, i), sig(t, C, i))),
            lhs: vec![delay(1, Some(1), |t, i| and(sig(t, A, i), not(sig(t, B, i))))],
            rhs: Some((
                false,
                vec![delay(2, Some(2), |t, i| {
                    let past = sig(t, A, i - 2);
                    let ne = match (past, sig(t, B, i)) {
                        (Some(x), Some(y)) => Some(x != y),
                        _ => None,
                    };
                    and(stable(t, C, i), ne)
                })],
            )),
        },
    ]
}

/// Explicit formula; `Atom(k, p)` is atom `k` of the property sampled at
/// cycle `p`, unknown when `p` is past the end.
#[derive(Clone, Debug)]
enum F {
    Atom(usize, usize),
    And(Vec<F>),
    Or(Vec<F>),
    Not(Box<F>),
}

/// Every way a sequence started at `start` can match: (end cycle, atoms).
/// Positions at or beyond `len` collapse to `len`.
fn paths(items: &[Item], base: usize, start: usize, len: usize) -> Vec<(usize, Vec<F>)> {
    let mut out = vec![(start.min(len), Vec::new())];
    for (k, item) in items.iter().enumerate() {
        let mut next = Vec::new();
        for (q, atoms) in &out {
            let ends: Vec<usize> = if *q >= len {
                vec![len]
            } else {
                let hi = item.max.unwrap_or(len - q);
                (item.min..=hi).map(|d| (q + d).min(len)).collect()
            };
            for r in ends {
                let mut a = atoms.clone();
                a.push(F::Atom(base + k, r));
                next.push((r, a));
            }
        }
        out = next;
    }
    out
}

fn max_len(items: &[Item]) -> Option<usize> {
    items.iter().try_fold(0, |acc, i| Some(acc + i.max?))
}

/// Formula pair for the attempt at `t`: (disabled, body) where `body` is the
/// failure condition for implications and the match condition otherwise, and
/// `matched` is the antecedent match condition.
struct Expanded {
    disabled: F,
    body: F,
    matched: Option<F>,
}

fn expand(spec: &Spec, t: usize, len: usize) -> Expanded {
    let nl = spec.lhs.len();
    let dis_atom = nl + spec.rhs.as_ref().map_or(0, |(_, r)| r.len());
    let span = match &spec.rhs {
        None => max_len(&spec.lhs),
        Some((next, r)) => max_len(&spec.lhs).and_then(|l| Some(l + *next as usize + max_len(r)?)),
    };
    let end = span.map_or(len - 1, |s| (t + s).min(len - 1));
    let disabled = match spec.disable {
        Some(_) => F::Or((t..=end).map(|p| F::Atom(dis_atom, p)).collect()),
        None => F::Or(Vec::new()),
    };
    let lhs = paths(&spec.lhs, 0, t, len);
    match &spec.rhs {
        None => Expanded { disabled, body: F::Or(lhs.into_iter().map(|(_, a)| F::And(a)).collect()), matched: None },
        Some((next, rhs)) => {
            let mut fail = Vec::new();
            let mut matched = Vec::new();
            for (q, a) in lhs {
                let ante = F::And(a);
                let cons = F::Or(paths(rhs, nl, q + *next as usize, len).into_iter().map(|(_, c)| F::And(c)).collect());
                fail.push(F::And(vec![ante.clone(), F::Not(Box::new(cons))]));
                matched.push(ante);
            }
            Expanded { disabled, body: F::Or(fail), matched: Some(F::Or(matched)) }
        }
    }
}

// None is unknown, not a short-circuit
#[allow(clippy::manual_try_fold)]
fn eval(f: &F, atoms: &[Vec<K>]) -> K {
    match f {
        F::Atom(k, p) => atoms[*k][*p],
        F::And(v) => v.iter().fold(Some(true), |acc, x| and(acc, eval(x, atoms))),
        F::Or(v) => v.iter().fold(Some(false), |acc, x| or(acc, eval(x, atoms))),
        F::Not(x) => not(eval(x, atoms)),
    }
}

fn attempt(e: &Expanded, atoms: &[Vec<K>]) -> AttemptResult {
    if eval(&e.disabled, atoms) == Some(true) {
        return AttemptResult::Vacuous;
    }
    match (&e.matched, eval(&e.body, atoms)) {
        (None, Some(true)) => AttemptResult::Pass,
        (None, Some(false)) => AttemptResult::Fail,
        (None, None) => AttemptResult::Undetermined,
        (Some(_), Some(true)) => AttemptResult::Fail,
        (Some(_), None) => AttemptResult::Undetermined,
        (Some(m), Some(false)) => match eval(m, atoms) {
            Some(true) => AttemptResult::Pass,
            Some(false) => AttemptResult::Vacuous,
            None => AttemptResult::Undetermined,
        },
    }
}

/// Atom truth table: a sampled X counts as false; past the end is unknown.
fn atom_table(spec: &Spec, bits: &Bits) -> Vec<Vec<K>> {
    let len = bits.len();
    let mut all: Vec<Atom> = spec.lhs.iter().map(|i| i.atom).collect();
    if let Some((_, r)) = &spec.rhs {
        all.extend(r.iter().map(|i| i.atom));
    }
    all.extend(spec.disable);
    all.iter()
        .map(|f| {
            let mut row: Vec<K> = (0..len).map(|p| Some(f(bits, p as isize) == Some(true))).collect();
            row.push(None);
            row
        })
        .collect()
}

fn defs() -> Vec<SignalDefinition> {
    ["clk", "a", "b", "c"]
        .iter()
        .map(|n| SignalDefinition::new(n, 1, SignalKind::Input, Hierarchy::IoPort))
        .collect()
}

fn trace(bits: &Bits) -> Trace {
    let mut tr = Trace::new(defs().iter().map(|d| TraceSignal { name: d.name.clone(), width: 1 }).collect());
    for row in bits {
        tr.push_row(vec![Some(0), Some(row[A] as u64), Some(row[B] as u64), Some(row[C] as u64)]);
    }
    tr
}

fn bind(text: &str) -> BoundProperty {
    let full = format!("assert property (@(posedge clk) {text});");
    bind_signals(&parse_sva(&full).expect("fixed property parses"), &defs()).expect("fixed property binds")
}

pub fn run() -> Result<String, String> {
    let start = Instant::now();
    let mut traces = 0usize;
    let mut tally = [0usize; 4];
    for spec in specs() {
        let prop = bind(spec.text);
        for len in 1..=MAX_LEN {
            let expanded: Vec<Expanded> = (0..len).map(|t| expand(&spec, t, len)).collect();
            for code in 0u32..(1 << (3 * len)) {
                let bits: Vec<[bool; 3]> =
                    (0..len).map(|t| [0, 1, 2].map(|s| code >> (3 * t + s) & 1 == 1)).collect();
                let atoms = atom_table(&spec, &bits);
                let tr = trace(&bits);
                let mut first_fail = None;
                let mut results = Vec::with_capacity(len);
                for (t, e) in expanded.iter().enumerate() {
                    let want = attempt(e, &atoms);
                    let got = eval_attempt(&prop, &tr, t);
                    ensure(want == got, || {
                        format!("`{}` on {bits:?}, attempt {t}: oracle {want:?}, checker {got:?}", spec.text)
                    })?;
                    if want == AttemptResult::Fail && first_fail.is_none() {
                        first_fail = Some(t);
                    }
                    results.push(want);
                }
                let want = if let Some(cycle) = first_fail {
                    TraceOutcome::Fail { cycle }
                } else if results.contains(&AttemptResult::Undetermined) {
                    TraceOutcome::Undetermined
                } else if results.contains(&AttemptResult::Pass) {
                    TraceOutcome::Pass
                } else {
                    TraceOutcome::VacuousPass
                };
                let got = eval_on_trace(&prop, &tr).outcome;
                ensure(want == got, || format!("`{}` on {bits:?}: oracle {want:?}, checker {got:?}", spec.text))?;
                tally[match want {
                    TraceOutcome::Pass => 0,
                    TraceOutcome::VacuousPass => 1,
                    TraceOutcome::Fail { .. } => 2,
                    TraceOutcome::Undetermined => 3,
                }] += 1;
                traces += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 60.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "10 properties, {traces} property-trace pairs (lengths 1..=6, 2^18 at length 6): pass {} vacuous {} fail {} undetermined {}, {elapsed:?}",
        tally[0], tally[1], tally[2], tally[3]
    ))
}
