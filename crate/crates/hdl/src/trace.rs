// SPDX-License-Identifier: Apache-2.0
//! Cycle-indexed signal values.

use serde::{Deserialize, Serialize};

use crate::value::{mask, Env, Logic};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSignal {
    pub name: String,
    pub width: u32,
}

/// `rows[t][i]` is the value of signal `i` sampled at cycle `t`; `None` is X.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub signals: Vec<TraceSignal>,
    pub rows: Vec<Vec<Logic>>,
}

impl Trace {
    pub fn new(signals: Vec<TraceSignal>) -> Self {
        Trace { signals, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s.name == name)
    }

    /// Appends a row, masking every value to its signal's width.
    pub fn push_row(&mut self, mut row: Vec<Logic>) {
        assert_eq!(row.len(), self.signals.len(), "row arity");
        for (v, s) in row.iter_mut().zip(&self.signals) {
            *v = v.map(|x| x & mask(s.width));
        }
        self.rows.push(row);
    }

    pub fn value(&self, t: usize, sig: usize) -> Logic {
        self.rows[t][sig]
    }

    pub fn column(&self, sig: usize) -> impl Iterator<Item = Logic> + '_ {
        self.rows.iter().map(move |r| r[sig])
    }

    /// Sampling view anchored at cycle `t`.
    pub fn at(&self, t: usize) -> At<'_> {
        At { trace: self, t }
    }

    /// Rows `[from, to)` clipped to the trace.
    pub fn slice(&self, from: usize, to: usize) -> Trace {
        let to = to.min(self.rows.len());
        let from = from.min(to);
        Trace { signals: self.signals.clone(), rows: self.rows[from..to].to_vec() }
    }
}

/// Samples relative to a fixed cycle; history before cycle 0 is X.
#[derive(Clone, Copy)]
pub struct At<'a> {
    trace: &'a Trace,
    t: usize,
}

impl Env for At<'_> {
    fn sample(&self, sig: usize, back: u32) -> Logic {
        let back = back as usize;
        if back > self.t {
            None
        } else {
            self.trace.rows[self.t - back][sig]
        }
    }
}
