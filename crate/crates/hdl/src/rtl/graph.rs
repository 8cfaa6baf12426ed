// SPDX-License-Identifier: Apache-2.0
//! Signal dependency graph and cone-of-influence coverage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RtlDesign;
use crate::sva::BoundProperty;

/// `fanin[v]` holds every `u` with an edge `u -> v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepGraph {
    pub names: Vec<String>,
    pub fanin: Vec<BTreeSet<usize>>,
    /// Nets left out of the coverage denominator (clocks and resets).
    pub excluded: BTreeSet<usize>,
}

impl DepGraph {
    pub fn new(names: Vec<String>) -> Self {
        let n = names.len();
        DepGraph { names, fanin: vec![BTreeSet::new(); n], excluded: BTreeSet::new() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.fanin[to].insert(from);
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.fanin.iter().enumerate().flat_map(|(v, us)| us.iter().map(move |&u| (u, v)))
    }

    /// Reflexive transitive fan-in of `roots`.
    pub fn cone(&self, roots: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = roots.into_iter().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(self.fanin[v].iter().copied().filter(|u| !seen.contains(u)));
            }
        }
        seen
    }

    /// Coverage of an already computed covered set.
    pub fn coverage_of(&self, covered: BTreeSet<usize>) -> CoiResult {
        let total = self.len() - self.excluded.len();
        let counted = covered.iter().filter(|v| !self.excluded.contains(v)).count();
        let coverage = if total == 0 { 0.0 } else { counted as f64 / total as f64 };
        CoiResult {
            covered: covered.iter().map(|&i| self.names[i].clone()).collect(),
            covered_idx: covered,
            counted,
            total,
            coverage,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoiResult {
    /// Covered signal names, clocks and resets included when reached.
    pub covered: Vec<String>,
    #[serde(skip)]
    pub covered_idx: BTreeSet<usize>,
    /// Covered signals that count toward the denominator.
    pub counted: usize,
    /// Denominator: declared signals minus clock and reset nets.
    pub total: usize,
    pub coverage: f64,
}

/// Edges from right-hand-side and guard supports to each assigned signal.
/// Event-control edges (clocks, asynchronous resets) contribute nothing.
pub fn build_depgraph(design: &RtlDesign) -> DepGraph {
    let mut g = DepGraph::new(design.signals.iter().map(|s| s.name.clone()).collect());
    let idx = |n: &str| design.index_of(n).expect("resolved at parse time");
    for a in &design.assigns {
        for s in a.rhs.signals() {
            g.add_edge(idx(s), a.lhs.sig);
        }
    }
    for p in &design.processes {
        let mut guards = Vec::new();
        p.body.for_each_assign(&mut guards, &mut |lhs, rhs, guards| {
            for e in guards.iter().copied().chain(std::iter::once(rhs)) {
                for s in e.signals() {
                    g.add_edge(idx(s), lhs.sig);
                }
            }
        });
    }
    g.excluded.extend(design.clocks());
    g.excluded.extend(design.async_resets().iter().map(|r| r.sig));
    g
}

/// Cone of influence of every signal the properties read. Callers pass only
/// properties bound against the design's own signal list.
pub fn coi_coverage(graph: &DepGraph, props: &[BoundProperty]) -> CoiResult {
    let roots: BTreeSet<usize> = props.iter().flat_map(|p| p.referenced.iter().copied()).collect();
    graph.coverage_of(graph.cone(roots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_verilog;
    use crate::sva::{bind_signals, parse_sva};

    fn chain() -> (RtlDesign, DepGraph) {
        let d = parse_verilog("module m(input a, output c);\n wire b;\n assign b = a;\n assign c = b;\nendmodule").unwrap();
        let g = build_depgraph(&d);
        (d, g)
    }

    fn prop(d: &RtlDesign, body: &str) -> BoundProperty {
        let ast = parse_sva(&format!("assert property (@(posedge a) {body});")).unwrap();
        bind_signals(&ast, &d.signals).unwrap()
    }

    #[test]
    fn chain_edges_and_coverage() {
        let (d, g) = chain();
        let (a, b, c) = (d.index_of("a").unwrap(), d.index_of("b").unwrap(), d.index_of("c").unwrap());
        assert_eq!(g.edges().collect::<BTreeSet<_>>(), BTreeSet::from([(a, b), (b, c)]));
        let r = coi_coverage(&g, &[prop(&d, "c")]);
        assert_eq!((r.counted, r.total), (3, 3));
        assert_eq!(r.coverage, 1.0);
        let r = coi_coverage(&g, &[prop(&d, "b")]);
        assert_eq!(r.covered, vec!["a".to_string(), "b".to_string()]);
        assert!((r.coverage - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(coi_coverage(&g, &[]).coverage, 0.0);
    }

    #[test]
    fn guards_add_edges_clock_does_not() {
        let d = parse_verilog(
            "module m(input clk, input rst, input en, input d, output reg q);\n always @(posedge clk or posedge rst)\n  if (rst) q <= 0; else if (en) q <= d;\nendmodule",
        )
        .unwrap();
        let g = build_depgraph(&d);
        let q = d.index_of("q").unwrap();
        let fanin: Vec<&str> = g.fanin[q].iter().map(|&i| g.names[i].as_str()).collect();
        assert_eq!(fanin, ["rst", "en", "d"]);
        assert_eq!(g.excluded, BTreeSet::from([0, 1]));
        let r = g.coverage_of(g.cone([q]));
        assert_eq!((r.counted, r.total), (3, 3));
    }
}
