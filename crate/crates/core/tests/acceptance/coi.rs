// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::time::Instant;

use assertforge_hdl::rtl::{coi_coverage, DepGraph};
use assertforge_hdl::signal::{Hierarchy, SignalDefinition, SignalKind};
use assertforge_hdl::sva::{bind_signals, parse_sva, BoundProperty};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensure;

const GRAPHS: usize = 200;
const PAIRS: usize = 1000;

/// Random DAG: edges only run from lower to higher node numbers, then node
/// numbers are shuffled.
fn random_dag(rng: &mut ChaCha8Rng) -> (DepGraph, Vec<Vec<bool>>) {
    let n = rng.random_range(1..=200);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let density = rng.random_range(0.0..(4.0 / n as f64).min(1.0));
    let mut g = DepGraph::new((0..n).map(|i| format!("s{i}")).collect());
    let mut adj = vec![vec![false; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(density) {
                g.add_edge(perm[u], perm[v]);
                adj[perm[u]][perm[v]] = true;
            }
        }
    }
    for v in 0..n {
        if rng.random_bool(0.05) {
            g.excluded.insert(v);
        }
    }
    (g, adj)
}

/// `reach[u][v]`: `v` lies in the fan-in closure of `u`, reflexively.
fn closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    // reach[v][u] when u -> ... -> v
    let mut r: Vec<Vec<bool>> = (0..n).map(|v| (0..n).map(|u| u == v || adj[u][v]).collect()).collect();
    for k in 0..n {
        for v in 0..n {
            if r[v][k] {
                let via = r[k].clone();
                for (dst, src) in r[v].iter_mut().zip(via) {
                    *dst |= src;
                }
            }
        }
    }
    r
}

fn property(roots: &BTreeSet<usize>, template: &BoundProperty) -> BoundProperty {
    let mut p = template.clone();
    p.referenced = roots.clone();
    p
}

fn template(n: usize) -> BoundProperty {
    let defs: Vec<SignalDefinition> =
        (0..n).map(|i| SignalDefinition::new(&format!("s{i}"), 1, SignalKind::Wire, Hierarchy::Internal)).collect();
    let ast = parse_sva("assert property (@(posedge s0) s0);").unwrap();
    bind_signals(&ast, &defs).unwrap()
}

fn random_roots(rng: &mut ChaCha8Rng, n: usize) -> BTreeSet<usize> {
    let k = rng.random_range(0..=n.min(6));
    (0..k).map(|_| rng.random_range(0..n)).collect()
}

pub fn run() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut graphs = Vec::new();
    let mut nodes = 0;
    for gi in 0..GRAPHS {
        let (g, adj) = random_dag(&mut rng);
        let n = g.len();
        nodes += n;
        let reach = closure(&adj);
        let t = template(n);
        for _ in 0..5 {
            let roots = random_roots(&mut rng, n);
            let props: Vec<BoundProperty> = roots.iter().map(|&r| property(&BTreeSet::from([r]), &t)).collect();
            let r = coi_coverage(&g, &props);
            let want: BTreeSet<usize> = (0..n).filter(|&u| roots.iter().any(|&v| reach[v][u])).collect();
            ensure(r.covered_idx == want, || format!("graph {gi}: covered set differs for roots {roots:?}"))?;
            let counted = want.iter().filter(|v| !g.excluded.contains(v)).count();
            let total = n - g.excluded.len();
            ensure(r.counted == counted && r.total == total, || {
                format!("graph {gi}: counted {}/{} want {counted}/{total}", r.counted, r.total)
            })?;
        }
        graphs.push((g, t));
    }
    for i in 0..PAIRS {
        let (g, t) = &graphs[rng.random_range(0..graphs.len())];
        let n = g.len();
        let small: Vec<BoundProperty> = (0..rng.random_range(0..4)).map(|_| property(&random_roots(&mut rng, n), t)).collect();
        let mut large = small.clone();
        large.extend((0..rng.random_range(0..4)).map(|_| property(&random_roots(&mut rng, n), t)));
        large.shuffle(&mut rng);
        let (a, b) = (coi_coverage(g, &small), coi_coverage(g, &large));
        ensure(a.covered_idx.is_subset(&b.covered_idx) && a.coverage <= b.coverage, || {
            format!("pair {i}: coverage fell from {} to {}", a.coverage, b.coverage)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 10.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{GRAPHS} graphs ({nodes} nodes), {PAIRS} monotonicity pairs, {elapsed:?}"))
}
