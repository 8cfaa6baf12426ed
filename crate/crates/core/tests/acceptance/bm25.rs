// SPDX-License-Identifier: Apache-2.0
//! Independent BM25: its own tokenizer and statistics computed from chunk
//! text alone, ranked by a full sort on (score desc, id asc).

use std::collections::HashMap;

use assertforge::knowledge::{build_index, LexicalIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ensure, root};

const QUERIES: usize = 100;

fn tokens(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && chars[j].is_alphanumeric() {
            j += 1;
        }
        let dollar = i > 0 && chars[i - 1] == '$';
        let word: String = chars[i..j].iter().flat_map(|c| c.to_lowercase()).collect();
        out.push(if dollar { format!("${word}") } else { word });
        i = j;
    }
    out
}

struct Oracle {
    docs: Vec<HashMap<String, f64>>,
    lens: Vec<f64>,
    df: HashMap<String, f64>,
    avg: f64,
}

impl Oracle {
    fn new(texts: &[&str]) -> Self {
        let mut docs = Vec::new();
        let mut lens = Vec::new();
        let mut df: HashMap<String, f64> = HashMap::new();
        for t in texts {
            let toks = tokens(t);
            lens.push(toks.len() as f64);
            let mut tf: HashMap<String, f64> = HashMap::new();
            for w in toks {
                *tf.entry(w).or_default() += 1.0;
            }
            for w in tf.keys() {
                *df.entry(w.clone()).or_default() += 1.0;
            }
            docs.push(tf);
        }
        let avg = lens.iter().sum::<f64>() / lens.len() as f64;
        Oracle { docs, lens, df, avg }
    }

    fn rank(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        let (k1, b) = (1.2, 0.75);
        let n = self.docs.len() as f64;
        let q = tokens(query);
        let mut scored: Vec<(usize, f64)> = (0..self.docs.len())
            .map(|d| {
                let norm = k1 * (1.0 - b + b * self.lens[d] / self.avg);
                let s = q
                    .iter()
                    .map(|w| {
                        let tf = self.docs[d].get(w).copied().unwrap_or(0.0);
                        if tf == 0.0 {
                            return 0.0;
                        }
                        let df = self.df.get(w).copied().unwrap_or(0.0);
                        let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                        idf * tf * (k1 + 1.0) / (tf + norm)
                    })
                    .sum::<f64>();
                (d, s)
            })
            .filter(|&(_, s)| s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }
}

fn random_query(rng: &mut ChaCha8Rng, vocab: &[String]) -> String {
    let n = rng.random_range(1..=6);
    let mut words: Vec<String> = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => "zzqx".to_string(),
            1 => vocab[rng.random_range(0..vocab.len())].to_uppercase(),
            _ => vocab[rng.random_range(0..vocab.len())].clone(),
        })
        .collect();
    if rng.random_bool(0.2) {
        let w = words[0].clone();
        words.push(w);
    }
    words.join(if rng.random_bool(0.5) { " " } else { ", " })
}

fn compare(name: &str, idx: &LexicalIndex, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let texts: Vec<&str> = idx.chunks.iter().map(|c| c.text.as_str()).collect();
    for (i, c) in idx.chunks.iter().enumerate() {
        ensure(c.id == i, || format!("{name}: chunk ids are not positional"))?;
    }
    let oracle = Oracle::new(&texts);
    let mut vocab: Vec<String> = oracle.df.keys().cloned().collect();
    vocab.sort();
    let mut ties = 0;
    for qi in 0..QUERIES {
        let q = random_query(rng, &vocab);
        let k = rng.random_range(1..=8);
        let want = oracle.rank(&q, k);
        let got: Vec<(usize, f64)> = idx.retrieve(&q, k).iter().map(|h| (h.chunk.id, h.score)).collect();
        let ids = |v: &[(usize, f64)]| v.iter().map(|x| x.0).collect::<Vec<_>>();
        ensure(ids(&want) == ids(&got), || format!("{name} query {qi} {q:?} k={k}: oracle {want:?}, index {got:?}"))?;
        for (w, g) in want.iter().zip(&got) {
            ensure((w.1 - g.1).abs() <= 1e-9 * w.1.abs().max(1.0), || format!("{name} query {q:?}: score {} vs {}", w.1, g.1))?;
        }
        ties += want.windows(2).filter(|p| p[0].1 == p[1].1).count();
    }
    Ok(ties)
}

pub fn run() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let idx = build_index(&root().join("corpus")).map_err(|e| e.to_string())?;
    let corpus_ties = compare("corpus", &idx, &mut rng)?;

    // identical files force exact score ties
    let a = "The $rose function is true when the sampled bit moves from 0 to 1.";
    let b = "Vacuous success: an implication whose antecedent never matches passes trivially.";
    let c = "Use disable iff with the reset so attempts during reset are discarded.";
    let sources = [("a.md", format!("{a}\n\n{b}")), ("b.md", c.to_string()), ("c.md", format!("{a}\n\n{b}")), ("d.md", c.to_string())];
    let dup = LexicalIndex::from_sources(&sources).map_err(|e| e.to_string())?;
    let dup_ties = compare("duplicates", &dup, &mut rng)?;
    ensure(dup_ties > 0, || "tie rule never exercised".into())?;
    Ok(format!(
        "{QUERIES} queries over {} corpus chunks and {QUERIES} over a duplicated corpus; {} tied pairs ordered by id",
        idx.chunks.len(),
        corpus_ties + dup_ties
    ))
}
