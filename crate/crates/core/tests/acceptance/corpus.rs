// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::time::Instant;

use assertforge_hdl::expr::Expr;
use assertforge_hdl::lex::Base;
use assertforge_hdl::sva::{parse_sva, print_sva, Edge, Implication, PropertyAst};

use crate::{ensure, root};

/// Positive cases end at a line ending in `;`, so one case may span lines.
fn positives(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for line in text.lines() {
        cur.push_str(line);
        cur.push('\n');
        if line.trim_end().ends_with(';') {
            out.push(std::mem::take(&mut cur));
        }
    }
    assert!(cur.trim().is_empty(), "unterminated positive case: {cur}");
    out
}

fn expr_features(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Ident(_) => {
            out.insert("ident".into());
        }
        Expr::Index { .. } => {
            out.insert("index".into());
        }
        Expr::Range { .. } => {
            out.insert("range".into());
        }
        Expr::Lit(l) => {
            let base = match l.base {
                None => "none",
                Some(Base::Bin) => "bin",
                Some(Base::Oct) => "oct",
                Some(Base::Dec) => "dec",
                Some(Base::Hex) => "hex",
            };
            out.insert(format!("lit:{base}:{}", if l.size.is_some() { "sized" } else { "unsized" }));
        }
        Expr::Unary(op, a) => {
            out.insert(format!("unary:{}", op.symbol()));
            expr_features(a, out);
        }
        Expr::Binary(op, a, b) => {
            out.insert(format!("binary:{}", op.symbol()));
            expr_features(a, out);
            expr_features(b, out);
        }
        Expr::Sys(f, a) => {
            out.insert(format!("sys:{}", f.name()));
            expr_features(a, out);
        }
        Expr::Past(a, d) => {
            out.insert(if *d == 1 { "past:default".into() } else { "past:depth".into() });
            expr_features(a, out);
        }
        Expr::Cond(..) | Expr::Concat(_) => {
            out.insert("verilog-only".into());
        }
    }
}

fn features(ast: &PropertyAst, out: &mut BTreeSet<String>) {
    out.insert(match ast.clocking.edge {
        Edge::Posedge => "edge:pos".into(),
        Edge::Negedge => "edge:neg".into(),
    });
    if ast.disable.is_some() {
        out.insert("disable".into());
    }
    out.insert(match &ast.body.implication {
        None => "imp:none".into(),
        Some((Implication::Overlapped, _)) => "imp:overlapped".into(),
        Some((Implication::NonOverlapped, _)) => "imp:nonoverlapped".into(),
    });
    let seqs = std::iter::once(&ast.body.lhs).chain(ast.body.implication.iter().map(|(_, s)| s));
    for (side, s) in seqs.enumerate() {
        for (i, item) in s.items.iter().enumerate() {
            if let Some(d) = item.delay {
                let kind = match d.max {
                    Some(m) if m == d.min => "fixed",
                    Some(_) => "range",
                    None => "unbounded",
                };
                out.insert(format!("delay:{kind}"));
                if i == 0 {
                    out.insert(format!("delay:leading:{side}"));
                }
            }
        }
    }
    for e in ast.exprs() {
        expr_features(e, out);
    }
}

const REQUIRED: &[&str] = &[
    "edge:pos", "edge:neg", "disable", "imp:none", "imp:overlapped", "imp:nonoverlapped", "delay:fixed",
    "delay:range", "delay:unbounded", "delay:leading:0", "delay:leading:1", "ident", "index", "range",
    "lit:none:unsized", "lit:bin:sized", "lit:oct:sized", "lit:dec:sized", "lit:hex:sized", "lit:hex:unsized",
    "unary:!", "unary:~", "unary:-", "unary:&", "unary:|", "unary:^", "binary:+", "binary:-", "binary:<<",
    "binary:>>", "binary:<", "binary:<=", "binary:>", "binary:>=", "binary:==", "binary:!=", "binary:&",
    "binary:^", "binary:|", "binary:&&", "binary:||", "sys:stable", "sys:rose", "sys:fell", "sys:bits",
    "sys:onehot", "sys:countones", "past:default", "past:depth",
];

pub fn run() -> Result<String, String> {
    let dir = root().join("fixtures/sva_corpus");
    let pos_text = std::fs::read_to_string(dir.join("positive.sva")).map_err(|e| e.to_string())?;
    let neg_text = std::fs::read_to_string(dir.join("negative.sva")).map_err(|e| e.to_string())?;
    let pos = positives(&pos_text);
    let neg: Vec<&str> = neg_text.lines().collect();
    ensure(pos.len() >= 60, || format!("only {} positive cases", pos.len()))?;
    ensure(neg.len() >= 40, || format!("only {} negative cases", neg.len()))?;

    let start = Instant::now();
    let mut seen = BTreeSet::new();
    for case in &pos {
        let ast = parse_sva(case).map_err(|e| format!("rejected {:?}: {e}", case.trim()))?;
        let printed = print_sva(&ast);
        let again = parse_sva(&printed).map_err(|e| format!("printed form {printed:?} rejected: {e}"))?;
        ensure(again == ast, || format!("round trip changed the AST of {printed:?}"))?;
        ensure(print_sva(&again) == printed, || format!("printing is not a fixpoint for {printed:?}"))?;
        features(&ast, &mut seen);
    }
    for case in &neg {
        ensure(parse_sva(case).is_err(), || format!("accepted {case:?}"))?;
    }
    let elapsed = start.elapsed();

    let missing: Vec<&&str> = REQUIRED.iter().filter(|f| !seen.contains(**f)).collect();
    ensure(missing.is_empty(), || format!("productions not exercised: {missing:?}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("corpus took {elapsed:?}"))?;
    Ok(format!("{} positive, {} negative, {} productions, {:?}", pos.len(), neg.len(), REQUIRED.len(), elapsed))
}
