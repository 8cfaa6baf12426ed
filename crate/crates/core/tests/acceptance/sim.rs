// SPDX-License-Identifier: Apache-2.0
//! Naive fixpoint interpreter over a generated design model: each cycle the
//! continuous assignments are re-evaluated in source order until nothing
//! changes, the row is sampled, then every register update is computed from
//! the pre-edge values and committed at once. Expression widths follow the
//! Verilog self-determined/context-determined rules.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use assertforge_hdl::rtl::{parse_verilog, SimOptions, Simulator, Stimulus, StimulusValue};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensure;

const DESIGNS: usize = 100;

fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

#[derive(Clone, Copy, Debug)]
enum Un {
    Not,
    Neg,
    LNot,
    RAnd,
    ROr,
    RXor,
}

#[derive(Clone, Copy, Debug)]
enum Bin {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Ge,
    LAnd,
    LOr,
}

#[derive(Clone, Debug)]
enum Ex {
    Sig(usize),
    Const(u64),
    Un(Un, Box<Ex>),
    Bin(Bin, Box<Ex>, Box<Ex>),
    Cond(Box<Ex>, Box<Ex>, Box<Ex>),
}

#[derive(Clone, Debug)]
enum St {
    Nb(usize, Ex),
    If(Ex, Box<St>, Option<Box<St>>),
    Case(Ex, Vec<(u64, St)>, Box<St>),
    Block(Vec<St>),
}

struct Model {
    /// Common width of every non-clock, non-reset signal.
    w: u32,
    names: Vec<String>,
    widths: Vec<u32>,
    inputs: Vec<usize>,
    /// (target, rhs) in source order.
    assigns: Vec<(usize, Ex)>,
    blocks: Vec<St>,
    regs: Vec<usize>,
}

impl Model {
    fn sw(&self, e: &Ex) -> u32 {
        match e {
            Ex::Sig(s) => self.widths[*s],
            Ex::Const(_) => self.w,
            Ex::Un(Un::Not | Un::Neg, a) => self.sw(a),
            Ex::Un(..) => 1,
            Ex::Bin(Bin::Shl | Bin::Shr, a, _) => self.sw(a),
            Ex::Bin(Bin::Eq | Bin::Ne | Bin::Lt | Bin::Ge | Bin::LAnd | Bin::LOr, ..) => 1,
            Ex::Bin(_, a, b) => self.sw(a).max(self.sw(b)),
            Ex::Cond(_, a, b) => self.sw(a).max(self.sw(b)),
        }
    }

    fn eval(&self, e: &Ex, ctx: u32, v: &[u64]) -> u64 {
        let c = ctx.max(self.sw(e));
        let m = mask(c);
        match e {
            Ex::Sig(s) => v[*s],
            Ex::Const(k) => *k,
            Ex::Un(Un::Not, a) => !self.eval(a, c, v) & m,
            Ex::Un(Un::Neg, a) => self.eval(a, c, v).wrapping_neg() & m,
            Ex::Un(op, a) => {
                let aw = self.sw(a);
                let x = self.eval(a, aw, v);
                (match op {
                    Un::LNot => x == 0,
                    Un::RAnd => x == mask(aw),
                    Un::ROr => x != 0,
                    Un::RXor => x.count_ones() % 2 == 1,
                    Un::Not | Un::Neg => unreachable!(),
                }) as u64
            }
            Ex::Bin(op @ (Bin::Eq | Bin::Ne | Bin::Lt | Bin::Ge), a, b) => {
                let k = self.sw(a).max(self.sw(b));
                let (x, y) = (self.eval(a, k, v), self.eval(b, k, v));
                (match op {
                    Bin::Eq => x == y,
                    Bin::Ne => x != y,
                    Bin::Lt => x < y,
                    _ => x >= y,
                }) as u64
            }
            Ex::Bin(op @ (Bin::LAnd | Bin::LOr), a, b) => {
                let x = self.eval(a, self.sw(a), v) != 0;
                let y = self.eval(b, self.sw(b), v) != 0;
                (if matches!(op, Bin::LAnd) { x && y } else { x || y }) as u64
            }
            Ex::Bin(op @ (Bin::Shl | Bin::Shr), a, b) => {
                let x = self.eval(a, c, v);
                let n = self.eval(b, self.sw(b), v);
                if n >= 64 {
                    0
                } else if matches!(op, Bin::Shl) {
                    (x << n) & m
                } else {
                    x >> n
                }
            }
            Ex::Bin(op, a, b) => {
                let (x, y) = (self.eval(a, c, v), self.eval(b, c, v));
                (match op {
                    Bin::Add => x.wrapping_add(y),
                    Bin::Sub => x.wrapping_sub(y),
                    Bin::And => x & y,
                    Bin::Or => x | y,
                    Bin::Xor => x ^ y,
                    _ => unreachable!(),
                }) & m
            }
            Ex::Cond(k, a, b) => {
                if self.eval(k, self.sw(k), v) != 0 {
                    self.eval(a, c, v)
                } else {
                    self.eval(b, c, v)
                }
            }
        }
    }

    /// Assignment: context is the wider of target and rhs, then truncated.
    fn assign_value(&self, target: usize, e: &Ex, v: &[u64]) -> u64 {
        let tw = self.widths[target];
        self.eval(e, tw.max(self.sw(e)), v) & mask(tw)
    }

    fn exec(&self, s: &St, v: &[u64], out: &mut Vec<(usize, u64)>) {
        match s {
            St::Nb(t, e) => out.push((*t, self.assign_value(*t, e, v))),
            St::If(c, a, b) => {
                if self.eval(c, self.sw(c), v) != 0 {
                    self.exec(a, v, out);
                } else if let Some(b) = b {
                    self.exec(b, v, out);
                }
            }
            St::Case(sel, arms, default) => {
                let k = self.sw(sel).max(self.w);
                let x = self.eval(sel, k, v);
                match arms.iter().find(|(label, _)| *label == x) {
                    Some((_, body)) => self.exec(body, v, out),
                    None => self.exec(default, v, out),
                }
            }
            St::Block(items) => items.iter().for_each(|i| self.exec(i, v, out)),
        }
    }

    /// Rows of every signal, clock pinned to 0.
    fn run(&self, init: &[u64], stim: &[Vec<u64>]) -> Result<Vec<Vec<u64>>, String> {
        let mut v = init.to_vec();
        let mut rows = Vec::new();
        for (t, inp) in stim.iter().enumerate() {
            for (k, &i) in self.inputs.iter().enumerate() {
                v[i] = inp[k];
            }
            let mut settled = false;
            for _ in 0..=self.assigns.len() + 1 {
                let mut changed = false;
                for (target, e) in &self.assigns {
                    let x = self.assign_value(*target, e, &v);
                    if v[*target] != x {
                        v[*target] = x;
                        changed = true;
                    }
                }
                if !changed {
                    settled = true;
                    break;
                }
            }
            if !settled {
                return Err(format!("no fixpoint at cycle {t}"));
            }
            rows.push(v.clone());
            let mut updates = Vec::new();
            for b in &self.blocks {
                self.exec(b, &v, &mut updates);
            }
            for (s, x) in updates {
                v[s] = x;
            }
        }
        Ok(rows)
    }

    fn expr_text(&self, e: &Ex) -> String {
        match e {
            Ex::Sig(s) => self.names[*s].clone(),
            Ex::Const(k) => format!("{}'d{k}", self.w),
            Ex::Un(op, a) => {
                let sym = match op {
                    Un::Not => "~",
                    Un::Neg => "-",
                    Un::LNot => "!",
                    Un::RAnd => "&",
                    Un::ROr => "|",
                    Un::RXor => "^",
                };
                format!("{sym}({})", self.expr_text(a))
            }
            Ex::Bin(op, a, b) => {
                let sym = match op {
                    Bin::Add => "+",
                    Bin::Sub => "-",
                    Bin::And => "&",
                    Bin::Or => "|",
                    Bin::Xor => "^",
                    Bin::Shl => "<<",
                    Bin::Shr => ">>",
                    Bin::Eq => "==",
                    Bin::Ne => "!=",
                    Bin::Lt => "<",
                    Bin::Ge => ">=",
                    Bin::LAnd => "&&",
                    Bin::LOr => "||",
                };
                format!("({}) {sym} ({})", self.expr_text(a), self.expr_text(b))
            }
            Ex::Cond(c, a, b) => format!("({}) ? ({}) : ({})", self.expr_text(c), self.expr_text(a), self.expr_text(b)),
        }
    }

    fn stmt_text(&self, s: &St, indent: usize, out: &mut String) {
        let pad = " ".repeat(indent);
        match s {
            St::Nb(t, e) => writeln!(out, "{pad}{} <= {};", self.names[*t], self.expr_text(e)).unwrap(),
            St::If(c, a, b) => {
                writeln!(out, "{pad}if ({})", self.expr_text(c)).unwrap();
                self.stmt_text(a, indent + 2, out);
                if let Some(b) = b {
                    writeln!(out, "{pad}else").unwrap();
                    self.stmt_text(b, indent + 2, out);
                }
            }
            St::Case(sel, arms, default) => {
                writeln!(out, "{pad}case ({})", self.expr_text(sel)).unwrap();
                for (label, body) in arms {
                    writeln!(out, "{pad}  {}'d{label}:", self.w).unwrap();
                    self.stmt_text(body, indent + 4, out);
                }
                writeln!(out, "{pad}  default:").unwrap();
                self.stmt_text(default, indent + 4, out);
                writeln!(out, "{pad}endcase").unwrap();
            }
            St::Block(items) => {
                writeln!(out, "{pad}begin").unwrap();
                for i in items {
                    self.stmt_text(i, indent + 2, out);
                }
                writeln!(out, "{pad}end").unwrap();
            }
        }
    }

    fn verilog(&self, outputs: &[usize], wires: &[usize]) -> String {
        let range = if self.w == 1 { String::new() } else { format!("[{}:0] ", self.w - 1) };
        let mut ports = vec!["input clk".to_string(), "input rst".to_string()];
        for &i in &self.inputs[1..] {
            ports.push(format!("input {range}{}", self.names[i]));
        }
        for &o in outputs {
            ports.push(format!("output {range}{}", self.names[o]));
        }
        let mut s = format!("module rnd({});\n", ports.join(", "));
        for &r in &self.regs {
            writeln!(s, "  reg {range}{};", self.names[r]).unwrap();
        }
        for &w in wires {
            writeln!(s, "  wire {range}{};", self.names[w]).unwrap();
        }
        for (t, e) in &self.assigns {
            writeln!(s, "  assign {} = {};", self.names[*t], self.expr_text(e)).unwrap();
        }
        for b in &self.blocks {
            s.push_str("  always @(posedge clk)\n");
            self.stmt_text(b, 4, &mut s);
        }
        s.push_str("endmodule\n");
        s
    }
}

fn random_expr(rng: &mut ChaCha8Rng, pool: &[usize], w: u32, depth: u32) -> Ex {
    if depth == 0 || rng.random_bool(0.3) {
        return if pool.is_empty() || rng.random_bool(0.2) {
            Ex::Const(rng.random_range(0..=mask(w)))
        } else {
            Ex::Sig(pool[rng.random_range(0..pool.len())])
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, pool, w, depth - 1));
    match rng.random_range(0..10) {
        0..=2 => {
            let op = [Un::Not, Un::Neg, Un::LNot, Un::RAnd, Un::ROr, Un::RXor][rng.random_range(0..6)];
            Ex::Un(op, sub(rng))
        }
        3..=8 => {
            let ops = [
                Bin::Add, Bin::Sub, Bin::And, Bin::Or, Bin::Xor, Bin::Shl, Bin::Shr, Bin::Eq, Bin::Ne, Bin::Lt, Bin::Ge,
                Bin::LAnd, Bin::LOr,
            ];
            let op = ops[rng.random_range(0..ops.len())];
            Ex::Bin(op, sub(rng), sub(rng))
        }
        _ => Ex::Cond(sub(rng), sub(rng), sub(rng)),
    }
}

fn random_stmt(rng: &mut ChaCha8Rng, target: usize, pool: &[usize], w: u32) -> St {
    let e = |rng: &mut ChaCha8Rng| random_expr(rng, pool, w, 3);
    match rng.random_range(0..3) {
        0 => St::Nb(target, e(rng)),
        1 => {
            let els = rng.random_bool(0.7).then(|| Box::new(St::Nb(target, e(rng))));
            St::If(e(rng), Box::new(St::Nb(target, e(rng))), els)
        }
        _ => {
            let mut labels: Vec<u64> = (0..=mask(w).min(7)).collect();
            labels.shuffle(rng);
            labels.truncate(rng.random_range(1..=3.min(labels.len())));
            let arms = labels.into_iter().map(|l| (l, St::Nb(target, e(rng)))).collect();
            St::Case(e(rng), arms, Box::new(St::Nb(target, e(rng))))
        }
    }
}

struct Generated {
    model: Model,
    text: String,
}

fn random_design(rng: &mut ChaCha8Rng) -> Generated {
    let w = rng.random_range(1..=8);
    let (ni, nr, nw, no) = (rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(0..=4), rng.random_range(1..=2));
    let mut names = vec!["clk".to_string(), "rst".to_string()];
    let mut widths = vec![1, 1];
    let mut add = |prefix: &str, n: usize, names: &mut Vec<String>| -> Vec<usize> {
        (0..n)
            .map(|k| {
                names.push(format!("{prefix}{k}"));
                widths.push(w);
                names.len() - 1
            })
            .collect()
    };
    let ins = add("i", ni, &mut names);
    let regs = add("r", nr, &mut names);
    let wires = add("w", nw, &mut names);
    let outs = add("o", no, &mut names);

    let mut pool: Vec<usize> = ins.iter().chain(&regs).copied().collect();
    let mut assigns = Vec::new();
    for &wi in &wires {
        assigns.push((wi, random_expr(rng, &pool, w, 3)));
        pool.push(wi);
    }
    for &o in &outs {
        assigns.push((o, random_expr(rng, &pool, w, 3)));
    }
    assigns.shuffle(rng);

    let mut order = regs.clone();
    order.shuffle(rng);
    let split = rng.random_range(1..=order.len());
    let mut blocks = Vec::new();
    for group in [&order[..split], &order[split..]] {
        if group.is_empty() {
            continue;
        }
        let reset = St::Block(group.iter().map(|&r| St::Nb(r, Ex::Const(rng.random_range(0..=mask(w))))).collect());
        let body = St::Block(group.iter().map(|&r| random_stmt(rng, r, &pool, w)).collect());
        blocks.push(St::If(Ex::Sig(1), Box::new(reset), Some(Box::new(body))));
    }

    let mut inputs = vec![1];
    inputs.extend(&ins);
    let model = Model { w, names, widths, inputs, assigns, blocks, regs };
    let text = model.verilog(&outs, &wires);
    Generated { model, text }
}

fn stimulus(model: &Model, rows: &[Vec<u64>]) -> Stimulus {
    let mut inputs = BTreeMap::new();
    for (k, &i) in model.inputs.iter().enumerate() {
        inputs.insert(model.names[i].clone(), rows.iter().map(|r| StimulusValue::Int(r[k])).collect());
    }
    Stimulus { cycles: rows.len(), inputs }
}

fn compare(label: &str, model: &Model, sim_src: &str, init: &[u64], rows: &[Vec<u64>]) -> Result<(), String> {
    let design = parse_verilog(sim_src).map_err(|e| format!("{label}: parse: {e}\n{sim_src}"))?;
    let initial: BTreeMap<String, u64> = model.regs.iter().map(|&r| (model.names[r].clone(), init[r])).collect();
    let sim = Simulator::new(&design, &SimOptions { initial }).map_err(|e| format!("{label}: {e}"))?;
    let trace = sim.run(&stimulus(model, rows), rows.len()).map_err(|e| format!("{label}: {e}"))?;
    let want = model.run(init, rows)?;
    for (t, row) in want.iter().enumerate() {
        for (s, name) in model.names.iter().enumerate() {
            let col = trace.index_of(name).ok_or_else(|| format!("{label}: `{name}` missing from trace"))?;
            let got = trace.value(t, col);
            ensure(got == Some(row[s]), || {
                format!("{label}: `{name}` at cycle {t}: simulator {got:?}, oracle {}\n{sim_src}", row[s])
            })?;
        }
    }
    Ok(())
}

fn swap() -> Result<(), String> {
    let src = "module s(input clk, output reg [3:0] a, output reg [3:0] b, output reg [3:0] c);\n always @(posedge clk) begin\n  a <= b;\n  b <= c;\n  c <= a;\n end\nendmodule";
    let d = parse_verilog(src).map_err(|e| e.to_string())?;
    let initial = BTreeMap::from([("a".into(), 1), ("b".into(), 2), ("c".into(), 3)]);
    let t = Simulator::new(&d, &SimOptions { initial }).map_err(|e| e.to_string())?.run(&Stimulus { cycles: 5, inputs: BTreeMap::new() }, 5).map_err(|e| e.to_string())?;
    let got: Vec<[Option<u64>; 3]> = (0..5).map(|i| [t.value(i, 1), t.value(i, 2), t.value(i, 3)]).collect();
    let want: Vec<[Option<u64>; 3]> = [[1, 2, 3], [2, 3, 1], [3, 1, 2], [1, 2, 3], [2, 3, 1]].iter().map(|r| r.map(Some)).collect();
    ensure(got == want, || format!("rotation: got {got:?}"))
}

fn counter() -> Result<(), String> {
    let src = "module c(input clk, input rst, input en, output reg [2:0] q, output wrap);\n assign wrap = en && q == 3'd7;\n always @(posedge clk)\n  if (rst) q <= 3'd0;\n  else if (en) q <= q + 3'd1;\nendmodule";
    let d = parse_verilog(src).map_err(|e| e.to_string())?;
    let rst = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0];
    let en = [0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1];
    let mut stim = Stimulus { cycles: rst.len(), inputs: BTreeMap::new() };
    stim.inputs.insert("rst".into(), rst.iter().map(|&v| StimulusValue::Int(v)).collect());
    stim.inputs.insert("en".into(), en.iter().map(|&v| StimulusValue::Int(v)).collect());
    let t = Simulator::new(&d, &SimOptions::default()).map_err(|e| e.to_string())?.run(&stim, rst.len()).map_err(|e| e.to_string())?;
    let q: Vec<Option<u64>> = t.column(t.index_of("q").unwrap()).collect();
    let wrap: Vec<Option<u64>> = t.column(t.index_of("wrap").unwrap()).collect();
    let mut want_q = vec![None, Some(0), Some(1), Some(2), Some(2), Some(3), Some(4), Some(5), Some(6), Some(7), Some(0), Some(1), Some(0)];
    want_q.truncate(rst.len());
    ensure(q == want_q, || format!("counter: got {q:?}"))?;
    let want_wrap: Vec<Option<u64>> = (0..rst.len()).map(|i| if i == 0 { Some(0) } else { Some((en[i] == 1 && want_q[i] == Some(7)) as u64) }).collect();
    ensure(wrap == want_wrap, || format!("wrap: got {wrap:?}"))
}

pub fn run() -> Result<String, String> {
    swap()?;
    counter()?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cycles = 0;
    for k in 0..DESIGNS {
        let g = random_design(&mut rng);
        let m = &g.model;
        let init: Vec<u64> = (0..m.names.len())
            .map(|s| if m.regs.contains(&s) { rng.random_range(0..=mask(m.w)) } else { 0 })
            .collect();
        let n = rng.random_range(1..=24);
        let rows: Vec<Vec<u64>> = (0..n)
            .map(|_| {
                m.inputs
                    .iter()
                    .map(|&i| if i == 1 { rng.random_bool(0.15) as u64 } else { rng.random_range(0..=mask(m.w)) })
                    .collect()
            })
            .collect();
        compare(&format!("design {k}"), m, &g.text, &init, &rows)?;
        cycles += n;
    }
    Ok(format!("swap, counter and {DESIGNS} random designs ({cycles} cycles) match"))
}
