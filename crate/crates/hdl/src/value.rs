// SPDX-License-Identifier: Apache-2.0
//! Bound (compiled) expressions and their X-aware evaluation.
//!
//! Values are whole-vector three-state: a known `u64` or X. Z reads as X.
//! Widths follow Verilog's context rules for the operator subset: arithmetic
//! and bitwise operands widen to the context width, comparisons widen to the
//! wider operand, logical and reduction operators are self-determined.

use crate::expr::{BinaryOp, Expr, SysFn, UnaryOp};

pub const MAX_WIDTH: u32 = 64;

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// `None` is X.
pub type Logic = Option<u64>;

/// Truth of a sampled boolean: X and zero are false.
pub fn truthy(v: Logic) -> bool {
    matches!(v, Some(x) if x != 0)
}

/// Source of sampled signal values. `back` counts cycles into the past.
pub trait Env {
    fn sample(&self, sig: usize, back: u32) -> Logic;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CExpr {
    pub width: u32,
    pub kind: CKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CKind {
    Sig(usize),
    /// `width` bits starting at `lsb`.
    Slice { sig: usize, lsb: u32, width: u32 },
    Const(u64),
    Unary(UnaryOp, Box<CExpr>),
    Binary(BinaryOp, Box<CExpr>, Box<CExpr>),
    Stable(Box<CExpr>),
    Rose(Box<CExpr>),
    Fell(Box<CExpr>),
    Onehot(Box<CExpr>),
    Countones(Box<CExpr>),
    Past(Box<CExpr>, u32),
    Cond(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Concat(Vec<CExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompileError {
    Unknown(String),
    SelectOutOfRange { name: String, index: u32, width: u32 },
    BitsArgNotSignal,
    TooWide(u32),
}

/// Resolves a name to (signal index, width).
pub trait Resolve {
    fn resolve(&self, name: &str) -> Option<(usize, u32)>;
}

impl<F: Fn(&str) -> Option<(usize, u32)>> Resolve for F {
    fn resolve(&self, name: &str) -> Option<(usize, u32)> {
        self(name)
    }
}

/// Self-determined width of an expression, or an error for unknown names.
pub fn self_width(e: &Expr, r: &impl Resolve) -> Result<u32, CompileError> {
    Ok(match e {
        Expr::Ident(n) => r.resolve(n).ok_or_else(|| CompileError::Unknown(n.clone()))?.1,
        Expr::Index { .. } => 1,
        Expr::Range { msb, lsb, .. } => msb.saturating_sub(*lsb) + 1,
        Expr::Lit(l) => l.width(),
        Expr::Unary(op, a) => match op {
            UnaryOp::BitNot | UnaryOp::Neg => self_width(a, r)?,
            _ => 1,
        },
        Expr::Binary(op, a, b) => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::BitXor => {
                self_width(a, r)?.max(self_width(b, r)?)
            }
            BinaryOp::Shl | BinaryOp::Shr => self_width(a, r)?,
            _ => 1,
        },
        Expr::Sys(f, _) => match f {
            SysFn::Bits | SysFn::Countones => 32,
            _ => 1,
        },
        Expr::Past(a, _) => self_width(a, r)?,
        Expr::Cond(_, a, b) => self_width(a, r)?.max(self_width(b, r)?),
        Expr::Concat(items) => {
            let mut w = 0;
            for i in items {
                w += self_width(i, r)?;
            }
            w
        }
    })
}

/// Compiles `e` in a context of at least `ctx` bits.
pub fn compile(e: &Expr, ctx: u32, r: &impl Resolve) -> Result<CExpr, CompileError> {
    let sw = self_width(e, r)?;
    if sw > MAX_WIDTH {
        return Err(CompileError::TooWide(sw));
    }
    let w = sw.max(ctx).min(MAX_WIDTH);
    let node = |kind| CExpr { width: w, kind };
    Ok(match e {
        Expr::Ident(n) => node(CKind::Sig(r.resolve(n).unwrap().0)),
        Expr::Index { name, index } => {
            let (sig, width) = r.resolve(name).ok_or_else(|| CompileError::Unknown(name.clone()))?;
            if *index >= width {
                return Err(CompileError::SelectOutOfRange { name: name.clone(), index: *index, width });
            }
            node(CKind::Slice { sig, lsb: *index, width: 1 })
        }
        Expr::Range { name, msb, lsb } => {
            let (sig, width) = r.resolve(name).ok_or_else(|| CompileError::Unknown(name.clone()))?;
            if *msb >= width || lsb > msb {
                let index = if *msb >= width { *msb } else { *lsb };
                return Err(CompileError::SelectOutOfRange { name: name.clone(), index, width });
            }
            node(CKind::Slice { sig, lsb: *lsb, width: msb - lsb + 1 })
        }
        Expr::Lit(l) => node(CKind::Const(l.value)),
        Expr::Unary(op, a) => {
            let a = match op {
                UnaryOp::BitNot | UnaryOp::Neg => compile(a, w, r)?,
                _ => compile(a, 0, r)?,
            };
            let width = match op {
                UnaryOp::BitNot | UnaryOp::Neg => w,
                _ => 1.max(ctx.min(MAX_WIDTH)),
            };
            CExpr { width, kind: CKind::Unary(*op, Box::new(a)) }
        }
        Expr::Binary(op, a, b) => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::BitXor => {
                node(CKind::Binary(*op, Box::new(compile(a, w, r)?), Box::new(compile(b, w, r)?)))
            }
            BinaryOp::Shl | BinaryOp::Shr => {
                node(CKind::Binary(*op, Box::new(compile(a, w, r)?), Box::new(compile(b, 0, r)?)))
            }
            _ if op.is_comparison() => {
                let inner = self_width(a, r)?.max(self_width(b, r)?);
                CExpr {
                    width: 1.max(ctx.min(MAX_WIDTH)),
                    kind: CKind::Binary(*op, Box::new(compile(a, inner, r)?), Box::new(compile(b, inner, r)?)),
                }
            }
            _ => CExpr {
                width: 1.max(ctx.min(MAX_WIDTH)),
                kind: CKind::Binary(*op, Box::new(compile(a, 0, r)?), Box::new(compile(b, 0, r)?)),
            },
        },
        Expr::Sys(f, a) => {
            if *f == SysFn::Bits {
                let Expr::Ident(n) = &**a else { return Err(CompileError::BitsArgNotSignal) };
                let (_, width) = r.resolve(n).ok_or_else(|| CompileError::Unknown(n.clone()))?;
                return Ok(node(CKind::Const(width as u64)));
            }
            let a = Box::new(compile(a, 0, r)?);
            node(match f {
                SysFn::Stable => CKind::Stable(a),
                SysFn::Rose => CKind::Rose(a),
                SysFn::Fell => CKind::Fell(a),
                SysFn::Onehot => CKind::Onehot(a),
                SysFn::Countones => CKind::Countones(a),
                SysFn::Bits => unreachable!(),
            })
        }
        Expr::Past(a, k) => node(CKind::Past(Box::new(compile(a, w, r)?), *k)),
        Expr::Cond(c, a, b) => node(CKind::Cond(
            Box::new(compile(c, 0, r)?),
            Box::new(compile(a, w, r)?),
            Box::new(compile(b, w, r)?),
        )),
        Expr::Concat(items) => {
            let parts = items.iter().map(|i| compile(i, 0, r)).collect::<Result<Vec<_>, _>>()?;
            node(CKind::Concat(parts))
        }
    })
}

impl CExpr {
    pub fn eval(&self, env: &impl Env, back: u32) -> Logic {
        let m = mask(self.width);
        match &self.kind {
            CKind::Sig(s) => env.sample(*s, back).map(|v| v & m),
            CKind::Slice { sig, lsb, width } => env.sample(*sig, back).map(|v| (v >> lsb) & mask(*width)),
            CKind::Const(v) => Some(v & m),
            CKind::Unary(op, a) => {
                let v = a.eval(env, back)?;
                let aw = mask(a.width);
                Some(match op {
                    UnaryOp::LogNot => (v == 0) as u64,
                    UnaryOp::BitNot => !v & m,
                    UnaryOp::Neg => v.wrapping_neg() & m,
                    UnaryOp::RedAnd => (v & aw == aw) as u64,
                    UnaryOp::RedOr => (v != 0) as u64,
                    UnaryOp::RedXor => (v.count_ones() & 1) as u64,
                })
            }
            CKind::Binary(op, a, b) => eval_binary(*op, a.eval(env, back), b.eval(env, back), m),
            CKind::Stable(a) => {
                let (cur, prev) = (a.eval(env, back)?, a.eval(env, back + 1)?);
                Some((cur == prev) as u64)
            }
            CKind::Rose(a) => {
                let (cur, prev) = (a.eval(env, back)? & 1, a.eval(env, back + 1)? & 1);
                Some((prev == 0 && cur == 1) as u64)
            }
            CKind::Fell(a) => {
                let (cur, prev) = (a.eval(env, back)? & 1, a.eval(env, back + 1)? & 1);
                Some((prev == 1 && cur == 0) as u64)
            }
            CKind::Onehot(a) => Some((a.eval(env, back)?.count_ones() == 1) as u64),
            CKind::Countones(a) => Some(a.eval(env, back)?.count_ones() as u64 & m),
            CKind::Past(a, k) => a.eval(env, back + k).map(|v| v & m),
            CKind::Cond(c, a, b) => match c.eval(env, back) {
                Some(0) => b.eval(env, back),
                Some(_) => a.eval(env, back),
                None => match (a.eval(env, back), b.eval(env, back)) {
                    (Some(x), Some(y)) if x == y => Some(x),
                    _ => None,
                },
            },
            CKind::Concat(parts) => {
                let mut acc = 0u64;
                for p in parts {
                    let v = p.eval(env, back)?;
                    acc = if p.width >= 64 { v } else { (acc << p.width) | v };
                }
                Some(acc & m)
            }
        }
    }

    /// Signals read by this expression (including `$past` operands).
    pub fn for_each_signal(&self, f: &mut impl FnMut(usize)) {
        match &self.kind {
            CKind::Sig(s) | CKind::Slice { sig: s, .. } => f(*s),
            CKind::Const(_) => {}
            CKind::Unary(_, a)
            | CKind::Stable(a)
            | CKind::Rose(a)
            | CKind::Fell(a)
            | CKind::Onehot(a)
            | CKind::Countones(a)
            | CKind::Past(a, _) => a.for_each_signal(f),
            CKind::Binary(_, a, b) => {
                a.for_each_signal(f);
                b.for_each_signal(f);
            }
            CKind::Cond(c, a, b) => {
                c.for_each_signal(f);
                a.for_each_signal(f);
                b.for_each_signal(f);
            }
            CKind::Concat(parts) => parts.iter().for_each(|p| p.for_each_signal(f)),
        }
    }

    /// Deepest `$past`/sampled-value lookback, in cycles.
    pub fn lookback(&self) -> u32 {
        match &self.kind {
            CKind::Sig(_) | CKind::Slice { .. } | CKind::Const(_) => 0,
            CKind::Unary(_, a) | CKind::Onehot(a) | CKind::Countones(a) => a.lookback(),
            CKind::Stable(a) | CKind::Rose(a) | CKind::Fell(a) => a.lookback() + 1,
            CKind::Past(a, k) => a.lookback() + k,
            CKind::Binary(_, a, b) => a.lookback().max(b.lookback()),
            CKind::Cond(c, a, b) => c.lookback().max(a.lookback()).max(b.lookback()),
            CKind::Concat(parts) => parts.iter().map(|p| p.lookback()).max().unwrap_or(0),
        }
    }
}

fn eval_binary(op: BinaryOp, a: Logic, b: Logic, m: u64) -> Logic {
    match (op, a, b) {
        // identity-safe cases
        (BinaryOp::BitAnd, Some(0), None) | (BinaryOp::BitAnd, None, Some(0)) => Some(0),
        (BinaryOp::BitOr, Some(x), None) | (BinaryOp::BitOr, None, Some(x)) if x & m == m => Some(m),
        (BinaryOp::LogAnd, Some(0), None) | (BinaryOp::LogAnd, None, Some(0)) => Some(0),
        (BinaryOp::LogOr, Some(x), None) | (BinaryOp::LogOr, None, Some(x)) if x != 0 => Some(1),
        (_, Some(x), Some(y)) => Some(match op {
            BinaryOp::Add => x.wrapping_add(y) & m,
            BinaryOp::Sub => x.wrapping_sub(y) & m,
            BinaryOp::Shl => {
                if y >= 64 {
                    0
                } else {
                    (x << y) & m
                }
            }
            BinaryOp::Shr => {
                if y >= 64 {
                    0
                } else {
                    (x >> y) & m
                }
            }
            BinaryOp::Lt => (x < y) as u64,
            BinaryOp::Le => (x <= y) as u64,
            BinaryOp::Gt => (x > y) as u64,
            BinaryOp::Ge => (x >= y) as u64,
            BinaryOp::Eq => (x == y) as u64,
            BinaryOp::Ne => (x != y) as u64,
            BinaryOp::BitAnd => x & y & m,
            BinaryOp::BitXor => (x ^ y) & m,
            BinaryOp::BitOr => (x | y) & m,
            BinaryOp::LogAnd => (x != 0 && y != 0) as u64,
            BinaryOp::LogOr => (x != 0 || y != 0) as u64,
        }),
        _ => None,
    }
}
