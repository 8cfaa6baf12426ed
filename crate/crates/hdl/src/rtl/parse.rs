// SPDX-License-Identifier: Apache-2.0
//! Verilog-subset parser and structural checks.

use std::collections::HashMap;

use super::{AsyncReset, CaseArm, ContAssign, LValue, Process, RtlDesign, RtlError, Stmt, Storage, Trigger};
use crate::expr::{Cursor, Dialect, Expr, ParseError, ParseErrorKind};
use crate::lex::{tokenize, Literal, Pos, Tok};
use crate::signal::{Hierarchy, SignalDefinition, SignalKind};
use crate::sva::Edge;
use crate::value::{compile, Env, Logic};

impl From<ParseError> for RtlError {
    fn from(e: ParseError) -> Self {
        let Pos { line, col } = e.pos;
        match e.kind {
            ParseErrorKind::Syntax { .. } => RtlError::Syntax { line, col, message: e.message },
            ParseErrorKind::Unsupported => RtlError::UnsupportedConstruct { line, col, construct: e.message },
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> RtlError {
    RtlError::Syntax { line: pos.line, col: pos.col, message: message.into() }
}

fn unsupported(pos: Pos, construct: impl Into<String>) -> RtlError {
    RtlError::UnsupportedConstruct { line: pos.line, col: pos.col, construct: construct.into() }
}

const UNSUPPORTED_ITEMS: &[&str] = &[
    "initial", "generate", "genvar", "function", "task", "integer", "real", "time", "specify", "defparam",
    "always_ff", "always_comb", "always_latch", "logic", "tri", "supply0", "supply1", "event", "primitive",
];

const UNSUPPORTED_STMTS: &[&str] = &[
    "for", "while", "repeat", "forever", "casez", "casex", "fork", "wait", "disable", "assign", "deassign", "force",
    "release",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Input,
    Output,
    Inout,
}

#[derive(Clone)]
struct Decl {
    dir: Option<Dir>,
    storage: Option<Storage>,
    width: Option<u32>,
    pos: Pos,
}

struct RawLhs {
    name: String,
    select: Option<(u32, u32)>,
    pos: Pos,
}

enum RawStmt {
    Block(Vec<RawStmt>),
    If { cond: Expr, then: Box<RawStmt>, els: Option<Box<RawStmt>>, pos: Pos },
    Case { sel: Expr, arms: Vec<(Vec<Expr>, RawStmt)>, default: Option<Box<RawStmt>>, pos: Pos },
    Assign { lhs: RawLhs, rhs: Expr, nonblocking: bool, pos: Pos },
    Null,
}

enum RawTrigger {
    Comb,
    Edges(Vec<(Edge, String, Pos)>),
}

struct RawProcess {
    trigger: RawTrigger,
    body: RawStmt,
    pos: Pos,
}

struct Parser<'t> {
    c: Cursor<'t>,
    name: String,
    ports: Vec<(String, Pos)>,
    decls: HashMap<String, Decl>,
    order: Vec<String>,
    assigns: Vec<(RawLhs, Expr, Pos)>,
    processes: Vec<RawProcess>,
}

/// Parses one flat module.
pub fn parse_verilog(text: &str) -> Result<RtlDesign, RtlError> {
    let toks = tokenize(text).map_err(ParseError::from)?;
    let mut p = Parser {
        c: Cursor::new(&toks, Dialect::Verilog),
        name: String::new(),
        ports: Vec::new(),
        decls: HashMap::new(),
        order: Vec::new(),
        assigns: Vec::new(),
        processes: Vec::new(),
    };
    p.module()?;
    p.finish()
}

struct NoEnv;

impl Env for NoEnv {
    fn sample(&self, _: usize, _: u32) -> Logic {
        None
    }
}

impl<'t> Parser<'t> {
    fn pos(&self) -> Pos {
        self.c.pos()
    }

    fn module(&mut self) -> Result<(), RtlError> {
        if self.c.is_keyword("macromodule") {
            return Err(unsupported(self.pos(), "macromodule"));
        }
        self.c.expect_keyword("module")?;
        self.name = self.c.expect_ident()?;
        if self.c.eat(&Tok::Hash) {
            self.c.expect(&Tok::LParen, "`(`")?;
            loop {
                self.c.eat_keyword("parameter");
                self.constant_decl()?;
                if !self.c.eat(&Tok::Comma) {
                    break;
                }
            }
            self.c.expect(&Tok::RParen, "`)`")?;
        }
        if self.c.eat(&Tok::LParen) {
            if !matches!(self.c.peek(), Tok::RParen) {
                self.port_list()?;
            }
            self.c.expect(&Tok::RParen, "`)`")?;
        }
        self.c.expect(&Tok::Semi, "`;`")?;
        while !self.c.eat_keyword("endmodule") {
            if self.c.at_eof() {
                return Err(self.c.unexpected(&["endmodule"]).into());
            }
            self.item()?;
        }
        if self.c.is_keyword("module") {
            return Err(unsupported(self.pos(), "more than one module"));
        }
        if !self.c.at_eof() {
            return Err(self.c.unexpected(&["end of input"]).into());
        }
        Ok(())
    }

    fn direction(&mut self) -> Option<Dir> {
        for (kw, d) in [("input", Dir::Input), ("output", Dir::Output), ("inout", Dir::Inout)] {
            if self.c.eat_keyword(kw) {
                return Some(d);
            }
        }
        None
    }

    fn port_list(&mut self) -> Result<(), RtlError> {
        let ansi = matches!(self.c.peek(), Tok::Ident(s) if s == "input" || s == "output" || s == "inout");
        if !ansi {
            loop {
                let pos = self.pos();
                let name = self.c.expect_ident()?;
                self.ports.push((name, pos));
                if !self.c.eat(&Tok::Comma) {
                    return Ok(());
                }
            }
        }
        let mut cur: Option<(Dir, Option<Storage>, u32)> = None;
        loop {
            if let Some(dir) = self.direction() {
                let storage = self.storage_kw();
                let width = self.range()?;
                cur = Some((dir, storage, width));
            }
            let Some((dir, storage, width)) = cur else {
                return Err(self.c.unexpected(&["port direction"]).into());
            };
            let pos = self.pos();
            let name = self.c.expect_ident()?;
            self.declare(&name, Decl { dir: Some(dir), storage, width: Some(width), pos })?;
            self.ports.push((name, pos));
            if !self.c.eat(&Tok::Comma) {
                return Ok(());
            }
        }
    }

    fn storage_kw(&mut self) -> Option<Storage> {
        if self.c.eat_keyword("wire") {
            Some(Storage::Wire)
        } else if self.c.eat_keyword("reg") {
            Some(Storage::Reg)
        } else {
            None
        }
    }

    fn const_expr(&mut self) -> Result<u64, RtlError> {
        let pos = self.pos();
        let e = self.c.parse_expr()?;
        let ce = compile(&e, 0, &|_: &str| None).map_err(|_| syntax(pos, "expected a constant expression"))?;
        ce.eval(&NoEnv, 0).ok_or_else(|| syntax(pos, "constant expression is X"))
    }

    /// Optional `[msb:0]`; returns the width.
    fn range(&mut self) -> Result<u32, RtlError> {
        if !self.c.eat(&Tok::LBracket) {
            return Ok(1);
        }
        let pos = self.pos();
        let msb = self.const_expr()?;
        self.c.expect(&Tok::Colon, "`:`")?;
        let lsb = self.const_expr()?;
        self.c.expect(&Tok::RBracket, "`]`")?;
        if lsb != 0 {
            return Err(unsupported(pos, "range with nonzero lsb"));
        }
        if msb >= 64 {
            return Err(unsupported(pos, "vector wider than 64 bits"));
        }
        Ok(msb as u32 + 1)
    }

    fn constant_decl(&mut self) -> Result<(), RtlError> {
        if matches!(self.c.peek(), Tok::LBracket) {
            self.range()?;
        }
        let name = self.c.expect_ident()?;
        self.c.expect(&Tok::Assign, "`=`")?;
        let v = self.const_expr()?;
        self.c.constants.insert(name, Literal::decimal(v));
        Ok(())
    }

    fn declare(&mut self, name: &str, d: Decl) -> Result<(), RtlError> {
        match self.decls.get_mut(name) {
            None => {
                self.order.push(name.to_string());
                self.decls.insert(name.to_string(), d);
                Ok(())
            }
            Some(prev) => {
                // `output q; reg [3:0] q;` style completion of a port declaration
                let redeclared = (prev.dir.is_some() && d.dir.is_some())
                    || (prev.storage.is_some() && d.storage.is_some())
                    || (prev.dir.is_none() && d.dir.is_none());
                if redeclared {
                    return Err(RtlError::Declaration {
                        line: d.pos.line,
                        col: d.pos.col,
                        message: format!("`{name}` declared twice"),
                    });
                }
                if let (Some(a), Some(b)) = (prev.width, d.width) {
                    if a != b {
                        return Err(RtlError::Declaration {
                            line: d.pos.line,
                            col: d.pos.col,
                            message: format!("`{name}` declared with widths {a} and {b}"),
                        });
                    }
                }
                prev.dir = prev.dir.or(d.dir);
                prev.storage = prev.storage.or(d.storage);
                prev.width = prev.width.or(d.width);
                Ok(())
            }
        }
    }

    fn item(&mut self) -> Result<(), RtlError> {
        let pos = self.pos();
        let kw = match self.c.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.c.unexpected(&["module item"]).into()),
        };
        if UNSUPPORTED_ITEMS.contains(&kw.as_str()) {
            return Err(unsupported(pos, format!("`{kw}`")));
        }
        match kw.as_str() {
            "input" | "output" | "inout" => {
                let dir = self.direction();
                let storage = self.storage_kw();
                let width = self.range()?;
                loop {
                    let pos = self.pos();
                    let name = self.c.expect_ident()?;
                    self.declare(&name, Decl { dir, storage, width: Some(width), pos })?;
                    if !self.c.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.c.expect(&Tok::Semi, "`;`")?;
            }
            "wire" | "reg" => {
                let storage = self.storage_kw();
                if self.c.is_keyword("signed") {
                    return Err(unsupported(self.pos(), "signed nets"));
                }
                let width = self.range()?;
                loop {
                    let pos = self.pos();
                    let name = self.c.expect_ident()?;
                    if matches!(self.c.peek(), Tok::LBracket) {
                        return Err(unsupported(self.pos(), "memory arrays"));
                    }
                    self.declare(&name, Decl { dir: None, storage, width: Some(width), pos })?;
                    if self.c.eat(&Tok::Assign) {
                        if storage == Some(Storage::Reg) {
                            return Err(unsupported(pos, "reg initializer"));
                        }
                        let rhs = self.c.parse_expr()?;
                        self.assigns.push((RawLhs { name, select: None, pos }, rhs, pos));
                    }
                    if !self.c.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.c.expect(&Tok::Semi, "`;`")?;
            }
            "parameter" | "localparam" => {
                self.c.bump();
                loop {
                    self.constant_decl()?;
                    if !self.c.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.c.expect(&Tok::Semi, "`;`")?;
            }
            "assign" => {
                self.c.bump();
                loop {
                    let lhs = self.lvalue()?;
                    let pos = lhs.pos;
                    self.c.expect(&Tok::Assign, "`=`")?;
                    let rhs = self.c.parse_expr()?;
                    self.assigns.push((lhs, rhs, pos));
                    if !self.c.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.c.expect(&Tok::Semi, "`;`")?;
            }
            "always" => {
                self.c.bump();
                let trigger = self.sensitivity()?;
                let body = self.stmt()?;
                self.processes.push(RawProcess { trigger, body, pos });
            }
            _ => {
                if matches!(self.c.peek_at(1), Tok::Ident(_) | Tok::Hash) {
                    return Err(unsupported(pos, "module instantiation"));
                }
                return Err(self.c.unexpected(&["module item"]).into());
            }
        }
        Ok(())
    }

    fn sensitivity(&mut self) -> Result<RawTrigger, RtlError> {
        if !matches!(self.c.peek(), Tok::At) {
            return Err(unsupported(self.pos(), "always block without an event control"));
        }
        self.c.bump();
        if self.c.eat(&Tok::Star) {
            return Ok(RawTrigger::Comb);
        }
        self.c.expect(&Tok::LParen, "`(`")?;
        if self.c.eat(&Tok::Star) {
            self.c.expect(&Tok::RParen, "`)`")?;
            return Ok(RawTrigger::Comb);
        }
        let mut edges = Vec::new();
        let mut levels = 0;
        loop {
            let pos = self.pos();
            let edge = if self.c.eat_keyword("posedge") {
                Some(Edge::Posedge)
            } else if self.c.eat_keyword("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let name = self.c.expect_ident()?;
            match edge {
                Some(e) => edges.push((e, name, pos)),
                None => levels += 1,
            }
            if !(self.c.eat_keyword("or") || self.c.eat(&Tok::Comma)) {
                break;
            }
        }
        let close = self.pos();
        self.c.expect(&Tok::RParen, "`)`")?;
        match (edges.len(), levels) {
            (0, _) => Ok(RawTrigger::Comb),
            (1 | 2, 0) => Ok(RawTrigger::Edges(edges)),
            (_, 0) => Err(unsupported(close, "more than one asynchronous control")),
            _ => Err(unsupported(close, "mixed edge and level event control")),
        }
    }

    fn lvalue(&mut self) -> Result<RawLhs, RtlError> {
        let pos = self.pos();
        if matches!(self.c.peek(), Tok::LBrace) {
            return Err(unsupported(pos, "concatenation on the left-hand side"));
        }
        let name = self.c.expect_ident()?;
        let select = if self.c.eat(&Tok::LBracket) {
            let msb = self.c.expect_uint()?;
            let lsb = if self.c.eat(&Tok::Colon) { self.c.expect_uint()? } else { msb };
            self.c.expect(&Tok::RBracket, "`]`")?;
            Some((msb, lsb))
        } else {
            None
        };
        Ok(RawLhs { name, select, pos })
    }

    fn stmt(&mut self) -> Result<RawStmt, RtlError> {
        let pos = self.pos();
        if self.c.eat(&Tok::Semi) {
            return Ok(RawStmt::Null);
        }
        if matches!(self.c.peek(), Tok::Hash | Tok::At) {
            return Err(unsupported(pos, "procedural timing control"));
        }
        if matches!(self.c.peek(), Tok::SysIdent(_)) {
            return Err(unsupported(pos, "system task"));
        }
        let kw = match self.c.peek() {
            Tok::Ident(s) => s.clone(),
            Tok::LBrace => return Err(unsupported(pos, "concatenation on the left-hand side")),
            _ => return Err(self.c.unexpected(&["statement"]).into()),
        };
        if UNSUPPORTED_STMTS.contains(&kw.as_str()) {
            return Err(unsupported(pos, format!("`{kw}` statement")));
        }
        match kw.as_str() {
            "begin" => {
                self.c.bump();
                if self.c.eat(&Tok::Colon) {
                    self.c.expect_ident()?;
                }
                let mut items = Vec::new();
                while !self.c.eat_keyword("end") {
                    if self.c.at_eof() {
                        return Err(self.c.unexpected(&["end"]).into());
                    }
                    items.push(self.stmt()?);
                }
                Ok(RawStmt::Block(items))
            }
            "if" => {
                self.c.bump();
                self.c.expect(&Tok::LParen, "`(`")?;
                let cond = self.c.parse_expr()?;
                self.c.expect(&Tok::RParen, "`)`")?;
                let then = Box::new(self.stmt()?);
                let els = if self.c.eat_keyword("else") { Some(Box::new(self.stmt()?)) } else { None };
                Ok(RawStmt::If { cond, then, els, pos })
            }
            "case" => {
                self.c.bump();
                self.c.expect(&Tok::LParen, "`(`")?;
                let sel = self.c.parse_expr()?;
                self.c.expect(&Tok::RParen, "`)`")?;
                let mut arms = Vec::new();
                let mut default = None;
                while !self.c.eat_keyword("endcase") {
                    if self.c.at_eof() {
                        return Err(self.c.unexpected(&["endcase"]).into());
                    }
                    if self.c.is_keyword("default") {
                        let dpos = self.pos();
                        self.c.bump();
                        self.c.eat(&Tok::Colon);
                        if default.is_some() {
                            return Err(syntax(dpos, "duplicate default arm"));
                        }
                        default = Some(Box::new(self.stmt()?));
                        continue;
                    }
                    let mut labels = vec![self.c.parse_expr()?];
                    while self.c.eat(&Tok::Comma) {
                        labels.push(self.c.parse_expr()?);
                    }
                    self.c.expect(&Tok::Colon, "`:`")?;
                    arms.push((labels, self.stmt()?));
                }
                Ok(RawStmt::Case { sel, arms, default, pos })
            }
            _ => {
                let lhs = self.lvalue()?;
                let nonblocking = match self.c.peek() {
                    Tok::Assign => false,
                    Tok::Le => true,
                    _ => return Err(self.c.unexpected(&["`=`", "`<=`"]).into()),
                };
                self.c.bump();
                if matches!(self.c.peek(), Tok::Hash | Tok::At) {
                    return Err(unsupported(self.pos(), "intra-assignment timing control"));
                }
                let rhs = self.c.parse_expr()?;
                self.c.expect(&Tok::Semi, "`;`")?;
                Ok(RawStmt::Assign { lhs, rhs, nonblocking, pos })
            }
        }
    }

    fn finish(self) -> Result<RtlDesign, RtlError> {
        let Parser { name, ports, mut decls, order, assigns, processes, .. } = self;
        // every port must have a direction; undirected port-list names are errors
        let mut names: Vec<String> = Vec::new();
        for (p, pos) in &ports {
            let Some(d) = decls.get(p) else {
                return Err(RtlError::Declaration {
                    line: pos.line,
                    col: pos.col,
                    message: format!("port `{p}` has no direction declaration"),
                });
            };
            if d.dir.is_none() {
                return Err(RtlError::Declaration {
                    line: pos.line,
                    col: pos.col,
                    message: format!("port `{p}` has no direction declaration"),
                });
            }
            if names.contains(p) {
                return Err(RtlError::Declaration { line: pos.line, col: pos.col, message: format!("port `{p}` listed twice") });
            }
            names.push(p.clone());
        }
        for n in &order {
            let d = &decls[n];
            if d.dir.is_some() && !names.contains(n) {
                return Err(RtlError::Declaration {
                    line: d.pos.line,
                    col: d.pos.col,
                    message: format!("`{n}` has a direction but is not in the port list"),
                });
            }
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        let mut signals = Vec::with_capacity(names.len());
        let mut storage = Vec::with_capacity(names.len());
        for n in &names {
            let d = decls.remove(n).expect("declared");
            let st = d.storage.unwrap_or(Storage::Wire);
            let kind = match (d.dir, st) {
                (Some(Dir::Input), _) => SignalKind::Input,
                (Some(Dir::Output), _) => SignalKind::Output,
                (Some(Dir::Inout), _) => SignalKind::Inout,
                (None, Storage::Reg) => SignalKind::Reg,
                (None, Storage::Wire) => SignalKind::Wire,
            };
            if d.dir == Some(Dir::Input) && st == Storage::Reg {
                return Err(RtlError::Declaration {
                    line: d.pos.line,
                    col: d.pos.col,
                    message: format!("input `{n}` declared as reg"),
                });
            }
            let hierarchy = if d.dir.is_some() { Hierarchy::IoPort } else { Hierarchy::Internal };
            signals.push(SignalDefinition::new(n, d.width.unwrap_or(1), kind, hierarchy));
            storage.push(st);
        }
        let r = Resolver { signals: &signals };

        let mut driver: Vec<Option<Pos>> = vec![None; signals.len()];
        let mut claim = |sig: usize, pos: Pos, owner: Pos| -> Result<(), RtlError> {
            match driver[sig] {
                Some(prev) if prev != owner => Err(RtlError::MultipleDrivers {
                    line: pos.line,
                    col: pos.col,
                    name: signals[sig].name.clone(),
                }),
                _ => {
                    driver[sig] = Some(owner);
                    Ok(())
                }
            }
        };

        let mut out_assigns = Vec::new();
        for (lhs, rhs, pos) in assigns {
            let lv = r.lvalue(&lhs)?;
            r.check_expr(&rhs, pos)?;
            if storage[lv.sig] == Storage::Reg || signals[lv.sig].kind == SignalKind::Input {
                return Err(RtlError::DriverKind {
                    line: pos.line,
                    col: pos.col,
                    name: lv.name.clone(),
                    message: "continuous assignment target must be a wire".into(),
                });
            }
            claim(lv.sig, pos, pos)?;
            out_assigns.push(ContAssign { lhs: lv, rhs, pos });
        }

        let mut out_procs = Vec::new();
        for p in processes {
            let trigger = match &p.trigger {
                RawTrigger::Comb => Trigger::Combinational,
                RawTrigger::Edges(edges) => r.clocked_trigger(edges, &p.body)?,
            };
            let clocked = matches!(trigger, Trigger::Clocked { .. });
            let body = r.stmt(p.body, clocked, &storage, &mut |sig, pos| claim(sig, pos, p.pos))?;
            out_procs.push(Process { trigger, body, pos: p.pos });
        }
        Ok(RtlDesign { name, signals, storage, processes: out_procs, assigns: out_assigns })
    }
}

struct Resolver<'a> {
    signals: &'a [SignalDefinition],
}

impl Resolver<'_> {
    fn find(&self, name: &str) -> Option<(usize, u32)> {
        self.signals.iter().position(|s| s.name == name).map(|i| (i, self.signals[i].width))
    }

    fn check_expr(&self, e: &Expr, pos: Pos) -> Result<(), RtlError> {
        for n in e.signals() {
            if self.find(n).is_none() {
                return Err(RtlError::Undeclared { line: pos.line, col: pos.col, name: n.to_string() });
            }
        }
        compile(e, 0, &|n: &str| self.find(n)).map_err(|err| syntax(pos, format!("{err:?}")))?;
        Ok(())
    }

    fn lvalue(&self, l: &RawLhs) -> Result<LValue, RtlError> {
        let (sig, width) = self.find(&l.name).ok_or_else(|| RtlError::Undeclared {
            line: l.pos.line,
            col: l.pos.col,
            name: l.name.clone(),
        })?;
        if let Some((msb, lsb)) = l.select {
            if msb >= width || lsb > msb {
                return Err(syntax(l.pos, format!("select [{msb}:{lsb}] out of range for `{}`", l.name)));
            }
        }
        Ok(LValue { sig, name: l.name.clone(), select: l.select })
    }

    /// Picks clock and asynchronous reset among the edge events. The reset is
    /// the event tested by the body's outermost `if`.
    fn clocked_trigger(&self, edges: &[(Edge, String, Pos)], body: &RawStmt) -> Result<Trigger, RtlError> {
        let mut ids = Vec::new();
        for (edge, name, pos) in edges {
            let (sig, _) = self
                .find(name)
                .ok_or_else(|| RtlError::Undeclared { line: pos.line, col: pos.col, name: name.clone() })?;
            ids.push((*edge, sig));
        }
        if ids.len() == 1 {
            return Ok(Trigger::Clocked { edge: ids[0].0, clock: ids[0].1, reset: None });
        }
        let mut top = body;
        while let RawStmt::Block(items) = top {
            match items.as_slice() {
                [one] => top = one,
                _ => break,
            }
        }
        let tested: Vec<&str> = match top {
            RawStmt::If { cond, .. } => cond.signals(),
            _ => Vec::new(),
        };
        let reset_idx = if tested.contains(&edges[1].1.as_str()) {
            1
        } else if tested.contains(&edges[0].1.as_str()) {
            0
        } else {
            1
        };
        let (redge, rsig) = ids[reset_idx];
        let (cedge, csig) = ids[1 - reset_idx];
        Ok(Trigger::Clocked { edge: cedge, clock: csig, reset: Some(AsyncReset { edge: redge, sig: rsig }) })
    }

    fn stmt(
        &self,
        s: RawStmt,
        clocked: bool,
        storage: &[Storage],
        claim: &mut impl FnMut(usize, Pos) -> Result<(), RtlError>,
    ) -> Result<Stmt, RtlError> {
        Ok(match s {
            RawStmt::Null => Stmt::Null,
            RawStmt::Block(items) => Stmt::Block(
                items.into_iter().map(|i| self.stmt(i, clocked, storage, claim)).collect::<Result<_, _>>()?,
            ),
            RawStmt::If { cond, then, els, pos } => {
                self.check_expr(&cond, pos)?;
                Stmt::If {
                    cond,
                    then: Box::new(self.stmt(*then, clocked, storage, claim)?),
                    els: match els {
                        Some(e) => Some(Box::new(self.stmt(*e, clocked, storage, claim)?)),
                        None => None,
                    },
                }
            }
            RawStmt::Case { sel, arms, default, pos } => {
                self.check_expr(&sel, pos)?;
                let mut out = Vec::new();
                for (labels, body) in arms {
                    for l in &labels {
                        self.check_expr(l, pos)?;
                    }
                    out.push(CaseArm { labels, body: self.stmt(body, clocked, storage, claim)? });
                }
                let default = match default {
                    Some(d) => Some(Box::new(self.stmt(*d, clocked, storage, claim)?)),
                    None => None,
                };
                Stmt::Case { sel, arms: out, default }
            }
            RawStmt::Assign { lhs, rhs, nonblocking, pos } => {
                if clocked && !nonblocking {
                    return Err(RtlError::MixedAssignDiscipline {
                        line: pos.line,
                        col: pos.col,
                        message: "blocking assignment in a clocked process".into(),
                    });
                }
                if !clocked && nonblocking {
                    return Err(RtlError::MixedAssignDiscipline {
                        line: pos.line,
                        col: pos.col,
                        message: "nonblocking assignment in a combinational process".into(),
                    });
                }
                let lv = self.lvalue(&lhs)?;
                self.check_expr(&rhs, pos)?;
                if storage[lv.sig] != Storage::Reg {
                    return Err(RtlError::DriverKind {
                        line: pos.line,
                        col: pos.col,
                        name: lv.name.clone(),
                        message: "procedural assignment target must be a reg".into(),
                    });
                }
                claim(lv.sig, pos)?;
                Stmt::Assign { lhs: lv, rhs, nonblocking, pos }
            }
        })
    }
}
