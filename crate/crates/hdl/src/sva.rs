// SPDX-License-Identifier: Apache-2.0
//! Concurrent-assertion subset of SVA: parser, canonical printer and binder.
//!
//! ```text
//! assertion := "assert" "property" "(" clocking [disable] seq ")" ";"
//! clocking  := "@(" ("posedge"|"negedge") ident ")"
//! disable   := "disable" "iff" "(" boolexpr ")"
//! seq       := boolseq [ ("|->"|"|=>") boolseq ]
//! boolseq   := delayitem { delayitem }
//! delayitem := [ "##" (int | "[" int ":" (int|"$") "]") ] boolexpr
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Cursor, Dialect, Expr, ParseError, ParseErrorKind};
use crate::lex::{tokenize, Pos, Tok};
use crate::signal::SignalDefinition;
use crate::value::{compile, CExpr, CompileError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Posedge,
    Negedge,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Edge::Posedge => "posedge",
            Edge::Negedge => "negedge",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clocking {
    pub edge: Edge,
    pub clock: String,
}

/// `##min` or `##[min:max]`; `max == None` is the unbounded `$`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Delay {
    pub min: u32,
    pub max: Option<u32>,
}

impl Delay {
    pub fn fixed(n: u32) -> Self {
        Delay { min: n, max: Some(n) }
    }

    pub fn range(min: u32, max: u32) -> Self {
        Delay { min, max: Some(max) }
    }

    pub fn is_unbounded(&self) -> bool {
        self.max.is_none()
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(max) if max == self.min => write!(f, "##{max}"),
            Some(max) => write!(f, "##[{}:{max}]", self.min),
            None => write!(f, "##[{}:$]", self.min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqItem {
    pub delay: Option<Delay>,
    pub expr: Expr,
}

/// Delay-separated boolean steps. Every item after the first has a delay.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    pub items: Vec<SeqItem>,
}

impl Sequence {
    pub fn boolean(expr: Expr) -> Self {
        Sequence { items: vec![SeqItem { delay: None, expr }] }
    }

    /// Longest span in cycles from start to last sampled step, `None` if unbounded.
    pub fn max_len(&self) -> Option<u32> {
        let mut total = 0u32;
        for item in &self.items {
            if let Some(d) = item.delay {
                total = total.saturating_add(d.max?);
            }
        }
        Some(total)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if let Some(d) = item.delay {
                write!(f, "{d} ")?;
            }
            write!(f, "{}", item.expr)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Implication {
    /// `|->`
    Overlapped,
    /// `|=>`
    NonOverlapped,
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Implication::Overlapped => "|->",
            Implication::NonOverlapped => "|=>",
        })
    }
}

/// Property body: a sequence, optionally implying a second one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqExpr {
    pub lhs: Sequence,
    pub implication: Option<(Implication, Sequence)>,
}

impl fmt::Display for SeqExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lhs)?;
        if let Some((imp, rhs)) = &self.implication {
            write!(f, " {imp} {rhs}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyAst {
    pub clocking: Clocking,
    pub disable: Option<Expr>,
    pub body: SeqExpr,
}

impl PropertyAst {
    /// Every expression in the property, disable condition first.
    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        let seqs = std::iter::once(&self.body.lhs).chain(self.body.implication.iter().map(|(_, s)| s));
        self.disable.iter().chain(seqs.flat_map(|s| s.items.iter().map(|i| &i.expr)))
    }

    /// Names referenced outside the clocking event, deduplicated, in first-use order.
    pub fn referenced_signals(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for e in self.exprs() {
            e.for_each_signal(&mut |s| {
                if !seen.iter().any(|x| x == s) {
                    seen.push(s.to_string());
                }
            });
        }
        seen
    }
}

/// Canonical text.
pub fn print_sva(ast: &PropertyAst) -> String {
    ast.to_string()
}

impl fmt::Display for PropertyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "assert property (@({} {}) ", self.clocking.edge, self.clocking.clock)?;
        if let Some(d) = &self.disable {
            write!(f, "disable iff ({d}) ")?;
        }
        write!(f, "{});", self.body)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SvaError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String, expected: Vec<String> },
    #[error("{line}:{col}: unsupported construct: {construct}")]
    SubsetUnsupported { line: u32, col: u32, construct: String },
}

impl SvaError {
    pub fn pos(&self) -> Pos {
        match self {
            SvaError::Syntax { line, col, .. } | SvaError::SubsetUnsupported { line, col, .. } => {
                Pos { line: *line, col: *col }
            }
        }
    }
}

impl From<ParseError> for SvaError {
    fn from(e: ParseError) -> Self {
        let Pos { line, col } = e.pos;
        match e.kind {
            ParseErrorKind::Syntax { expected } => SvaError::Syntax { line, col, message: e.message, expected },
            ParseErrorKind::Unsupported => SvaError::SubsetUnsupported { line, col, construct: e.message },
        }
    }
}

pub fn parse_sva(text: &str) -> Result<PropertyAst, SvaError> {
    let toks = tokenize(text).map_err(ParseError::from)?;
    let mut c = Cursor::new(&toks, Dialect::Sva);
    Ok(parse_assertion(&mut c)?)
}

fn parse_assertion(c: &mut Cursor<'_>) -> Result<PropertyAst, ParseError> {
    for directive in ["cover", "assume", "restrict"] {
        if c.is_keyword(directive) {
            return Err(ParseError::unsupported(c.pos(), format!("`{directive}` directive")));
        }
    }
    if c.is_keyword("property") || c.is_keyword("sequence") {
        return Err(ParseError::unsupported(c.pos(), "named property or sequence declaration"));
    }
    if matches!(c.peek(), Tok::Ident(s) if s != "assert") && matches!(c.peek_at(1), Tok::Colon) {
        return Err(ParseError::syntax(c.pos(), "assertion labels are not accepted", &["assert"]));
    }
    if !c.eat_keyword("assert") {
        return Err(ParseError::syntax(c.pos(), format!("expected `assert`, found {}", c.peek().describe()), &["assert"]));
    }
    if matches!(c.peek(), Tok::LParen) || c.is_keyword("final") || matches!(c.peek(), Tok::Hash) {
        return Err(ParseError::unsupported(c.pos(), "immediate or deferred assertion"));
    }
    c.expect_keyword("property")?;
    c.expect(&Tok::LParen, "`(`")?;
    let clocking = parse_clocking(c)?;
    let disable = if c.eat_keyword("disable") {
        c.expect_keyword("iff")?;
        c.expect(&Tok::LParen, "`(`")?;
        let e = c.parse_expr()?;
        c.expect(&Tok::RParen, "`)`")?;
        Some(e)
    } else {
        None
    };
    let lhs = parse_boolseq(c)?;
    let implication = match c.peek() {
        Tok::Implies | Tok::ImpliesNext => {
            let imp = if matches!(c.bump(), Tok::Implies) { Implication::Overlapped } else { Implication::NonOverlapped };
            let rhs = parse_boolseq(c)?;
            if matches!(c.peek(), Tok::Implies | Tok::ImpliesNext) {
                return Err(ParseError::unsupported(c.pos(), "nested implication"));
            }
            Some((imp, rhs))
        }
        _ => None,
    };
    if !matches!(c.peek(), Tok::RParen) {
        return Err(c.unexpected(&["`##`", "`|->`", "`|=>`", "`)`", "binary operator"]));
    }
    c.bump();
    if c.is_keyword("else") {
        return Err(ParseError::unsupported(c.pos(), "action block"));
    }
    c.expect(&Tok::Semi, "`;`")?;
    if !c.at_eof() {
        return Err(ParseError::syntax(c.pos(), format!("trailing input: {}", c.peek().describe()), &["end of input"]));
    }
    Ok(PropertyAst { clocking, disable, body: SeqExpr { lhs, implication } })
}

fn parse_clocking(c: &mut Cursor<'_>) -> Result<Clocking, ParseError> {
    if !matches!(c.peek(), Tok::At) {
        if c.is_keyword("disable") || !matches!(c.peek(), Tok::RParen | Tok::Eof) {
            return Err(ParseError::unsupported(c.pos(), "property without an explicit clocking event"));
        }
        return Err(c.unexpected(&["`@`"]));
    }
    c.bump();
    if matches!(c.peek(), Tok::Ident(_)) {
        return Err(ParseError::unsupported(c.pos(), "named clocking block"));
    }
    c.expect(&Tok::LParen, "`(`")?;
    let edge = if c.eat_keyword("posedge") {
        Edge::Posedge
    } else if c.eat_keyword("negedge") {
        Edge::Negedge
    } else if c.is_keyword("edge") {
        return Err(ParseError::unsupported(c.pos(), "`edge` event"));
    } else if matches!(c.peek(), Tok::Ident(_)) {
        return Err(ParseError::unsupported(c.pos(), "level-sensitive clocking event"));
    } else {
        return Err(c.unexpected(&["posedge", "negedge"]));
    };
    let clock = c.expect_ident()?;
    if c.is_keyword("iff") || c.is_keyword("or") || matches!(c.peek(), Tok::Comma) {
        return Err(ParseError::unsupported(c.pos(), "compound clocking event"));
    }
    c.expect(&Tok::RParen, "`)`")?;
    Ok(Clocking { edge, clock })
}

fn parse_delay(c: &mut Cursor<'_>) -> Result<Delay, ParseError> {
    let pos = c.pos();
    debug_assert!(matches!(c.peek(), Tok::HashHash));
    c.bump();
    if !c.eat(&Tok::LBracket) {
        return Ok(Delay::fixed(c.expect_uint()?));
    }
    if matches!(c.peek(), Tok::Star | Tok::Plus) {
        return Err(ParseError::unsupported(c.pos(), "delay repetition shorthand"));
    }
    let min = c.expect_uint()?;
    c.expect(&Tok::Colon, "`:`")?;
    let max = if c.eat(&Tok::Dollar) { None } else { Some(c.expect_uint()?) };
    c.expect(&Tok::RBracket, "`]`")?;
    if let Some(max) = max {
        if max < min {
            return Err(ParseError::syntax(pos, format!("delay range [{min}:{max}] has max < min"), &[]));
        }
    }
    Ok(Delay { min, max })
}

fn parse_boolseq(c: &mut Cursor<'_>) -> Result<Sequence, ParseError> {
    let mut items = Vec::new();
    let first_delay = if matches!(c.peek(), Tok::HashHash) { Some(parse_delay(c)?) } else { None };
    items.push(SeqItem { delay: first_delay, expr: c.parse_expr()? });
    while matches!(c.peek(), Tok::HashHash) {
        let delay = parse_delay(c)?;
        items.push(SeqItem { delay: Some(delay), expr: c.parse_expr()? });
    }
    Ok(Sequence { items })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Error, Serialize, Deserialize)]
pub enum BindViolation {
    #[error("unknown signal {0}")]
    UnknownSignal(String),
    #[error("select {name}[{index}] out of range for width {width}")]
    SelectOutOfRange { name: String, index: u32, width: u32 },
    #[error("$bits argument must be a plain signal")]
    BitsArgNotSignal,
    #[error("expression wider than 64 bits ({0})")]
    TooWide(u32),
}

impl From<CompileError> for BindViolation {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Unknown(n) => BindViolation::UnknownSignal(n),
            CompileError::SelectOutOfRange { name, index, width } => {
                BindViolation::SelectOutOfRange { name, index, width }
            }
            CompileError::BitsArgNotSignal => BindViolation::BitsArgNotSignal,
            CompileError::TooWide(w) => BindViolation::TooWide(w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundItem {
    pub delay: Option<Delay>,
    pub expr: CExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundSequence {
    pub items: Vec<BoundItem>,
}

/// A property whose identifiers are resolved to indices of the definition list
/// it was bound against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundProperty {
    pub ast: PropertyAst,
    pub clock: usize,
    pub disable: Option<CExpr>,
    pub lhs: BoundSequence,
    pub implication: Option<(Implication, BoundSequence)>,
    /// Signal indices read by the property (clock excluded).
    pub referenced: BTreeSet<usize>,
}

impl BoundProperty {
    /// Cycles from attempt start to the last sampled step, `None` if unbounded.
    pub fn max_span(&self) -> Option<u32> {
        let lhs = self.ast.body.lhs.max_len()?;
        match &self.ast.body.implication {
            None => Some(lhs),
            Some((imp, rhs)) => {
                let extra = matches!(imp, Implication::NonOverlapped) as u32;
                Some(lhs.saturating_add(extra).saturating_add(rhs.max_len()?))
            }
        }
    }
}

/// Resolves every identifier against `defs`; collects all violations.
pub fn bind_signals(ast: &PropertyAst, defs: &[SignalDefinition]) -> Result<BoundProperty, Vec<BindViolation>> {
    let index: HashMap<&str, (usize, u32)> =
        defs.iter().enumerate().map(|(i, d)| (d.name.as_str(), (i, d.width))).collect();
    let resolve = |n: &str| index.get(n).copied();
    let mut violations = BTreeSet::new();

    let clock = match resolve(&ast.clocking.clock) {
        Some((i, _)) => i,
        None => {
            violations.insert(BindViolation::UnknownSignal(ast.clocking.clock.clone()));
            0
        }
    };
    let mut bind_expr = |e: &Expr| -> Option<CExpr> {
        // report every unknown name, not just the first compile failure
        for n in e.signals() {
            if resolve(n).is_none() {
                violations.insert(BindViolation::UnknownSignal(n.to_string()));
            }
        }
        check_selects_and_bits(e, &resolve, &mut violations);
        match compile(e, 0, &resolve) {
            Ok(c) => Some(c),
            Err(err) => {
                violations.insert(err.into());
                None
            }
        }
    };
    let disable = ast.disable.as_ref().map(&mut bind_expr);
    let mut bind_seq = |s: &Sequence| -> BoundSequence {
        BoundSequence {
            items: s
                .items
                .iter()
                .filter_map(|i| Some(BoundItem { delay: i.delay, expr: bind_expr(&i.expr)? }))
                .collect(),
        }
    };
    let lhs = bind_seq(&ast.body.lhs);
    let implication = ast.body.implication.as_ref().map(|(imp, s)| (*imp, bind_seq(s)));
    if !violations.is_empty() {
        return Err(violations.into_iter().collect());
    }
    let referenced = ast.referenced_signals().iter().filter_map(|n| resolve(n)).map(|(i, _)| i).collect();
    Ok(BoundProperty { ast: ast.clone(), clock, disable: disable.flatten(), lhs, implication, referenced })
}

fn check_selects_and_bits(
    e: &Expr,
    resolve: &impl Fn(&str) -> Option<(usize, u32)>,
    out: &mut BTreeSet<BindViolation>,
) {
    match e {
        Expr::Index { name, index } => {
            if let Some((_, w)) = resolve(name) {
                if *index >= w {
                    out.insert(BindViolation::SelectOutOfRange { name: name.clone(), index: *index, width: w });
                }
            }
        }
        Expr::Range { name, msb, lsb } => {
            if let Some((_, w)) = resolve(name) {
                if *msb >= w || lsb > msb {
                    let index = if *msb >= w { *msb } else { *lsb };
                    out.insert(BindViolation::SelectOutOfRange { name: name.clone(), index, width: w });
                }
            }
        }
        Expr::Sys(crate::expr::SysFn::Bits, a) => {
            if !matches!(**a, Expr::Ident(_)) {
                out.insert(BindViolation::BitsArgNotSignal);
            }
            check_selects_and_bits(a, resolve, out);
        }
        Expr::Ident(_) | Expr::Lit(_) => {}
        Expr::Unary(_, a) | Expr::Sys(_, a) | Expr::Past(a, _) => check_selects_and_bits(a, resolve, out),
        Expr::Binary(_, a, b) => {
            check_selects_and_bits(a, resolve, out);
            check_selects_and_bits(b, resolve, out);
        }
        Expr::Cond(x, a, b) => {
            check_selects_and_bits(x, resolve, out);
            check_selects_and_bits(a, resolve, out);
            check_selects_and_bits(b, resolve, out);
        }
        Expr::Concat(items) => items.iter().for_each(|i| check_selects_and_bits(i, resolve, out)),
    }
}
