// SPDX-License-Identifier: Apache-2.0
//! Expression AST, precedence-climbing parser and canonical printer shared by
//! the SVA and Verilog frontends.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lex::{Literal, Pos, Tok, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    LogNot,
    BitNot,
    Neg,
    RedAnd,
    RedOr,
    RedXor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::LogNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Neg => "-",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitXor => "^",
            BinaryOp::BitOr => "|",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne => 7,
            BinaryOp::BitAnd => 6,
            BinaryOp::BitXor => 5,
            BinaryOp::BitOr => 4,
            BinaryOp::LogAnd => 3,
            BinaryOp::LogOr => 2,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 7
    }

    fn from_tok(tok: &Tok) -> Option<BinaryOp> {
        Some(match tok {
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Shl => BinaryOp::Shl,
            Tok::Shr => BinaryOp::Shr,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Amp => BinaryOp::BitAnd,
            Tok::Caret => BinaryOp::BitXor,
            Tok::Pipe => BinaryOp::BitOr,
            Tok::AmpAmp => BinaryOp::LogAnd,
            Tok::PipePipe => BinaryOp::LogOr,
            _ => return None,
        })
    }
}

const PREC_COND: u8 = 1;
const PREC_UNARY: u8 = 10;
const PREC_PRIMARY: u8 = 11;

/// Sampled-value and width system functions of the SVA subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SysFn {
    Stable,
    Rose,
    Fell,
    Bits,
    Onehot,
    Countones,
}

impl SysFn {
    pub fn name(self) -> &'static str {
        match self {
            SysFn::Stable => "stable",
            SysFn::Rose => "rose",
            SysFn::Fell => "fell",
            SysFn::Bits => "bits",
            SysFn::Onehot => "onehot",
            SysFn::Countones => "countones",
        }
    }

    fn from_name(name: &str) -> Option<SysFn> {
        Some(match name {
            "stable" => SysFn::Stable,
            "rose" => SysFn::Rose,
            "fell" => SysFn::Fell,
            "bits" => SysFn::Bits,
            "onehot" => SysFn::Onehot,
            "countones" => SysFn::Countones,
            _ => return None,
        })
    }
}

/// Real SystemVerilog system functions that fall outside the subset.
const KNOWN_SYSTEM_FUNCTIONS: &[&str] = &[
    "changed", "onehot0", "isunknown", "countbits", "sampled", "past_gclk", "rose_gclk", "fell_gclk",
    "stable_gclk", "changed_gclk", "future_gclk", "signed", "unsigned", "clog2", "size", "left", "right",
    "low", "high", "increment", "dimensions", "error", "fatal", "warning", "info", "display", "time",
    "realtime", "random", "urandom",
];

/// SVA keywords whose constructs are recognized but unsupported.
pub const SVA_UNSUPPORTED_KEYWORDS: &[&str] = &[
    "throughout", "intersect", "within", "until", "s_until", "until_with", "s_until_with", "implies",
    "iff", "eventually", "s_eventually", "always", "s_always", "nexttime", "s_nexttime", "first_match",
    "not", "and", "or", "strong", "weak", "accept_on", "reject_on", "sync_accept_on", "sync_reject_on",
    "if", "case", "property", "endproperty", "sequence", "endsequence", "cover", "assume", "restrict",
    "expect", "final", "default", "clocking", "let", "matched", "triggered",
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Ident(String),
    /// `sig[i]`
    Index { name: String, index: u32 },
    /// `sig[msb:lsb]`
    Range { name: String, msb: u32, lsb: u32 },
    Lit(Literal),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Sys(SysFn, Box<Expr>),
    /// `$past(e, depth)`
    Past(Box<Expr>, u32),
    /// Verilog-only `c ? a : b`.
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Verilog-only `{a, b}`.
    Concat(Vec<Expr>),
}

impl Expr {
    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => PREC_UNARY,
            Expr::Cond(..) => PREC_COND,
            _ => PREC_PRIMARY,
        }
    }

    /// Visits every signal name the expression reads, in source order.
    pub fn for_each_signal<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Ident(n) | Expr::Index { name: n, .. } | Expr::Range { name: n, .. } => f(n),
            Expr::Lit(_) => {}
            Expr::Unary(_, a) | Expr::Sys(_, a) | Expr::Past(a, _) => a.for_each_signal(f),
            Expr::Binary(_, a, b) => {
                a.for_each_signal(f);
                b.for_each_signal(f);
            }
            Expr::Cond(c, a, b) => {
                c.for_each_signal(f);
                a.for_each_signal(f);
                b.for_each_signal(f);
            }
            Expr::Concat(items) => items.iter().for_each(|e| e.for_each_signal(f)),
        }
    }

    pub fn signals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.for_each_signal(&mut |s| out.push(s));
        out
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let parens = self.precedence() < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Expr::Ident(n) => f.write_str(n)?,
            Expr::Index { name, index } => write!(f, "{name}[{index}]")?,
            Expr::Range { name, msb, lsb } => write!(f, "{name}[{msb}:{lsb}]")?,
            Expr::Lit(l) => write!(f, "{l}")?,
            Expr::Unary(op, a) => {
                f.write_str(op.symbol())?;
                // `& &a` must not print as `&&a`
                if matches!(**a, Expr::Unary(..)) {
                    f.write_str(" ")?;
                }
                a.write_prec(f, PREC_UNARY)?;
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                a.write_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                b.write_prec(f, p + 1)?;
            }
            Expr::Sys(func, a) => {
                write!(f, "${}(", func.name())?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Past(a, depth) => {
                f.write_str("$past(")?;
                a.write_prec(f, 0)?;
                if *depth != 1 {
                    write!(f, ", {depth}")?;
                }
                f.write_str(")")?;
            }
            Expr::Cond(c, a, b) => {
                c.write_prec(f, PREC_COND + 1)?;
                f.write_str(" ? ")?;
                a.write_prec(f, PREC_COND + 1)?;
                f.write_str(" : ")?;
                b.write_prec(f, PREC_COND)?;
            }
            Expr::Concat(items) => {
                f.write_str("{")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    e.write_prec(f, 0)?;
                }
                f.write_str("}")?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<String> },
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    pub fn syntax(pos: Pos, message: impl Into<String>, expected: &[&str]) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Syntax { expected: expected.iter().map(|s| s.to_string()).collect() },
            message: message.into(),
        }
    }

    pub fn unsupported(pos: Pos, construct: impl Into<String>) -> Self {
        ParseError { pos, kind: ParseErrorKind::Unsupported, message: construct.into() }
    }
}

impl From<crate::lex::LexError> for ParseError {
    fn from(e: crate::lex::LexError) -> Self {
        match e {
            crate::lex::LexError::Invalid { pos, message } => ParseError::syntax(pos, message, &[]),
            crate::lex::LexError::Unsupported { pos, construct } => ParseError::unsupported(pos, construct),
        }
    }
}

/// Which language the expression appears in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dialect {
    Sva,
    Verilog,
}

const MAX_DEPTH: u32 = 256;

/// Token cursor with the expression grammar attached.
pub struct Cursor<'t> {
    toks: &'t [Token],
    i: usize,
    depth: u32,
    pub dialect: Dialect,
    /// Named constants substituted during parsing (Verilog `localparam`).
    pub constants: HashMap<String, Literal>,
}

impl<'t> Cursor<'t> {
    /// `toks` must end with `Tok::Eof`.
    pub fn new(toks: &'t [Token], dialect: Dialect) -> Self {
        debug_assert!(matches!(toks.last(), Some(Token { tok: Tok::Eof, .. })));
        Cursor { toks, i: 0, depth: 0, dialect, constants: HashMap::new() }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    pub fn peek_at(&self, off: usize) -> &Tok {
        &self.toks[(self.i + off).min(self.toks.len() - 1)].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub fn bump(&mut self) -> &Tok {
        let t = &self.toks[self.i].tok;
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    /// Unsigned integer constant (plain or based literal).
    pub fn expect_uint(&mut self) -> Result<u32, ParseError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Lit(l) => {
                let v = u32::try_from(l.value)
                    .map_err(|_| ParseError::syntax(pos, "integer constant out of range", &[]))?;
                self.bump();
                Ok(v)
            }
            Tok::Ident(name) if self.constants.contains_key(name) => {
                let v = self.constants[name].value;
                let v = u32::try_from(v).map_err(|_| ParseError::syntax(pos, "integer constant out of range", &[]))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    /// Error for the current token, classifying recognized-but-unsupported
    /// SystemVerilog separately from malformed input.
    pub fn unexpected(&self, expected: &[&str]) -> ParseError {
        let pos = self.pos();
        let tok = self.peek();
        if self.dialect == Dialect::Sva {
            if let Some(construct) = sva_unsupported_token(tok) {
                return ParseError::unsupported(pos, construct);
            }
        }
        let msg = match expected {
            [] => format!("unexpected {}", tok.describe()),
            [one] => format!("expected {one}, found {}", tok.describe()),
            _ => format!("expected one of {}, found {}", expected.join(", "), tok.describe()),
        };
        ParseError::syntax(pos, msg, expected)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::syntax(self.pos(), "expression nesting too deep", &[]));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.parse_cond();
        self.leave();
        r
    }

    fn parse_cond(&mut self) -> Result<Expr, ParseError> {
        let c = self.parse_binary(PREC_COND + 1)?;
        if matches!(self.peek(), Tok::Question) {
            if self.dialect == Dialect::Sva {
                return Err(ParseError::unsupported(self.pos(), "conditional operator"));
            }
            self.bump();
            let a = self.parse_expr()?;
            self.expect(&Tok::Colon, "`:`")?;
            let b = self.parse_expr()?;
            return Ok(Expr::Cond(Box::new(c), Box::new(a), Box::new(b)));
        }
        Ok(c)
    }

    fn parse_binary(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = BinaryOp::from_tok(self.peek()) {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.bump();
            self.enter()?;
            let rhs = self.parse_binary(p + 1);
            self.leave();
            lhs = Expr::binary(op, lhs, rhs?);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek() {
            Tok::Bang => UnaryOp::LogNot,
            Tok::Tilde => UnaryOp::BitNot,
            Tok::Minus => UnaryOp::Neg,
            Tok::Amp => UnaryOp::RedAnd,
            Tok::Pipe => UnaryOp::RedOr,
            Tok::Caret => UnaryOp::RedXor,
            Tok::OtherOp(s @ ("~&" | "~|" | "~^" | "^~")) => {
                return Err(ParseError::unsupported(self.pos(), format!("reduction operator `{s}`")))
            }
            Tok::Plus => return Err(ParseError::unsupported(self.pos(), "unary plus")),
            _ => return self.parse_primary(),
        };
        self.bump();
        self.enter()?;
        let a = self.parse_unary();
        self.leave();
        Ok(Expr::unary(op, a?))
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                if self.dialect == Dialect::Sva && SVA_UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                    return Err(ParseError::unsupported(pos, format!("`{name}`")));
                }
                self.bump();
                if let Some(lit) = self.constants.get(&name) {
                    return Ok(Expr::Lit(*lit));
                }
                if matches!(self.peek(), Tok::LBracket) {
                    return self.parse_select(name);
                }
                Ok(Expr::Ident(name))
            }
            Tok::Lit(l) => {
                self.bump();
                if matches!(self.peek(), Tok::LBracket) && self.dialect == Dialect::Sva {
                    return Err(self.repetition_or(&["operator"]));
                }
                Ok(Expr::Lit(l))
            }
            Tok::SysIdent(name) => self.parse_syscall(&name),
            Tok::LParen => {
                self.bump();
                let e = self.parse_expr()?;
                if self.dialect == Dialect::Sva
                    && matches!(self.peek(), Tok::HashHash | Tok::Implies | Tok::ImpliesNext)
                {
                    return Err(ParseError::unsupported(self.pos(), "parenthesized sequence or property"));
                }
                self.expect(&Tok::RParen, "`)`")?;
                if self.dialect == Dialect::Sva && matches!(self.peek(), Tok::LBracket) {
                    return Err(self.repetition_or(&["operator", "`)`"]));
                }
                Ok(e)
            }
            Tok::LBrace => {
                if self.dialect == Dialect::Sva {
                    return Err(ParseError::unsupported(pos, "concatenation"));
                }
                self.bump();
                let mut items = vec![self.parse_expr()?];
                if matches!(self.peek(), Tok::LBrace) {
                    return Err(ParseError::unsupported(pos, "replication"));
                }
                while self.eat(&Tok::Comma) {
                    items.push(self.parse_expr()?);
                }
                self.expect(&Tok::RBrace, "`}`")?;
                Ok(Expr::Concat(items))
            }
            Tok::At if self.dialect == Dialect::Sva => Err(ParseError::unsupported(pos, "multiple clocking events")),
            _ => Err(self.unexpected(&["identifier", "literal", "`(`", "system function", "unary operator"])),
        }
    }

    /// `[` following a primary: a select, or an SVA repetition operator.
    fn repetition_or(&self, expected: &[&str]) -> ParseError {
        match self.peek_at(1) {
            Tok::Star | Tok::OtherOp("->") | Tok::Assign | Tok::Plus => {
                ParseError::unsupported(self.pos(), "sequence repetition")
            }
            _ => self.unexpected(expected),
        }
    }

    fn parse_select(&mut self, name: String) -> Result<Expr, ParseError> {
        if self.dialect == Dialect::Sva {
            if let Tok::Star | Tok::OtherOp("->") | Tok::Assign | Tok::Plus = self.peek_at(1) {
                return Err(ParseError::unsupported(self.pos(), "sequence repetition"));
            }
        }
        self.bump();
        let msb = self.expect_uint()?;
        let e = if self.eat(&Tok::Colon) {
            let lsb = self.expect_uint()?;
            Expr::Range { name, msb, lsb }
        } else if matches!(self.peek(), Tok::Plus | Tok::Minus) && matches!(self.peek_at(1), Tok::Colon) {
            return Err(ParseError::unsupported(self.pos(), "indexed part-select"));
        } else {
            Expr::Index { name, index: msb }
        };
        self.expect(&Tok::RBracket, "`]`")?;
        Ok(e)
    }

    fn parse_syscall(&mut self, name: &str) -> Result<Expr, ParseError> {
        let pos = self.pos();
        if self.dialect == Dialect::Verilog {
            return Err(ParseError::unsupported(pos, format!("system function `${name}` in RTL")));
        }
        let func = match name {
            "past" => None,
            _ => match SysFn::from_name(name) {
                Some(f) => Some(f),
                None if KNOWN_SYSTEM_FUNCTIONS.contains(&name) => {
                    return Err(ParseError::unsupported(pos, format!("system function `${name}`")))
                }
                None => return Err(ParseError::syntax(pos, format!("unknown system function `${name}`"), &[])),
            },
        };
        self.bump();
        self.expect(&Tok::LParen, "`(`")?;
        let arg = self.parse_expr()?;
        let e = match func {
            Some(f) => Expr::Sys(f, Box::new(arg)),
            None => {
                let depth = if self.eat(&Tok::Comma) {
                    let p = self.pos();
                    let d = self.expect_uint()?;
                    if d == 0 {
                        return Err(ParseError::syntax(p, "$past depth must be at least 1", &[]));
                    }
                    if self.eat(&Tok::Comma) {
                        return Err(ParseError::unsupported(p, "gated $past"));
                    }
                    d
                } else {
                    1
                };
                Expr::Past(Box::new(arg), depth)
            }
        };
        self.expect(&Tok::RParen, "`)`")?;
        Ok(e)
    }
}

/// Tokens that only occur in SystemVerilog constructs outside the subset.
fn sva_unsupported_token(tok: &Tok) -> Option<String> {
    match tok {
        Tok::Ident(s) if SVA_UNSUPPORTED_KEYWORDS.contains(&s.as_str()) => Some(format!("`{s}`")),
        Tok::OtherOp(s) => Some(format!("operator `{s}`")),
        Tok::Star | Tok::Slash | Tok::Percent => Some(format!("arithmetic operator `{}`", tok.text())),
        Tok::EqEqEq | Tok::NotEqEq => Some(format!("case equality `{}`", tok.text())),
        Tok::Question => Some("conditional operator".into()),
        Tok::LBrace => Some("concatenation".into()),
        _ => None,
    }
}
