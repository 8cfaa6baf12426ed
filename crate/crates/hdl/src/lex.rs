// SPDX-License-Identifier: Apache-2.0
//! Tokenizer shared by the SVA and Verilog frontends.

use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Base {
    Bin,
    Oct,
    Dec,
    Hex,
}

impl Base {
    fn radix(self) -> u32 {
        match self {
            Base::Bin => 2,
            Base::Oct => 8,
            Base::Dec => 10,
            Base::Hex => 16,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Base::Bin => 'b',
            Base::Oct => 'o',
            Base::Dec => 'd',
            Base::Hex => 'h',
        }
    }
}

/// Integer literal. `size == None && base == None` is a plain decimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub size: Option<u32>,
    pub base: Option<Base>,
    pub value: u64,
}

impl Literal {
    pub fn decimal(value: u64) -> Self {
        Literal { size: None, base: None, value }
    }

    pub fn sized(size: u32, base: Base, value: u64) -> Self {
        Literal { size: Some(size), base: Some(base), value: value & crate::value::mask(size) }
    }

    /// Self-determined width; unsized literals are 32 bits wide.
    pub fn width(&self) -> u32 {
        self.size.unwrap_or(32)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(size) = self.size {
            write!(f, "{size}")?;
        }
        match self.base {
            None => write!(f, "{}", self.value),
            Some(base) => {
                write!(f, "'{}", base.letter())?;
                match base {
                    Base::Bin => write!(f, "{:b}", self.value),
                    Base::Oct => write!(f, "{:o}", self.value),
                    Base::Dec => write!(f, "{}", self.value),
                    Base::Hex => write!(f, "{:x}", self.value),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `$name`
    SysIdent(String),
    /// bare `$`
    Dollar,
    Lit(Literal),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Semi,
    Comma,
    At,
    Hash,
    HashHash,
    Question,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    Tilde,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    Caret,
    /// `~&`, `~|`, `~^`, `^~`, `**`, `<<<`, `>>>`, `->`, `#-#`, `#=#`
    OtherOp(&'static str),
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    EqEqEq,
    NotEqEq,
    Shl,
    Shr,
    Assign,
    /// `|->`
    Implies,
    /// `|=>`
    ImpliesNext,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::SysIdent(s) => format!("`${s}`"),
            Tok::Lit(l) => format!("literal `{l}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            Tok::Dollar => "$",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::At => "@",
            Tok::Hash => "#",
            Tok::HashHash => "##",
            Tok::Question => "?",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Bang => "!",
            Tok::Tilde => "~",
            Tok::Amp => "&",
            Tok::AmpAmp => "&&",
            Tok::Pipe => "|",
            Tok::PipePipe => "||",
            Tok::Caret => "^",
            Tok::OtherOp(s) => s,
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::EqEqEq => "===",
            Tok::NotEqEq => "!==",
            Tok::Shl => "<<",
            Tok::Shr => ">>",
            Tok::Assign => "=",
            Tok::Implies => "|->",
            Tok::ImpliesNext => "|=>",
            Tok::Ident(_) | Tok::SysIdent(_) | Tok::Lit(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LexError {
    /// Malformed input.
    Invalid { pos: Pos, message: String },
    /// Well-formed SystemVerilog outside the supported subset.
    Unsupported { pos: Pos, construct: String },
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().collect(), idx: 0, line: 1, col: 1, _src: src }
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.idx + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.idx).copied()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    /// Position of the last character, used for end-of-input diagnostics.
    fn last_pos(&self) -> Pos {
        let mut line = 1;
        let mut col = 1;
        let mut last = Pos { line: 1, col: 1 };
        for &c in &self.chars {
            last = Pos { line, col };
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        last
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let pos = self.pos();
            let Some(c) = self.peek(0) else {
                out.push(Token { tok: Tok::Eof, pos: self.last_pos() });
                return Ok(out);
            };
            let tok = if is_ident_start(c) {
                let mut s = String::new();
                while let Some(c) = self.peek(0).filter(|c| is_ident_char(*c)) {
                    s.push(c);
                    self.bump();
                }
                Tok::Ident(s)
            } else if c == '$' {
                self.bump();
                if self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    let mut s = String::new();
                    while let Some(c) = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                        s.push(c);
                        self.bump();
                    }
                    Tok::SysIdent(s)
                } else {
                    Tok::Dollar
                }
            } else if c.is_ascii_digit() || c == '\'' {
                Tok::Lit(self.number(pos)?)
            } else {
                self.punct(pos)?
            };
            out.push(Token { tok, pos });
        }
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(LexError::Invalid {
                                    pos: start,
                                    message: "unterminated block comment".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn digits(&mut self, allow: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| allow(*c) || *c == '_') {
            if c != '_' {
                s.push(c);
            }
            self.bump();
        }
        s
    }

    fn number(&mut self, pos: Pos) -> Result<Literal, LexError> {
        let invalid = |message: &str| LexError::Invalid { pos, message: message.to_string() };
        let size_text = self.digits(|c| c.is_ascii_digit());
        if self.peek(0) != Some('\'') {
            let value = size_text.parse::<u64>().map_err(|_| invalid("integer literal out of range"))?;
            return Ok(Literal::decimal(value));
        }
        self.bump();
        if matches!(self.peek(0), Some('s' | 'S')) {
            return Err(LexError::Unsupported { pos, construct: "signed literal".into() });
        }
        let base = match self.bump() {
            Some('b' | 'B') => Base::Bin,
            Some('o' | 'O') => Base::Oct,
            Some('d' | 'D') => Base::Dec,
            Some('h' | 'H') => Base::Hex,
            Some('0' | '1' | 'x' | 'X' | 'z' | 'Z') if size_text.is_empty() => {
                return Err(LexError::Unsupported { pos, construct: "unbased unsized literal".into() })
            }
            _ => return Err(invalid("expected base letter after `'`")),
        };
        let raw = self.digits(|c| c.is_ascii_alphanumeric() || c == '?');
        if raw.is_empty() {
            return Err(invalid("literal has no digits"));
        }
        if raw.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(LexError::Unsupported { pos, construct: "x/z literal digits".into() });
        }
        let value = u64::from_str_radix(&raw, base.radix()).map_err(|_| invalid("malformed or oversized literal"))?;
        if size_text.is_empty() {
            return Ok(Literal { size: None, base: Some(base), value });
        }
        let size: u32 = size_text.parse().map_err(|_| invalid("literal size out of range"))?;
        if size == 0 {
            return Err(invalid("literal size must be positive"));
        }
        if size > 64 {
            return Err(LexError::Unsupported { pos, construct: "literal wider than 64 bits".into() });
        }
        Ok(Literal::sized(size, base, value))
    }

    fn punct(&mut self, pos: Pos) -> Result<Tok, LexError> {
        let c0 = self.peek(0).unwrap_or('\0');
        let c1 = self.peek(1).unwrap_or('\0');
        let c2 = self.peek(2).unwrap_or('\0');
        let (tok, n) = match (c0, c1, c2) {
            ('|', '-', '>') => (Tok::Implies, 3),
            ('|', '=', '>') => (Tok::ImpliesNext, 3),
            ('=', '=', '=') => (Tok::EqEqEq, 3),
            ('!', '=', '=') => (Tok::NotEqEq, 3),
            ('<', '<', '<') => (Tok::OtherOp("<<<"), 3),
            ('>', '>', '>') => (Tok::OtherOp(">>>"), 3),
            ('#', '-', '#') => (Tok::OtherOp("#-#"), 3),
            ('#', '=', '#') => (Tok::OtherOp("#=#"), 3),
            ('#', '#', _) => (Tok::HashHash, 2),
            ('&', '&', _) => (Tok::AmpAmp, 2),
            ('|', '|', _) => (Tok::PipePipe, 2),
            ('=', '=', _) => (Tok::EqEq, 2),
            ('!', '=', _) => (Tok::NotEq, 2),
            ('<', '=', _) => (Tok::Le, 2),
            ('>', '=', _) => (Tok::Ge, 2),
            ('<', '<', _) => (Tok::Shl, 2),
            ('>', '>', _) => (Tok::Shr, 2),
            ('~', '&', _) => (Tok::OtherOp("~&"), 2),
            ('~', '|', _) => (Tok::OtherOp("~|"), 2),
            ('~', '^', _) => (Tok::OtherOp("~^"), 2),
            ('^', '~', _) => (Tok::OtherOp("^~"), 2),
            ('*', '*', _) => (Tok::OtherOp("**"), 2),
            ('-', '>', _) => (Tok::OtherOp("->"), 2),
            ('(', _, _) => (Tok::LParen, 1),
            (')', _, _) => (Tok::RParen, 1),
            ('[', _, _) => (Tok::LBracket, 1),
            (']', _, _) => (Tok::RBracket, 1),
            ('{', _, _) => (Tok::LBrace, 1),
            ('}', _, _) => (Tok::RBrace, 1),
            (':', _, _) => (Tok::Colon, 1),
            (';', _, _) => (Tok::Semi, 1),
            (',', _, _) => (Tok::Comma, 1),
            ('@', _, _) => (Tok::At, 1),
            ('#', _, _) => (Tok::Hash, 1),
            ('?', _, _) => (Tok::Question, 1),
            ('+', _, _) => (Tok::Plus, 1),
            ('-', _, _) => (Tok::Minus, 1),
            ('*', _, _) => (Tok::Star, 1),
            ('/', _, _) => (Tok::Slash, 1),
            ('%', _, _) => (Tok::Percent, 1),
            ('!', _, _) => (Tok::Bang, 1),
            ('~', _, _) => (Tok::Tilde, 1),
            ('&', _, _) => (Tok::Amp, 1),
            ('|', _, _) => (Tok::Pipe, 1),
            ('^', _, _) => (Tok::Caret, 1),
            ('<', _, _) => (Tok::Lt, 1),
            ('>', _, _) => (Tok::Gt, 1),
            ('=', _, _) => (Tok::Assign, 1),
            ('"', _, _) => {
                return Err(LexError::Unsupported { pos, construct: "string literal".into() })
            }
            ('`', _, _) => {
                return Err(LexError::Unsupported { pos, construct: "compiler directive".into() })
            }
            (c, _, _) => {
                return Err(LexError::Invalid { pos, message: format!("unexpected character {c:?}") })
            }
        };
        for _ in 0..n {
            self.bump();
        }
        Ok(tok)
    }
}
