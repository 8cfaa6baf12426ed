// SPDX-License-Identifier: Apache-2.0
//! Parsing, binding and category checks for generated assertions.

use std::collections::BTreeSet;

use assertforge_hdl::expr::{Expr, SysFn};
use assertforge_hdl::signal::SignalDefinition;
use assertforge_hdl::sva::{bind_signals, parse_sva, BoundProperty, PropertyAst, SvaError};

use crate::generator::{Assertion, Category};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Parsed(Box<BoundProperty>),
    SyntaxError(String),
    /// Recognized construct outside the supported subset.
    Unsupported(String),
    BindError(String),
}

impl Status {
    pub fn bound(&self) -> Option<&BoundProperty> {
        match self {
            Status::Parsed(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checked {
    pub assertion: Assertion,
    pub status: Status,
}

fn bits_args(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Sys(SysFn::Bits, inner) => {
            if let Expr::Ident(n) = inner.as_ref() {
                out.insert(n.clone());
            }
        }
        Expr::Sys(_, a) | Expr::Unary(_, a) | Expr::Past(a, _) => bits_args(a, out),
        Expr::Binary(_, a, b) => {
            bits_args(a, out);
            bits_args(b, out);
        }
        Expr::Cond(a, b, c) => {
            bits_args(a, out);
            bits_args(b, out);
            bits_args(c, out);
        }
        Expr::Concat(xs) => xs.iter().for_each(|x| bits_args(x, out)),
        Expr::Ident(_) | Expr::Index { .. } | Expr::Range { .. } | Expr::Lit(_) => {}
    }
}

/// Why an assertion does not fit its category, if it does not.
pub fn category_violation(category: Category, ast: &PropertyAst) -> Option<String> {
    match category {
        Category::Width => {
            let mut args = BTreeSet::new();
            ast.exprs().for_each(|e| bits_args(e, &mut args));
            (args.len() != 1).then(|| format!("category mismatch: width assertion names {} signals in $bits", args.len()))
        }
        Category::Connectivity => {
            let n = ast.referenced_signals().len();
            (n < 2).then(|| format!("category mismatch: connectivity assertion references {n} signal(s)"))
        }
        Category::Function => None,
    }
}

pub fn check_one(a: &Assertion, defs: &[SignalDefinition]) -> Status {
    let ast = match parse_sva(&a.text) {
        Ok(ast) => ast,
        Err(e @ SvaError::SubsetUnsupported { .. }) => return Status::Unsupported(e.to_string()),
        Err(e) => return Status::SyntaxError(e.to_string()),
    };
    if let Some(why) = category_violation(a.category, &ast) {
        return Status::SyntaxError(why);
    }
    match bind_signals(&ast, defs) {
        Ok(b) => Status::Parsed(Box::new(b)),
        Err(vs) => Status::BindError(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")),
    }
}

/// Parses and binds every assertion against `defs`.
pub fn check_syntax(assertions: &[Assertion], defs: &[SignalDefinition]) -> Vec<Checked> {
    assertions.iter().map(|a| Checked { assertion: a.clone(), status: check_one(a, defs) }).collect()
}
