// SPDX-License-Identifier: Apache-2.0
//! Signal declarations shared by the specification bundle, the SVA binder and
//! the RTL model.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Input,
    Output,
    Inout,
    Reg,
    Wire,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hierarchy {
    IoPort,
    ArchRegister,
    Internal,
}

/// Functional role used to group signals in plans and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRole {
    Clock,
    Reset,
    Control,
    Data,
}

impl fmt::Display for SignalRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalRole::Clock => "clock",
            SignalRole::Reset => "reset",
            SignalRole::Control => "control",
            SignalRole::Data => "data",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalDefinition {
    pub name: String,
    pub width: u32,
    pub kind: SignalKind,
    pub hierarchy: Hierarchy,
    /// Optional designer-supplied role; inferred when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<SignalRole>,
}

impl SignalDefinition {
    pub fn new(name: &str, width: u32, kind: SignalKind, hierarchy: Hierarchy) -> Self {
        SignalDefinition { name: name.to_string(), width, kind, hierarchy, role: None }
    }
}

/// Verilog reserved words that can never name a signal.
const RESERVED: &[&str] = &[
    "always", "and", "assign", "assert", "begin", "case", "default", "else", "end", "endcase", "endmodule",
    "if", "initial", "inout", "input", "module", "negedge", "or", "output", "parameter", "posedge",
    "property", "reg", "wire", "not", "disable", "iff", "localparam", "integer", "generate", "function",
];

/// Simple identifier: `[A-Za-z_][A-Za-z0-9_$]*`, not a reserved word.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else { return false };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
        && !RESERVED.contains(&s)
}
