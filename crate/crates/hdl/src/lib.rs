// SPDX-License-Identifier: Apache-2.0
//! Hardware-description substrate: a shared lexer and expression layer, the
//! SVA assertion subset, and a Verilog-subset RTL model with cycle simulation.

pub mod expr;
pub mod lex;
pub mod rtl;
pub mod signal;
pub mod sva;
pub mod trace;
pub mod value;
