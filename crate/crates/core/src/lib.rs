// SPDX-License-Identifier: Apache-2.0
//! Assertion generation and evaluation pipeline.

pub mod analyzer;
pub mod doc;
pub mod eval;
pub mod generator;
pub mod knowledge;
pub mod llm;
pub mod pipeline;
pub mod prompts;
pub mod util;
pub mod waveform;
