// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite. One PASS/FAIL line per criterion; nonzero exit on any
//! failure.

mod bm25;
mod coi;
mod corpus;
mod e2e;
mod fuzz;
mod planted;
mod report;
mod sim;
mod temporal;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

type Check = fn() -> Result<String, String>;

const CRITERIA: &[(&str, Check)] = &[
    ("sva parser corpus", corpus::run),
    ("sva parser fuzz", fuzz::run),
    ("coi oracle equivalence", coi::run),
    ("temporal semantics oracle", temporal::run),
    ("simulator semantics", sim::run),
    ("planted-bug detection", planted::run),
    ("report arithmetic", report::run),
    ("end-to-end determinism", e2e::determinism),
    ("retrieval ranking", bm25::run),
    ("no-network guarantee", e2e::offline),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

/// `Err` with `msg` unless `cond`.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
