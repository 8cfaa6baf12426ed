// SPDX-License-Identifier: Apache-2.0

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use assertforge_hdl::sva::parse_sva;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 10_000;
const MAX_LEN: usize = 64 * 1024;
const LIMIT: Duration = Duration::from_millis(50);

const VOCAB: &[&str] = &[
    "assert", "property", "(", ")", "@", "posedge", "negedge", "clk", "disable", "iff", "a", "b", "v", "|->",
    "|=>", "##", "##1", "[", "]", ":", "$", "1", "8'hff", "'b1", "!", "~", "&", "|", "^", "&&", "||", "==", "!=",
    "<", "<=", "+", "-", "<<", "$past", "$rose", "$stable", "$bits", ",", ";", "/*", "*/", "//", "\n", " ",
    "throughout", "[*", "{", "}", "?", "\"", "'", "\\", "`", "#", "9999999999999999999999",
];

const SEED: &str = "assert property (@(posedge clk) disable iff (!rst_n) $rose(a) ##[1:3] v[7:4] == 4'hf |=> $past(b, 2) && !c);";

/// Raw bytes, printable noise, vocabulary soup, an edited valid assertion,
/// or a deeply nested prefix run.
fn input(rng: &mut ChaCha8Rng) -> Vec<u8> {
    // log-uniform length up to MAX_LEN
    let len = (2f64.powf(rng.random_range(0.0..16.0)) as usize).min(MAX_LEN);
    match rng.random_range(0..5) {
        0 => (0..len).map(|_| rng.random()).collect(),
        1 => (0..len).map(|_| rng.random_range(0x20u8..0x7f)).collect(),
        2 => {
            let mut s = Vec::new();
            while s.len() < len {
                s.extend_from_slice(VOCAB[rng.random_range(0..VOCAB.len())].as_bytes());
                if rng.random_bool(0.5) {
                    s.push(b' ');
                }
            }
            s.truncate(len);
            s
        }
        3 => {
            let mut s = SEED.as_bytes().to_vec();
            for _ in 0..rng.random_range(1..8) {
                let at = rng.random_range(0..s.len());
                match rng.random_range(0..3) {
                    0 => s[at] = rng.random(),
                    1 => {
                        s.remove(at);
                    }
                    _ => {
                        let tok = VOCAB[rng.random_range(0..VOCAB.len())].as_bytes();
                        s.splice(at..at, tok.iter().copied());
                    }
                }
                if s.is_empty() {
                    break;
                }
            }
            s
        }
        _ => {
            let open = ["(", "!", "~", "$past(", "-", "& "][rng.random_range(0..6)];
            let mut s = b"assert property (@(posedge clk) ".to_vec();
            while s.len() + open.len() < len {
                s.extend_from_slice(open.as_bytes());
            }
            s
        }
    }
}

pub fn run() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut accepted = 0;
    let mut slowest = Duration::ZERO;
    let mut bytes = 0;
    for i in 0..CASES {
        let raw = input(&mut rng);
        bytes += raw.len();
        let text = String::from_utf8_lossy(&raw);
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(|| parse_sva(&text).is_ok()));
        let took = start.elapsed();
        slowest = slowest.max(took);
        match r {
            Ok(ok) => accepted += ok as usize,
            Err(_) => return Err(format!("case {i} ({} bytes) panicked", raw.len())),
        }
        if took > LIMIT {
            return Err(format!("case {i} ({} bytes) took {took:?}", raw.len()));
        }
    }
    Ok(format!("{CASES} inputs, {bytes} bytes, {accepted} accepted, slowest {slowest:?}"))
}
