// SPDX-License-Identifier: Apache-2.0

use assertforge::eval::adjudicate::{Budget, Counterexample};
use assertforge::eval::report::{aggregate, average_line, render_markdown, CoiSummary, Counts, Verdict, VerdictOutcome};
use assertforge::generator::{Category, GenerationPlan, Group, SignalPlan, Source};
use assertforge_hdl::rtl::Stimulus;
use assertforge_hdl::signal::SignalRole;
use assertforge_hdl::trace::Trace;

use crate::ensure;

const W: Category = Category::Width;
const C: Category = Category::Connectivity;
const F: Category = Category::Function;

/// (group, role, members, [(category, generated, syntax-correct, passed)])
type RowSpec<'a> = (Group, Option<SignalRole>, usize, &'a [(Category, u64, u64, u64)]);

/// Reference breakdown of 65 assertions over 23 signals and two diagrams.
const TABLE: &[RowSpec<'static>] = &[
    (Group::Io, Some(SignalRole::Clock), 1, &[(W, 1, 1, 1)]),
    (Group::Io, Some(SignalRole::Reset), 2, &[(W, 2, 2, 2)]),
    (Group::Io, Some(SignalRole::Control), 3, &[(W, 3, 3, 3), (C, 4, 4, 1)]),
    (Group::Io, Some(SignalRole::Data), 11, &[(W, 11, 11, 11)]),
    (Group::Reg, Some(SignalRole::Control), 2, &[(W, 2, 2, 2), (C, 10, 10, 9), (F, 13, 13, 13)]),
    (Group::Reg, Some(SignalRole::Data), 4, &[(W, 4, 4, 4), (F, 6, 6, 4)]),
    (Group::Waveform, None, 0, &[(F, 9, 9, 6)]),
];

fn failing() -> VerdictOutcome {
    let cex = Counterexample {
        stimulus_id: "reset_pulse".into(),
        seed: None,
        trace_index: 0,
        cycle: 0,
        stimulus: Stimulus::default(),
        slice: Trace::default(),
    };
    VerdictOutcome::Fail { counterexample: Box::new(cex) }
}

/// `g` verdicts: `p` passes (every third one vacuous), `s - p` failures and
/// `g - s` syntax errors.
fn outcomes(g: u64, s: u64, p: u64) -> Vec<VerdictOutcome> {
    (0..g)
        .map(|i| {
            if i < p {
                if i % 3 == 2 {
                    VerdictOutcome::VacuousPass
                } else {
                    VerdictOutcome::Pass
                }
            } else if i < s {
                failing()
            } else {
                VerdictOutcome::SyntaxError { message: "expected `)`".into() }
            }
        })
        .collect()
}

fn build(design: &str, table: &[RowSpec<'_>]) -> assertforge::eval::report::EvalReport {
    let mut plan = GenerationPlan { signals: Vec::new(), behaviors: 0 };
    let mut verdicts = Vec::new();
    for (ri, &(group, role, members, cells)) in table.iter().enumerate() {
        let cats: Vec<Category> = cells.iter().map(|c| c.0).collect();
        let names: Vec<String> = (0..members.max(1)).map(|m| format!("r{ri}_s{m}")).collect();
        if let Some(role) = role {
            for n in &names {
                plan.signals.push(SignalPlan { signal: n.clone(), group, role, categories: cats.clone() });
            }
        }
        for &(cat, g, s, p) in cells {
            if group == Group::Waveform {
                plan.behaviors += g as usize;
            }
            for (k, outcome) in outcomes(g, s, p).into_iter().enumerate() {
                verdicts.push(Verdict {
                    index: verdicts.len(),
                    signal: names[k % names.len()].clone(),
                    category: cat,
                    source: if group == Group::Waveform { Source::Waveform } else { Source::NaturalLanguage },
                    group,
                    role,
                    text: format!("assert property (@(posedge clk) x{k});"),
                    outcome,
                    checked_cycles: 0,
                    attempts: None,
                });
            }
        }
    }
    aggregate(design, verdicts, &plan, CoiSummary::default(), Budget::default())
}

fn single(design: &str, g: u64, s: u64, p: u64) -> Counts {
    build(design, &[(Group::Reg, Some(SignalRole::Control), 1, &[(F, g, s, p)])]).design_total
}

fn expect(what: &str, got: String, want: &str) -> Result<(), String> {
    ensure(got == want, || format!("{what}: got {got:?}, want {want:?}"))
}

pub fn run() -> Result<String, String> {
    let r = build("i2c", TABLE);
    for (row, &(group, role, _, cells)) in r.rows.iter().zip(TABLE) {
        ensure(row.group == group && row.role == role, || format!("row order: {:?}", row.label()))?;
        for &(cat, g, s, p) in cells {
            let got = row.cell(cat).map(Counts::triple).unwrap_or_else(|| "/".into());
            expect(&format!("{} {cat}", row.label()), got, &format!("{g}/{s}/{p}"))?;
        }
    }
    ensure(r.rows.len() == TABLE.len(), || format!("{} rows", r.rows.len()))?;
    expect("width total", r.totals.width.triple(), "23/23/23")?;
    expect("connectivity total", r.totals.connectivity.triple(), "14/14/10")?;
    expect("function total", r.totals.function.triple(), "28/28/23")?;
    expect("width line", r.totals.width.percent_line(), "100%/100%")?;
    expect("connectivity line", r.totals.connectivity.percent_line(), "100%/71%")?;
    expect("function line", r.totals.function.percent_line(), "100%/82%")?;
    expect("design total", r.design_total.triple(), "65/65/56")?;
    expect("design line", r.design_total.percent_line(), "100%/86%")?;
    let md = render_markdown(&r);
    for needle in ["| IO | Control(3) | 3/3/3 | 4/4/1 | / |", "Design total: 65/65/56", "100%/86%"] {
        ensure(md.contains(needle), || format!("markdown lacks {needle:?}"))?;
    }

    let ecg = single("ecg", 22, 22, 20);
    let pairing = single("pairing", 15, 15, 14);
    expect("ecg", ecg.triple(), "22/22/20")?;
    expect("ecg line", ecg.percent_line(), "100%/91%")?;
    expect("pairing", pairing.triple(), "15/15/14")?;
    expect("pairing line", pairing.percent_line(), "100%/93%")?;
    expect("average", average_line(&[r.design_total, ecg, pairing]), "100%/90%")?;

    // a weaker generator over the same three designs, with syntax failures
    let base = [single("i2c", 75, 27, 8), single("ecg", 11, 7, 0), single("pairing", 12, 8, 1)];
    let lines: Vec<String> = base.iter().map(Counts::percent_line).collect();
    expect("baseline lines", lines.join(" "), "36%/11% 64%/0% 67%/8%")?;
    expect("baseline average", average_line(&base), "56%/6%")?;
    Ok("65/65/56 100%/86%; 22/22/20 100%/91%; 15/15/14 100%/93%; average 100%/90%".into())
}
