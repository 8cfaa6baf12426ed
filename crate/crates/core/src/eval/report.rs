// SPDX-License-Identifier: Apache-2.0
//! Verdicts and their aggregation into per-design reports.

use std::fmt::Write as _;

use assertforge_hdl::signal::SignalRole;
use serde::{Deserialize, Serialize};

use super::adjudicate::{Budget, Counterexample};
use super::check::AttemptCounts;
use crate::generator::{Category, GenerationPlan, Group, Source};
use crate::util::percent;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerdictOutcome {
    SyntaxError { message: String },
    Unsupported { message: String },
    BindError { message: String },
    Fail { counterexample: Box<Counterexample> },
    Pass,
    VacuousPass,
    Undetermined,
}

impl VerdictOutcome {
    pub fn syntax_correct(&self) -> bool {
        !matches!(self, VerdictOutcome::SyntaxError { .. } | VerdictOutcome::Unsupported { .. } | VerdictOutcome::BindError { .. })
    }

    /// Counted as passed: non-vacuous and vacuous passes together.
    pub fn passed(&self) -> bool {
        matches!(self, VerdictOutcome::Pass | VerdictOutcome::VacuousPass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            VerdictOutcome::SyntaxError { .. } => "syntax_error",
            VerdictOutcome::Unsupported { .. } => "unsupported",
            VerdictOutcome::BindError { .. } => "bind_error",
            VerdictOutcome::Fail { .. } => "fail",
            VerdictOutcome::Pass => "pass",
            VerdictOutcome::VacuousPass => "vacuous_pass",
            VerdictOutcome::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Position in the assertion list.
    pub index: usize,
    pub signal: String,
    pub category: Category,
    pub source: Source,
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<SignalRole>,
    pub text: String,
    #[serde(flatten)]
    pub outcome: VerdictOutcome,
    pub checked_cycles: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<AttemptCounts>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub generated: u64,
    pub syntax_correct: u64,
    /// `pass + vacuous_pass`.
    pub passed: u64,
    pub pass: u64,
    pub vacuous_pass: u64,
    pub undetermined: u64,
    pub fail: u64,
    pub syntax_error: u64,
    pub unsupported: u64,
    pub bind_error: u64,
}

impl Counts {
    pub fn add(&mut self, o: &VerdictOutcome) {
        self.generated += 1;
        self.syntax_correct += o.syntax_correct() as u64;
        self.passed += o.passed() as u64;
        match o {
            VerdictOutcome::SyntaxError { .. } => self.syntax_error += 1,
            VerdictOutcome::Unsupported { .. } => self.unsupported += 1,
            VerdictOutcome::BindError { .. } => self.bind_error += 1,
            VerdictOutcome::Fail { .. } => self.fail += 1,
            VerdictOutcome::Pass => self.pass += 1,
            VerdictOutcome::VacuousPass => self.vacuous_pass += 1,
            VerdictOutcome::Undetermined => self.undetermined += 1,
        }
    }

    pub fn merge(&mut self, o: &Counts) {
        self.generated += o.generated;
        self.syntax_correct += o.syntax_correct;
        self.passed += o.passed;
        self.pass += o.pass;
        self.vacuous_pass += o.vacuous_pass;
        self.undetermined += o.undetermined;
        self.fail += o.fail;
        self.syntax_error += o.syntax_error;
        self.unsupported += o.unsupported;
        self.bind_error += o.bind_error;
    }

    /// `generated/syntax_correct/passed`.
    pub fn triple(&self) -> String {
        format!("{}/{}/{}", self.generated, self.syntax_correct, self.passed)
    }

    pub fn syntax_percent(&self) -> u64 {
        percent(self.syntax_correct, self.generated)
    }

    pub fn pass_percent(&self) -> u64 {
        percent(self.passed, self.generated)
    }

    /// `syntax%/pass%`, both relative to the generated count.
    pub fn percent_line(&self) -> String {
        format!("{}%/{}%", self.syntax_percent(), self.pass_percent())
    }

    pub fn is_monotone(&self) -> bool {
        self.generated >= self.syntax_correct && self.syntax_correct >= self.passed
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<SignalRole>,
    /// Planned signals (rows by role) or behaviors (waveform row).
    pub members: usize,
    /// `None` where the category is not requested for this row.
    pub width: Option<Counts>,
    pub connectivity: Option<Counts>,
    pub function: Option<Counts>,
}

impl Row {
    pub fn label(&self) -> String {
        match self.role {
            None => "Waveform".to_string(),
            Some(r) => {
                let s = r.to_string();
                format!("{}{}({})", s[..1].to_uppercase(), &s[1..], self.members)
            }
        }
    }

    pub fn cell(&self, c: Category) -> Option<&Counts> {
        match c {
            Category::Width => self.width.as_ref(),
            Category::Connectivity => self.connectivity.as_ref(),
            Category::Function => self.function.as_ref(),
        }
    }

    fn cell_mut(&mut self, c: Category) -> &mut Option<Counts> {
        match c {
            Category::Width => &mut self.width,
            Category::Connectivity => &mut self.connectivity,
            Category::Function => &mut self.function,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoiFigure {
    pub counted: usize,
    pub total: usize,
    pub coverage: f64,
}

impl CoiFigure {
    pub fn percent(&self) -> u64 {
        percent(self.counted as u64, self.total as u64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoiSummary {
    pub overall: CoiFigure,
    pub width: CoiFigure,
    pub connectivity: CoiFigure,
    pub function: CoiFigure,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub width: Counts,
    pub connectivity: Counts,
    pub function: Counts,
}

impl CategoryTotals {
    pub fn get(&self, c: Category) -> &Counts {
        match c {
            Category::Width => &self.width,
            Category::Connectivity => &self.connectivity,
            Category::Function => &self.function,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub design: String,
    pub budget: Budget,
    pub rows: Vec<Row>,
    pub totals: CategoryTotals,
    pub design_total: Counts,
    pub coi: CoiSummary,
    pub notes: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

const CATEGORIES: [Category; 3] = [Category::Width, Category::Connectivity, Category::Function];

const ROW_ORDER: [(Group, Option<SignalRole>); 7] = [
    (Group::Io, Some(SignalRole::Clock)),
    (Group::Io, Some(SignalRole::Reset)),
    (Group::Io, Some(SignalRole::Control)),
    (Group::Io, Some(SignalRole::Data)),
    (Group::Reg, Some(SignalRole::Control)),
    (Group::Reg, Some(SignalRole::Data)),
    (Group::Waveform, None),
];

fn row_key(v: &Verdict) -> (Group, Option<SignalRole>) {
    if v.source == Source::Waveform || v.group == Group::Waveform {
        (Group::Waveform, None)
    } else {
        let role = match v.role {
            // reg rows only distinguish control and data
            Some(SignalRole::Control) => Some(SignalRole::Control),
            Some(r) if v.group == Group::Io => Some(r),
            _ => Some(SignalRole::Data),
        };
        (v.group, role)
    }
}

/// Folds ordered verdicts into the report layout. Categories a row does not
/// request stay empty unless some verdict lands there anyway.
pub fn aggregate(design: &str, verdicts: Vec<Verdict>, plan: &GenerationPlan, coi: CoiSummary, budget: Budget) -> EvalReport {
    let mut rows: Vec<Row> = ROW_ORDER
        .iter()
        .map(|&(group, role)| {
            let members = match role {
                None => plan.behaviors,
                Some(r) => plan.signals.iter().filter(|s| s.group == group && row_role(s.group, s.role) == r).count(),
            };
            let requested = crate::generator::categories_for(group, role.unwrap_or(SignalRole::Data));
            let cell = |c| requested.contains(&c).then(Counts::default);
            Row {
                group,
                role,
                members,
                width: cell(Category::Width),
                connectivity: cell(Category::Connectivity),
                function: cell(Category::Function),
            }
        })
        .collect();
    let mut totals = CategoryTotals::default();
    let mut design_total = Counts::default();
    for v in &verdicts {
        let key = row_key(v);
        let row = rows.iter_mut().find(|r| (r.group, r.role) == key).expect("every key has a row");
        row.cell_mut(v.category).get_or_insert_with(Counts::default).add(&v.outcome);
        match v.category {
            Category::Width => totals.width.add(&v.outcome),
            Category::Connectivity => totals.connectivity.add(&v.outcome),
            Category::Function => totals.function.add(&v.outcome),
        }
        design_total.add(&v.outcome);
    }
    rows.retain(|r| r.members > 0 || CATEGORIES.iter().any(|c| r.cell(*c).is_some_and(|x| x.generated > 0)));
    let mut notes = vec![
        format!(
            "Verdicts come from bounded trace checking over {} traces of {} cycles (seed {}). A property can be refuted but never proven this way.",
            budget.n_traces, budget.n_cycles, budget.seed
        ),
        format!(
            "The passed count includes {} vacuous pass(es); {} non-vacuous.",
            design_total.vacuous_pass, design_total.pass
        ),
        format!("{} undetermined verdict(s) are not counted as passed.", design_total.undetermined),
        "Bind errors (unknown signals, out-of-range selects) count against syntax correctness.".to_string(),
        "COI coverage counts only assertions with a non-vacuous pass.".to_string(),
    ];
    if design_total.unsupported > 0 {
        notes.push(format!("{} assertion(s) use constructs outside the supported SVA subset.", design_total.unsupported));
    }
    EvalReport { design: design.to_string(), budget, rows, totals, design_total, coi, notes, verdicts }
}

fn row_role(group: Group, role: SignalRole) -> SignalRole {
    match (group, role) {
        (Group::Reg, SignalRole::Control) => SignalRole::Control,
        (Group::Reg, _) => SignalRole::Data,
        (_, r) => r,
    }
}

/// Mean of the per-design rounded percentages, itself rounded half up; an
/// empty design counts as 0.
pub fn mean_percent(parts: &[(u64, u64)]) -> u64 {
    if parts.is_empty() {
        return 0;
    }
    let k = parts.len() as u64;
    let sum: u64 = parts.iter().map(|&(n, d)| percent(n, d)).sum();
    (2 * sum + k) / (2 * k)
}

/// `syntax%/pass%` averaged over designs.
pub fn average_line(designs: &[Counts]) -> String {
    let s: Vec<(u64, u64)> = designs.iter().map(|c| (c.syntax_correct, c.generated)).collect();
    let p: Vec<(u64, u64)> = designs.iter().map(|c| (c.passed, c.generated)).collect();
    format!("{}%/{}%", mean_percent(&s), mean_percent(&p))
}

fn cell_text(c: Option<&Counts>) -> String {
    c.map_or("/".to_string(), Counts::triple)
}

pub fn render_markdown(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Assertion evaluation: {}\n", r.design);
    let _ = writeln!(out, "Cells are generated/syntax-correct/passed. `/` marks categories not requested for the row.\n");
    let _ = writeln!(out, "| Group | Signal type | Width | Connectivity | Function |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for row in &r.rows {
        let group = match row.group {
            Group::Io => "IO",
            Group::Reg => "Reg",
            Group::Waveform => "From waveform",
        };
        let _ = writeln!(
            out,
            "| {group} | {} | {} | {} | {} |",
            if row.role.is_some() { row.label() } else { String::new() },
            cell_text(row.width.as_ref()),
            cell_text(row.connectivity.as_ref()),
            cell_text(row.function.as_ref()),
        );
    }
    let _ = writeln!(
        out,
        "| Total | | {} | {} | {} |",
        r.totals.width.triple(),
        r.totals.connectivity.triple(),
        r.totals.function.triple()
    );
    let _ = writeln!(out, "\nDesign total: {}\n", r.design_total.triple());
    let _ = writeln!(
        out,
        "* Syntax/pass rate per category: width {}, connectivity {}, function {}",
        r.totals.width.percent_line(),
        r.totals.connectivity.percent_line(),
        r.totals.function.percent_line()
    );
    let _ = writeln!(out, "* Syntax/pass rate for the design: {}\n", r.design_total.percent_line());

    let _ = writeln!(out, "## Verdict breakdown\n");
    let _ = writeln!(out, "| Category | pass | vacuous pass | undetermined | fail | syntax error | unsupported | bind error |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for c in CATEGORIES {
        let t = r.totals.get(c);
        let _ = writeln!(
            out,
            "| {c} | {} | {} | {} | {} | {} | {} | {} |",
            t.pass, t.vacuous_pass, t.undetermined, t.fail, t.syntax_error, t.unsupported, t.bind_error
        );
    }
    let _ = writeln!(out, "\n## COI coverage\n");
    let _ = writeln!(out, "| Scope | Covered | Total | Coverage |");
    let _ = writeln!(out, "|---|---|---|---|");
    for (name, f) in [("width", &r.coi.width), ("connectivity", &r.coi.connectivity), ("function", &r.coi.function), ("overall", &r.coi.overall)] {
        let _ = writeln!(out, "| {name} | {} | {} | {}% |", f.counted, f.total, f.percent());
    }
    let fails: Vec<&Verdict> = r.verdicts.iter().filter(|v| matches!(v.outcome, VerdictOutcome::Fail { .. })).collect();
    if !fails.is_empty() {
        let _ = writeln!(out, "\n## Failures\n");
        for v in fails {
            if let VerdictOutcome::Fail { counterexample: c } = &v.outcome {
                let _ = writeln!(out, "* `{}` ({}, {}): fails at cycle {} of trace `{}`", v.text, v.signal, v.category, c.cycle, c.stimulus_id);
            }
        }
    }
    let _ = writeln!(out, "\n## Notes\n");
    for n in &r.notes {
        let _ = writeln!(out, "* {n}");
    }
    out
}
