//! Markdown rendering of cohort reports: subject rows, a `Mean ± SD`
//! footer per table, then the comparison battery.

use std::fmt::Write as _;

use shoulder_core::stats::cohort::{format_mean_sd, Table, TestOutcome};
use shoulder_core::stats::{Method, SdConvention, Sidedness, TestResult};

use super::report::CohortReport;

fn cell(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.decimals$}"))
}

pub fn render_table(t: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "### Table {}. {}\n", t.id, t.caption);
    let headers: Vec<String> = t.columns.iter().map(|c| format!("{} {}", c.parameter.label(), c.cohort.label())).collect();
    let _ = writeln!(out, "| {} | {} |", t.row_label, headers.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(headers.len()));
    for row in &t.rows {
        let cells: Vec<String> =
            row.values.iter().zip(&t.columns).map(|(v, c)| cell(*v, c.parameter.decimals())).collect();
        let _ = writeln!(out, "| {} | {} |", row.subject, cells.join(" | "));
    }
    let footers: Vec<String> = t
        .footer
        .iter()
        .zip(&t.columns)
        .map(|(f, c)| f.as_ref().map_or_else(|| "n/a".to_string(), |f| format_mean_sd(f, c.parameter.decimals())))
        .collect();
    let _ = writeln!(out, "| Mean ± SD | {} |", footers.join(" | "));
    let conv = match t.sd_convention {
        SdConvention::Sample => "sample (n - 1)",
        SdConvention::Population => "population (n)",
    };
    let _ = writeln!(out, "\nSD convention: {conv}.");
    out
}

fn p_cell(r: &TestResult) -> String {
    match (r.method, r.exact_fraction) {
        (Method::Exact, Some((k, n))) => format!("{:.4} ({k}/{n})", r.p),
        _ => format!("{:.4}", r.p),
    }
}

fn method(r: &TestResult) -> &'static str {
    match r.method {
        Method::Exact => "exact",
        Method::NormalApprox => "normal approx.",
    }
}

pub fn render_battery(report: &CohortReport, primary: Sidedness) -> String {
    let mut out = String::new();
    let (first, second) = match primary {
        Sidedness::Two => ("two-sided", "one-sided"),
        Sidedness::One => ("one-sided", "two-sided"),
    };
    let _ = writeln!(out, "### Comparisons\n");
    let _ = writeln!(out, "| Parameter | Comparison | n | m | Statistic | Method | p ({first}) | p ({second}) |");
    let _ = writeln!(out, "|---|---|---:|---:|---:|---|---:|---:|");
    for e in &report.tables.tests {
        let name = e.parameter.label();
        let cmp = e.comparison.label();
        match &e.outcome {
            TestOutcome::Done { two_sided, one_sided } => {
                let (a, b) = match primary {
                    Sidedness::Two => (two_sided, one_sided),
                    Sidedness::One => (one_sided, two_sided),
                };
                let m = a.m.map_or_else(|| "-".to_string(), |m| m.to_string());
                let _ = writeln!(
                    out,
                    "| {name} | {cmp} | {} | {m} | {} | {} | {} | {} |",
                    a.n,
                    a.statistic,
                    method(a),
                    p_cell(a),
                    p_cell(b)
                );
            }
            TestOutcome::Skipped { reason } => {
                let _ = writeln!(out, "| {name} | {cmp} | - | - | - | skipped: {reason} | - | - |");
            }
        }
    }
    out
}

pub fn render(report: &CohortReport, primary: Sidedness) -> String {
    let mut out = String::new();
    for t in &report.tables.tables {
        out.push_str(&render_table(t));
        out.push('\n');
    }
    out.push_str(&render_battery(report, primary));
    if !report.notes.is_empty() {
        out.push_str("\n### Notes\n\n");
        for n in &report.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    let _ = writeln!(out, "\nConfig hash: `{}`", report.config_hash);
    out
}
