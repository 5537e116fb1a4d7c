//! CSV, JSON and text renderings of an [`EvaluationReport`].

use std::path::Path;

use serde::Serialize;

use super::{Aggregate, EvaluationReport, ReportRow};
use crate::error::{OlimError, Result};
use crate::numfmt::{fmt_num, Num};

pub const CSV_HEADER: [&str; 14] = [
    "instance",
    "algorithm",
    "cost",
    "opt_cost",
    "cost_ratio",
    "ratio_flagged",
    "feasible",
    "violations",
    "alpha",
    "capacity",
    "p_max",
    "bound_margin",
    "bound_pass",
    "error",
];

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One line per (instance, algorithm), in report order.
pub fn report_csv(report: &EvaluationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = "writing CSV into memory cannot fail";
    w.write_record(CSV_HEADER).expect(fail);
    for r in &report.rows {
        w.write_record([
            r.instance.clone(),
            r.algorithm.clone(),
            fmt_num(r.cost),
            fmt_num(r.opt_cost),
            opt_num(r.cost_ratio),
            r.ratio_flagged.to_string(),
            r.feasible.to_string(),
            r.violations.to_string(),
            fmt_num(r.alpha),
            fmt_num(r.capacity),
            fmt_num(r.p_max),
            fmt_num(r.bound_margin),
            if r.bound_pass { "pass" } else { "fail" }.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .expect(fail);
    }
    String::from_utf8(w.into_inner().expect(fail)).expect("CSV output is UTF-8")
}

#[derive(Serialize)]
struct JsonSpec {
    capacity: Num,
    rho_c: Num,
    rho_d: Num,
}

#[derive(Serialize)]
struct JsonAggregate<'a> {
    algorithm: &'a str,
    instances: usize,
    mean_ratio: Option<Num>,
    max_ratio: Option<Num>,
    feasible: usize,
    bound_pass: usize,
    flagged: usize,
    errors: usize,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    instance: &'a str,
    algorithm: &'a str,
    cost: Num,
    opt_cost: Num,
    cost_ratio: Option<Num>,
    ratio_flagged: bool,
    feasible: bool,
    violations: usize,
    alpha: Num,
    capacity: Num,
    p_max: Num,
    bound_margin: Num,
    bound_pass: bool,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    spec: JsonSpec,
    aggregates: Vec<JsonAggregate<'a>>,
    rows: Vec<JsonRow<'a>>,
}

fn json_aggregate(a: &Aggregate) -> JsonAggregate<'_> {
    JsonAggregate {
        algorithm: &a.algorithm,
        instances: a.instances,
        mean_ratio: a.mean_ratio.map(Num),
        max_ratio: a.max_ratio.map(Num),
        feasible: a.feasible,
        bound_pass: a.bound_pass,
        flagged: a.flagged,
        errors: a.errors,
    }
}

fn json_row(r: &ReportRow) -> JsonRow<'_> {
    JsonRow {
        instance: &r.instance,
        algorithm: &r.algorithm,
        cost: Num(r.cost),
        opt_cost: Num(r.opt_cost),
        cost_ratio: r.cost_ratio.map(Num),
        ratio_flagged: r.ratio_flagged,
        feasible: r.feasible,
        violations: r.violations,
        alpha: Num(r.alpha),
        capacity: Num(r.capacity),
        p_max: Num(r.p_max),
        bound_margin: Num(r.bound_margin),
        bound_pass: r.bound_pass,
        error: r.error.as_deref(),
    }
}

/// Spec, per-algorithm aggregates and all rows as pretty-printed JSON.
pub fn report_json(report: &EvaluationReport) -> String {
    let doc = JsonReport {
        spec: JsonSpec {
            capacity: Num(report.spec.capacity),
            rho_c: Num(report.spec.rho_c),
            rho_d: Num(report.spec.rho_d),
        },
        aggregates: report.aggregates.iter().map(json_aggregate).collect(),
        rows: report.rows.iter().map(json_row).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| OlimError::io(path, e))
}

pub fn write_report_csv(report: &EvaluationReport, path: &Path) -> Result<()> {
    write(path, &report_csv(report))
}

pub fn write_report_json(report: &EvaluationReport, path: &Path) -> Result<()> {
    write(path, &report_json(report))
}

/// Aggregate table for terminal output.
pub fn format_table(report: &EvaluationReport) -> String {
    let mut out = format!(
        "{:<12} {:>9} {:>12} {:>12} {:>9} {:>7} {:>7} {:>7}\n",
        "algorithm",
        "instances",
        "mean_ratio",
        "max_ratio",
        "feasible",
        "bound",
        "flagged",
        "errors"
    );
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    for a in &report.aggregates {
        out.push_str(&format!(
            "{:<12} {:>9} {:>12} {:>12} {:>9} {:>7} {:>7} {:>7}\n",
            a.algorithm,
            a.instances,
            cell(a.mean_ratio),
            cell(a.max_ratio),
            a.feasible,
            a.bound_pass,
            a.flagged,
            a.errors
        ));
    }
    out
}
