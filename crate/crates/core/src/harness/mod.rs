//! Batch evaluation of policies against the offline optimum.

mod report;

pub use report::{
    format_table, report_csv, report_json, write_report_csv, write_report_json, CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::batman;
use crate::batman_rate;
use crate::error::{OlimError, Result};
use crate::feasibility::{check_feasibility, schedule_cost};
use crate::math::AlphaContext;
use crate::model::{Instance, InventorySpec, Schedule};
use crate::offline::solve_opt;

/// Absolute slack allowed by [`check_competitive_bound`].
pub const BOUND_SLACK: f64 = 1e-6;

/// What a policy sees when asked for a schedule.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub instance: &'a Instance,
    /// The preceding instance in id order, if any.
    pub yesterday: Option<&'a Instance>,
    pub spec: &'a InventorySpec,
}

/// A procurement policy the harness can evaluate. Implementations must be
/// stateless across calls; each call builds its own state.
pub trait Policy: Sync {
    fn name(&self) -> String;
    fn schedule(&self, input: &EvalInput<'_>) -> Result<Schedule>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Opt,
    NoStr,
    OnFix,
    PreDay,
    BatMan,
    BatManRate,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Opt,
        Algorithm::NoStr,
        Algorithm::OnFix,
        Algorithm::PreDay,
        Algorithm::BatMan,
        Algorithm::BatManRate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Opt => "OPT",
            Algorithm::NoStr => "NoSTR",
            Algorithm::OnFix => "OnFix",
            Algorithm::PreDay => "PreDay",
            Algorithm::BatMan => "BatMan",
            Algorithm::BatManRate => "BatManRate",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = OlimError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                OlimError::Config(format!(
                    "unknown algorithm `{s}` (expected one of opt, nostr, onfix, preday, batman, batmanrate)"
                ))
            })
    }
}

impl Policy for Algorithm {
    fn name(&self) -> String {
        self.label().to_string()
    }

    fn schedule(&self, input: &EvalInput<'_>) -> Result<Schedule> {
        let (inst, spec) = (input.instance, input.spec);
        match self {
            Algorithm::Opt => solve_opt(inst, spec),
            Algorithm::NoStr => Ok(baselines::no_str(inst)),
            Algorithm::OnFix => Ok(baselines::on_fix(inst, spec)),
            Algorithm::PreDay => baselines::pre_day(inst, input.yesterday, spec),
            Algorithm::BatMan => batman::run(inst, spec),
            Algorithm::BatManRate => batman_rate::run_rate(inst, spec),
        }
    }
}

/// One (instance, algorithm) result.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub algorithm: String,
    pub cost: f64,
    pub opt_cost: f64,
    /// `cost / opt_cost`; `None` when flagged or failed.
    pub cost_ratio: Option<f64>,
    /// OPT is zero and the cost exceeds the additive constant `B * p_max`.
    pub ratio_flagged: bool,
    pub feasible: bool,
    pub violations: usize,
    pub alpha: f64,
    pub capacity: f64,
    pub p_max: f64,
    pub bound_margin: f64,
    pub bound_pass: bool,
    pub error: Option<String>,
}

/// Per-algorithm summary over all instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub algorithm: String,
    pub instances: usize,
    /// Arithmetic mean of per-instance ratios.
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub feasible: usize,
    pub bound_pass: usize,
    pub flagged: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub spec: InventorySpec,
    /// Instance-major, OPT first, then policies in the order given.
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

impl EvaluationReport {
    pub fn rows_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn aggregate(&self, algorithm: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub pass: bool,
    /// `alpha * OPT + B * p_max - cost`.
    pub margin: f64,
}

/// `cost <= alpha * OPT + B * p_max` up to [`BOUND_SLACK`].
pub fn check_competitive_bound(row: &ReportRow) -> BoundCheck {
    let margin = bound_margin(row.cost, row.opt_cost, row.alpha, row.capacity, row.p_max);
    BoundCheck {
        pass: row.error.is_none() && margin >= -BOUND_SLACK,
        margin,
    }
}

fn bound_margin(cost: f64, opt: f64, alpha: f64, capacity: f64, p_max: f64) -> f64 {
    alpha * opt + capacity * p_max - cost
}

fn cost_ratio(cost: f64, opt: f64, capacity: f64, p_max: f64) -> (Option<f64>, bool) {
    if opt > 0.0 {
        (Some(cost / opt), false)
    } else if cost <= capacity * p_max + BOUND_SLACK {
        (Some(1.0), false)
    } else {
        (None, true)
    }
}

struct Baseline {
    opt_cost: f64,
    alpha: f64,
}

fn failed_row(
    id: &str,
    algorithm: String,
    spec: &InventorySpec,
    inst: &Instance,
    err: &OlimError,
) -> ReportRow {
    ReportRow {
        instance: id.to_string(),
        algorithm,
        cost: f64::NAN,
        opt_cost: f64::NAN,
        cost_ratio: None,
        ratio_flagged: false,
        feasible: false,
        violations: 0,
        alpha: f64::NAN,
        capacity: spec.capacity,
        p_max: inst.bounds().p_max(),
        bound_margin: f64::NAN,
        bound_pass: false,
        error: Some(err.to_string()),
    }
}

fn score(
    id: &str,
    algorithm: String,
    schedule: Result<Schedule>,
    input: &EvalInput<'_>,
    base: &Baseline,
) -> ReportRow {
    let (inst, spec) = (input.instance, input.spec);
    let checked = schedule.and_then(|s| {
        let cost = schedule_cost(&s, inst)?;
        let violations = check_feasibility(&s, inst, spec)?.len();
        Ok((cost, violations))
    });
    match checked {
        Err(e) => {
            let mut row = failed_row(id, algorithm, spec, inst, &e);
            row.opt_cost = base.opt_cost;
            row.alpha = base.alpha;
            row
        }
        Ok((cost, violations)) => {
            let p_max = inst.bounds().p_max();
            let (ratio, flagged) = cost_ratio(cost, base.opt_cost, spec.capacity, p_max);
            let margin = bound_margin(cost, base.opt_cost, base.alpha, spec.capacity, p_max);
            ReportRow {
                instance: id.to_string(),
                algorithm,
                cost,
                opt_cost: base.opt_cost,
                cost_ratio: ratio,
                ratio_flagged: flagged,
                feasible: violations == 0,
                violations,
                alpha: base.alpha,
                capacity: spec.capacity,
                p_max,
                bound_margin: margin,
                bound_pass: margin >= -BOUND_SLACK,
                error: None,
            }
        }
    }
}

fn evaluate_one(id: &str, input: &EvalInput<'_>, policies: &[&dyn Policy]) -> Vec<ReportRow> {
    let opt_name = Algorithm::Opt.name();
    let base = AlphaContext::new(input.instance.bounds()).and_then(|ctx| {
        let opt = solve_opt(input.instance, input.spec)?;
        Ok((ctx.alpha(), opt))
    });
    let (alpha, opt) = match base {
        Ok(v) => v,
        Err(e) => {
            let names = std::iter::once(opt_name.clone())
                .chain(policies.iter().map(|p| p.name()).filter(|n| *n != opt_name));
            return names
                .map(|n| failed_row(id, n, input.spec, input.instance, &e))
                .collect();
        }
    };
    let base = Baseline {
        opt_cost: schedule_cost(&opt, input.instance).unwrap_or(opt.total_cost),
        alpha,
    };
    let mut rows = vec![score(id, opt_name.clone(), Ok(opt), input, &base)];
    for p in policies {
        let name = p.name();
        if name == opt_name {
            continue;
        }
        rows.push(score(id, name, p.schedule(input), input, &base));
    }
    rows
}

/// Evaluates every policy on every instance, plus OPT.
///
/// Instances are processed in id order, so the report does not depend on the
/// order they are passed in or on `workers`. Policy failures are recorded in
/// the affected row.
pub fn evaluate(
    instances: &[(String, Instance)],
    policies: &[&dyn Policy],
    spec: &InventorySpec,
    workers: usize,
) -> Result<EvaluationReport> {
    if instances.is_empty() {
        return Err(OlimError::Config("no instances to evaluate".into()));
    }
    if policies.is_empty() {
        return Err(OlimError::Config("no algorithms to evaluate".into()));
    }
    let mut order: Vec<&(String, Instance)> = instances.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = order.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(OlimError::Config(format!(
            "duplicate instance id `{}`",
            w[0].0
        )));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| OlimError::Config(format!("cannot start worker pool: {e}")))?;
    let per_instance: Vec<Vec<ReportRow>> = pool.install(|| {
        order
            .par_iter()
            .enumerate()
            .map(|(k, (id, inst))| {
                let input = EvalInput {
                    instance: inst,
                    yesterday: k.checked_sub(1).map(|j| &order[j].1),
                    spec,
                };
                evaluate_one(id, &input, policies)
            })
            .collect()
    });
    let rows: Vec<ReportRow> = per_instance.into_iter().flatten().collect();

    let opt_name = Algorithm::Opt.name();
    let mut names = vec![opt_name.clone()];
    for p in policies {
        let n = p.name();
        if !names.contains(&n) {
            names.push(n);
        }
    }
    let aggregates = names.into_iter().map(|n| aggregate(&n, &rows)).collect();
    Ok(EvaluationReport {
        spec: *spec,
        rows,
        aggregates,
    })
}

fn aggregate(name: &str, rows: &[ReportRow]) -> Aggregate {
    let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.algorithm == name).collect();
    let ratios: Vec<f64> = mine.iter().filter_map(|r| r.cost_ratio).collect();
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let max_ratio = ratios.iter().copied().reduce(f64::max);
    Aggregate {
        algorithm: name.to_string(),
        instances: mine.len(),
        mean_ratio,
        max_ratio,
        feasible: mine.iter().filter(|r| r.feasible).count(),
        bound_pass: mine.iter().filter(|r| r.bound_pass).count(),
        flagged: mine.iter().filter(|r| r.ratio_flagged).count(),
        errors: mine.iter().filter(|r| r.error.is_some()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_random, gen_reservation_adversary, RandomConfig};
    use crate::model::PriceBounds;

    fn all() -> Vec<&'static dyn Policy> {
        Algorithm::ALL.iter().map(|a| a as &dyn Policy).collect()
    }

    fn random_set(n: u64, bounds: PriceBounds) -> Vec<(String, Instance)> {
        (0..n)
            .map(|k| {
                let inst = gen_random(&RandomConfig::new(100 + k, 48, bounds, 2.0)).unwrap();
                (format!("day-{k:02}"), inst)
            })
            .collect()
    }

    /// Buys `B` extra units at `p_max` on top of every demand it serves.
    struct Wasteful;

    impl Policy for Wasteful {
        fn name(&self) -> String {
            "Wasteful".into()
        }

        fn schedule(&self, input: &EvalInput<'_>) -> Result<Schedule> {
            let mut s = baselines::no_str(input.instance);
            let extra = input.spec.capacity;
            if let Some(t) = input
                .instance
                .prices()
                .position(|p| p == input.instance.bounds().p_max())
            {
                s.x[t] += extra;
                for b in &mut s.b[t..] {
                    *b += extra;
                }
                s.total_cost += extra * input.instance.bounds().p_max();
            }
            Ok(s)
        }
    }

    #[test]
    fn algorithm_names_roundtrip() {
        for a in Algorithm::ALL {
            assert_eq!(a.label().to_lowercase().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }

    #[test]
    fn constant_price_ratios_are_one() {
        let b = PriceBounds::new(1.0, 5.0).unwrap();
        let inst = Instance::from_series(&[3.0; 6], &[1.0, 0.0, 2.0, 0.5, 0.0, 1.0], b).unwrap();
        let spec = InventorySpec::unconstrained(4.0).unwrap();
        let pols: Vec<&dyn Policy> = vec![&Algorithm::NoStr, &Algorithm::BatMan, &Algorithm::Opt];
        let r = evaluate(&[("c".into(), inst)], &pols, &spec, 1).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert!((row.cost_ratio.unwrap() - 1.0).abs() <= 1e-7, "{row:?}");
        }
    }

    #[test]
    fn adversary_ratio_near_alpha() {
        let ctx = AlphaContext::new(PriceBounds::new(1.0, 16.0).unwrap()).unwrap();
        let inst = gen_reservation_adversary(&ctx, 1.0, 1.1, 10_000).unwrap();
        let spec = InventorySpec::unconstrained(1.0).unwrap();
        let r = evaluate(&[("adv".into(), inst)], &[&Algorithm::BatMan], &spec, 1).unwrap();
        let ratio = r.rows_for("BatMan").next().unwrap().cost_ratio.unwrap();
        assert!((ratio - ctx.alpha()).abs() <= 0.01 * ctx.alpha());
    }

    #[test]
    fn random_days_reproducible_and_sound() {
        let b = PriceBounds::new(1.0, 12.0).unwrap();
        let set = random_set(30, b);
        let spec = InventorySpec::new(10.0, 2.0, 3.5).unwrap();
        let one = evaluate(&set, &all(), &spec, 1).unwrap();
        let four = evaluate(&set, &all(), &spec, 4).unwrap();
        assert_eq!(
            one.aggregate("BatManRate")
                .unwrap()
                .mean_ratio
                .unwrap()
                .to_bits(),
            four.aggregate("BatManRate")
                .unwrap()
                .mean_ratio
                .unwrap()
                .to_bits()
        );
        assert_eq!(report_csv(&one), report_csv(&four));
        assert_eq!(report_json(&one), report_json(&four));
        for row in &one.rows {
            if row.algorithm == "BatMan" {
                // finite rates below capacity are out of BatMan's contract
                assert!(row.error.is_some());
                continue;
            }
            assert!(row.error.is_none(), "{row:?}");
            assert!(row.feasible);
            assert!(row.cost_ratio.unwrap() >= 1.0 - 1e-7);
        }
        for row in one.rows_for("BatManRate") {
            assert!(check_competitive_bound(row).pass);
        }
        assert_eq!(one.aggregate("BatMan").unwrap().errors, 30);
    }

    #[test]
    fn permutation_invariant() {
        let b = PriceBounds::new(1.0, 12.0).unwrap();
        let set = random_set(6, b);
        let mut rev = set.clone();
        rev.reverse();
        let spec = InventorySpec::unconstrained(8.0).unwrap();
        let a = evaluate(&set, &all(), &spec, 2).unwrap();
        let c = evaluate(&rev, &all(), &spec, 3).unwrap();
        assert_eq!(a, c);
        let dup = vec![set[0].clone(), set[0].clone()];
        assert!(evaluate(&dup, &all(), &spec, 1).is_err());
        assert!(evaluate(&[], &all(), &spec, 1).is_err());
        assert!(evaluate(&set, &[], &spec, 1).is_err());
    }

    #[test]
    fn zero_demand_uses_additive_constant() {
        let b = PriceBounds::new(1.0, 8.0).unwrap();
        let inst = Instance::from_series(&[8.0, 1.5, 3.0, 8.0], &[0.0; 4], b).unwrap();
        let spec = InventorySpec::unconstrained(2.0).unwrap();
        let r = evaluate(&[("idle".into(), inst)], &[&Algorithm::BatMan], &spec, 1).unwrap();
        let bat = r.rows_for("BatMan").next().unwrap();
        assert_eq!(bat.opt_cost, 0.0);
        assert!(bat.cost > 0.0 && bat.cost <= 2.0 * 8.0);
        assert_eq!(bat.cost_ratio, Some(1.0));
        assert!(check_competitive_bound(bat).pass);
        assert_eq!(cost_ratio(16.0 + 1e-3, 0.0, 2.0, 8.0), (None, true));
        assert_eq!(cost_ratio(16.0, 0.0, 2.0, 8.0), (Some(1.0), false));
    }

    #[test]
    fn broken_policy_fails_bound() {
        // OPT = 1, the policy pays 4 for demand plus 4 for the surplus: 8 > alpha + 4
        let b = PriceBounds::new(1.0, 4.0).unwrap();
        let inst = Instance::from_series(&[4.0, 1.0, 4.0], &[0.0, 0.0, 1.0], b).unwrap();
        let spec = InventorySpec::unconstrained(1.0).unwrap();
        let r = evaluate(
            &[("x".into(), inst)],
            &[&Wasteful, &Algorithm::BatMan],
            &spec,
            1,
        )
        .unwrap();
        let w = r.rows_for("Wasteful").next().unwrap();
        let check = check_competitive_bound(w);
        assert!(!check.pass && check.margin < 0.0, "{check:?}");
        assert!(check_competitive_bound(r.rows_for("BatMan").next().unwrap()).pass);
    }
}
