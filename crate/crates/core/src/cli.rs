//! Command-line interface.
//!
//! Exit codes: 0 success, 2 bad arguments or invalid input data, 3 I/O
//! failure, 4 an algorithm produced an infeasible schedule.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::OlimError;
use crate::feasibility::check_feasibility;
use crate::harness::{
    check_competitive_bound, evaluate, format_table, write_report_csv, write_report_json,
    Algorithm, EvalInput, Policy, ReportRow,
};
use crate::instances::{
    gen_interleaved, gen_kmin, gen_random, gen_reservation_adversary, read_instance_csv,
    write_instance_csv, RandomConfig, DEFAULT_CAPACITY_FACTOR, DEFAULT_HORIZON,
};
use crate::math::AlphaContext;
use crate::model::{BoundMode, Instance, InventorySpec, PriceBounds, Schedule};
use crate::numfmt::{fmt_num, Num};
use crate::offline::solve_opt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// Environment variable capping the number of evaluation workers.
pub const THREADS_ENV: &str = "OLIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "olim",
    version,
    about = "Online procurement with inventory constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance CSV.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run one algorithm on one instance.
    Run(RunArgs),
    /// Evaluate several algorithms on a set of instances against OPT.
    Compare(CompareArgs),
    /// Check a schedule for feasibility and the competitive bound.
    Check(CheckArgs),
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// All demand in the final slot.
    Kmin {
        #[arg(long)]
        slots: usize,
        #[arg(long)]
        amount: f64,
        #[arg(long)]
        p_min: f64,
        #[arg(long)]
        p_max: f64,
        /// Comma-separated prices; drawn uniformly from the bounds when omitted.
        #[arg(long, value_delimiter = ',')]
        prices: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert a zero-demand slot at the reservation threshold around every slot.
    Interleave {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Falling prices without demand, then one expensive demand slot.
    Adversary {
        #[arg(long)]
        p_min: f64,
        #[arg(long)]
        p_max: f64,
        #[arg(long, default_value_t = 1.0)]
        amount: f64,
        /// Lowest price reached before the demand slot.
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform random prices and demands.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        slots: usize,
        #[arg(long)]
        p_min: f64,
        #[arg(long)]
        p_max: f64,
        #[arg(long, default_value_t = 1.0)]
        demand_scale: f64,
        #[arg(long, default_value_t = 0.25)]
        zero_prob: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number or `inf`"))?;
    if v.is_nan() {
        return Err("rate must not be NaN".into());
    }
    Ok(v)
}

#[derive(Debug, Clone, Args)]
struct SpecArgs {
    /// Storage capacity; defaults to 18 times the peak demand.
    #[arg(long)]
    capacity: Option<f64>,
    /// Charge rate limit per slot (`inf` for none).
    #[arg(long, value_parser = parse_rate, default_value = "inf")]
    rho_c: f64,
    /// Discharge rate limit per slot (`inf` for none).
    #[arg(long, value_parser = parse_rate, default_value = "inf")]
    rho_d: f64,
    /// Declared price bounds; inferred from the data when omitted.
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// Clamp out-of-bound prices and fill missing cells instead of failing.
    #[arg(long)]
    lenient: bool,
}

impl SpecArgs {
    fn bounds(&self) -> Result<Option<PriceBounds>, OlimError> {
        match (self.p_min, self.p_max) {
            (Some(lo), Some(hi)) => PriceBounds::new(lo, hi).map(Some),
            (None, None) => Ok(None),
            _ => Err(OlimError::Config(
                "--p-min and --p-max must be given together".into(),
            )),
        }
    }

    fn mode(&self) -> BoundMode {
        if self.lenient {
            BoundMode::Lenient
        } else {
            BoundMode::Strict
        }
    }

    fn spec(&self, peak_demand: f64) -> Result<InventorySpec, OlimError> {
        let capacity = self
            .capacity
            .unwrap_or(DEFAULT_CAPACITY_FACTOR * peak_demand);
        InventorySpec::new(capacity, self.rho_c, self.rho_d)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    instance: PathBuf,
    /// Previous day's instance, used by `preday`.
    #[arg(long)]
    yesterday: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    /// Schedule CSV output.
    #[arg(long)]
    out: PathBuf,
    /// JSON summary output; defaults to the schedule path with a `.json` extension.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Glob patterns of instance CSVs.
    #[arg(long = "instances", num_args = 1..)]
    instances: Vec<String>,
    /// Number of random instances to add.
    #[arg(long, default_value_t = 0)]
    random_count: u64,
    /// Seed of the first random instance; the k-th uses `seed + k`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    slots: usize,
    #[arg(long, default_value_t = 1.0)]
    demand_scale: f64,
    /// Comma-separated algorithm list.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "nostr,onfix,preday,batman,batmanrate"
    )]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    spec: SpecArgs,
    /// Worker threads; falls back to OLIM_THREADS, then the core count.
    #[arg(long)]
    workers: Option<usize>,
    /// Report CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Report JSON output; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    /// CSV with an `x` column of purchases, such as the output of `run`.
    #[arg(long)]
    schedule: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
}

enum Failure {
    Error(OlimError),
    Infeasible(String),
}

impl From<OlimError> for Failure {
    fn from(e: OlimError) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &OlimError) -> i32 {
    match e {
        OlimError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            EXIT_INFEASIBLE
        }
    }
}

fn cmd_gen(kind: GenKind) -> Result<(), Failure> {
    let (instance, out) = match kind {
        GenKind::Kmin {
            slots,
            amount,
            p_min,
            p_max,
            prices,
            seed,
            out,
        } => {
            let bounds = PriceBounds::new(p_min, p_max)?;
            let prices = match prices {
                Some(p) => p,
                None => {
                    let cfg = RandomConfig::new(seed, slots.max(1), bounds, 0.0);
                    gen_random(&cfg)?.prices().take(slots).collect()
                }
            };
            (gen_kmin(slots, amount, &prices, bounds)?, out)
        }
        GenKind::Interleave {
            base,
            p_min,
            p_max,
            out,
        } => {
            let spec = SpecArgs {
                capacity: None,
                rho_c: f64::INFINITY,
                rho_d: f64::INFINITY,
                p_min,
                p_max,
                lenient: false,
            };
            let base = read_instance_csv(&base, spec.bounds()?, BoundMode::Strict)?.instance;
            let ctx = AlphaContext::new(base.bounds())?;
            (gen_interleaved(&base, &ctx)?, out)
        }
        GenKind::Adversary {
            p_min,
            p_max,
            amount,
            q,
            steps,
            out,
        } => {
            let ctx = AlphaContext::new(PriceBounds::new(p_min, p_max)?)?;
            (gen_reservation_adversary(&ctx, amount, q, steps)?, out)
        }
        GenKind::Random {
            seed,
            slots,
            p_min,
            p_max,
            demand_scale,
            zero_prob,
            out,
        } => {
            let mut cfg =
                RandomConfig::new(seed, slots, PriceBounds::new(p_min, p_max)?, demand_scale);
            if !(0.0..=1.0).contains(&zero_prob) {
                return Err(OlimError::Config(format!(
                    "--zero-prob must lie in [0, 1], got {zero_prob}"
                ))
                .into());
            }
            cfg.zero_demand_prob = zero_prob;
            (gen_random(&cfg)?, out)
        }
    };
    write_instance_csv(&instance, &out)?;
    Ok(())
}

fn load(path: &Path, spec: &SpecArgs) -> Result<Instance, OlimError> {
    let loaded = read_instance_csv(path, spec.bounds()?, spec.mode())?;
    if loaded.forward_filled + loaded.clamped_prices > 0 {
        eprintln!(
            "warning: {}: filled {} missing cells, clamped {} prices",
            path.display(),
            loaded.forward_filled,
            loaded.clamped_prices
        );
    }
    Ok(loaded.instance)
}

fn write_text(path: &Path, body: &str) -> Result<(), OlimError> {
    std::fs::write(path, body).map_err(|e| OlimError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn schedule_csv(instance: &Instance, schedule: &Schedule) -> String {
    let mut out = String::from("t,price,demand,x,b\n");
    for (t, (s, (x, b))) in instance
        .slots()
        .iter()
        .zip(schedule.x.iter().zip(&schedule.b))
        .enumerate()
    {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t + 1,
            fmt_num(s.price),
            fmt_num(s.demand),
            fmt_num(*x),
            fmt_num(*b)
        ));
    }
    out
}

#[derive(Serialize)]
struct RunSummary {
    algorithm: String,
    instance: String,
    slots: usize,
    cost: Num,
    alpha: Num,
    theta: Num,
    p_min: Num,
    p_max: Num,
    capacity: Num,
    rho_c: Num,
    rho_d: Num,
    feasible: bool,
    violations: usize,
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let instance = load(&a.instance, &a.spec)?;
    let yesterday = a
        .yesterday
        .as_deref()
        .map(|p| load(p, &a.spec))
        .transpose()?;
    let spec = a.spec.spec(instance.max_demand())?;
    let ctx = AlphaContext::new(instance.bounds())?;
    let input = EvalInput {
        instance: &instance,
        yesterday: yesterday.as_ref(),
        spec: &spec,
    };
    let schedule = a.algo.schedule(&input)?;
    let violations = check_feasibility(&schedule, &instance, &spec)?;

    write_text(&a.out, &schedule_csv(&instance, &schedule))?;
    let summary = RunSummary {
        algorithm: a.algo.label().into(),
        instance: a.instance.display().to_string(),
        slots: instance.len(),
        cost: Num(schedule.total_cost),
        alpha: Num(ctx.alpha()),
        theta: Num(ctx.theta()),
        p_min: Num(instance.bounds().p_min()),
        p_max: Num(instance.bounds().p_max()),
        capacity: Num(spec.capacity),
        rho_c: Num(spec.rho_c),
        rho_d: Num(spec.rho_d),
        feasible: violations.is_empty(),
        violations: violations.len(),
    };
    let summary_path = a.summary.unwrap_or_else(|| a.out.with_extension("json"));
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_text(&summary_path, &json)?;
    println!(
        "{}: cost {} (alpha {}, {} slots)",
        a.algo,
        fmt_num(schedule.total_cost),
        fmt_num(ctx.alpha()),
        instance.len()
    );
    if let Some(v) = violations.first() {
        return Err(Failure::Infeasible(format!(
            "{} violations, first at slot {} ({:?}, excess {})",
            violations.len(),
            v.slot,
            v.kind,
            fmt_num(v.excess)
        )));
    }
    Ok(())
}

fn worker_count(flag: Option<usize>) -> Result<usize, OlimError> {
    if let Some(w) = flag {
        return if w == 0 {
            Err(OlimError::Config("--workers must be positive".into()))
        } else {
            Ok(w)
        };
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(OlimError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn collect_instances(a: &CompareArgs) -> Result<Vec<(String, Instance)>, OlimError> {
    let mut out = Vec::new();
    for pattern in &a.instances {
        let paths = glob::glob(pattern)
            .map_err(|e| OlimError::Config(format!("bad glob `{pattern}`: {e}")))?;
        let mut matched = 0;
        for p in paths {
            let p = p.map_err(|e| OlimError::Io {
                path: e.path().to_path_buf(),
                source: e.into(),
            })?;
            out.push((p.display().to_string(), load(&p, &a.spec)?));
            matched += 1;
        }
        if matched == 0 {
            return Err(OlimError::Config(format!("no files match `{pattern}`")));
        }
    }
    if a.random_count > 0 {
        let bounds = a.spec.bounds()?.ok_or_else(|| {
            OlimError::Config("--p-min and --p-max are required for random instances".into())
        })?;
        let width = a.random_count.to_string().len();
        for k in 0..a.random_count {
            let seed = a.seed.wrapping_add(k);
            let cfg = RandomConfig::new(seed, a.slots, bounds, a.demand_scale);
            out.push((format!("random-{k:0width$}"), gen_random(&cfg)?));
        }
    }
    if out.is_empty() {
        return Err(OlimError::Config(
            "no instances: pass --instances or --random-count".into(),
        ));
    }
    Ok(out)
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let instances = collect_instances(&a)?;
    let peak = instances
        .iter()
        .map(|(_, i)| i.max_demand())
        .fold(0.0, f64::max);
    let spec = a.spec.spec(peak)?;
    let workers = worker_count(a.workers)?;
    let policies: Vec<&dyn Policy> = a.algos.iter().map(|p| p as &dyn Policy).collect();
    let report = evaluate(&instances, &policies, &spec, workers)?;
    write_report_csv(&report, &a.out)?;
    let json = a
        .json
        .clone()
        .unwrap_or_else(|| a.out.with_extension("json"));
    write_report_json(&report, &json)?;
    print!("{}", format_table(&report));
    if let Some(r) = report
        .rows
        .iter()
        .find(|r| r.error.is_none() && !r.feasible)
    {
        return Err(Failure::Infeasible(format!(
            "{} on {} has {} violations",
            r.algorithm, r.instance, r.violations
        )));
    }
    Ok(())
}

fn read_purchases(path: &Path) -> Result<Vec<f64>, OlimError> {
    let parse_err = |row: usize, msg: String| OlimError::Parse {
        path: path.to_path_buf(),
        row,
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|e| OlimError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rd
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "x")
        .ok_or_else(|| parse_err(1, "no `x` column".into()))?;
    let mut x = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 2, e.to_string()))?;
        let cell = rec.get(col).unwrap_or("");
        x.push(
            cell.parse()
                .map_err(|_| parse_err(i + 2, format!("bad purchase `{cell}`")))?,
        );
    }
    Ok(x)
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    let instance = load(&a.instance, &a.spec)?;
    let spec = a.spec.spec(instance.max_demand())?;
    let schedule = Schedule::from_purchases(&instance, read_purchases(&a.schedule)?)?;
    let violations = check_feasibility(&schedule, &instance, &spec)?;
    let opt = solve_opt(&instance, &spec)?;
    let row = ReportRow {
        instance: a.instance.display().to_string(),
        algorithm: a.schedule.display().to_string(),
        cost: schedule.total_cost,
        opt_cost: opt.total_cost,
        cost_ratio: None,
        ratio_flagged: false,
        feasible: violations.is_empty(),
        violations: violations.len(),
        alpha: AlphaContext::new(instance.bounds())?.alpha(),
        capacity: spec.capacity,
        p_max: instance.bounds().p_max(),
        bound_margin: 0.0,
        bound_pass: false,
        error: None,
    };
    let bound = check_competitive_bound(&row);
    println!(
        "cost {} opt {} bound {} (margin {})",
        fmt_num(row.cost),
        fmt_num(row.opt_cost),
        if bound.pass { "pass" } else { "fail" },
        fmt_num(bound.margin)
    );
    for v in &violations {
        println!(
            "slot {}: {:?} exceeded by {}",
            v.slot,
            v.kind,
            fmt_num(v.excess)
        );
    }
    if !violations.is_empty() {
        return Err(Failure::Infeasible(format!(
            "{} violations",
            violations.len()
        )));
    }
    Ok(())
}
