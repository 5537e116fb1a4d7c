//! CSV ingestion of price, demand and renewable traces.
//!
//! Every file has a header row. Recognized columns: `index` (or `timestamp`),
//! `price`, `demand` (or `load`) and `renewable`; others are ignored. Empty
//! cells are missing values.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OlimError, Result};
use crate::model::{BoundMode, Instance, PriceBounds, Slot};
use crate::numfmt::fmt_num;

/// Linear server energy model `d(l) = idle + (peak - idle) * l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub idle: f64,
    pub peak: f64,
}

impl EnergyModel {
    pub fn energy(&self, load: f64) -> f64 {
        self.idle + (self.peak - self.idle) * load
    }
}

/// 100 kWh idle, 250 kWh at full load.
pub const DEFAULT_ENERGY_MODEL: EnergyModel = EnergyModel {
    idle: 100.0,
    peak: 250.0,
};

/// One parsed CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub index: Option<f64>,
    pub price: Option<f64>,
    pub demand: Option<f64>,
    pub renewable: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Fraction of total demand covered by the rescaled renewable series.
    pub penetration: f64,
    /// When set, the demand column holds normalized load in `[0, 1]`.
    pub energy_model: Option<EnergyModel>,
    /// Declared price bounds; inferred from the data when absent.
    pub bounds: Option<PriceBounds>,
    pub mode: BoundMode,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            penetration: 0.0,
            energy_model: None,
            bounds: None,
            mode: BoundMode::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLoad {
    pub instance: Instance,
    /// Missing cells filled from a neighbouring row (lenient mode only).
    pub forward_filled: usize,
    /// Prices clamped into the declared bounds (lenient mode only).
    pub clamped_prices: usize,
    /// Loads clamped into `[0, 1]` (lenient mode only).
    pub clamped_loads: usize,
}

fn parse_cell(path: &Path, row: usize, column: &str, cell: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| OlimError::Parse {
        path: path.to_path_buf(),
        row,
        msg: format!("column `{column}`: cannot parse `{cell}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(OlimError::Parse {
            path: path.to_path_buf(),
            row,
            msg: format!("column `{column}`: non-finite value `{cell}`"),
        });
    }
    Ok(Some(v))
}

/// Reads every row of a trace CSV. Row numbers in errors count the header as line 1.
pub fn read_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let file = File::open(path).map_err(|e| OlimError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| OlimError::Parse {
            path: path.to_path_buf(),
            row: 1,
            msg: e.to_string(),
        })?
        .clone();
    let find = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
    };
    let cols = [
        find(&["index", "timestamp", "t"]),
        find(&["price"]),
        find(&["demand", "load"]),
        find(&["renewable"]),
    ];
    let names = ["index", "price", "demand", "renewable"];

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| OlimError::Parse {
            path: path.to_path_buf(),
            row: line,
            msg: e.to_string(),
        })?;
        let mut vals = [None; 4];
        for (k, col) in cols.iter().enumerate() {
            if let Some(c) = col {
                vals[k] = parse_cell(path, line, names[k], rec.get(*c).unwrap_or(""))?;
            }
        }
        rows.push(TraceRow {
            index: vals[0],
            price: vals[1],
            demand: vals[2],
            renewable: vals[3],
        });
    }

    let mut last: Option<f64> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Some(ix) = r.index {
            if last.is_some_and(|l| ix <= l) {
                return Err(OlimError::Parse {
                    path: path.to_path_buf(),
                    row: i + 2,
                    msg: format!("index {ix} is not increasing"),
                });
            }
            last = Some(ix);
        }
    }
    Ok(rows)
}

/// Extracts one column, rejecting or filling missing cells according to `mode`.
fn column(
    path: &Path,
    rows: &[TraceRow],
    name: &str,
    pick: impl Fn(&TraceRow) -> Option<f64>,
    mode: BoundMode,
    filled: &mut usize,
) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(OlimError::Parse {
            path: path.to_path_buf(),
            row: 1,
            msg: "no data rows".into(),
        });
    }
    let raw: Vec<Option<f64>> = rows.iter().map(&pick).collect();
    if raw.iter().all(Option::is_none) {
        return Err(OlimError::Parse {
            path: path.to_path_buf(),
            row: 1,
            msg: format!("column `{name}` is missing or empty"),
        });
    }
    let mut out = Vec::with_capacity(raw.len());
    let first = raw.iter().flatten().next().copied().unwrap_or(0.0);
    let mut prev = first;
    for (i, v) in raw.iter().enumerate() {
        let v = match (v, mode) {
            (Some(v), _) => *v,
            (None, BoundMode::Strict) => {
                return Err(OlimError::Parse {
                    path: path.to_path_buf(),
                    row: i + 2,
                    msg: format!("missing value in column `{name}`"),
                })
            }
            (None, BoundMode::Lenient) => {
                *filled += 1;
                prev
            }
        };
        if v < 0.0 {
            return Err(OlimError::Parse {
                path: path.to_path_buf(),
                row: i + 2,
                msg: format!("negative value {v} in column `{name}`"),
            });
        }
        prev = v;
        out.push(v);
    }
    Ok(out)
}

/// Holds each value of a coarser series constant across the finer slots it covers.
fn resample(series: Vec<f64>, len: usize, what: &'static str) -> Result<Vec<f64>> {
    if series.len() == len {
        return Ok(series);
    }
    if series.is_empty() || !len.is_multiple_of(series.len()) {
        return Err(OlimError::LengthMismatch {
            what,
            left: series.len(),
            right: len,
        });
    }
    let k = len / series.len();
    Ok(series
        .into_iter()
        .flat_map(|v| std::iter::repeat_n(v, k))
        .collect())
}

/// Builds an instance from separate price, demand and (optional) renewable traces.
///
/// Net demand is `max(0, d(t) - r(t))` with the renewable series rescaled so
/// that it sums to `penetration * sum(d)`.
pub fn load_traces(
    price_path: &Path,
    demand_path: &Path,
    renewable_path: Option<&Path>,
    opts: &TraceOptions,
) -> Result<TraceLoad> {
    if !(0.0..=1.0).contains(&opts.penetration) {
        return Err(OlimError::Config(format!(
            "penetration must lie in [0, 1], got {}",
            opts.penetration
        )));
    }
    let mut filled = 0;
    let price_rows = read_rows(price_path)?;
    let prices = column(
        price_path,
        &price_rows,
        "price",
        |r| r.price,
        opts.mode,
        &mut filled,
    )?;
    let demand_rows = if demand_path == price_path {
        price_rows.clone()
    } else {
        read_rows(demand_path)?
    };
    let mut demands = column(
        demand_path,
        &demand_rows,
        "demand",
        |r| r.demand,
        opts.mode,
        &mut filled,
    )?;

    let mut clamped_loads = 0;
    if let Some(model) = opts.energy_model {
        for (i, l) in demands.iter_mut().enumerate() {
            if *l > 1.0 {
                match opts.mode {
                    BoundMode::Strict => {
                        return Err(OlimError::Parse {
                            path: demand_path.to_path_buf(),
                            row: i + 2,
                            msg: format!("normalized load {l} exceeds 1"),
                        })
                    }
                    BoundMode::Lenient => {
                        *l = 1.0;
                        clamped_loads += 1;
                    }
                }
            }
            *l = model.energy(*l);
        }
    }

    let renewable = match renewable_path {
        Some(p) => {
            let rows = read_rows(p)?;
            Some(column(
                p,
                &rows,
                "renewable",
                |r| r.renewable,
                opts.mode,
                &mut filled,
            )?)
        }
        None => None,
    };

    let len = prices
        .len()
        .max(demands.len())
        .max(renewable.as_ref().map_or(0, Vec::len));
    let prices = resample(prices, len, "price series")?;
    let demands = resample(demands, len, "demand series")?;
    let renewable = renewable
        .map(|r| resample(r, len, "renewable series"))
        .transpose()?;

    let net: Vec<f64> = match renewable {
        Some(r) if opts.penetration > 0.0 => {
            let total_r: f64 = r.iter().sum();
            let total_d: f64 = demands.iter().sum();
            let scale = if total_r > 0.0 {
                opts.penetration * total_d / total_r
            } else {
                0.0
            };
            demands
                .iter()
                .zip(&r)
                .map(|(d, r)| (d - r * scale).max(0.0))
                .collect()
        }
        _ => demands,
    };

    let bounds = match opts.bounds {
        Some(b) => b,
        None => PriceBounds::covering(prices.iter().copied())?,
    };
    let slots = prices
        .iter()
        .zip(&net)
        .map(|(&p, &d)| Slot::new(p, d))
        .collect();
    let (instance, clamped_prices) = Instance::with_mode(slots, bounds, opts.mode)?;
    Ok(TraceLoad {
        instance,
        forward_filled: filled,
        clamped_prices,
        clamped_loads,
    })
}

/// Reads an instance file with `price` and `demand` columns.
pub fn read_instance_csv(
    path: &Path,
    bounds: Option<PriceBounds>,
    mode: BoundMode,
) -> Result<TraceLoad> {
    let opts = TraceOptions {
        bounds,
        mode,
        ..TraceOptions::default()
    };
    load_traces(path, path, None, &opts)
}

/// Writes `index,price,demand` rows.
pub fn write_instance_csv(instance: &Instance, path: &Path) -> Result<()> {
    let mut out = String::from("index,price,demand\n");
    for (t, s) in instance.slots().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            t + 1,
            fmt_num(s.price),
            fmt_num(s.demand)
        ));
    }
    let mut f = File::create(path).map_err(|e| OlimError::io(path, e))?;
    f.write_all(out.as_bytes())
        .map_err(|e| OlimError::io(path, e))
}
