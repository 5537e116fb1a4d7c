//! Instance generators and trace ingestion.

mod traces;

pub use traces::{
    load_traces, read_instance_csv, write_instance_csv, EnergyModel, TraceLoad, TraceOptions,
    TraceRow, DEFAULT_ENERGY_MODEL,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OlimError, Result};
use crate::math::AlphaContext;
use crate::model::{Instance, PriceBounds, Slot};

/// Five-minute slots over one day.
pub const DEFAULT_HORIZON: usize = 288;

/// Capacity multiplier over peak net demand (1.5 hours of five-minute slots).
pub const DEFAULT_CAPACITY_FACTOR: f64 = 18.0;

/// `B = 18 * max_t d(t)`.
pub fn default_capacity(instance: &Instance) -> f64 {
    DEFAULT_CAPACITY_FACTOR * instance.max_demand()
}

/// All demand on the final slot: `d(t) = 0` for `t < T`, `d(T) = B`.
pub fn gen_kmin(
    slots: usize,
    amount: f64,
    prices: &[f64],
    bounds: PriceBounds,
) -> Result<Instance> {
    if prices.len() != slots {
        return Err(OlimError::LengthMismatch {
            what: "k-min prices",
            left: prices.len(),
            right: slots,
        });
    }
    if slots == 0 {
        return Err(OlimError::domain("k-min instance needs at least one slot"));
    }
    let mut demands = vec![0.0; slots];
    demands[slots - 1] = amount;
    Instance::from_series(prices, &demands, bounds)
}

/// Inserts a `(p_max / alpha, 0)` slot before every slot of `base` and one at the end.
pub fn gen_interleaved(base: &Instance, ctx: &AlphaContext) -> Result<Instance> {
    let filler = Slot::new(ctx.threshold(), 0.0);
    let mut slots = Vec::with_capacity(2 * base.len() + 1);
    for s in base.slots() {
        slots.push(filler);
        slots.push(*s);
    }
    slots.push(filler);
    Instance::new(slots, base.bounds())
}

/// Prices fall in `n` steps from `p_max / alpha` to `q` with no demand, then a
/// single slot at `p_max` demands `amount`.
pub fn gen_reservation_adversary(
    ctx: &AlphaContext,
    amount: f64,
    q: f64,
    n: usize,
) -> Result<Instance> {
    let bounds = ctx.bounds();
    let top = ctx.threshold();
    if !(q > bounds.p_min() && q < top) {
        return Err(OlimError::domain(format!(
            "q must lie in ({}, {top}), got {q}",
            bounds.p_min()
        )));
    }
    if n < 2 {
        return Err(OlimError::domain(format!(
            "adversary needs n >= 2 steps, got {n}"
        )));
    }
    let last = (n - 1) as f64;
    let mut slots: Vec<Slot> = (0..n)
        .map(|k| Slot::new(top + (q - top) * (k as f64 / last), 0.0))
        .collect();
    slots.push(Slot::new(bounds.p_max(), amount));
    Instance::new(slots, bounds)
}

/// Parameters for [`gen_random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomConfig {
    pub seed: u64,
    pub slots: usize,
    pub bounds: PriceBounds,
    /// Demands are uniform on `[0, demand_scale]`.
    pub demand_scale: f64,
    /// Probability that a slot has zero demand.
    pub zero_demand_prob: f64,
}

impl RandomConfig {
    pub fn new(seed: u64, slots: usize, bounds: PriceBounds, demand_scale: f64) -> Self {
        Self {
            seed,
            slots,
            bounds,
            demand_scale,
            zero_demand_prob: 0.25,
        }
    }
}

/// Reproducible random instance: uniform prices within the bounds, nonnegative demands.
pub fn gen_random(cfg: &RandomConfig) -> Result<Instance> {
    if cfg.slots == 0 {
        return Err(OlimError::domain("random instance needs at least one slot"));
    }
    if !(cfg.demand_scale.is_finite() && cfg.demand_scale >= 0.0) {
        return Err(OlimError::domain(format!(
            "demand scale must be >= 0, got {}",
            cfg.demand_scale
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.bounds.p_min(), cfg.bounds.p_max());
    let slots = (0..cfg.slots)
        .map(|_| {
            let price = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let demand = if rng.gen_bool(cfg.zero_demand_prob.clamp(0.0, 1.0)) {
                0.0
            } else {
                cfg.demand_scale * rng.gen::<f64>()
            };
            Slot::new(price, demand)
        })
        .collect();
    Instance::new(slots, cfg.bounds)
}
