//! Domain types shared by every algorithm: price bounds, the inventory
//! description, an input instance and the schedule an algorithm produces.

use serde::{Deserialize, Serialize};

use crate::error::{OlimError, Result};

/// Declared lower and upper price bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBounds {
    p_min: f64,
    p_max: f64,
}

impl PriceBounds {
    pub fn new(p_min: f64, p_max: f64) -> Result<Self> {
        if !(p_min.is_finite() && p_min > 0.0) {
            return Err(OlimError::domain(format!(
                "p_min must be finite and > 0, got {p_min}"
            )));
        }
        if !(p_max.is_finite() && p_max >= p_min) {
            return Err(OlimError::domain(format!(
                "p_max must be finite and >= p_min ({p_min}), got {p_max}"
            )));
        }
        Ok(Self { p_min, p_max })
    }

    /// Tightest bounds covering every price in `prices`.
    pub fn covering(prices: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = prices
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            });
        if lo > hi {
            return Err(OlimError::domain(
                "cannot infer price bounds from an empty series",
            ));
        }
        Self::new(lo, hi)
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Price fluctuation ratio `p_max / p_min`.
    pub fn theta(&self) -> f64 {
        self.p_max / self.p_min
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min && p <= self.p_max
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.p_min, self.p_max)
    }
}

/// Storage capacity and per-slot input/output rates.
///
/// Rates use `f64::INFINITY` for "unconstrained". The initial level is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InventorySpec {
    pub capacity: f64,
    pub rho_c: f64,
    pub rho_d: f64,
}

impl InventorySpec {
    pub fn new(capacity: f64, rho_c: f64, rho_d: f64) -> Result<Self> {
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(OlimError::domain(format!(
                "capacity must be finite and >= 0, got {capacity}"
            )));
        }
        for (name, rate) in [("rho_c", rho_c), ("rho_d", rho_d)] {
            if rate.is_nan() || rate <= 0.0 {
                return Err(OlimError::domain(format!(
                    "{name} must be > 0 or infinite, got {rate}"
                )));
            }
        }
        Ok(Self {
            capacity,
            rho_c,
            rho_d,
        })
    }

    /// Storage with no rate limits.
    pub fn unconstrained(capacity: f64) -> Result<Self> {
        Self::new(capacity, f64::INFINITY, f64::INFINITY)
    }

    pub fn initial_level(&self) -> f64 {
        0.0
    }

    /// Rates at or above the capacity never bind.
    pub fn is_rate_free(&self) -> bool {
        self.rho_c >= self.capacity && self.rho_d >= self.capacity
    }
}

/// One slot of the input: market price and demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub price: f64,
    pub demand: f64,
}

impl Slot {
    pub fn new(price: f64, demand: f64) -> Self {
        Self { price, demand }
    }
}

/// How prices outside the declared bounds are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundMode {
    /// Reject the instance.
    #[default]
    Strict,
    /// Clamp into the bounds and count a warning.
    Lenient,
}

/// A finite price/demand sequence together with its declared price bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    slots: Vec<Slot>,
    bounds: PriceBounds,
}

impl Instance {
    /// Strict construction: every price must lie within `bounds`.
    pub fn new(slots: Vec<Slot>, bounds: PriceBounds) -> Result<Self> {
        Self::with_mode(slots, bounds, BoundMode::Strict).map(|(inst, _)| inst)
    }

    /// Builds an instance, returning the number of clamped prices in lenient mode.
    pub fn with_mode(
        mut slots: Vec<Slot>,
        bounds: PriceBounds,
        mode: BoundMode,
    ) -> Result<(Self, usize)> {
        let mut clamped = 0;
        for (t, slot) in slots.iter_mut().enumerate() {
            if !(slot.demand.is_finite() && slot.demand >= 0.0) {
                return Err(OlimError::domain(format!(
                    "demand at slot {t} must be finite and >= 0, got {}",
                    slot.demand
                )));
            }
            if !slot.price.is_finite() {
                return Err(OlimError::domain(format!(
                    "price at slot {t} is not finite"
                )));
            }
            if !bounds.contains(slot.price) {
                match mode {
                    BoundMode::Strict => {
                        return Err(OlimError::PriceOutOfBounds {
                            slot: t,
                            price: slot.price,
                            p_min: bounds.p_min(),
                            p_max: bounds.p_max(),
                        })
                    }
                    BoundMode::Lenient => {
                        slot.price = bounds.clamp(slot.price);
                        clamped += 1;
                    }
                }
            }
        }
        Ok((Self { slots, bounds }, clamped))
    }

    /// Builds an instance from parallel price and demand vectors.
    pub fn from_series(prices: &[f64], demands: &[f64], bounds: PriceBounds) -> Result<Self> {
        if prices.len() != demands.len() {
            return Err(OlimError::LengthMismatch {
                what: "demand series",
                left: demands.len(),
                right: prices.len(),
            });
        }
        let slots = prices
            .iter()
            .zip(demands)
            .map(|(&p, &d)| Slot::new(p, d))
            .collect();
        Self::new(slots, bounds)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn bounds(&self) -> PriceBounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().map(|s| s.price)
    }

    pub fn demands(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().map(|s| s.demand)
    }

    pub fn total_demand(&self) -> f64 {
        self.demands().sum()
    }

    pub fn max_demand(&self) -> f64 {
        self.demands().fold(0.0, f64::max)
    }
}

/// Per-slot procurement and end-of-slot storage level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub total_cost: f64,
}

impl Schedule {
    /// Derives the storage trajectory and cost from a purchase vector.
    pub fn from_purchases(instance: &Instance, x: Vec<f64>) -> Result<Self> {
        if x.len() != instance.len() {
            return Err(OlimError::LengthMismatch {
                what: "purchase vector",
                left: x.len(),
                right: instance.len(),
            });
        }
        let mut level = 0.0;
        let b = x
            .iter()
            .zip(instance.slots())
            .map(|(&xt, s)| {
                level += xt - s.demand;
                level
            })
            .collect();
        let total_cost = x.iter().zip(instance.prices()).map(|(xt, p)| xt * p).sum();
        Ok(Self { x, b, total_cost })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
