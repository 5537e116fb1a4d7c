//! BatMan: online procurement with adaptive reservation prices and virtual
//! storages, for storage without rate limits.
//!
//! The physical storage is the first virtual storage. Every slot with positive
//! demand opens a virtual storage sized to that demand. Each storage buys up
//! to its reservation curve `G_{B_i}` whenever the market price undercuts the
//! lowest price it has seen, and all virtual storages are dropped whenever the
//! physical level returns to zero.

use crate::error::{OlimError, Result};
use crate::math::AlphaContext;
use crate::model::{Instance, InventorySpec, Schedule};

/// Physical level below this is treated as empty and triggers renewal.
pub const RENEWAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualStorage {
    pub cap: f64,
    /// Lowest price seen during this storage's lifetime, capped at `p_max / alpha`.
    pub xi: f64,
    /// Cached `G_cap(xi)`.
    pub(crate) reserved: f64,
}

impl VirtualStorage {
    fn fresh(ctx: &AlphaContext, cap: f64) -> Self {
        Self {
            cap,
            xi: ctx.threshold(),
            reserved: 0.0,
        }
    }

    /// `[G_cap(p) - G_cap(xi)]^+`
    #[inline]
    pub(crate) fn preferred(&self, ctx: &AlphaContext, p: f64) -> f64 {
        (ctx.reserve(self.cap, p) - self.reserved).max(0.0)
    }

    #[inline]
    pub(crate) fn lower_xi(&mut self, ctx: &AlphaContext, p: f64) {
        if p < self.xi {
            self.xi = p;
            self.reserved = ctx.reserve(self.cap, p);
        }
    }
}

/// Mutable state of one BatMan / BatManRate run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub(crate) storages: Vec<VirtualStorage>,
    pub(crate) level: f64,
    pub(crate) ctx: AlphaContext,
    pub(crate) spec: InventorySpec,
}

impl PolicyState {
    /// Fresh state: a single storage `(B, p_max / alpha)` and an empty physical level.
    pub fn new(spec: InventorySpec, ctx: AlphaContext) -> Self {
        Self {
            storages: vec![VirtualStorage::fresh(&ctx, spec.capacity)],
            level: spec.initial_level(),
            ctx,
            spec,
        }
    }

    pub fn storages(&self) -> &[VirtualStorage] {
        &self.storages
    }

    /// Number of live storages, the physical one included.
    pub fn v(&self) -> usize {
        self.storages.len()
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn ctx(&self) -> &AlphaContext {
        &self.ctx
    }

    pub fn spec(&self) -> &InventorySpec {
        &self.spec
    }

    /// Demand is passed straight through when prices are flat.
    pub fn is_pass_through(&self) -> bool {
        self.ctx.is_degenerate()
    }

    /// `sum_i G_{B_i}(xi_i) - sum_{i>=2} B_i`, which tracks the physical level.
    pub fn booked_level(&self) -> f64 {
        let reserved: f64 = self.storages.iter().map(|s| s.reserved).sum();
        let virtual_caps: f64 = self.storages.iter().skip(1).map(|s| s.cap).sum();
        reserved - virtual_caps
    }

    pub(crate) fn open_storage(&mut self, cap: f64) {
        self.storages.push(VirtualStorage::fresh(&self.ctx, cap));
    }

    pub(crate) fn preferred_amount(&self, p: f64) -> f64 {
        self.storages
            .iter()
            .map(|s| s.preferred(&self.ctx, p))
            .sum()
    }

    pub(crate) fn lower_all(&mut self, p: f64) {
        let ctx = self.ctx;
        for s in &mut self.storages {
            s.lower_xi(&ctx, p);
        }
    }

    /// Applies `b <- b + x - d` and renews the storages when the level hits zero.
    /// Returns the recorded end-of-slot level.
    pub(crate) fn settle(&mut self, x: f64, demand: f64) -> f64 {
        self.level += x - demand;
        if self.level.abs() <= RENEWAL_TOL {
            self.level = 0.0;
            self.renew();
        }
        self.level
    }

    fn renew(&mut self) {
        self.storages.truncate(1);
        self.storages[0] = VirtualStorage::fresh(&self.ctx, self.spec.capacity);
    }

    /// One BatMan slot. Returns the procurement amount `x(t)`.
    pub fn step(&mut self, price: f64, demand: f64) -> Result<f64> {
        check_demand(demand)?;
        if self.is_pass_through() {
            return Ok(demand);
        }
        if demand > 0.0 {
            self.open_storage(demand);
        }
        let preferred = self.preferred_amount(price);
        self.lower_all(price);
        let x = preferred.max((demand - self.level).max(0.0));
        self.settle(x, demand);
        Ok(x)
    }
}

pub(crate) fn check_demand(demand: f64) -> Result<()> {
    if demand.is_finite() && demand >= 0.0 {
        Ok(())
    } else {
        Err(OlimError::domain(format!(
            "demand must be finite and >= 0, got {demand}"
        )))
    }
}

/// Runs BatMan over the whole instance.
pub fn run(instance: &Instance, spec: &InventorySpec) -> Result<Schedule> {
    if !spec.is_rate_free() {
        return Err(OlimError::Precondition(format!(
            "BatMan needs rates >= capacity (rho_c = {}, rho_d = {}, B = {}); use BatManRate",
            spec.rho_c, spec.rho_d, spec.capacity
        )));
    }
    let ctx = AlphaContext::new(instance.bounds())?;
    let mut state = PolicyState::new(*spec, ctx);
    let mut x = Vec::with_capacity(instance.len());
    let mut b = Vec::with_capacity(instance.len());
    let mut cost = 0.0;
    for slot in instance.slots() {
        let xt = state.step(slot.price, slot.demand)?;
        cost += slot.price * xt;
        x.push(xt);
        b.push(state.level());
    }
    Ok(Schedule {
        x,
        b,
        total_cost: cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check_feasibility;
    use crate::math::integral_g_inverse;
    use crate::model::{PriceBounds, Slot};
    use proptest::prelude::*;

    fn setup(p_min: f64, p_max: f64, cap: f64) -> PolicyState {
        let ctx = AlphaContext::new(PriceBounds::new(p_min, p_max).unwrap()).unwrap();
        PolicyState::new(InventorySpec::unconstrained(cap).unwrap(), ctx)
    }

    #[test]
    fn fresh_state() {
        let s = setup(1.0, 4.0, 10.0);
        assert_eq!(s.v(), 1);
        assert_eq!(s.storages()[0].cap, 10.0);
        assert_eq!(s.storages()[0].xi, s.ctx().threshold());
        assert_eq!(s.level(), 0.0);
        assert!(!s.is_pass_through());
        assert!(setup(2.0, 2.0, 10.0).is_pass_through());
    }

    #[test]
    fn no_purchase_above_threshold() {
        let mut s = setup(1.0, 4.0, 10.0);
        let before = s.storages().to_vec();
        assert_eq!(s.step(s.ctx().threshold(), 0.0).unwrap(), 0.0);
        assert_eq!(s.step(3.9, 0.0).unwrap(), 0.0);
        assert_eq!(s.storages(), &before[..]);
    }

    #[test]
    fn full_charge_at_p_min() {
        let mut s = setup(1.0, 4.0, 1.0);
        let x = s.step(1.0, 0.0).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
        assert!((s.level() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn demand_at_p_max_passes_through_and_renews() {
        let mut s = setup(1.0, 4.0, 1.0);
        let x = s.step(4.0, 5.0).unwrap();
        assert_eq!(x, 5.0);
        assert_eq!(s.level(), 0.0);
        assert_eq!(s.v(), 1);
    }

    #[test]
    fn zero_capacity_is_pass_through() {
        let mut s = setup(1.0, 4.0, 0.0);
        for (p, d) in [(1.0, 2.0), (4.0, 1.0), (1.5, 0.0), (1.0, 3.0)] {
            let x = s.step(p, d).unwrap();
            assert!((x - d).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_passes_through() {
        let mut s = setup(3.0, 3.0, 5.0);
        assert_eq!(s.step(3.0, 2.0).unwrap(), 2.0);
        assert_eq!(s.step(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_demand_rejected() {
        let mut s = setup(1.0, 4.0, 1.0);
        assert!(s.step(2.0, -1.0).is_err());
    }

    #[test]
    fn rate_limited_spec_rejected() {
        let bounds = PriceBounds::new(1.0, 4.0).unwrap();
        let inst = Instance::from_series(&[1.0], &[1.0], bounds).unwrap();
        assert!(run(&inst, &InventorySpec::new(2.0, 0.5, 2.0).unwrap()).is_err());
    }

    #[test]
    fn all_p_max_is_pass_through() {
        let bounds = PriceBounds::new(1.0, 9.0).unwrap();
        let d = [1.0, 0.0, 2.5, 3.0];
        let inst = Instance::from_series(&[9.0; 4], &d, bounds).unwrap();
        let s = run(&inst, &InventorySpec::unconstrained(4.0).unwrap()).unwrap();
        assert_eq!(s.x, d.to_vec());
        assert_eq!(s.total_cost, 9.0 * 6.5);
    }

    #[test]
    fn constant_price_buys_once_then_waits() {
        let bounds = PriceBounds::new(1.0, 4.0).unwrap();
        let ctx = AlphaContext::new(bounds).unwrap();
        let p = 0.5 * (1.0 + ctx.threshold());
        let b_cap = 2.0;
        let inst = Instance::from_series(&[p; 5], &[0.0, 0.0, 0.0, 0.0, b_cap], bounds).unwrap();
        let s = run(&inst, &InventorySpec::unconstrained(b_cap).unwrap()).unwrap();
        let g = ctx.reserve(b_cap, p);
        assert!((s.x[0] - g).abs() < 1e-12);
        assert_eq!(&s.x[1..4], &[0.0, 0.0, 0.0]);
        // the final slot's own storage reserves g again at the same price
        assert!((s.x[4] - g.max(b_cap - g)).abs() < 1e-12);
    }

    #[test]
    fn kmin_descending_approaches_integral() {
        let bounds = PriceBounds::new(1.0, 8.0).unwrap();
        let ctx = AlphaContext::new(bounds).unwrap();
        let n = 20_000;
        let cap = 3.0;
        let hi = ctx.threshold();
        let prices: Vec<f64> = (0..=n)
            .map(|k| hi + (1.0 - hi) * k as f64 / n as f64)
            .collect();
        let mut demands = vec![0.0; n + 1];
        demands.push(cap);
        let mut prices = prices;
        prices.push(8.0);
        let inst = Instance::from_series(&prices, &demands, bounds).unwrap();
        let s = run(&inst, &InventorySpec::unconstrained(cap).unwrap()).unwrap();
        let bought: f64 = s.x[..=n].iter().sum();
        assert!((bought - cap).abs() < 1e-9);
        let exact = integral_g_inverse(&ctx, cap, cap).unwrap();
        let spent: f64 = s.x[..=n].iter().zip(&prices).map(|(x, p)| x * p).sum();
        // right-endpoint pricing undershoots by at most one price step per unit
        let step = (hi - 1.0) / n as f64;
        assert!(
            spent <= exact + 1e-9 && spent >= exact - step * cap,
            "{spent} vs {exact}"
        );
    }

    fn instance_strategy() -> impl Strategy<Value = (Instance, f64)> {
        (1.01f64..50.0, 1usize..40, 0.1f64..20.0).prop_flat_map(|(theta, len, cap)| {
            let slots =
                prop::collection::vec((0.0f64..=1.0, prop_oneof![Just(0.0), 0.0f64..5.0]), len);
            slots.prop_map(move |raw| {
                let bounds = PriceBounds::new(1.0, theta).unwrap();
                let slots = raw
                    .into_iter()
                    .map(|(u, d)| Slot::new(1.0 + u * (theta - 1.0), d))
                    .collect();
                (Instance::new(slots, bounds).unwrap(), cap)
            })
        })
    }

    proptest! {
        #[test]
        fn feasible_and_booked_level_tracks(case in instance_strategy()) {
            let (inst, cap) = case;
            let spec = InventorySpec::unconstrained(cap).unwrap();
            let ctx = AlphaContext::new(inst.bounds()).unwrap();
            let mut state = PolicyState::new(spec, ctx);
            let mut x = Vec::new();
            let mut b = Vec::new();
            for slot in inst.slots() {
                let xi_before: Vec<f64> = state.storages().iter().map(|s| s.xi).collect();
                x.push(state.step(slot.price, slot.demand).unwrap());
                b.push(state.level());
                prop_assert!((state.booked_level() - state.level()).abs() < 1e-9);
                for s in state.storages() {
                    prop_assert!(s.xi <= ctx.threshold() && s.xi >= 1.0);
                }
                // no renewal: surviving storages only lowered their reservation price
                if state.v() > 1 {
                    for (after, before) in state.storages().iter().zip(&xi_before) {
                        prop_assert!(after.xi <= *before);
                    }
                }
            }
            let sched = Schedule::from_purchases(&inst, x).unwrap();
            let viol = check_feasibility(&sched, &inst, &spec).unwrap();
            prop_assert!(viol.is_empty(), "{:?}", viol);
        }
    }
}
