//! Comparison policies: no storage, a fixed price threshold, and replaying
//! yesterday's offline optimum.

use crate::error::{OlimError, Result};
use crate::model::{Instance, InventorySpec, Schedule};
use crate::offline::solve_opt;

/// Serves every slot's demand from the market.
pub fn no_str(instance: &Instance) -> Schedule {
    let x = instance.demands().collect();
    Schedule::from_purchases(instance, x).expect("purchase vector matches instance length")
}

/// Fixed threshold `sqrt(p_max * p_min)`: charge as much as allowed below it,
/// discharge as much as possible otherwise.
pub fn on_fix(instance: &Instance, spec: &InventorySpec) -> Schedule {
    let bounds = instance.bounds();
    let threshold = (bounds.p_max() * bounds.p_min()).sqrt();
    let cap = spec.capacity;
    let mut level: f64 = 0.0;
    let mut x = Vec::with_capacity(instance.len());
    let mut b = Vec::with_capacity(instance.len());
    for slot in instance.slots() {
        let xt = if slot.price < threshold {
            slot.demand + spec.rho_c.min(cap - level).max(0.0)
        } else {
            slot.demand - spec.rho_d.min(level).min(slot.demand)
        };
        level = (level + xt - slot.demand).clamp(0.0, cap);
        x.push(xt);
        b.push(level);
    }
    let total_cost = x.iter().zip(instance.prices()).map(|(x, p)| x * p).sum();
    Schedule { x, b, total_cost }
}

/// Replays `planned` against `today`, clamping each purchase into the interval
/// that keeps today's schedule feasible.
pub fn project_schedule(
    planned: &[f64],
    today: &Instance,
    spec: &InventorySpec,
) -> Result<Schedule> {
    if planned.len() != today.len() {
        return Err(OlimError::LengthMismatch {
            what: "planned purchases",
            left: planned.len(),
            right: today.len(),
        });
    }
    let cap = spec.capacity;
    let mut level: f64 = 0.0;
    let mut x = Vec::with_capacity(today.len());
    let mut b = Vec::with_capacity(today.len());
    for (&plan, slot) in planned.iter().zip(today.slots()) {
        let lo = (slot.demand - spec.rho_d.min(level)).max(0.0);
        let hi = slot.demand + spec.rho_c.min(cap - level).max(0.0);
        let xt = plan.clamp(lo, hi.max(lo));
        level = (level + xt - slot.demand).clamp(0.0, cap);
        x.push(xt);
        b.push(level);
    }
    let total_cost = x.iter().zip(today.prices()).map(|(x, p)| x * p).sum();
    Ok(Schedule { x, b, total_cost })
}

/// Yesterday's optimum projected onto today's demands. Without a yesterday
/// this is [`no_str`].
pub fn pre_day(
    today: &Instance,
    yesterday: Option<&Instance>,
    spec: &InventorySpec,
) -> Result<Schedule> {
    let Some(yesterday) = yesterday else {
        return Ok(no_str(today));
    };
    if yesterday.len() != today.len() {
        return Err(OlimError::LengthMismatch {
            what: "yesterday's instance",
            left: yesterday.len(),
            right: today.len(),
        });
    }
    let plan = solve_opt(yesterday, spec)?;
    project_schedule(&plan.x, today, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check_feasibility;
    use crate::model::{PriceBounds, Slot};
    use proptest::prelude::*;

    fn b14() -> PriceBounds {
        PriceBounds::new(1.0, 4.0).unwrap()
    }

    #[test]
    fn no_str_examples() {
        let i = Instance::from_series(&[2.0, 3.0], &[1.0, 1.0], b14()).unwrap();
        assert_eq!(no_str(&i).total_cost, 5.0);
        let i = Instance::from_series(&[2.0, 3.0], &[0.0, 0.0], b14()).unwrap();
        assert_eq!(no_str(&i).total_cost, 0.0);
    }

    #[test]
    fn on_fix_two_slot() {
        let i = Instance::from_series(&[1.0, 4.0], &[0.0, 1.0], b14()).unwrap();
        let s = on_fix(&i, &InventorySpec::unconstrained(1.0).unwrap());
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert_eq!(s.total_cost, 1.0);
    }

    #[test]
    fn on_fix_above_threshold_is_no_str() {
        let i = Instance::from_series(&[2.0, 3.0, 4.0], &[1.0, 0.5, 2.0], b14()).unwrap();
        let s = on_fix(&i, &InventorySpec::unconstrained(5.0).unwrap());
        assert_eq!(s, no_str(&i));
    }

    #[test]
    fn pre_day_same_day_is_optimal() {
        let i = Instance::from_series(&[1.0, 3.0, 2.0, 4.0], &[0.0, 1.0, 0.5, 2.0], b14()).unwrap();
        let spec = InventorySpec::new(2.0, 0.7, 0.9).unwrap();
        let s = pre_day(&i, Some(&i), &spec).unwrap();
        let opt = solve_opt(&i, &spec).unwrap();
        assert!((s.total_cost - opt.total_cost).abs() <= 1e-9 * opt.total_cost);
    }

    #[test]
    fn pre_day_covers_new_demand() {
        let y = Instance::from_series(&[1.0, 3.0, 2.0], &[0.0, 0.0, 0.0], b14()).unwrap();
        let t = Instance::from_series(&[1.0, 3.0, 2.0], &[1.0, 2.0, 0.5], b14()).unwrap();
        let spec = InventorySpec::new(2.0, 0.5, 0.5).unwrap();
        let s = pre_day(&t, Some(&y), &spec).unwrap();
        assert!(check_feasibility(&s, &t, &spec).unwrap().is_empty());
        assert_eq!(pre_day(&t, None, &spec).unwrap(), no_str(&t));
        let short = Instance::from_series(&[1.0], &[0.0], b14()).unwrap();
        assert!(pre_day(&t, Some(&short), &spec).is_err());
    }

    fn pair() -> impl Strategy<Value = (Instance, Instance, InventorySpec)> {
        (1usize..30, 0.0f64..6.0, 0.01f64..1.5, 0.01f64..1.5).prop_flat_map(|(len, cap, rc, rd)| {
            let day =
                || prop::collection::vec((1.0f64..=4.0, prop_oneof![Just(0.0), 0.0f64..3.0]), len);
            (day(), day()).prop_map(move |(a, b)| {
                let mk = |raw: Vec<(f64, f64)>| {
                    Instance::new(
                        raw.into_iter().map(|(p, d)| Slot::new(p, d)).collect(),
                        b14(),
                    )
                    .unwrap()
                };
                let spec =
                    InventorySpec::new(cap, (rc * cap).max(1e-6), (rd * cap).max(1e-6)).unwrap();
                (mk(a), mk(b), spec)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn baselines_feasible_and_above_opt(case in pair()) {
            let (today, yesterday, spec) = case;
            let opt = solve_opt(&today, &spec).unwrap().total_cost;
            let tol = 1e-7 * opt.max(1.0);
            for s in [no_str(&today), on_fix(&today, &spec), pre_day(&today, Some(&yesterday), &spec).unwrap()] {
                prop_assert!(check_feasibility(&s, &today, &spec).unwrap().is_empty());
                prop_assert!(s.total_cost >= opt - tol);
            }
        }

        #[test]
        fn on_fix_without_storage_is_no_str(case in pair()) {
            let (today, _, _) = case;
            let zero = InventorySpec::unconstrained(0.0).unwrap();
            prop_assert_eq!(on_fix(&today, &zero), no_str(&today));
        }
    }
}
