use std::collections::VecDeque;

use crate::error::{OlimError, Result};
use crate::model::{Instance, InventorySpec};

/// Instances longer than this are refused by [`brute_force_dp`].
pub const DP_MAX_SLOTS: usize = 20;

/// Worst-case gap between the grid optimum and the true optimum.
pub fn dp_error_bound(instance: &Instance, spec: &InventorySpec, grid_points: usize) -> f64 {
    instance.bounds().p_max() * spec.capacity * instance.len() as f64
        / (grid_points.max(2) - 1) as f64
}

/// Number of whole grid steps that fit in `amount`.
fn steps_within(amount: f64, h: f64, max: usize) -> usize {
    if amount.is_infinite() {
        return max;
    }
    let k = (amount / h * (1.0 + 1e-12)).floor();
    if k >= max as f64 {
        max
    } else {
        k as usize
    }
}

/// Optimal cost over storage trajectories restricted to the grid
/// `{0, B/(M-1), ..., B}`.
///
/// The result is an upper bound on the LP optimum and exceeds it by at most
/// [`dp_error_bound`].
pub fn brute_force_dp(
    instance: &Instance,
    spec: &InventorySpec,
    grid_points: usize,
) -> Result<f64> {
    if instance.len() > DP_MAX_SLOTS {
        return Err(OlimError::TooLarge {
            slots: instance.len(),
            limit: DP_MAX_SLOTS,
        });
    }
    if grid_points < 2 {
        return Err(OlimError::domain(format!(
            "grid needs at least 2 points, got {grid_points}"
        )));
    }
    if spec.capacity == 0.0 {
        return Ok(instance.slots().iter().map(|s| s.price * s.demand).sum());
    }

    let m = grid_points;
    let h = spec.capacity / (m - 1) as f64;
    let up = steps_within(spec.rho_c, h, m);
    let mut value = vec![f64::INFINITY; m];
    value[0] = 0.0;
    let mut next = vec![f64::INFINITY; m];
    let mut window: VecDeque<usize> = VecDeque::with_capacity(m);

    for slot in instance.slots() {
        let (p, d) = (slot.price, slot.demand);
        let down = steps_within(spec.rho_d.min(d), h, m);
        // next[j] = p (d + j h) + min_{j - up <= i <= j + down} (value[i] - p i h)
        let key = |i: usize| value[i] - p * i as f64 * h;
        window.clear();
        let mut pushed = 0;
        for (j, out) in next.iter_mut().enumerate() {
            let hi = (j + down).min(m - 1);
            while pushed <= hi {
                let k = key(pushed);
                while window.back().is_some_and(|&b| key(b) >= k) {
                    window.pop_back();
                }
                window.push_back(pushed);
                pushed += 1;
            }
            let lo = j.saturating_sub(up);
            while window.front().is_some_and(|&f| f < lo) {
                window.pop_front();
            }
            *out = match window.front() {
                Some(&i) if key(i).is_finite() => p * (d + j as f64 * h) + key(i),
                _ => f64::INFINITY,
            };
        }
        std::mem::swap(&mut value, &mut next);
    }
    Ok(value.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PriceBounds;

    fn inst(p: &[f64], d: &[f64]) -> Instance {
        Instance::from_series(p, d, PriceBounds::new(1.0, 10.0).unwrap()).unwrap()
    }

    #[test]
    fn single_slot_and_zero_capacity() {
        let i = inst(&[3.0], &[2.0]);
        assert_eq!(
            brute_force_dp(&i, &InventorySpec::unconstrained(5.0).unwrap(), 11).unwrap(),
            6.0
        );
        let i = inst(&[3.0, 1.0, 7.0], &[2.0, 0.0, 1.0]);
        assert_eq!(
            brute_force_dp(&i, &InventorySpec::unconstrained(0.0).unwrap(), 11).unwrap(),
            13.0
        );
    }

    #[test]
    fn refuses_long_instances() {
        let i = inst(&[1.0; 21], &[0.0; 21]);
        assert!(matches!(
            brute_force_dp(&i, &InventorySpec::unconstrained(1.0).unwrap(), 3),
            Err(OlimError::TooLarge { .. })
        ));
        assert!(brute_force_dp(
            &inst(&[1.0], &[0.0]),
            &InventorySpec::unconstrained(1.0).unwrap(),
            1
        )
        .is_err());
    }

    #[test]
    fn rate_limits_on_grid() {
        let i = inst(&[1.0, 5.0], &[0.0, 2.0]);
        let spec = InventorySpec::new(2.0, 0.5, 2.0).unwrap();
        let v = brute_force_dp(&i, &spec, 5).unwrap();
        assert!((v - (0.5 + 1.5 * 5.0)).abs() < 1e-12);
    }
}
