//! Constraint checking for schedules against an instance and storage spec.

use serde::{Deserialize, Serialize};

use crate::error::{OlimError, Result};
use crate::model::{Instance, InventorySpec, Schedule};

/// Absolute tolerance used for every constraint check.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `x(t) >= d(t) - min{rho_d, b(t-1)}`
    DemandCover,
    /// `x(t) <= d(t) + min{rho_c, B - b(t-1)}`
    InputRate,
    /// `b(t) = b(t-1) + x(t) - d(t)`
    Balance,
    /// `0 <= b(t) <= B`
    Capacity,
    /// `x(t) >= 0`
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub slot: usize,
    pub kind: ConstraintKind,
    /// Amount by which the constraint is exceeded.
    pub excess: f64,
}

fn ensure_same_len(schedule: &Schedule, instance: &Instance) -> Result<()> {
    if schedule.x.len() != instance.len() {
        return Err(OlimError::LengthMismatch {
            what: "schedule purchases",
            left: schedule.x.len(),
            right: instance.len(),
        });
    }
    if schedule.b.len() != instance.len() {
        return Err(OlimError::LengthMismatch {
            what: "schedule levels",
            left: schedule.b.len(),
            right: instance.len(),
        });
    }
    Ok(())
}

/// Returns every (slot, constraint) pair violated beyond [`FEASIBILITY_TOL`].
/// An empty list means the schedule is feasible.
pub fn check_feasibility(
    schedule: &Schedule,
    instance: &Instance,
    spec: &InventorySpec,
) -> Result<Vec<Violation>> {
    ensure_same_len(schedule, instance)?;
    let cap = spec.capacity;
    let mut out = Vec::new();
    let mut prev = spec.initial_level();
    for (t, ((&x, &b), slot)) in schedule
        .x
        .iter()
        .zip(&schedule.b)
        .zip(instance.slots())
        .enumerate()
    {
        let d = slot.demand;
        let mut push = |kind, excess: f64| {
            if excess > FEASIBILITY_TOL || excess.is_nan() {
                out.push(Violation {
                    slot: t,
                    kind,
                    excess,
                });
            }
        };
        push(ConstraintKind::DemandCover, (d - spec.rho_d.min(prev)) - x);
        push(
            ConstraintKind::InputRate,
            x - (d + spec.rho_c.min(cap - prev)),
        );
        push(ConstraintKind::Balance, (b - (prev + x - d)).abs());
        push(ConstraintKind::Capacity, (-b).max(b - cap));
        push(ConstraintKind::NonNegative, -x);
        prev = b;
    }
    Ok(out)
}

/// Total procurement cost `sum_t price(t) * x(t)`.
pub fn schedule_cost(schedule: &Schedule, instance: &Instance) -> Result<f64> {
    if schedule.x.len() != instance.len() {
        return Err(OlimError::LengthMismatch {
            what: "schedule purchases",
            left: schedule.x.len(),
            right: instance.len(),
        });
    }
    Ok(schedule
        .x
        .iter()
        .zip(instance.prices())
        .map(|(x, p)| x * p)
        .sum())
}
