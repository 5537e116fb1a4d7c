//! BatManRate: BatMan extended with finite input (`rho_c`) and output
//! (`rho_d`) rates.
//!
//! Two changes relative to [`crate::batman`]:
//! * a new virtual storage is sized by a fixed point ([`init_vs`]) so that the
//!   part of the demand the storage cannot discharge is not booked;
//! * when the preferred amount exceeds `rho_c + d(t)`, purchases are capped and
//!   the reservation price is raised to the price at which the curves would ask
//!   for exactly that much ([`cal_rp`]).

use crate::batman::{check_demand, PolicyState};
use crate::error::{OlimError, Result};
use crate::math::AlphaContext;
use crate::model::{Instance, InventorySpec, Schedule};

/// Default fixed-point tolerance for [`init_vs`], relative to the demand.
pub fn default_eps1(demand: f64) -> f64 {
    1e-9 * demand.max(1.0)
}

/// Default bisection tolerance for [`cal_rp`], relative to `p_max`.
pub fn default_eps2(ctx: &AlphaContext) -> f64 {
    1e-9 * ctx.bounds().p_max()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitVs {
    pub cap: f64,
    pub iterations: usize,
}

/// Capacity of the virtual storage opened for `demand` at `price`.
///
/// Solves `B_v = d - [d - rho_d - xhat(B_v)]^+` where `xhat` is the preferred
/// amount of every live storage plus the new one at capacity `B_v`. The
/// iterate starts at zero and is nondecreasing; the loop stops once an update
/// moves it by at most `eps1`.
pub fn init_vs(
    state: &PolicyState,
    price: f64,
    demand: f64,
    rho_d: f64,
    eps1: f64,
) -> Result<InitVs> {
    if !(demand.is_finite() && demand > 0.0) {
        return Err(OlimError::domain(format!(
            "init_vs needs demand > 0, got {demand}"
        )));
    }
    if eps1.is_nan() || eps1 <= 0.0 {
        return Err(OlimError::domain(format!("eps1 must be > 0, got {eps1}")));
    }
    let ctx = state.ctx();
    // existing storages do not depend on B_v; the new one contributes B_v * G_1(price)
    let base = state.preferred_amount(price);
    let unit = ctx.fraction(price);
    let update = |cap: f64| demand - (demand - rho_d - (base + cap * unit)).max(0.0);

    let mut cap = 0.0;
    let mut next = update(cap);
    let mut iterations = 1;
    while (next - cap).abs() > eps1 {
        cap = next;
        next = update(cap);
        iterations += 1;
    }
    Ok(InitVs { cap, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalRp {
    pub price: f64,
    pub iterations: usize,
}

/// Reservation price at which the live storages prefer exactly `rho_c + demand`.
///
/// Bisection on `[p_min, p_max / alpha]`. The lower end of the final bracket is
/// returned: there the preferred amount is still at least the target, so the
/// booked level never falls below the physical one.
pub fn cal_rp(state: &PolicyState, demand: f64, rho_c: f64, eps2: f64) -> Result<CalRp> {
    if eps2.is_nan() || eps2 <= 0.0 {
        return Err(OlimError::domain(format!("eps2 must be > 0, got {eps2}")));
    }
    let ctx = state.ctx();
    let target = rho_c + demand;
    let mut lo = ctx.bounds().p_min();
    let mut hi = ctx.threshold();
    if state.preferred_amount(lo) < target {
        return Err(OlimError::Precondition(format!(
            "cal_rp: preferred amount at p_min is below the target {target}"
        )));
    }
    let mut iterations = 0;
    while hi - lo > eps2 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if state.preferred_amount(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(CalRp {
        price: lo,
        iterations,
    })
}

/// Branch counters collected while running BatManRate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RateDiagnostics {
    pub slots: usize,
    /// Slots where the output rate forced extra purchases.
    pub output_active: usize,
    /// Slots where the input rate capped purchases.
    pub input_active: usize,
    pub init_vs_iterations: usize,
    pub cal_rp_iterations: usize,
}

/// Tolerances used by [`step_rate`]; `None` picks the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateTolerances {
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
}

/// One BatManRate slot. Returns the procurement amount `x(t)`.
pub fn step_rate(state: &mut PolicyState, price: f64, demand: f64) -> Result<f64> {
    let mut diag = RateDiagnostics::default();
    step_rate_with(state, price, demand, RateTolerances::default(), &mut diag)
}

pub fn step_rate_with(
    state: &mut PolicyState,
    price: f64,
    demand: f64,
    tol: RateTolerances,
    diag: &mut RateDiagnostics,
) -> Result<f64> {
    check_demand(demand)?;
    diag.slots += 1;
    if state.is_pass_through() {
        return Ok(demand);
    }
    let InventorySpec { rho_c, rho_d, .. } = *state.spec();

    if demand > 0.0 {
        let eps1 = tol.eps1.unwrap_or_else(|| default_eps1(demand));
        let vs = init_vs(state, price, demand, rho_d, eps1)?;
        diag.init_vs_iterations += vs.iterations;
        if vs.cap > 0.0 {
            state.open_storage(vs.cap);
        }
    }

    let preferred = state.preferred_amount(price);
    let mut x = preferred;
    let mut reservation = price;

    let floor = (demand - state.level().min(rho_d)).max(0.0);
    let ceiling = rho_c + demand;
    debug_assert!(!(preferred < floor && preferred > ceiling));
    if preferred < floor {
        x = floor;
        diag.output_active += 1;
    }
    if preferred > ceiling {
        x = ceiling;
        let eps2 = tol.eps2.unwrap_or_else(|| default_eps2(state.ctx()));
        let rp = cal_rp(state, demand, rho_c, eps2)?;
        diag.input_active += 1;
        diag.cal_rp_iterations += rp.iterations;
        reservation = rp.price;
    }

    state.lower_all(reservation);
    state.settle(x, demand);
    Ok(x)
}

/// Runs BatManRate over the whole instance.
pub fn run_rate(instance: &Instance, spec: &InventorySpec) -> Result<Schedule> {
    run_rate_with_diagnostics(instance, spec, RateTolerances::default()).map(|(s, _)| s)
}

pub fn run_rate_with_diagnostics(
    instance: &Instance,
    spec: &InventorySpec,
    tol: RateTolerances,
) -> Result<(Schedule, RateDiagnostics)> {
    let ctx = AlphaContext::new(instance.bounds())?;
    let mut state = PolicyState::new(*spec, ctx);
    let mut diag = RateDiagnostics::default();
    let mut x = Vec::with_capacity(instance.len());
    let mut b = Vec::with_capacity(instance.len());
    let mut cost = 0.0;
    for slot in instance.slots() {
        let xt = step_rate_with(&mut state, slot.price, slot.demand, tol, &mut diag)?;
        cost += slot.price * xt;
        x.push(xt);
        b.push(state.level());
    }
    Ok((
        Schedule {
            x,
            b,
            total_cost: cost,
        },
        diag,
    ))
}
