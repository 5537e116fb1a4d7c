//! Numerical kernels: the principal branch of Lambert-W, the optimal
//! competitive ratio `alpha(theta)`, and the reservation function together with
//! its inverse and the closed-form integral of the inverse.
//!
//! The reservation function for a storage of capacity `B` is
//!
//! ```text
//! G_B(p) = alpha * B * ln[(1 - p / p_max) * alpha / (alpha - 1)],   p in [p_min, p_max / alpha]
//! G_B(p) = 0,                                                        p >= p_max / alpha
//! ```
//!
//! and decreases from `B` at `p_min` to `0` at `p_max / alpha`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{OlimError, Result};
use crate::model::PriceBounds;

const INV_E: f64 = 1.0 / E;
const BRANCH_POINT_SLACK: f64 = 1e-15;
const LAMBERT_RESIDUAL_TOL: f64 = 1e-14;
const MAX_HALLEY_ITERS: usize = 64;

/// Price ratios this close to one are treated as flat prices.
pub const DEGENERATE_THETA_TOL: f64 = 1e-9;

/// Principal branch `W0(x)` for `x in [-1/e, 0]`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !(-INV_E - BRANCH_POINT_SLACK..=0.0).contains(&x) {
        return Err(OlimError::domain(format!(
            "lambert_w0 argument {x} outside [-1/e, 0]"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // distance to the branch point, scaled so that q = 0 at x = -1/e
    let q = (E * x + 1.0).max(0.0);
    if q == 0.0 {
        return Ok(-1.0);
    }

    let mut w = if q < 0.3 {
        let p = (2.0 * q).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
    } else {
        x.ln_1p()
    };

    // the series is already exact to double precision this close to -1/e
    if q > 1e-12 {
        for _ in 0..MAX_HALLEY_ITERS {
            let ew = w.exp();
            let f = w * ew - x;
            let wp1 = w + 1.0;
            if wp1 <= 0.0 {
                break;
            }
            let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
            let step = f / denom;
            let next = (w - step).clamp(-1.0, 0.0);
            let done = (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300);
            w = next;
            if done {
                break;
            }
        }
    }

    if (w * w.exp() - x).abs() > LAMBERT_RESIDUAL_TOL * x.abs().max(1.0) {
        w = bisect_w0(x);
    }
    Ok(w)
}

/// `w * e^w` is increasing on `[-1, 0]`.
fn bisect_w0(x: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Optimal competitive ratio `alpha = 1 / (W0(-(theta - 1) / (theta e)) + 1)`.
pub fn alpha(theta: f64) -> Result<f64> {
    if theta.is_nan() || theta < 1.0 {
        return Err(OlimError::domain(format!(
            "theta must be >= 1, got {theta}"
        )));
    }
    if theta == 1.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let arg = (-(theta - 1.0) / (theta * E)).max(-INV_E);
    let w = lambert_w0(arg)?;
    Ok(1.0 / (w + 1.0))
}

/// Everything needed to evaluate the reservation function for one set of price bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaContext {
    bounds: PriceBounds,
    theta: f64,
    alpha: f64,
    degenerate: bool,
}

impl AlphaContext {
    pub fn new(bounds: PriceBounds) -> Result<Self> {
        let theta = bounds.theta();
        let degenerate = theta - 1.0 <= DEGENERATE_THETA_TOL;
        let alpha = if degenerate { 1.0 } else { alpha(theta)? };
        Ok(Self {
            bounds,
            theta,
            alpha,
            degenerate,
        })
    }

    pub fn bounds(&self) -> PriceBounds {
        self.bounds
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Flat prices: the reservation function is undefined and algorithms pass demand through.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Highest price at which anything is reserved, `p_max / alpha`.
    pub fn threshold(&self) -> f64 {
        self.bounds.p_max() / self.alpha
    }

    /// `G_1(p)`: the reserved fraction of a unit storage at price `p`, in `[0, 1]`.
    #[inline]
    pub(crate) fn fraction(&self, p: f64) -> f64 {
        if self.degenerate || p >= self.threshold() {
            return 0.0;
        }
        if p <= self.bounds.p_min() {
            return 1.0;
        }
        let a = self.alpha;
        let v = a * ((1.0 - p / self.bounds.p_max()) * a / (a - 1.0)).ln();
        v.clamp(0.0, 1.0)
    }

    #[inline]
    pub(crate) fn reserve(&self, cap: f64, p: f64) -> f64 {
        cap * self.fraction(p)
    }

    #[inline]
    pub(crate) fn inverse(&self, cap: f64, b: f64) -> f64 {
        let a = self.alpha;
        if cap == 0.0 {
            return self.threshold();
        }
        self.bounds.p_max() * (1.0 - (1.0 - 1.0 / a) * (b / (a * cap)).exp())
    }

    #[inline]
    pub(crate) fn integral(&self, cap: f64, b: f64) -> f64 {
        let a = self.alpha;
        if cap == 0.0 {
            return 0.0;
        }
        let scale = a * cap;
        self.bounds.p_max() * (b - (1.0 - 1.0 / a) * scale * (b / scale).exp_m1())
    }

    fn check_active(&self) -> Result<()> {
        if self.degenerate {
            Err(OlimError::DegenerateContext)
        } else {
            Ok(())
        }
    }
}

fn check_level(cap: f64, b: f64) -> Result<()> {
    if !(cap.is_finite() && cap >= 0.0) {
        return Err(OlimError::domain(format!(
            "capacity must be finite and >= 0, got {cap}"
        )));
    }
    let slack = 1e-12 * cap.max(1.0);
    if !(b >= -slack && b <= cap + slack) {
        return Err(OlimError::domain(format!("level {b} outside [0, {cap}]")));
    }
    Ok(())
}

/// Target stored amount `G_cap(p)` for a storage of capacity `cap` at price `p`.
pub fn reservation_amount(ctx: &AlphaContext, cap: f64, p: f64) -> Result<f64> {
    ctx.check_active()?;
    if !(cap.is_finite() && cap >= 0.0) {
        return Err(OlimError::domain(format!(
            "capacity must be finite and >= 0, got {cap}"
        )));
    }
    if !ctx.bounds.contains(p) {
        return Err(OlimError::domain(format!(
            "price {p} outside [{}, {}]",
            ctx.bounds.p_min(),
            ctx.bounds.p_max()
        )));
    }
    Ok(ctx.reserve(cap, p))
}

/// Price at which a storage of capacity `cap` holds `b`: the inverse of [`reservation_amount`].
pub fn inverse_reservation(ctx: &AlphaContext, cap: f64, b: f64) -> Result<f64> {
    ctx.check_active()?;
    check_level(cap, b)?;
    Ok(ctx.inverse(cap, b.clamp(0.0, cap)))
}

/// Closed form of `integral_0^b G^{-1}_cap(u) du`.
pub fn integral_g_inverse(ctx: &AlphaContext, cap: f64, b: f64) -> Result<f64> {
    ctx.check_active()?;
    check_level(cap, b)?;
    Ok(ctx.integral(cap, b.clamp(0.0, cap)))
}
