//! Exact offline optimum via min-cost flow on a time-expanded network, plus a
//! discretized dynamic program used as an independent oracle.

mod dp;
mod flow;

pub use dp::{brute_force_dp, dp_error_bound, DP_MAX_SLOTS};
pub use flow::{ArcId, MinCostFlow};

use crate::error::{OlimError, Result};
use crate::model::{Instance, InventorySpec, Schedule};

/// Time-expanded network for one instance.
///
/// Nodes per slot `t`: a market node `M_t`, and a split storage node
/// `S_t -> S'_t` whose single arc carries the end-of-slot level `b(t)` and has
/// capacity `B`. Arcs:
///
/// * `source -> M_t`: purchase, cost `p(t)`, unbounded;
/// * `M_t -> sink`: demand, capacity `d(t)`;
/// * `M_t -> S_t`: charge, capacity `rho_c`;
/// * `S'_{t-1} -> M_t`: discharge, capacity `rho_d`;
/// * `S'_{t-1} -> S_t`: carry, unbounded.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub graph: MinCostFlow,
    pub source: usize,
    pub sink: usize,
    pub purchase: Vec<ArcId>,
    pub required: f64,
}

impl FlowNetwork {
    pub fn build(instance: &Instance, spec: &InventorySpec) -> Self {
        let t_len = instance.len();
        let source = 0;
        let sink = 1;
        let market = |t: usize| 2 + 3 * t;
        let store_in = |t: usize| 3 + 3 * t;
        let store_out = |t: usize| 4 + 3 * t;
        let required = instance.total_demand();
        let scale = required.max(spec.capacity).max(1.0);
        let mut graph = MinCostFlow::new(2 + 3 * t_len, 1e-13 * scale);
        let mut purchase = Vec::with_capacity(t_len);

        for (t, slot) in instance.slots().iter().enumerate() {
            purchase.push(graph.add_arc(source, market(t), f64::INFINITY, slot.price));
            if slot.demand > 0.0 {
                graph.add_arc(market(t), sink, slot.demand, 0.0);
            }
            if spec.capacity > 0.0 && t + 1 < t_len {
                graph.add_arc(market(t), store_in(t), spec.rho_c, 0.0);
                graph.add_arc(store_in(t), store_out(t), spec.capacity, 0.0);
            }
            if t > 0 && spec.capacity > 0.0 {
                graph.add_arc(store_out(t - 1), market(t), spec.rho_d, 0.0);
                if t + 1 < t_len {
                    graph.add_arc(store_out(t - 1), store_in(t), f64::INFINITY, 0.0);
                }
            }
        }
        Self {
            graph,
            source,
            sink,
            purchase,
            required,
        }
    }
}

/// Offline optimum of the procurement LP.
pub fn solve_opt(instance: &Instance, spec: &InventorySpec) -> Result<Schedule> {
    if instance.is_empty() {
        return Err(OlimError::domain("solve_opt needs a nonempty instance"));
    }
    if spec.capacity == 0.0 {
        // nothing can be stored, so every slot buys exactly its demand
        return Schedule::from_purchases(instance, instance.demands().collect());
    }
    let mut net = FlowNetwork::build(instance, spec);
    let (source, sink, required) = (net.source, net.sink, net.required);
    let (sent, _) = net.graph.run(source, sink, required);
    debug_assert!((sent - required).abs() <= 1e-9 * required.max(1.0));

    let x: Vec<f64> = net
        .purchase
        .iter()
        .map(|&id| net.graph.flow(id).max(0.0))
        .collect();
    let mut sched = Schedule::from_purchases(instance, x)?;
    // flow conservation holds up to rounding; clip the trajectory onto [0, B]
    for b in &mut sched.b {
        *b = b.clamp(0.0, spec.capacity);
    }
    Ok(sched)
}
