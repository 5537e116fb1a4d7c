//! Successive-shortest-path min-cost flow with real-valued capacities.
//!
//! Dijkstra with Johnson potentials; every arc cost added by the caller must be
//! nonnegative so the initial potentials are zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    flow: f64,
    cost: f64,
    rev: usize,
}

impl Arc {
    fn residual(&self) -> f64 {
        self.cap - self.flow
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ArcId {
    node: usize,
    index: usize,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
    /// Residual capacities at or below this count as saturated.
    eps: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize, eps: f64) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
            eps,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> ArcId {
        debug_assert!(cost >= 0.0 && cap >= 0.0);
        let fwd = self.graph[from].len();
        let back = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc {
            to,
            cap,
            flow: 0.0,
            cost,
            rev: back,
        });
        self.graph[to].push(Arc {
            to: from,
            cap: 0.0,
            flow: 0.0,
            cost: -cost,
            rev: fwd,
        });
        ArcId {
            node: from,
            index: fwd,
        }
    }

    pub fn flow(&self, id: ArcId) -> f64 {
        self.graph[id.node][id.index].flow
    }

    /// Pushes up to `amount` from `source` to `sink` at minimum cost.
    /// Returns `(flow sent, total cost)`.
    pub fn run(&mut self, source: usize, sink: usize, amount: f64) -> (f64, f64) {
        let n = self.graph.len();
        let mut potential = vec![0.0; n];
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut sent = 0.0;
        let mut cost = 0.0;

        while amount - sent > self.eps {
            dist.fill(f64::INFINITY);
            parent.fill(None);
            dist[source] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Entry {
                dist: 0.0,
                node: source,
            });
            while let Some(Entry { dist: d, node: u }) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (i, arc) in self.graph[u].iter().enumerate() {
                    if arc.residual() <= self.eps {
                        continue;
                    }
                    let reduced = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        parent[arc.to] = Some((u, i));
                        heap.push(Entry {
                            dist: nd,
                            node: arc.to,
                        });
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            for (p, d) in potential.iter_mut().zip(&dist) {
                if d.is_finite() {
                    *p += d;
                }
            }

            let mut push = amount - sent;
            let mut v = sink;
            while let Some((u, i)) = parent[v] {
                push = push.min(self.graph[u][i].residual());
                v = u;
            }
            let mut v = sink;
            while let Some((u, i)) = parent[v] {
                let rev = self.graph[u][i].rev;
                self.graph[u][i].flow += push;
                cost += push * self.graph[u][i].cost;
                self.graph[v][rev].flow -= push;
                v = u;
            }
            sent += push;
        }
        (sent, cost)
    }
}
