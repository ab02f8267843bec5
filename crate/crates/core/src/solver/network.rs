//! Successive-shortest-path min-cost flow over integer capacities and costs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

const INF: i64 = i64::MAX / 4;

/// Residual network. Arc `e` and its reverse `e ^ 1` are stored adjacently;
/// forward arcs have even indices.
#[derive(Clone, Debug)]
pub(crate) struct CostFlow {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    potential: Vec<i64>,
    pub(crate) augmentations: usize,
}

impl CostFlow {
    pub(crate) fn new(nodes: usize) -> Self {
        CostFlow {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            potential: vec![0; nodes],
            augmentations: 0,
        }
    }

    /// Adds an arc with nonnegative `cost`; returns its index.
    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        debug_assert!(cost >= 0 && cap >= 0);
        let e = self.to.len();
        self.to.extend([to, from]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[from].push(e);
        self.adj[to].push(e + 1);
        e
    }

    pub(crate) fn flow(&self, arc: usize) -> i64 {
        self.cap[arc ^ 1]
    }

    fn tail(&self, e: usize) -> usize {
        self.to[e ^ 1]
    }

    fn reduced_cost(&self, e: usize) -> i64 {
        self.cost[e] + self.potential[self.tail(e)] - self.potential[self.to[e]]
    }

    /// Pushes flow from `s` to `t` along cheapest paths until none remain.
    /// The result is a maximum flow of minimum cost. Returns the flow value.
    pub(crate) fn min_cost_max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0;
        let mut dist = vec![INF; n];
        let mut parent = vec![usize::MAX; n];
        let mut done = vec![false; n];
        loop {
            dist.fill(INF);
            parent.fill(usize::MAX);
            done.fill(false);
            dist[s] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if done[u] {
                    continue;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    if self.cap[e] == 0 {
                        continue;
                    }
                    let v = self.to[e];
                    let nd = d + self.reduced_cost(e);
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = e;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
            if dist[t] >= INF {
                break;
            }
            // Capping at dist[t] keeps reduced costs nonnegative everywhere.
            let dt = dist[t];
            for (pot, &d) in self.potential.iter_mut().zip(&dist) {
                *pot += d.min(dt);
            }
            let mut push = INF;
            let mut v = t;
            while v != s {
                let e = parent[v];
                push = push.min(self.cap[e]);
                v = self.tail(e);
            }
            let mut v = t;
            while v != s {
                let e = parent[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.tail(e);
            }
            total += push;
            self.augmentations += 1;
        }
        total
    }

    /// Moves the current optimal flow to the optimal flow whose flow vector
    /// over `order` is lexicographically greatest, i.e. each arc carries as
    /// much as any optimal flow agreeing on all earlier arcs allows.
    ///
    /// Must follow [`Self::min_cost_max_flow`]: the final potentials certify
    /// optimality, so the optimal face is exactly the set of flows of the same
    /// value that only change arcs of zero reduced cost.
    pub(crate) fn canonicalize(&mut self, order: &[usize]) {
        let n = self.adj.len();
        let mut locked = vec![false; self.to.len() / 2];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &e in order {
            locked[e / 2] = true;
            if self.reduced_cost(e) != 0 {
                continue;
            }
            // Push flow onto `e` along zero-cost residual cycles through it
            // until it is saturated or no such cycle remains.
            let (u, v) = (self.tail(e), self.to[e]);
            while self.cap[e] > 0 {
                parent.fill(usize::MAX);
                queue.clear();
                queue.push_back(v);
                parent[v] = usize::MAX - 1;
                let mut found = false;
                while let Some(x) = queue.pop_front() {
                    if x == u {
                        found = true;
                        break;
                    }
                    for &f in &self.adj[x] {
                        let y = self.to[f];
                        if parent[y] != usize::MAX
                            || locked[f / 2]
                            || self.cap[f] == 0
                            || self.reduced_cost(f) != 0
                        {
                            continue;
                        }
                        parent[y] = f;
                        queue.push_back(y);
                    }
                }
                if !found {
                    break;
                }
                let mut x = u;
                while x != v {
                    let f = parent[x];
                    self.cap[f] -= 1;
                    self.cap[f ^ 1] += 1;
                    x = self.tail(f);
                }
                self.cap[e] -= 1;
                self.cap[e ^ 1] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_transport() {
        // s=0, a=1, b=2, t=3
        let mut g = CostFlow::new(4);
        g.add_arc(0, 1, 2, 0);
        g.add_arc(0, 2, 1, 0);
        let ab = g.add_arc(1, 2, 1, 1);
        let at = g.add_arc(1, 3, 1, 5);
        let bt = g.add_arc(2, 3, 2, 1);
        assert_eq!(g.min_cost_max_flow(0, 3), 3);
        assert_eq!(g.flow(ab), 1);
        assert_eq!(g.flow(at), 1);
        assert_eq!(g.flow(bt), 2);
    }

    #[test]
    fn canonicalize_prefers_earlier_arcs() {
        // Both perfect matchings cost 2. The cheapest first augmentation uses
        // (p0, r1), but the canonical optimum uses (p0, r0).
        let mut g = CostFlow::new(6);
        g.add_arc(0, 1, 1, 0);
        g.add_arc(0, 2, 1, 0);
        let costs = [[1, 0], [2, 1]];
        let mut arcs = Vec::new();
        for (p, row) in costs.iter().enumerate() {
            for (r, &cost) in row.iter().enumerate() {
                arcs.push(g.add_arc(1 + p, 3 + r, 1, cost));
            }
        }
        g.add_arc(3, 5, 1, 0);
        g.add_arc(4, 5, 1, 0);
        assert_eq!(g.min_cost_max_flow(0, 5), 2);
        g.canonicalize(&arcs);
        let flows: Vec<i64> = arcs.iter().map(|&e| g.flow(e)).collect();
        assert_eq!(flows, vec![1, 0, 0, 1]);
    }
}
