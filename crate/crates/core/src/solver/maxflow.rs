//! Dinic max flow, and feasible flows under lower and upper arc bounds.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub(crate) struct Dinic {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Dinic {
    pub(crate) fn new(nodes: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; nodes],
            next: vec![0; nodes],
        }
    }

    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let e = self.to.len();
        self.to.extend([to, from]);
        self.cap.extend([cap, 0]);
        self.adj[from].push(e);
        self.adj[to].push(e + 1);
        e
    }

    pub(crate) fn flow(&self, arc: usize) -> i64 {
        self.cap[arc ^ 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: i64) -> i64 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e]));
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.next.fill(0);
            loop {
                let pushed = self.dfs(s, t, i64::MAX);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BoundedArc {
    pub from: usize,
    pub to: usize,
    pub lower: i64,
    pub upper: i64,
}

/// Finds a flow from `s` to `t` (of any value) respecting every arc's
/// bounds, or `None` if no such flow exists. Returns the flow on each arc.
pub(crate) fn feasible_flow(nodes: usize, arcs: &[BoundedArc], s: usize, t: usize) -> Option<Vec<i64>> {
    let super_s = nodes;
    let super_t = nodes + 1;
    let mut g = Dinic::new(nodes + 2);
    let mut excess = vec![0i64; nodes];
    let mut ids = Vec::with_capacity(arcs.len());
    for a in arcs {
        if a.lower > a.upper {
            return None;
        }
        ids.push(g.add_arc(a.from, a.to, a.upper - a.lower));
        excess[a.to] += a.lower;
        excess[a.from] -= a.lower;
    }
    let total_upper: i64 = arcs.iter().map(|a| a.upper).sum();
    g.add_arc(t, s, total_upper.max(1));
    let mut required = 0;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            g.add_arc(super_s, v, x);
            required += x;
        } else if x < 0 {
            g.add_arc(v, super_t, -x);
        }
    }
    if g.max_flow(super_s, super_t) != required {
        return None;
    }
    Some(
        arcs.iter()
            .zip(&ids)
            .map(|(a, &e)| a.lower + g.flow(e))
            .collect(),
    )
}
