//! Dinic max-flow on integer capacities.

#[derive(Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: u64,
}

/// Handle returned by [`Dinic::add_edge`]; lets callers read back the flow
/// routed over that edge after a run.
#[derive(Clone, Copy)]
pub struct EdgeRef {
    from: usize,
    idx: usize,
    cap: u64,
}

pub struct Dinic {
    graph: Vec<Vec<Arc>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    pub fn new(n: usize) -> Self {
        Dinic { graph: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> EdgeRef {
        let idx = self.graph[from].len();
        let rev = self.graph[to].len();
        self.graph[from].push(Arc { to, rev, cap });
        self.graph[to].push(Arc { to: from, rev: idx, cap: 0 });
        EdgeRef { from, idx, cap }
    }

    pub fn flow_on(&self, e: EdgeRef) -> u64 {
        e.cap - self.graph[e.from][e.idx].cap
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for arc in &self.graph[v] {
                if arc.cap > 0 && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, up_to: u64) -> u64 {
        if v == t {
            return up_to;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap) = {
                let arc = &self.graph[v][i];
                (arc.to, arc.cap)
            };
            if cap > 0 && self.level[v] < self.level[to] {
                let pushed = self.dfs(to, t, up_to.min(cap));
                if pushed > 0 {
                    let rev = self.graph[v][i].rev;
                    self.graph[v][i].cap -= pushed;
                    self.graph[to][rev].cap += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0u64;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.dfs(s, t, u64::MAX);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bipartite_saturates() {
        // two sources with supply 3 and 2, two sinks with demand 4 and 1,
        // all pairs connected
        let mut d = Dinic::new(6);
        let s = 4;
        let t = 5;
        d.add_edge(s, 0, 3);
        d.add_edge(s, 1, 2);
        let mut mids = Vec::new();
        for i in 0..2 {
            for j in 2..4 {
                mids.push(d.add_edge(i, j, u64::MAX / 4));
            }
        }
        d.add_edge(2, t, 4);
        d.add_edge(3, t, 1);
        assert_eq!(d.max_flow(s, t), 5);
        let routed: u64 = mids.iter().map(|&e| d.flow_on(e)).sum();
        assert_eq!(routed, 5);
    }

    #[test]
    fn bottleneck_limits_flow() {
        let mut d = Dinic::new(4);
        d.add_edge(0, 1, 10);
        d.add_edge(1, 2, 3);
        d.add_edge(2, 3, 10);
        assert_eq!(d.max_flow(0, 3), 3);
    }
}
