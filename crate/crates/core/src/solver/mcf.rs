//! Min-cost flow via successive shortest augmenting paths with potentials.

use crate::error::{CoreError, Result};

#[derive(Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: u64,
    cost: f64,
}

#[derive(Clone, Copy)]
pub struct EdgeRef {
    from: usize,
    idx: usize,
    cap: u64,
}

pub struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
    /// Node potentials maintained across augmentations; after a full run the
    /// potential differences certify optimality of the routed flow.
    potential: Vec<f64>,
    pub augmentations: usize,
}

#[derive(Clone, Copy)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed: BinaryHeap is a max-heap, we want smallest dist first
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        MinCostFlow { graph: vec![Vec::new(); n], potential: vec![0.0; n], augmentations: 0 }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64, cost: f64) -> EdgeRef {
        let idx = self.graph[from].len();
        let rev = self.graph[to].len();
        self.graph[from].push(Arc { to, rev, cap, cost });
        self.graph[to].push(Arc { to: from, rev: idx, cap: 0, cost: -cost });
        EdgeRef { from, idx, cap }
    }

    pub fn flow_on(&self, e: EdgeRef) -> u64 {
        e.cap - self.graph[e.from][e.idx].cap
    }

    pub fn potential(&self, v: usize) -> f64 {
        self.potential[v]
    }

    /// Push as much flow as possible from `s` to `t`, cheapest paths first.
    /// Costs must be nonnegative. Returns the routed flow.
    pub fn run(&mut self, s: usize, t: usize, limit: usize) -> Result<u64> {
        let n = self.graph.len();
        let mut total = 0u64;
        loop {
            if self.augmentations > limit {
                return Err(CoreError::Internal(format!(
                    "min-cost flow exceeded {limit} augmentations"
                )));
            }
            // Dijkstra over reduced costs.
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut done = vec![false; n];
            dist[s] = 0.0;
            let mut heap = std::collections::BinaryHeap::new();
            heap.push(HeapItem { dist: 0.0, node: s });
            while let Some(HeapItem { dist: d, node: v }) = heap.pop() {
                if done[v] {
                    continue;
                }
                done[v] = true;
                for (i, arc) in self.graph[v].iter().enumerate() {
                    if arc.cap == 0 || done[arc.to] {
                        continue;
                    }
                    // Floating-point noise can leave reduced costs a hair
                    // below zero; clamp so Dijkstra stays sound.
                    let rc = (arc.cost + self.potential[v] - self.potential[arc.to]).max(0.0);
                    let nd = d + rc;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        prev[arc.to] = Some((v, i));
                        heap.push(HeapItem { dist: nd, node: arc.to });
                    }
                }
            }
            if !dist[t].is_finite() {
                return Ok(total);
            }
            // Nodes cut off from s stay cut off (residual arcs only appear
            // along augmenting paths), so their potentials can stay stale.
            for v in 0..n {
                if dist[v].is_finite() {
                    self.potential[v] += dist[v];
                }
            }
            // Bottleneck along the path, then push.
            let mut bottleneck = u64::MAX;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                bottleneck = bottleneck.min(self.graph[u][i].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                let rev = self.graph[u][i].rev;
                self.graph[u][i].cap -= bottleneck;
                self.graph[v][rev].cap += bottleneck;
                v = u;
            }
            total += bottleneck;
            self.augmentations += 1;
        }
    }
}
