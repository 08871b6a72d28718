use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A pairwise arc `from -> to` with its own capacity and the capacity of the
/// opposite direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairArc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub reverse_capacity: f64,
}

/// An s-t network over `node_count` non-terminal nodes.
///
/// Terminal capacities are stored per node; the source and sink are implicit.
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    node_count: usize,
    arcs: Vec<PairArc>,
    source_caps: Vec<f64>,
    sink_caps: Vec<f64>,
}

fn check_cap(cap: f64, what: &str) -> Result<()> {
    if !cap.is_finite() || cap < 0.0 {
        return Err(Error::invalid(format!(
            "{what} capacity must be finite and nonnegative, got {cap}"
        )));
    }
    Ok(())
}

impl FlowNetwork {
    pub fn new(node_count: usize) -> Self {
        FlowNetwork {
            node_count,
            arcs: Vec::new(),
            source_caps: vec![0.0; node_count],
            sink_caps: vec![0.0; node_count],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[PairArc] {
        &self.arcs
    }

    pub fn source_caps(&self) -> &[f64] {
        &self.source_caps
    }

    pub fn sink_caps(&self) -> &[f64] {
        &self.sink_caps
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.node_count {
            return Err(Error::invalid(format!(
                "node {i} out of range for a network of {} nodes",
                self.node_count
            )));
        }
        Ok(())
    }

    /// Sets the source and sink capacities of node `i`.
    pub fn set_terminals(&mut self, i: usize, source: f64, sink: f64) -> Result<()> {
        self.check_node(i)?;
        check_cap(source, "source")?;
        check_cap(sink, "sink")?;
        self.source_caps[i] = source;
        self.sink_caps[i] = sink;
        Ok(())
    }

    /// Adds the arc pair `from -> to` (capacity) and `to -> from` (reverse_capacity).
    ///
    /// Callers must not add a second arc for the same unordered pair.
    pub fn add_arc(
        &mut self,
        from: usize,
        to: usize,
        capacity: f64,
        reverse_capacity: f64,
    ) -> Result<()> {
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(Error::invalid(format!("self-loop on node {from}")));
        }
        check_cap(capacity, "arc")?;
        check_cap(reverse_capacity, "arc")?;
        self.arcs.push(PairArc {
            from,
            to,
            capacity,
            reverse_capacity,
        });
        Ok(())
    }

    /// Total capacity of arcs leaving `source_side` (with the source) toward
    /// the sink side.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let mut total = 0.0;
        for (i, &on_source) in source_side.iter().enumerate().take(self.node_count) {
            total += if on_source {
                self.sink_caps[i]
            } else {
                self.source_caps[i]
            };
        }
        for a in &self.arcs {
            match (source_side[a.from], source_side[a.to]) {
                (true, false) => total += a.capacity,
                (false, true) => total += a.reverse_capacity,
                _ => {}
            }
        }
        total
    }

    fn max_capacity(&self) -> f64 {
        let terminals = self
            .source_caps
            .iter()
            .chain(&self.sink_caps)
            .fold(0.0f64, |m, &c| m.max(c));
        self.arcs
            .iter()
            .fold(terminals, |m, a| m.max(a.capacity).max(a.reverse_capacity))
    }
}

/// Result of [`max_flow`]: the minimal minimum cut and the flow value.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    /// `true` for nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
    pub flow_value: f64,
}

/// Residual graph in compressed adjacency form. Arc `e` and `e ^ 1` are mates.
struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    first: Vec<usize>,
    adj: Vec<usize>,
}

impl Residual {
    fn build(net: &FlowNetwork, source: usize, sink: usize) -> (Self, f64) {
        let n = net.node_count;
        let mut head = Vec::new();
        let mut cap = Vec::new();
        let mut tail = Vec::new();
        let mut push = |u: usize, v: usize, c_uv: f64, c_vu: f64| {
            head.push(v);
            cap.push(c_uv);
            tail.push(u);
            head.push(u);
            cap.push(c_vu);
            tail.push(v);
        };

        // Paths s -> i -> t are saturated up front.
        let mut flow = 0.0;
        for i in 0..n {
            let direct = net.source_caps[i].min(net.sink_caps[i]);
            flow += direct;
            let s_cap = net.source_caps[i] - direct;
            let t_cap = net.sink_caps[i] - direct;
            if s_cap > 0.0 {
                push(source, i, s_cap, 0.0);
            }
            if t_cap > 0.0 {
                push(i, sink, t_cap, 0.0);
            }
        }
        for a in &net.arcs {
            if a.capacity > 0.0 || a.reverse_capacity > 0.0 {
                push(a.from, a.to, a.capacity, a.reverse_capacity);
            }
        }

        let total = n + 2;
        let mut degree = vec![0usize; total + 1];
        for &u in &tail {
            degree[u + 1] += 1;
        }
        for k in 0..total {
            degree[k + 1] += degree[k];
        }
        let first = degree.clone();
        let mut fill = degree;
        let mut adj = vec![0usize; tail.len()];
        for (e, &u) in tail.iter().enumerate() {
            adj[fill[u]] = e;
            fill[u] += 1;
        }
        (
            Residual {
                head,
                cap,
                first,
                adj,
            },
            flow,
        )
    }

    #[inline]
    fn arcs_of(&self, u: usize) -> &[usize] {
        &self.adj[self.first[u]..self.first[u + 1]]
    }
}

/// Computes a maximum flow and the minimal minimum cut.
///
/// Dinic's algorithm: BFS level graphs with blocking flows found by an
/// iterative DFS. Residual capacities at or below a tolerance of `1e-12`
/// times the largest capacity are treated as saturated, so rounding residue
/// never creates phantom augmenting paths or reachable nodes.
pub fn max_flow(net: &FlowNetwork) -> MinCut {
    let n = net.node_count;
    let source = n;
    let sink = n + 1;
    let (mut g, mut flow) = Residual::build(net, source, sink);
    let eps = 1e-12 * net.max_capacity();

    let total = n + 2;
    let mut level = vec![usize::MAX; total];
    let mut cursor = vec![0usize; total];
    let mut queue = VecDeque::with_capacity(total);
    let mut path: Vec<usize> = Vec::new();

    loop {
        // BFS levels
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &e in g.arcs_of(u) {
                let v = g.head[e];
                if g.cap[e] > eps && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[sink] == usize::MAX {
            break;
        }

        cursor[..total].copy_from_slice(&g.first[..total]);

        // Blocking flow
        path.clear();
        let mut u = source;
        loop {
            if u == sink {
                let bottleneck = path.iter().map(|&e| g.cap[e]).fold(f64::INFINITY, f64::min);
                let mut restart = 0;
                for (k, &e) in path.iter().enumerate() {
                    g.cap[e] -= bottleneck;
                    g.cap[e ^ 1] += bottleneck;
                    if g.cap[e] <= eps && restart == 0 {
                        restart = k + 1;
                    }
                }
                flow += bottleneck;
                // Resume from the tail of the first saturated arc.
                let keep = restart.saturating_sub(1);
                path.truncate(keep);
                u = path.last().map_or(source, |&e| g.head[e]);
                continue;
            }

            let end = g.first[u + 1];
            let mut advanced = false;
            while cursor[u] < end {
                let e = g.adj[cursor[u]];
                let v = g.head[e];
                if g.cap[e] > eps && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                cursor[u] += 1;
            }
            if advanced {
                continue;
            }
            // Dead end: prune u from this phase and retreat.
            level[u] = usize::MAX;
            match path.pop() {
                Some(e) => {
                    u = g.head[e ^ 1];
                    cursor[u] += 1;
                }
                None => break,
            }
        }
    }

    // Reachable set from the source in the residual graph.
    let mut reach = vec![false; total];
    reach[source] = true;
    queue.clear();
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &e in g.arcs_of(u) {
            let v = g.head[e];
            if g.cap[e] > eps && !reach[v] {
                reach[v] = true;
                queue.push_back(v);
            }
        }
    }
    reach.truncate(n);
    MinCut {
        source_side: reach,
        flow_value: flow,
    }
}
