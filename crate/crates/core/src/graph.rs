//! Feedback graphs over the `d` arms.
//!
//! Every vertex carries a self-loop: playing an arm always reveals its own
//! loss. Directed graphs reveal out-neighbours when played.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`Graph::independence_number`].
pub const MAX_INDEPENDENCE_VERTICES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    /// Sorted out-neighbourhoods, each containing the vertex itself.
    out: Vec<Vec<usize>>,
}

impl Graph {
    /// Build from explicit out-neighbourhood lists. Every list must contain
    /// its own vertex; undirected graphs must be symmetric.
    pub fn from_adjacency(out: Vec<Vec<usize>>, directed: bool) -> Result<Self> {
        let n = out.len();
        let mut lists = Vec::with_capacity(n);
        for (v, mut nbrs) in out.into_iter().enumerate() {
            nbrs.sort_unstable();
            nbrs.dedup();
            if let Some(&w) = nbrs.iter().find(|&&w| w >= n) {
                return Err(Error::config(format!("vertex {v} lists neighbour {w} out of range")));
            }
            if nbrs.binary_search(&v).is_err() {
                return Err(Error::config(format!("vertex {v} is missing its self-loop")));
            }
            lists.push(nbrs);
        }
        let g = Graph { directed, out: lists };
        if !directed {
            for v in 0..n {
                for &w in &g.out[v] {
                    if g.out[w].binary_search(&v).is_err() {
                        return Err(Error::config(format!(
                            "undirected graph is not symmetric: {v} -> {w} without {w} -> {v}"
                        )));
                    }
                }
            }
        }
        Ok(g)
    }

    /// Build from an edge list, adding every self-loop (and reverse edges
    /// when undirected).
    pub fn with_self_loops(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let mut out: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::config(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            out[u].push(v);
            if !directed {
                out[v].push(u);
            }
        }
        Self::from_adjacency(out, directed)
    }

    /// Self-loops only: every arm reveals only itself.
    pub fn empty(n: usize) -> Self {
        Self::with_self_loops(n, &[], false).expect("valid")
    }

    pub fn complete(n: usize) -> Self {
        Self::from_adjacency((0..n).map(|_| (0..n).collect()).collect(), false).expect("valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::with_self_loops(n, &edges, false).expect("valid")
    }

    /// Vertex-disjoint union of cliques on the given blocks.
    pub fn cliques(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut out: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for b in blocks {
            for &u in b {
                if u >= n {
                    return Err(Error::config(format!("clique vertex {u} out of range")));
                }
                out[u].extend_from_slice(b);
            }
        }
        Self::from_adjacency(out, false)
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-neighbourhood of `v`, including `v`.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    /// In-neighbourhood of `v`, including `v`.
    pub fn in_neighbors(&self, v: usize) -> Vec<usize> {
        if !self.directed {
            return self.out[v].clone();
        }
        (0..self.len()).filter(|&u| self.out[u].binary_search(&v).is_ok()).collect()
    }

    fn has_edge_either_way(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok() || self.out[v].binary_search(&u).is_ok()
    }

    /// True when the graph is a vertex-disjoint union of cliques covering
    /// every vertex (the contextual feedback shape).
    pub fn is_clique_partition(&self) -> bool {
        if self.directed {
            return false;
        }
        self.out.iter().all(|nbrs| nbrs.iter().all(|&w| self.out[w] == *nbrs))
    }

    /// Exact independence number by branch and bound over bitmasks.
    ///
    /// Directed graphs are treated through their underlying undirected graph.
    pub fn independence_number(&self) -> Result<usize> {
        let n = self.len();
        if n > MAX_INDEPENDENCE_VERTICES {
            return Err(Error::size(format!(
                "independence number limited to {MAX_INDEPENDENCE_VERTICES} vertices, got {n}"
            )));
        }
        let closed: Vec<u32> = (0..n)
            .map(|v| {
                (0..n)
                    .filter(|&w| w == v || self.has_edge_either_way(v, w))
                    .fold(0u32, |acc, w| acc | (1 << w))
            })
            .collect();
        let all = if n == 0 { 0 } else { (1u32 << n) - 1 };
        let mut best = 0;
        mis(&closed, all, 0, &mut best);
        Ok(best)
    }

    /// `sum_i pi(i) / sum_{j in {i} ∪ N_in(i)} pi(j)`, with `0/0 = 0`.
    pub fn neighborhood_ratio_sum(&self, pi: &[f64]) -> f64 {
        assert_eq!(pi.len(), self.len(), "probability vector length mismatch");
        let mut total = 0.0;
        for i in 0..self.len() {
            if pi[i] == 0.0 {
                continue;
            }
            let denom: f64 = self.in_neighbors(i).iter().map(|&j| pi[j]).sum();
            if denom > 0.0 {
                total += pi[i] / denom;
            }
        }
        total
    }

    /// Parse the adjacency-list text format.
    ///
    /// ```text
    /// # comments and blank lines are ignored
    /// undirected          (or `directed`; optional, default undirected)
    /// 0: 0 1
    /// 1: 1 0 2
    /// 2: 2 1
    /// ```
    ///
    /// One line per vertex, in order, listing its out-neighbours. The vertex
    /// itself must be listed (explicit self-loop).
    pub fn parse(text: &str) -> Result<Self> {
        let mut directed = false;
        let mut out = Vec::new();
        let mut seen_vertex = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !seen_vertex && (line == "directed" || line == "undirected") {
                directed = line == "directed";
                continue;
            }
            seen_vertex = true;
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: line_no, msg: "expected `<vertex>: <neighbours>`".into() })?;
            let v: usize = head
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: line_no, msg: format!("bad vertex id `{}`", head.trim()) })?;
            if v != out.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected vertex {} but found {v}", out.len()),
                });
            }
            let mut nbrs = Vec::new();
            for tok in tail.split_whitespace() {
                let w: usize = tok
                    .parse()
                    .map_err(|_| Error::Parse { line: line_no, msg: format!("bad neighbour `{tok}`") })?;
                nbrs.push(w);
            }
            if !nbrs.contains(&v) {
                return Err(Error::Parse { line: line_no, msg: format!("vertex {v} must list its own self-loop") });
            }
            out.push(nbrs);
        }
        if out.is_empty() {
            return Err(Error::Parse { line: 0, msg: "graph has no vertices".into() });
        }
        Self::from_adjacency(out, directed).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from(if self.directed { "directed\n" } else { "undirected\n" });
        for (v, nbrs) in self.out.iter().enumerate() {
            let list: Vec<String> = nbrs.iter().map(|w| w.to_string()).collect();
            let _ = writeln!(s, "{v}: {}", list.join(" "));
        }
        s
    }
}

fn mis(closed: &[u32], candidates: u32, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    let v = candidates.trailing_zeros() as usize;
    // take v
    mis(closed, candidates & !closed[v], size + 1, best);
    // skip v
    mis(closed, candidates & !(1 << v), size, best);
}
