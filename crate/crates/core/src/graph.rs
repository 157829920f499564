//! Communication topology: simple undirected graphs, Laplacians and the
//! per-component induced subnetworks whose connectivity the recovery
//! algorithm needs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field_model::FieldSystem;
use crate::linalg::SymMat;
use crate::scalar::Real;

/// Dense eigensolves are only attempted up to this vertex count; the
/// spectral value is a diagnostic, connectivity itself is decided by
/// traversal.
pub const DENSE_EIG_LIMIT: usize = 2000;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone)]
pub struct CommGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!(
                    "edge ({}, {}) out of range for {} vertices",
                    a + 1,
                    b + 1,
                    n
                )));
            }
            if a == b {
                return Err(Error::Config(format!("self-loop at vertex {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::Config(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self { n, edges, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// `L = D - A`.
    pub fn laplacian<T: Real>(&self) -> SymMat<T> {
        let mut l = SymMat::zeros(self.n);
        for v in 0..self.n {
            l.set(v, v, T::from_usize(self.degree(v)).unwrap());
        }
        for &(a, b) in &self.edges {
            l.set(a, b, -T::one());
        }
        l
    }

    /// Second-smallest Laplacian eigenvalue; positive iff connected.
    /// `None` above [`DENSE_EIG_LIMIT`]. A single vertex has no second
    /// eigenvalue; it is connected, so this returns infinity.
    pub fn algebraic_connectivity<T: Real>(&self) -> Option<T> {
        if self.n > DENSE_EIG_LIMIT {
            return None;
        }
        if self.n == 1 {
            return Some(T::infinity());
        }
        Some(self.laplacian::<T>().eigenvalues()[1])
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Subgraph induced by `vertices` (relabeled 0..k); also returns the
    /// relabeling map new index -> original vertex.
    pub fn induced(&self, vertices: &[usize]) -> Result<(CommGraph, Vec<usize>)> {
        let mut sorted: Vec<usize> = vertices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.iter().any(|&v| v >= self.n) {
            return Err(Error::Config("induced vertex out of range".into()));
        }
        let rank = |v: usize| sorted.binary_search(&v).ok();
        let mut edges = Vec::new();
        for &(a, b) in &self.edges {
            if let (Some(x), Some(y)) = (rank(a), rank(b)) {
                edges.push((x, y));
            }
        }
        Ok((CommGraph::new(sorted.len(), edges)?, sorted))
    }
}

/// The subnetwork induced by all agents interested in component `m`,
/// with the relabeling map back to agent indices.
pub fn interest_subgraph<T: Real>(
    g: &CommGraph,
    sys: &FieldSystem<T>,
    m: usize,
) -> Result<(CommGraph, Vec<usize>)> {
    if m >= sys.field_len() {
        return Err(Error::Config(format!(
            "component {} out of range (M = {})",
            m + 1,
            sys.field_len()
        )));
    }
    let group = sys.interest_group(m);
    if group.is_empty() {
        return Err(Error::Assumption(format!(
            "no agent is interested in component {}",
            m + 1
        )));
    }
    g.induced(group)
}

/// Per-component connectivity report.
#[derive(Debug, Clone)]
pub struct TopologyReport {
    /// Components (0-based) whose interest subnetwork is disconnected
    /// or empty.
    pub disconnected: Vec<usize>,
    pub components_checked: usize,
}

impl TopologyReport {
    pub fn passed(&self) -> bool {
        self.disconnected.is_empty()
    }
}

/// Checks that the interest subnetwork of every component is connected.
/// Decided by traversal; no eigensolves.
pub fn check_topology<T: Real>(g: &CommGraph, sys: &FieldSystem<T>) -> Result<TopologyReport> {
    if g.vertex_count() != sys.agent_count() {
        return Err(Error::Config(format!(
            "graph has {} vertices, system has {} agents",
            g.vertex_count(),
            sys.agent_count()
        )));
    }
    let mut disconnected = Vec::new();
    for m in 0..sys.field_len() {
        let group = sys.interest_group(m);
        if group.is_empty() {
            disconnected.push(m);
            continue;
        }
        let (sub, _) = g.induced(group)?;
        if !sub.is_connected() {
            disconnected.push(m);
        }
    }
    Ok(TopologyReport {
        disconnected,
        components_checked: sys.field_len(),
    })
}
