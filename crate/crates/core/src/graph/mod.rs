//! Finite connected multigraphs with a fixed edge orientation and a
//! distinguished boundary vertex.
//!
//! Every edge is stored once as `(tail, head)`; one-forms follow this
//! orientation. Parallel edges are first-class, self-loops are not.

mod builders;
mod text;

pub use builders::{
    build_cycle, build_path, connected_simple_graphs, build_range2_box, build_torus, build_wired_box, Ambient,
    GraphBuilder, GraphRegistry, LatticeBox,
};

use crate::error::{Error, Result};
use std::collections::VecDeque;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    /// Potential identifier, resolved through a `PotentialRegistry`.
    pub potential: String,
}

impl Edge {
    pub fn new(tail: VertexId, head: VertexId, potential: impl Into<String>) -> Self {
        Edge {
            tail,
            head,
            potential: potential.into(),
        }
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
    boundary: VertexId,
    /// Per vertex: incident edges in edge order, with sign +1 when the vertex
    /// is the head and -1 when it is the tail.
    incidence: Vec<Vec<(EdgeId, i8)>>,
}

impl FiniteGraph {
    /// Validates connectivity, endpoints and the absence of self-loops.
    pub fn new(n_vertices: usize, edges: Vec<Edge>, boundary: VertexId) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::Graph("graph has no vertices".into()));
        }
        if boundary >= n_vertices {
            return Err(Error::Graph(format!(
                "boundary vertex {boundary} out of range (|V| = {n_vertices})"
            )));
        }
        let mut incidence = vec![Vec::new(); n_vertices];
        for (id, e) in edges.iter().enumerate() {
            if e.tail >= n_vertices || e.head >= n_vertices {
                return Err(Error::Graph(format!(
                    "edge {id} ({} -> {}) has an endpoint out of range",
                    e.tail, e.head
                )));
            }
            if e.tail == e.head {
                return Err(Error::Graph(format!("edge {id} is a self-loop at {}", e.tail)));
            }
            if e.potential.is_empty() || e.potential.chars().any(char::is_whitespace) {
                return Err(Error::Graph(format!(
                    "edge {id} has an invalid potential id {:?}",
                    e.potential
                )));
            }
            incidence[e.tail].push((id, -1));
            incidence[e.head].push((id, 1));
        }
        let g = FiniteGraph {
            n_vertices,
            edges,
            boundary,
            incidence,
        };
        let seen = g.bfs_reach(boundary);
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Graph(format!("graph is disconnected: vertex {v} unreachable")));
        }
        Ok(g)
    }

    fn bfs_reach(&self, root: VertexId) -> Vec<bool> {
        let mut seen = vec![false; self.n_vertices];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(e, _) in &self.incidence[v] {
                let u = self.edges[e].other(v);
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn boundary(&self) -> VertexId {
        self.boundary
    }

    /// Incident edges of `v` with orientation sign (+1 if `v` is the head).
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, i8)] {
        &self.incidence[v]
    }

    /// Degree counted with multiplicity.
    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v].len()
    }

    /// Distinct neighbours of `v` in order of first incidence.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        for &(e, _) in &self.incidence[v] {
            let u = self.edges[e].other(v);
            if !out.contains(&u) {
                out.push(u);
            }
        }
        out
    }

    /// Edges joining `a` and `b`, in either orientation.
    pub fn edges_between(&self, a: VertexId, b: VertexId) -> Vec<EdgeId> {
        self.incidence[a]
            .iter()
            .map(|&(e, _)| e)
            .filter(|&e| self.edges[e].other(a) == b)
            .collect()
    }

    /// Interior vertices `V \ {∂}` in increasing order.
    pub fn interior(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n_vertices).filter(move |&v| v != self.boundary)
    }

    /// Dimension of the cycle space, `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.n_vertices
    }

    pub fn has_parallel_edges(&self) -> bool {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (e.tail.min(e.head), e.tail.max(e.head)))
            .collect();
        pairs.sort_unstable();
        pairs.windows(2).any(|w| w[0] == w[1])
    }

    /// Same topology with each edge's potential replaced by `f(edge id, edge)`.
    pub fn map_potentials<F>(&self, mut f: F) -> FiniteGraph
    where
        F: FnMut(EdgeId, &Edge) -> String,
    {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| Edge::new(e.tail, e.head, f(i, e)))
            .collect();
        FiniteGraph {
            edges,
            ..self.clone()
        }
    }

    /// Same graph with a different boundary vertex.
    pub fn with_boundary(&self, boundary: VertexId) -> Result<FiniteGraph> {
        FiniteGraph::new(self.n_vertices, self.edges.clone(), boundary)
    }

    /// Distinct potential identifiers, in first-use order.
    pub fn potential_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        for e in &self.edges {
            if !ids.contains(&e.potential.as_str()) {
                ids.push(&e.potential);
            }
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_graphs() {
        assert!(FiniteGraph::new(2, vec![Edge::new(0, 0, "xy:1")], 0).is_err());
        assert!(FiniteGraph::new(3, vec![Edge::new(0, 1, "xy:1")], 0).is_err());
        assert!(FiniteGraph::new(2, vec![Edge::new(0, 1, "xy:1")], 5).is_err());
        assert!(FiniteGraph::new(2, vec![Edge::new(0, 1, "")], 0).is_err());
        assert!(FiniteGraph::new(1, vec![], 0).is_ok());
    }

    #[test]
    fn incidence_signs() {
        let g = build_path(3, "xy:1").unwrap();
        assert_eq!(g.incident(1), &[(0, 1), (1, -1)]);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.neighbors(1), vec![0, 2]);
        assert_eq!(g.cycle_rank(), 0);
    }

    #[test]
    fn torus_two_is_a_multigraph() {
        let g = build_torus(2, "xy:1").unwrap();
        assert!(g.has_parallel_edges());
        assert_eq!(g.edges_between(0, 1).len(), 2);
        assert_eq!(g.neighbors(0).len(), 2);
    }
}
