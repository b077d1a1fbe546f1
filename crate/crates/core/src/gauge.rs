//! Spanning-tree gauge: co-closed one-forms parameterised by their values on
//! the non-tree edges.

use crate::forms::{wrap_angle, OneForm};
use crate::graph::{EdgeId, FiniteGraph, VertexId};
use std::collections::VecDeque;

/// BFS spanning tree rooted at ∂ with the fundamental cycle of every
/// non-tree ("free") edge.
#[derive(Clone, Debug)]
pub struct TreeGauge {
    /// Vertices in BFS discovery order, starting with ∂.
    order: Vec<VertexId>,
    /// Tree edge leading to each vertex from its parent (`None` at ∂).
    parent_edge: Vec<Option<EdgeId>>,
    parent: Vec<Option<VertexId>>,
    depth: Vec<usize>,
    is_tree: Vec<bool>,
    free: Vec<EdgeId>,
    /// `cycles[k]`: signed edges of the loop through `free[k]`, which has sign +1.
    cycles: Vec<Vec<(EdgeId, i8)>>,
}

impl TreeGauge {
    /// BFS from ∂; at each vertex incident edges are scanned sorted by
    /// `(tail, head, id)`.
    pub fn new(g: &FiniteGraph) -> TreeGauge {
        let n = g.n_vertices();
        let root = g.boundary();
        let mut parent_edge = vec![None; n];
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut is_tree = vec![false; g.n_edges()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut inc: Vec<EdgeId> = g.incident(v).iter().map(|&(e, _)| e).collect();
            inc.sort_by_key(|&e| (g.edge(e).tail, g.edge(e).head, e));
            for e in inc {
                let u = g.edge(e).other(v);
                if !seen[u] {
                    seen[u] = true;
                    parent_edge[u] = Some(e);
                    parent[u] = Some(v);
                    depth[u] = depth[v] + 1;
                    is_tree[e] = true;
                    queue.push_back(u);
                }
            }
        }
        let free: Vec<EdgeId> = (0..g.n_edges()).filter(|&e| !is_tree[e]).collect();
        let mut gauge = TreeGauge {
            order,
            parent_edge,
            parent,
            depth,
            is_tree,
            free,
            cycles: Vec::new(),
        };
        gauge.cycles = gauge.free.iter().map(|&f| gauge.fundamental_cycle(g, f)).collect();
        gauge
    }

    /// Loop `tail -f-> head -> ... -> tail` closed through the tree.
    fn fundamental_cycle(&self, g: &FiniteGraph, f: EdgeId) -> Vec<(EdgeId, i8)> {
        let edge = g.edge(f);
        let mut cycle = vec![(f, 1)];
        let (mut a, mut b) = (edge.head, edge.tail);
        // Climb from the head (traversing child -> parent) and from the tail
        // (collected then reversed, traversing parent -> child) to the LCA.
        let mut descent = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                let e = self.parent_edge[a].expect("non-root vertex has a parent edge");
                cycle.push((e, if g.edge(e).tail == a { 1 } else { -1 }));
                a = self.parent[a].unwrap();
            } else {
                let e = self.parent_edge[b].expect("non-root vertex has a parent edge");
                let p = self.parent[b].unwrap();
                descent.push((e, if g.edge(e).tail == p { 1 } else { -1 }));
                b = p;
            }
        }
        cycle.extend(descent.into_iter().rev());
        cycle
    }

    pub fn is_tree_edge(&self, e: EdgeId) -> bool {
        self.is_tree[e]
    }

    /// Tree edges in BFS order of the vertex they lead to.
    pub fn tree_edges(&self) -> Vec<EdgeId> {
        self.order.iter().filter_map(|&v| self.parent_edge[v]).collect()
    }

    /// Non-tree edges in increasing id order.
    pub fn free_edges(&self) -> &[EdgeId] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn cycles(&self) -> &[Vec<(EdgeId, i8)>] {
        &self.cycles
    }

    /// Vertices in BFS order, ∂ first.
    pub fn bfs_order(&self) -> &[VertexId] {
        &self.order
    }

    pub fn parent_edge(&self, v: VertexId) -> Option<EdgeId> {
        self.parent_edge[v]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    /// Tree edges from the leaves towards the root.
    pub fn leaf_to_root(&self) -> Vec<EdgeId> {
        self.order.iter().rev().filter_map(|&v| self.parent_edge[v]).collect()
    }

    /// Coefficient matrix `z[e][k]` of edge `e` in the fundamental cycle `k`.
    pub fn cycle_matrix(&self, n_edges: usize) -> Vec<Vec<i64>> {
        let mut z = vec![vec![0i64; self.free.len()]; n_edges];
        for (k, cyc) in self.cycles.iter().enumerate() {
            for &(e, s) in cyc {
                z[e][k] += s as i64;
            }
        }
        z
    }

    /// `J̄ = Σ_k x_k z_k`, the co-closed form with value `x_k` on free edge `k`.
    pub fn extend(&self, n_edges: usize, free_values: &[f64]) -> OneForm {
        assert_eq!(free_values.len(), self.free.len(), "one value per free edge");
        let mut out = OneForm::zeros(n_edges);
        for (cyc, &x) in self.cycles.iter().zip(free_values) {
            for &(e, s) in cyc {
                out[e] += s as f64 * x;
            }
        }
        out
    }

    /// Same extension by peeling: tree edges are fixed leaf to root so that
    /// the divergence vanishes at the vertex below each of them.
    pub fn extend_by_peeling(&self, g: &FiniteGraph, free_values: &[f64]) -> OneForm {
        assert_eq!(free_values.len(), self.free.len(), "one value per free edge");
        let mut out = OneForm::zeros(g.n_edges());
        for (&f, &x) in self.free.iter().zip(free_values) {
            out[f] = x;
        }
        for &v in self.order.iter().rev() {
            let Some(pe) = self.parent_edge[v] else { continue };
            let mut flux = 0.0;
            let mut own = 0.0;
            for &(e, s) in g.incident(v) {
                if e == pe {
                    own += s as f64;
                } else {
                    flux += s as f64 * out[e];
                }
            }
            out[pe] = -flux / own;
        }
        out
    }

    /// Angle-valued extension reduced to `(-π, π]`.
    pub fn extend_mod_2pi(&self, n_edges: usize, free_values: &[f64]) -> OneForm {
        let mut j = self.extend(n_edges, free_values);
        for x in j.0.iter_mut() {
            *x = wrap_angle(*x);
        }
        j
    }
}
