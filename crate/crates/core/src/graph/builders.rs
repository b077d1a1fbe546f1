//! Standard graph families and a by-name registry over them.

use super::{Edge, FiniteGraph, VertexId};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Path `0 - 1 - ... - (n-1)` with `∂ = 0`.
pub fn build_path(n: usize, potential: &str) -> Result<FiniteGraph> {
    if n < 1 {
        return Err(Error::Invalid("path needs at least one vertex".into()));
    }
    let edges = (0..n - 1).map(|i| Edge::new(i, i + 1, potential)).collect();
    FiniteGraph::new(n, edges, 0)
}

/// Cycle of length `n` (two parallel edges for `n = 2`), `∂ = 0`.
pub fn build_cycle(n: usize, potential: &str) -> Result<FiniteGraph> {
    if n < 2 {
        return Err(Error::Invalid("cycle needs at least two vertices".into()));
    }
    let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, potential)).collect();
    FiniteGraph::new(n, edges, 0)
}

/// Periodic `side × side` square lattice. Vertex `x + side·y`; edge `2v` is
/// the horizontal edge leaving `v`, edge `2v + 1` the vertical one. `∂ = 0`.
pub fn build_torus(side: usize, potential: &str) -> Result<FiniteGraph> {
    if side < 2 {
        return Err(Error::Invalid(format!("torus side must be >= 2, got {side}")));
    }
    let n = side * side;
    let mut edges = Vec::with_capacity(2 * n);
    for y in 0..side {
        for x in 0..side {
            let v = x + side * y;
            edges.push(Edge::new(v, (x + 1) % side + side * y, potential));
            edges.push(Edge::new(v, x + side * ((y + 1) % side), potential));
        }
    }
    FiniteGraph::new(n, edges, 0)
}

/// Interaction range of a lattice box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ambient {
    /// Nearest neighbours of ℤ².
    Square,
    /// All pairs at Euclidean distance at most 2.
    SquareRange2,
}

impl Ambient {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Ambient::Square => &[(1, 0), (0, 1)],
            Ambient::SquareRange2 => &[(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)],
        }
    }
}

/// A box of ℤ² together with the lattice position of every non-wired vertex.
#[derive(Clone, Debug)]
pub struct LatticeBox {
    pub graph: FiniteGraph,
    /// `positions[v]` is `None` only for the wired boundary vertex.
    pub positions: Vec<Option<(i64, i64)>>,
}

impl LatticeBox {
    pub fn vertex_at(&self, p: (i64, i64)) -> Option<VertexId> {
        self.positions.iter().position(|&q| q == Some(p))
    }
}

/// `[-N, N]²` with the complement identified to `∂` (the last vertex) and
/// the resulting self-loops removed.
pub fn build_wired_box(ambient: Ambient, n: usize, potential: &str) -> Result<LatticeBox> {
    if n < 1 {
        return Err(Error::Invalid("wired box needs N >= 1".into()));
    }
    let r = n as i64;
    let side = 2 * n + 1;
    let inner = side * side;
    let index = |x: i64, y: i64| -> Option<VertexId> {
        (x.abs() <= r && y.abs() <= r).then(|| (x + r) as usize + side * (y + r) as usize)
    };
    let boundary = inner;
    let mut edges = Vec::new();
    // Each lattice edge with at least one endpoint inside, visited once from its lower end.
    for y in -r - 2..=r + 2 {
        for x in -r - 2..=r + 2 {
            for &(dx, dy) in ambient.offsets() {
                let a = index(x, y);
                let b = index(x + dx, y + dy);
                if a.is_none() && b.is_none() {
                    continue;
                }
                edges.push(Edge::new(a.unwrap_or(boundary), b.unwrap_or(boundary), potential));
            }
        }
    }
    let mut positions: Vec<Option<(i64, i64)>> = Vec::with_capacity(inner + 1);
    for y in -r..=r {
        for x in -r..=r {
            positions.push(Some((x, y)));
        }
    }
    positions.push(None);
    Ok(LatticeBox {
        graph: FiniteGraph::new(inner + 1, edges, boundary)?,
        positions,
    })
}

/// Free `side × side` box `[0, side)²` with range-2 edges, `∂ = (0, 0)`.
pub fn build_range2_box(side: usize, potential: &str) -> Result<LatticeBox> {
    lattice_box(side, Ambient::SquareRange2, potential)
}

fn lattice_box(side: usize, ambient: Ambient, potential: &str) -> Result<LatticeBox> {
    if side < 2 {
        return Err(Error::Invalid(format!("box side must be >= 2, got {side}")));
    }
    let s = side as i64;
    let mut edges = Vec::new();
    for y in 0..s {
        for x in 0..s {
            for &(dx, dy) in ambient.offsets() {
                let (u, w) = (x + dx, y + dy);
                if (0..s).contains(&u) && (0..s).contains(&w) {
                    edges.push(Edge::new(
                        (x + s * y) as usize,
                        (u + s * w) as usize,
                        potential,
                    ));
                }
            }
        }
    }
    let positions = (0..s * s).map(|v| Some((v % s, v / s))).collect();
    Ok(LatticeBox {
        graph: FiniteGraph::new(side * side, edges, 0)?,
        positions,
    })
}

/// Every connected simple graph with `1..=max_edges` edges, one per
/// isomorphism class, ordered by (edges, vertices, canonical edge list).
/// Vertices are relabelled so the canonical form is lexicographically
/// smallest; `∂ = 0`.
pub fn connected_simple_graphs(max_edges: usize, potential: &str) -> Result<Vec<FiniteGraph>> {
    let n_max = max_edges + 1;
    let pairs: Vec<(usize, usize)> = (0..n_max).flat_map(|a| (a + 1..n_max).map(move |b| (a, b))).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut chosen = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    subsets(&pairs, max_edges, 0, &mut stack, &mut |set| {
        let edges: Vec<(usize, usize)> = set.iter().map(|&i| pairs[i]).collect();
        if let Some(canon) = canonical_form(&edges) {
            if seen.insert(canon.clone()) {
                chosen.push(canon);
            }
        }
    });
    chosen.sort_by_key(|c| (c.len(), vertex_count(c), c.clone()));
    chosen
        .into_iter()
        .map(|c| {
            let edges = c.iter().map(|&(a, b)| Edge::new(a, b, potential)).collect();
            FiniteGraph::new(vertex_count(&c), edges, 0)
        })
        .collect()
}

fn subsets(pairs: &[(usize, usize)], max: usize, start: usize, stack: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if !stack.is_empty() {
        visit(stack);
    }
    if stack.len() == max {
        return;
    }
    for i in start..pairs.len() {
        // new edges must touch the vertices used so far, which keeps the
        // labels contiguous and prunes most disconnected sets
        let (a, b) = pairs[i];
        let used = stack.iter().map(|&j| pairs[j].1).max().map_or(0, |m| m + 1);
        if stack.is_empty() && a != 0 || !stack.is_empty() && (b > used || a >= used) {
            continue;
        }
        stack.push(i);
        subsets(pairs, max, i + 1, stack, visit);
        stack.pop();
    }
}

fn vertex_count(edges: &[(usize, usize)]) -> usize {
    edges.iter().map(|e| e.1.max(e.0) + 1).max().unwrap_or(0)
}

/// Smallest relabelled sorted edge list, or `None` if disconnected.
fn canonical_form(edges: &[(usize, usize)]) -> Option<Vec<(usize, usize)>> {
    let n = vertex_count(edges);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut todo = vec![0];
    seen[0] = true;
    while let Some(v) = todo.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                todo.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return None;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Vec<(usize, usize)>> = None;
    loop {
        let mut relabelled: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(a, b)| (perm[a].min(perm[b]), perm[a].max(perm[b])))
            .collect();
        relabelled.sort();
        if best.as_ref().is_none_or(|b| relabelled < *b) {
            best = Some(relabelled);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// A named graph family constructible from integer size parameters.
pub trait GraphBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn usage(&self) -> &'static str;
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph>;
}

struct PathBuilder;
struct CycleBuilder;
struct TorusBuilder;
struct WiredBoxBuilder;
struct Range2BoxBuilder;
struct SquareBoxBuilder;

impl GraphBuilder for PathBuilder {
    fn name(&self) -> &'static str {
        "path"
    }
    fn usage(&self) -> &'static str {
        "path of SIZE vertices, boundary at one end"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        build_path(size, potential)
    }
}

impl GraphBuilder for CycleBuilder {
    fn name(&self) -> &'static str {
        "cycle"
    }
    fn usage(&self) -> &'static str {
        "cycle of SIZE vertices"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        build_cycle(size, potential)
    }
}

impl GraphBuilder for TorusBuilder {
    fn name(&self) -> &'static str {
        "torus"
    }
    fn usage(&self) -> &'static str {
        "SIZE x SIZE periodic square lattice"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        build_torus(size, potential)
    }
}

impl GraphBuilder for WiredBoxBuilder {
    fn name(&self) -> &'static str {
        "wired-box"
    }
    fn usage(&self) -> &'static str {
        "[-SIZE, SIZE]^2 nearest-neighbour box with the exterior wired to the boundary"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        Ok(build_wired_box(Ambient::Square, size, potential)?.graph)
    }
}

impl GraphBuilder for SquareBoxBuilder {
    fn name(&self) -> &'static str {
        "box"
    }
    fn usage(&self) -> &'static str {
        "free SIZE x SIZE nearest-neighbour box"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        Ok(lattice_box(size, Ambient::Square, potential)?.graph)
    }
}

impl GraphBuilder for Range2BoxBuilder {
    fn name(&self) -> &'static str {
        "range2-box"
    }
    fn usage(&self) -> &'static str {
        "free SIZE x SIZE box with all edges of Euclidean length <= 2"
    }
    fn build(&self, size: usize, potential: &str) -> Result<FiniteGraph> {
        Ok(build_range2_box(size, potential)?.graph)
    }
}

/// Graph families selectable by name at runtime.
pub struct GraphRegistry {
    builders: BTreeMap<&'static str, Box<dyn GraphBuilder>>,
}

impl Default for GraphRegistry {
    fn default() -> Self {
        let mut reg = GraphRegistry {
            builders: BTreeMap::new(),
        };
        reg.register(Box::new(PathBuilder));
        reg.register(Box::new(CycleBuilder));
        reg.register(Box::new(TorusBuilder));
        reg.register(Box::new(WiredBoxBuilder));
        reg.register(Box::new(SquareBoxBuilder));
        reg.register(Box::new(Range2BoxBuilder));
        reg
    }
}

impl GraphRegistry {
    pub fn register(&mut self, builder: Box<dyn GraphBuilder>) {
        self.builders.insert(builder.name(), builder);
    }

    pub fn get(&self, name: &str) -> Result<&dyn GraphBuilder> {
        self.builders.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown graph builder `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn build(&self, name: &str, size: usize, potential: &str) -> Result<FiniteGraph> {
        self.get(name)?.build(size, potential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let t = build_torus(2, "xy:1").unwrap();
        assert_eq!((t.n_vertices(), t.n_edges()), (4, 8));
        let t = build_torus(4, "xy:1").unwrap();
        assert_eq!((t.n_vertices(), t.n_edges()), (16, 32));
        let p = build_path(3, "xy:1").unwrap();
        assert_eq!((p.n_vertices(), p.n_edges(), p.boundary()), (3, 2, 0));
        let c = build_cycle(2, "xy:1").unwrap();
        assert_eq!(c.n_edges(), 2);
        assert!(build_torus(1, "xy:1").is_err());
    }

    #[test]
    fn wired_box_counts() {
        let b = build_wired_box(Ambient::Square, 1, "xy:1").unwrap();
        assert_eq!(b.graph.n_vertices(), 10);
        assert_eq!(b.graph.n_edges(), 24);
        assert_eq!(b.graph.boundary(), 9);
        assert_eq!(b.graph.degree(9), 12);
        for v in 0..9 {
            assert_eq!(b.graph.degree(v), 4);
        }
        let b2 = build_wired_box(Ambient::Square, 2, "xy:1").unwrap();
        assert_eq!(b2.graph.n_edges(), 2 * 25 + 10);
    }

    #[test]
    fn torus_edge_layout() {
        let side = 5;
        let t = build_torus(side, "xy:1").unwrap();
        for v in 0..side * side {
            let (x, y) = (v % side, v / side);
            assert_eq!(t.edge(2 * v).tail, v);
            assert_eq!(t.edge(2 * v).head, (x + 1) % side + side * y);
            assert_eq!(t.edge(2 * v + 1).head, x + side * ((y + 1) % side));
        }
    }

    #[test]
    fn range2_box() {
        let b = build_range2_box(3, "xy:1").unwrap();
        // 12 nearest-neighbour, 8 diagonal, 6 straight distance-2 edges.
        assert_eq!(b.graph.n_edges(), 26);
        assert_eq!(b.vertex_at((1, 1)), Some(4));
    }

    #[test]
    fn small_graph_census() {
        // connected simple graphs by edge count: 1, 1, 3, 5, 12
        let all = connected_simple_graphs(5, "xy:1").unwrap();
        let count = |m| all.iter().filter(|g| g.n_edges() == m).count();
        assert_eq!((1..=5).map(count).collect::<Vec<_>>(), vec![1, 1, 3, 5, 12]);
        assert!(all.iter().all(|g| !g.has_parallel_edges() && g.boundary() == 0));
        assert_eq!(all.iter().filter(|g| g.cycle_rank() == 2).count(), 1);
    }

    #[test]
    fn registry_lookup() {
        let reg = GraphRegistry::default();
        assert_eq!(reg.build("torus", 3, "xy:1").unwrap().n_vertices(), 9);
        assert!(reg.build("moebius", 3, "xy:1").is_err());
    }
}
