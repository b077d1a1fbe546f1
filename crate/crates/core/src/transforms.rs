//! Graph modifications that never increase height variance: edge
//! splitting, vertex gluing, degree reduction, the star-tree transform,
//! parallel-edge merging and planarization of range-2 lattice boxes.
//!
//! Every transform is a sequence of three primitives (split, glue, merge)
//! recorded in a [`TransformLog`], which replays to the same graph.

use crate::error::{Error, Result};
use crate::graph::{Edge, FiniteGraph, LatticeBox, VertexId};
use crate::potentials::{merge_parallel, split_potential, PotentialRegistry};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformOp {
    /// Replace edge `edge` by a path of `k` edges.
    Split { edge: usize, k: u32 },
    /// Identify vertices `a` and `b`.
    Glue { a: VertexId, b: VertexId },
    /// Merge every family of parallel edges into one edge.
    Merge,
}

impl fmt::Display for TransformOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformOp::Split { edge, k } => write!(f, "split {edge} {k}"),
            TransformOp::Glue { a, b } => write!(f, "glue {a} {b}"),
            TransformOp::Merge => f.write_str("merge"),
        }
    }
}

/// Applied primitives in order, with the induced map from original vertices
/// to vertices of the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformLog {
    pub ops: Vec<TransformOp>,
    pub map: Vec<VertexId>,
}

impl TransformLog {
    pub fn identity(n_vertices: usize) -> TransformLog {
        TransformLog {
            ops: Vec::new(),
            map: (0..n_vertices).collect(),
        }
    }

    fn record(&mut self, op: TransformOp, step: &[VertexId]) {
        self.ops.push(op);
        for v in self.map.iter_mut() {
            *v = step[*v];
        }
    }

    pub fn to_text(&self) -> String {
        self.ops.iter().map(|op| format!("{op}\n")).collect()
    }

    /// Parses one op per line; `#` starts a comment.
    pub fn parse_ops(text: &str) -> Result<Vec<TransformOp>> {
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: format!("{msg}: `{line}`"),
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err("expected a non-negative integer"));
            ops.push(match words.as_slice() {
                ["split", e, k] => TransformOp::Split {
                    edge: num(e)?,
                    k: num(k)? as u32,
                },
                ["glue", a, b] => TransformOp::Glue { a: num(a)?, b: num(b)? },
                ["merge"] => TransformOp::Merge,
                _ => return Err(err("expected `split E K`, `glue A B` or `merge`")),
            });
        }
        Ok(ops)
    }

    /// Applies `ops` to `g` from scratch.
    pub fn replay(g: &FiniteGraph, ops: &[TransformOp], reg: &PotentialRegistry) -> Result<(FiniteGraph, TransformLog)> {
        let mut t = Transformer::new(g.clone(), reg);
        for op in ops {
            t.apply(*op)?;
        }
        Ok(t.finish())
    }
}

/// A graph under transformation together with its log.
pub struct Transformer<'a> {
    pub graph: FiniteGraph,
    pub log: TransformLog,
    reg: &'a PotentialRegistry,
}

impl<'a> Transformer<'a> {
    pub fn new(graph: FiniteGraph, reg: &'a PotentialRegistry) -> Transformer<'a> {
        let log = TransformLog::identity(graph.n_vertices());
        Transformer { graph, log, reg }
    }

    pub fn finish(self) -> (FiniteGraph, TransformLog) {
        (self.graph, self.log)
    }

    pub fn apply(&mut self, op: TransformOp) -> Result<()> {
        let (g, step) = match op {
            TransformOp::Split { edge, k } => split_edge(&self.graph, edge, k, self.reg)?,
            TransformOp::Glue { a, b } => glue_vertices(&self.graph, a, b)?,
            TransformOp::Merge => merge_parallel_edges(&self.graph, self.reg)?,
        };
        self.graph = g;
        self.log.record(op, &step);
        Ok(())
    }
}

/// Replaces edge `e` by a path of `k` edges oriented like `e`, each with the
/// `k`-th convolution root of its potential. The first sub-edge keeps id
/// `e`; new vertices and the other sub-edges are appended.
pub fn split_edge(g: &FiniteGraph, e: usize, k: u32, reg: &PotentialRegistry) -> Result<(FiniteGraph, Vec<VertexId>)> {
    if e >= g.n_edges() {
        return Err(Error::Invalid(format!("edge {e} out of range")));
    }
    if k < 2 {
        return Err(Error::Invalid("split factor must be >= 2".into()));
    }
    let old = g.edge(e);
    let part = split_potential(reg, reg.resolve(&old.potential)?.as_ref(), k)?.id();
    let n = g.n_vertices();
    let mut edges = g.edges().to_vec();
    let chain: Vec<VertexId> = std::iter::once(old.tail)
        .chain(n..n + k as usize - 1)
        .chain(std::iter::once(old.head))
        .collect();
    edges[e] = Edge::new(chain[0], chain[1], part.clone());
    for w in chain[1..].windows(2) {
        edges.push(Edge::new(w[0], w[1], part.clone()));
    }
    let out = FiniteGraph::new(n + k as usize - 1, edges, g.boundary())?;
    Ok((out, (0..n).collect()))
}

/// Identifies `a` and `b`: the merged vertex takes the smaller id, larger
/// ids shift down by one, and edges joining `a` and `b` (which would become
/// self-loops) are deleted. Gluing `∂` makes the merged vertex `∂`.
pub fn glue_vertices(g: &FiniteGraph, a: VertexId, b: VertexId) -> Result<(FiniteGraph, Vec<VertexId>)> {
    let n = g.n_vertices();
    if a >= n || b >= n {
        return Err(Error::Invalid(format!("cannot glue {a} and {b}: out of range")));
    }
    if a == b {
        return Err(Error::Invalid("cannot glue a vertex to itself".into()));
    }
    let (keep, gone) = (a.min(b), a.max(b));
    let step: Vec<VertexId> = (0..n)
        .map(|v| match v {
            v if v == gone => keep,
            v if v > gone => v - 1,
            v => v,
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .filter(|e| step[e.tail] != step[e.head])
        .map(|e| Edge::new(step[e.tail], step[e.head], e.potential.clone()))
        .collect();
    Ok((FiniteGraph::new(n - 1, edges, step[g.boundary()])?, step))
}

/// Replaces each family of parallel edges by one edge (oriented like the
/// first) whose weight is the product of the family's weights.
pub fn merge_parallel_edges(g: &FiniteGraph, reg: &PotentialRegistry) -> Result<(FiniteGraph, Vec<VertexId>)> {
    let mut groups: BTreeMap<(VertexId, VertexId), Vec<usize>> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let key = (e.tail.min(e.head), e.tail.max(e.head));
        let entry = groups.entry(key).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(i);
    }
    let mut edges = Vec::with_capacity(order.len());
    for key in order {
        let ids = &groups[&key];
        let first = g.edge(ids[0]);
        let mut pair = reg.resolve(&first.potential)?;
        for &i in &ids[1..] {
            pair = std::sync::Arc::new(merge_parallel(&pair, reg.resolve(&g.edge(i).potential)?.as_ref())?);
        }
        edges.push(Edge::new(first.tail, first.head, pair.id()));
    }
    Ok((FiniteGraph::new(g.n_vertices(), edges, g.boundary())?, (0..g.n_vertices()).collect()))
}

/// Edge `v1 - v2` with the XY potential at coupling `lambda`. As `lambda → 0`
/// the heights at `v1` and `v2` are forced equal, which is gluing.
pub fn add_auxiliary_edge(g: &FiniteGraph, v1: VertexId, v2: VertexId, lambda: f64) -> Result<FiniteGraph> {
    let mut edges = g.edges().to_vec();
    edges.push(Edge::new(v1, v2, format!("xy:{lambda}")));
    FiniteGraph::new(g.n_vertices(), edges, g.boundary())
}

/// One pass of degree reduction at `v0`. With at least four distinct
/// neighbours, takes them in stored order `v_1, ..., v_{2d}` (dropping the
/// last when odd), splits every edge `v0 - v_i` in two and glues the
/// midpoints of `v_{2i-1}` and `v_{2i}`.
pub fn degree_reduce(t: &mut Transformer, v0: VertexId) -> Result<()> {
    let neighbors = t.graph.neighbors(v0);
    if neighbors.len() < 4 {
        return Ok(());
    }
    let paired = neighbors.len() / 2 * 2;
    let mut midpoints: Vec<Vec<VertexId>> = vec![Vec::new(); paired];
    for (i, &vi) in neighbors[..paired].iter().enumerate() {
        for e in t.graph.edges_between(v0, vi) {
            t.apply(TransformOp::Split { edge: e, k: 2 })?;
            // the midpoint is the newest vertex
            midpoints[i].push(t.graph.n_vertices() - 1);
        }
    }
    // Glue the highest ids first so the recorded ids stay valid.
    let mut groups: Vec<Vec<VertexId>> = (0..paired / 2)
        .map(|i| {
            let mut grp = midpoints[2 * i].clone();
            grp.extend(&midpoints[2 * i + 1]);
            grp.sort_unstable();
            grp
        })
        .collect();
    groups.sort_by_key(|grp| std::cmp::Reverse(grp[0]));
    for grp in groups {
        for &x in grp[1..].iter().rev() {
            t.apply(TransformOp::Glue { a: grp[0], b: x })?;
        }
    }
    Ok(())
}

/// Degree-reduces every non-boundary vertex until each has at most three
/// neighbours, then merges parallel edges.
pub fn star_tree_transform(g: &FiniteGraph, reg: &PotentialRegistry) -> Result<(FiniteGraph, TransformLog)> {
    let mut t = Transformer::new(g.clone(), reg);
    loop {
        let busy = t.graph.interior().find(|&v| t.graph.neighbors(v).len() > 3);
        match busy {
            Some(v) => degree_reduce(&mut t, v)?,
            None => break,
        }
    }
    if t.graph.has_parallel_edges() {
        t.apply(TransformOp::Merge)?;
    }
    Ok(t.finish())
}

/// Planarizes a range-2 lattice box: every edge between points at `ℓ¹`
/// distance 2 is split in two and its midpoint glued to a lattice point at
/// distance 1 from both ends. For a straight edge that point is unique; for
/// a diagonal the lexicographically smaller `(x, y)` is used. Only
/// nearest-neighbour edges (with multiplicities) remain.
pub fn planarize_long_range(lbox: &LatticeBox, reg: &PotentialRegistry) -> Result<(LatticeBox, TransformLog)> {
    let g = &lbox.graph;
    let pos = |v: VertexId| lbox.positions.get(v).copied().flatten();
    let mut work: Vec<(usize, VertexId)> = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let (Some(p), Some(q)) = (pos(e.tail), pos(e.head)) else {
            continue;
        };
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        if dx.abs() + dy.abs() != 2 {
            continue;
        }
        let via = if dx == 0 || dy == 0 {
            (p.0 + dx / 2, p.1 + dy / 2)
        } else {
            (p.0 + dx, p.1).min((p.0, p.1 + dy))
        };
        let target = lbox.vertex_at(via).ok_or_else(|| {
            Error::Graph(format!("no lattice vertex at {via:?} between {p:?} and {q:?}"))
        })?;
        work.push((i, target));
    }
    let mut t = Transformer::new(g.clone(), reg);
    for (e, target) in work {
        // split keeps edge ids, so `e` is still the original edge
        t.apply(TransformOp::Split { edge: e, k: 2 })?;
        let mid = t.graph.n_vertices() - 1;
        t.apply(TransformOp::Glue { a: target, b: mid })?;
    }
    let (graph, log) = t.finish();
    let positions = lbox.positions.clone();
    Ok((LatticeBox { graph, positions }, log))
}

/// Simple-graph edge count against the Euler bound `3|V| - 6` (necessary
/// for planarity when `|V| >= 3`).
pub fn euler_bound_holds(g: &FiniteGraph) -> bool {
    let mut pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.tail.min(e.head), e.tail.max(e.head))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    g.n_vertices() < 3 || pairs.len() + 6 <= 3 * g.n_vertices()
}
