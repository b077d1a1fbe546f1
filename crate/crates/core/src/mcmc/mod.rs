//! Metropolis samplers for the height and spin measures.
//!
//! Every chain stores an edge field (`n_e` for heights, `J_e ∈ (-π, π]` for
//! spins) and moves by adding `a · z` for a signed edge set `z` taken from a
//! move set: the coboundary of a vertex in the ★ sector, a cycle in the ◇
//! sector. Height moves use `a = ±1`, spin moves `a ~ Uniform(-δ, δ)`. Only
//! the edges in `z` are re-evaluated.
//!
//! Seeding: chain `k` of a run with master seed `s` draws from ChaCha8
//! seeded with `s` on stream `k`, so results do not depend on scheduling.

mod crosscheck;
mod stats;

pub use crosscheck::{oracle_agreement, Agreement};
pub use stats::{std_dev, BatchMeans, Estimate, MIN_BATCHES};

use crate::calculus::Sector;
use crate::error::{Error, Result};
use crate::forms::wrap_angle;
use crate::gauge::TreeGauge;
use crate::graph::{build_torus, EdgeId, FiniteGraph, VertexId};
use crate::oracle::ModelSpec;
use crate::potentials::PotentialPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

/// Sweeps between full recomputations of the energy cache.
pub const RESYNC_INTERVAL: u64 = 10_000;
/// Burn-in sweeps per proposal-width adjustment.
pub const TUNE_INTERVAL: u64 = 50;
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.3, 0.5);
/// Allowed drift of the cached energy and of `d*J mod 2π`.
pub const SYNC_TOLERANCE: f64 = 1e-8;
const INITIAL_DELTA: f64 = 1.0;

/// Which measure a chain samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainKind {
    /// Heights `h` on vertices, `h_∂ = 0`, weight `Π e^{-V(dh_e)}`.
    Height,
    /// Angles `θ` on vertices, `θ_∂ = 0`, weight `Π e^{-U(dθ_e)}`.
    SpinStar,
    /// Co-closed angle one-forms, weight `Π e^{-U(J_e)}`.
    SpinDiamond,
}

impl ChainKind {
    pub fn name(self) -> &'static str {
        match self {
            ChainKind::Height => "height",
            ChainKind::SpinStar => "spin-star",
            ChainKind::SpinDiamond => "spin-diamond",
        }
    }

    pub fn parse(s: &str) -> Result<ChainKind> {
        match s {
            "height" => Ok(ChainKind::Height),
            "spin-star" => Ok(ChainKind::SpinStar),
            "spin-diamond" => Ok(ChainKind::SpinDiamond),
            _ => Err(Error::Invalid(format!(
                "unknown chain kind {s:?} (expected height, spin-star or spin-diamond)"
            ))),
        }
    }

    pub fn sector(self) -> Sector {
        match self {
            ChainKind::Height | ChainKind::SpinStar => Sector::Star,
            ChainKind::SpinDiamond => Sector::Diamond,
        }
    }

    pub fn is_spin(self) -> bool {
        self != ChainKind::Height
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A signed edge set added to the field; `vertex` is the moved vertex for
/// ★-sector moves.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub edges: Vec<(EdgeId, i8)>,
    pub vertex: Option<VertexId>,
}

/// A family of proposals.
pub trait MoveSet: Send + Sync {
    fn name(&self) -> &'static str;
    fn sector(&self) -> Sector;
    fn build(&self, g: &FiniteGraph, gauge: &TreeGauge) -> Result<Vec<Move>>;
}

/// `h_v → h_v + a` for every interior vertex.
pub struct VertexMoves;

impl MoveSet for VertexMoves {
    fn name(&self) -> &'static str {
        "vertex"
    }
    fn sector(&self) -> Sector {
        Sector::Star
    }
    fn build(&self, g: &FiniteGraph, _: &TreeGauge) -> Result<Vec<Move>> {
        Ok(g.interior()
            .map(|v| Move {
                edges: g.incident(v).to_vec(),
                vertex: Some(v),
            })
            .collect())
    }
}

/// The fundamental cycles of the tree gauge.
pub struct FundamentalCycles;

impl MoveSet for FundamentalCycles {
    fn name(&self) -> &'static str {
        "fundamental"
    }
    fn sector(&self) -> Sector {
        Sector::Diamond
    }
    fn build(&self, _: &FiniteGraph, gauge: &TreeGauge) -> Result<Vec<Move>> {
        Ok(gauge
            .cycles()
            .iter()
            .map(|c| Move {
                edges: c.clone(),
                vertex: None,
            })
            .collect())
    }
}

/// Plaquettes plus one horizontal and one vertical winding loop of a torus
/// built by `build_torus`. They generate the integer cycle space and keep
/// every move local except the two windings.
pub struct TorusLoops;

impl TorusLoops {
    /// Side length if `g` has the `build_torus` layout.
    pub fn side(g: &FiniteGraph) -> Option<usize> {
        let side = (g.n_vertices() as f64).sqrt().round() as usize;
        if side < 2 || side * side != g.n_vertices() || g.n_edges() != 2 * side * side {
            return None;
        }
        let t = build_torus(side, "xy:1").ok()?;
        let same = t.edges().iter().zip(g.edges()).all(|(a, b)| a.tail == b.tail && a.head == b.head);
        same.then_some(side)
    }
}

/// Horizontal edge leaving `(x, y)` rightwards on a `build_torus` torus.
pub fn torus_horizontal(side: usize, x: usize, y: usize) -> EdgeId {
    2 * ((x % side) + side * (y % side))
}

/// Vertical edge leaving `(x, y)` upwards on a `build_torus` torus.
pub fn torus_vertical(side: usize, x: usize, y: usize) -> EdgeId {
    torus_horizontal(side, x, y) + 1
}

impl MoveSet for TorusLoops {
    fn name(&self) -> &'static str {
        "torus"
    }
    fn sector(&self) -> Sector {
        Sector::Diamond
    }
    fn build(&self, g: &FiniteGraph, _: &TreeGauge) -> Result<Vec<Move>> {
        let side = TorusLoops::side(g)
            .ok_or_else(|| Error::Invalid("torus move set needs a graph with the build_torus layout".into()))?;
        let (h, v) = (|x, y| torus_horizontal(side, x, y), |x, y| torus_vertical(side, x, y));
        let mut moves = Vec::with_capacity(side * side + 2);
        for y in 0..side {
            for x in 0..side {
                moves.push(Move {
                    edges: vec![(h(x, y), 1), (v(x + 1, y), 1), (h(x, y + 1), -1), (v(x, y), -1)],
                    vertex: None,
                });
            }
        }
        moves.push(Move {
            edges: (0..side).map(|x| (h(x, 0), 1)).collect(),
            vertex: None,
        });
        moves.push(Move {
            edges: (0..side).map(|y| (v(0, y), 1)).collect(),
            vertex: None,
        });
        Ok(moves)
    }
}

/// Move sets by name.
pub struct MoveSetRegistry {
    sets: BTreeMap<&'static str, Box<dyn MoveSet>>,
}

impl Default for MoveSetRegistry {
    fn default() -> Self {
        let mut r = MoveSetRegistry { sets: BTreeMap::new() };
        r.register(Box::new(VertexMoves));
        r.register(Box::new(FundamentalCycles));
        r.register(Box::new(TorusLoops));
        r
    }
}

impl MoveSetRegistry {
    pub fn register(&mut self, set: Box<dyn MoveSet>) {
        self.sets.insert(set.name(), set);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MoveSet> {
        self.sets.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown move set {name:?}; known: {}",
                self.sets.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.sets.keys().copied()
    }
}

/// Per-edge energy: `V(n) = -ln c_n` or `U(α)`.
#[derive(Clone)]
enum EdgeEnergy {
    Height(Vec<f64>),
    Spin(Arc<PotentialPair>),
}

impl EdgeEnergy {
    fn eval(&self, x: f64) -> f64 {
        match self {
            EdgeEnergy::Height(t) => t.get(x.abs() as usize).copied().unwrap_or(f64::INFINITY),
            EdgeEnergy::Spin(p) => p.spin.u(x),
        }
    }
}

/// Acceptance counts and the frozen proposal width of a finished run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSummary {
    pub acceptance: f64,
    pub delta: f64,
    /// Largest cache drift seen at a re-sync.
    pub drift: f64,
}

/// Configuration, energy cache, counters and random stream of one chain.
#[derive(Clone)]
pub struct ChainState {
    kind: ChainKind,
    graph: Arc<FiniteGraph>,
    potentials: Vec<Arc<PotentialPair>>,
    energy_fn: Vec<EdgeEnergy>,
    moves: Arc<Vec<Move>>,
    move_set: &'static str,
    field: Vec<f64>,
    vertex: Vec<f64>,
    cache: Vec<f64>,
    total: f64,
    delta: f64,
    tuning: bool,
    window: (u64, u64),
    counts: (u64, u64),
    sweeps: u64,
    max_drift: f64,
    scratch: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
}

pub fn height_chain(m: &ModelSpec) -> Result<ChainState> {
    ChainState::new(ChainKind::Height, m, &VertexMoves)
}

pub fn spin_star_chain(m: &ModelSpec) -> Result<ChainState> {
    ChainState::new(ChainKind::SpinStar, m, &VertexMoves)
}

/// ◇ chain on fundamental cycles, or on plaquettes and windings for a torus.
pub fn spin_diamond_chain(m: &ModelSpec) -> Result<ChainState> {
    if TorusLoops::side(&m.graph).is_some() {
        ChainState::new(ChainKind::SpinDiamond, m, &TorusLoops)
    } else {
        ChainState::new(ChainKind::SpinDiamond, m, &FundamentalCycles)
    }
}

impl ChainState {
    /// Chain at the zero configuration; the sector of `m` is ignored.
    pub fn new(kind: ChainKind, m: &ModelSpec, moves: &dyn MoveSet) -> Result<ChainState> {
        if moves.sector() != kind.sector() {
            return Err(Error::Invalid(format!(
                "move set {:?} does not fit a {} chain",
                moves.name(),
                kind
            )));
        }
        let g = &m.graph;
        let list = moves.build(g, &m.gauge)?;
        if kind.sector() == Sector::Diamond {
            for (i, mv) in list.iter().enumerate() {
                let mut div = vec![0i64; g.n_vertices()];
                for &(e, s) in &mv.edges {
                    div[g.edge(e).head] += s as i64;
                    div[g.edge(e).tail] -= s as i64;
                }
                if div.iter().any(|&x| x != 0) {
                    return Err(Error::Invalid(format!("move {i} of {:?} is not a cycle", moves.name())));
                }
            }
        }
        let energy_fn: Vec<EdgeEnergy> = m
            .potentials
            .iter()
            .map(|p| match kind {
                ChainKind::Height => EdgeEnergy::Height(
                    p.height
                        .coeffs()
                        .iter()
                        .map(|&c| if c > 0.0 { -c.ln() } else { f64::INFINITY })
                        .collect(),
                ),
                _ => EdgeEnergy::Spin(p.clone()),
            })
            .collect();
        let cache: Vec<f64> = energy_fn.iter().map(|f| f.eval(0.0)).collect();
        Ok(ChainState {
            kind,
            graph: m.graph.clone(),
            potentials: m.potentials.clone(),
            energy_fn,
            moves: Arc::new(list),
            move_set: moves.name(),
            field: vec![0.0; g.n_edges()],
            vertex: vec![0.0; g.n_vertices()],
            total: cache.iter().sum(),
            cache,
            delta: INITIAL_DELTA,
            tuning: false,
            window: (0, 0),
            counts: (0, 0),
            sweeps: 0,
            max_drift: 0.0,
            scratch: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    /// ChaCha8 seeded with `seed.master` on stream `seed.chain`.
    pub fn reseed(&mut self, seed: ChainSeed) {
        self.rng = ChaCha8Rng::seed_from_u64(seed.master);
        self.rng.set_stream(seed.chain);
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn graph(&self) -> &FiniteGraph {
        &self.graph
    }

    pub fn potential(&self, e: EdgeId) -> &PotentialPair {
        &self.potentials[e]
    }

    pub fn move_set(&self) -> &'static str {
        self.move_set
    }

    pub fn n_moves(&self) -> usize {
        self.moves.len()
    }

    /// Edge field: `n_e` for heights, `J_e ∈ (-π, π]` for spins.
    pub fn field(&self) -> &[f64] {
        &self.field
    }

    /// Vertex field (`h` or `θ`) of ★ chains; zero for ◇ chains.
    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex
    }

    pub fn energy(&self) -> f64 {
        self.total
    }

    /// Energy recomputed from the field.
    pub fn energy_from_scratch(&self) -> f64 {
        self.field.iter().zip(&self.energy_fn).map(|(&x, f)| f.eval(x)).sum()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn set_delta(&mut self, delta: f64) {
        self.delta = delta.clamp(1e-6, PI);
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Accepted fraction of proposals counted since the last reset.
    pub fn acceptance(&self) -> f64 {
        if self.counts.1 == 0 {
            f64::NAN
        } else {
            self.counts.0 as f64 / self.counts.1 as f64
        }
    }

    pub fn reset_counts(&mut self) {
        self.counts = (0, 0);
        self.window = (0, 0);
    }

    fn shifted(&self, x: f64, s: i8, amount: f64) -> f64 {
        let y = x + s as f64 * amount;
        if !self.kind.is_spin() {
            return y;
        }
        // One period is enough for the usual |s·a| ≤ 2π; fall back otherwise.
        let r = if y > PI {
            y - TAU
        } else if y <= -PI {
            y + TAU
        } else {
            y
        };
        if r > PI || r <= -PI {
            wrap_angle(y)
        } else {
            r
        }
    }

    /// Energy change of adding `amount` along move `mv`.
    pub fn energy_delta(&self, mv: usize, amount: f64) -> f64 {
        self.moves[mv]
            .edges
            .iter()
            .map(|&(e, s)| self.energy_fn[e].eval(self.shifted(self.field[e], s, amount)) - self.cache[e])
            .sum()
    }

    /// Metropolis acceptance probability for an energy change.
    pub fn acceptance_probability(delta_energy: f64) -> f64 {
        if delta_energy <= 0.0 {
            1.0
        } else {
            (-delta_energy).exp()
        }
    }

    /// One Metropolis step of move `mv` with a given amount; returns whether
    /// it was accepted. `c_n = 0` targets are always rejected.
    pub fn step(&mut self, mv: usize, amount: f64) -> bool {
        let moves = self.moves.clone();
        let edges = &moves[mv].edges;
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        let mut de = 0.0;
        for &(e, s) in edges {
            let y = self.shifted(self.field[e], s, amount);
            let en = self.energy_fn[e].eval(y);
            de += en - self.cache[e];
            scratch.push((y, en));
        }
        let accept = de.is_finite() && (de <= 0.0 || self.rng.random::<f64>() < (-de).exp());
        if accept {
            for (&(e, _), &(y, en)) in edges.iter().zip(&scratch) {
                self.field[e] = y;
                self.cache[e] = en;
            }
            self.total += de;
            if let Some(v) = moves[mv].vertex {
                self.vertex[v] = self.shifted(self.vertex[v], 1, amount);
            }
        }
        self.scratch = scratch;
        self.counts.1 += 1;
        self.window.1 += 1;
        if accept {
            self.counts.0 += 1;
            self.window.0 += 1;
        }
        accept
    }

    fn draw_amount(&mut self) -> f64 {
        if self.kind.is_spin() {
            let d = self.delta;
            self.rng.random_range(-d..d)
        } else if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// One proposal per move, in move order.
    pub fn sweep(&mut self) {
        for mv in 0..self.moves.len() {
            let a = self.draw_amount();
            self.step(mv, a);
        }
        self.sweeps += 1;
        if self.tuning && self.sweeps % TUNE_INTERVAL == 0 {
            self.tune();
        }
        if self.sweeps % RESYNC_INTERVAL == 0 {
            self.resync();
        }
    }

    fn tune(&mut self) {
        let (acc, tot) = std::mem::take(&mut self.window);
        if tot == 0 || !self.kind.is_spin() {
            return;
        }
        let rate = acc as f64 / tot as f64;
        if rate < TARGET_ACCEPTANCE.0 {
            self.set_delta(self.delta * 0.7);
        } else if rate > TARGET_ACCEPTANCE.1 {
            self.set_delta(self.delta * 1.4);
        }
    }

    /// Recomputes the energy cache (and the edge field of ★ spin chains from
    /// the angles). Panics if the cache drifted by more than
    /// `SYNC_TOLERANCE` or a ◇ field left `ker d* mod 2π`.
    pub fn resync(&mut self) -> f64 {
        if self.kind == ChainKind::SpinStar {
            for (e, edge) in self.graph.edges().iter().enumerate() {
                self.field[e] = wrap_angle(self.vertex[edge.head] - self.vertex[edge.tail]);
            }
        }
        for e in 0..self.field.len() {
            self.cache[e] = self.energy_fn[e].eval(self.field[e]);
        }
        let fresh: f64 = self.cache.iter().sum();
        let drift = (fresh - self.total).abs();
        assert!(
            drift <= SYNC_TOLERANCE * fresh.abs().max(1.0),
            "energy cache drifted by {drift:e}"
        );
        self.total = fresh;
        self.max_drift = self.max_drift.max(drift);
        if self.kind == ChainKind::SpinDiamond {
            let div = self.divergence_defect();
            assert!(div <= SYNC_TOLERANCE, "diamond chain left ker d* (defect {div:e})");
        }
        drift
    }

    /// `max_v |d*J(v) mod 2π|` reduced to `[0, π]`.
    pub fn divergence_defect(&self) -> f64 {
        let mut div = vec![0.0; self.graph.n_vertices()];
        for (e, edge) in self.graph.edges().iter().enumerate() {
            div[edge.head] += self.field[e];
            div[edge.tail] -= self.field[e];
        }
        div.iter().map(|&x| wrap_angle(x).abs()).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            acceptance: self.acceptance(),
            delta: self.delta,
            drift: self.max_drift,
        }
    }
}

/// Master seed and chain index; see the module docs for the splitting rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSeed {
    pub master: u64,
    pub chain: u64,
}

/// Total sweeps (including burn-in), burn-in and thinning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunParams {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
}

impl RunParams {
    pub fn new(sweeps: u64, burn_in: u64, thin: u64) -> Result<RunParams> {
        if sweeps <= burn_in {
            return Err(Error::Invalid(format!("sweeps ({sweeps}) must exceed burn-in ({burn_in})")));
        }
        if thin == 0 {
            return Err(Error::Invalid("thin must be at least 1".into()));
        }
        Ok(RunParams { sweeps, burn_in, thin })
    }

    pub fn n_samples(&self) -> u64 {
        (self.sweeps - self.burn_in) / self.thin
    }
}

/// Runs one chain from its current state. The proposal width is tuned
/// during burn-in and frozen afterwards; `visit` sees every `thin`-th state
/// after burn-in.
pub fn run<F: FnMut(&ChainState)>(chain: &mut ChainState, p: &RunParams, seed: ChainSeed, mut visit: F) -> ChainSummary {
    chain.reseed(seed);
    chain.tuning = chain.kind.is_spin();
    chain.reset_counts();
    for _ in 0..p.burn_in {
        chain.sweep();
    }
    chain.tuning = false;
    chain.reset_counts();
    for s in 1..=(p.sweeps - p.burn_in) {
        chain.sweep();
        if s % p.thin == 0 {
            visit(chain);
        }
    }
    chain.resync();
    chain.summary()
}

/// Independent chains in parallel; outputs come back in chain order.
pub fn run_chains<A, B, I, F>(n_chains: usize, master: u64, p: &RunParams, build: B, init: I, visit: F) -> Result<Vec<(A, ChainSummary)>>
where
    A: Send,
    B: Fn(usize) -> Result<ChainState> + Sync,
    I: Fn() -> A + Sync,
    F: Fn(&ChainState, &mut A) + Sync,
{
    (0..n_chains)
        .into_par_iter()
        .map(|k| {
            let mut chain = build(k)?;
            let mut acc = init();
            let seed = ChainSeed { master, chain: k as u64 };
            let summary = run(&mut chain, p, seed, |c| visit(c, &mut acc));
            Ok((acc, summary))
        })
        .collect()
}
