//! Exact expectations on small graphs.
//!
//! Heights are summed over integer one-forms and spins integrated on a
//! uniform angle grid, both by exhaustive enumeration. In the ★ sector the
//! enumerated variables are the increments along the tree edges (heights
//! `h` or angles `θ` with `h_∂ = θ_∂ = 0`); in the ◇ sector they are the
//! values on the non-tree edges, extended through the fundamental cycles.

pub(crate) mod engine;
pub mod identities;
mod verify;

pub use identities::{default_corpus, Corpus, Identity, IdentityRegistry, Instance};
pub use verify::*;

use crate::calculus::{Green, Sector};
use crate::error::{Error, Result};
use crate::forms::{OneForm, ZeroForm};
use crate::gauge::TreeGauge;
use crate::graph::FiniteGraph;
use crate::potentials::{grid_angle, HeightPotential, PotentialPair, PotentialRegistry, SpinValues};
use engine::{enumerate, Domain, Functionals, Plan};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_BUDGET: u64 = 20_000_000;
/// Largest automatic angle grid.
pub const MAX_QUADRATURE: usize = 64;
pub const MIN_QUADRATURE: usize = 8;
/// Target for the automatic quadrature estimate.
const QUADRATURE_TARGET: f64 = 1e-15;

/// Graph, per-edge potentials, sector and enumeration limits.
#[derive(Clone)]
pub struct ModelSpec {
    pub graph: Arc<FiniteGraph>,
    pub gauge: Arc<TreeGauge>,
    pub potentials: Vec<Arc<PotentialPair>>,
    pub sector: Sector,
    /// Height range override `K` (default: each table's full support).
    pub truncation: Option<i64>,
    /// Angle grid override `M` (default: chosen from the potentials).
    pub quadrature: Option<usize>,
    pub budget: u64,
    /// Instance name used in reports.
    pub label: Option<String>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("vertices", &self.graph.n_vertices())
            .field("edges", &self.graph.n_edges())
            .field("sector", &self.sector)
            .field("potentials", &self.potentials.iter().map(|p| p.id()).collect::<Vec<_>>())
            .finish()
    }
}

impl ModelSpec {
    /// Resolves every edge's potential id through `reg`.
    pub fn new(graph: FiniteGraph, reg: &PotentialRegistry, sector: Sector) -> Result<ModelSpec> {
        let potentials = graph
            .edges()
            .iter()
            .map(|e| reg.resolve(&e.potential))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSpec::from_parts(graph, potentials, sector))
    }

    pub fn from_parts(graph: FiniteGraph, potentials: Vec<Arc<PotentialPair>>, sector: Sector) -> ModelSpec {
        assert_eq!(potentials.len(), graph.n_edges(), "one potential per edge");
        let gauge = Arc::new(TreeGauge::new(&graph));
        ModelSpec {
            graph: Arc::new(graph),
            gauge,
            potentials,
            sector,
            truncation: None,
            quadrature: None,
            budget: DEFAULT_BUDGET,
            label: None,
        }
    }

    pub fn dual(&self) -> ModelSpec {
        self.with_sector(self.sector.dual())
    }

    pub fn with_sector(&self, sector: Sector) -> ModelSpec {
        ModelSpec {
            sector,
            ..self.clone()
        }
    }

    pub fn with_budget(mut self, budget: u64) -> ModelSpec {
        self.budget = budget;
        self
    }

    pub fn with_quadrature(mut self, m: usize) -> ModelSpec {
        self.quadrature = Some(m);
        self
    }

    pub fn with_truncation(mut self, k: i64) -> ModelSpec {
        self.truncation = Some(k);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> ModelSpec {
        self.label = Some(label.into());
        self
    }

    /// Instance descriptor: the label, or a summary of graph and potentials.
    pub fn describe(&self) -> String {
        let base = self.label.clone().unwrap_or_else(|| {
            let mut ids: Vec<String> = self.potentials.iter().map(|p| p.id()).collect();
            ids.dedup();
            format!("V{}E{}[{}]", self.graph.n_vertices(), self.graph.n_edges(), ids.join("|"))
        });
        format!("{base}/{}", self.sector)
    }

    /// The label, or the graph size.
    pub fn graph_label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("V{}E{}", self.graph.n_vertices(), self.graph.n_edges()))
    }

    /// Same model with edge `e` carrying `pair`.
    pub fn with_potential(&self, e: usize, pair: Arc<PotentialPair>) -> ModelSpec {
        let mut out = self.clone();
        out.potentials[e] = pair;
        out
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    /// Number of enumerated coordinates.
    pub fn dimension(&self) -> usize {
        match self.sector {
            Sector::Star => self.graph.n_vertices() - 1,
            Sector::Diamond => self.gauge.n_free(),
        }
    }

    /// Site coefficients over the enumerated variables, plus (★ only) the
    /// coefficients of `h_v` for each vertex.
    pub(crate) fn layout(&self) -> (Vec<Vec<(usize, i64)>>, Option<Vec<Vec<(usize, i64)>>>) {
        let g = &self.graph;
        match self.sector {
            Sector::Star => {
                let tree = self.gauge.tree_edges();
                let var_of: HashMap<usize, usize> = tree.iter().enumerate().map(|(j, &e)| (e, j)).collect();
                let mut coef: Vec<Vec<(usize, i64)>> = vec![Vec::new(); g.n_vertices()];
                for &v in self.gauge.bfs_order() {
                    if let (Some(e), Some(p)) = (self.gauge.parent_edge(v), self.gauge.parent(v)) {
                        let mut c = coef[p].clone();
                        c.push((var_of[&e], if g.edge(e).tail == p { 1 } else { -1 }));
                        coef[v] = c;
                    }
                }
                let sites = g
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(e, edge)| match var_of.get(&e) {
                        Some(&j) => vec![(j, 1)],
                        None => combine(&coef[edge.head], &coef[edge.tail], -1),
                    })
                    .collect();
                (sites, Some(coef))
            }
            Sector::Diamond => {
                let z = self.gauge.cycle_matrix(g.n_edges());
                let sites = z
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(_, &a)| a != 0).map(|(k, &a)| (k, a)).collect())
                    .collect();
                (sites, None)
            }
        }
    }

    /// Own edge of every enumerated variable.
    fn variable_edges(&self) -> Vec<usize> {
        match self.sector {
            Sector::Star => self.gauge.tree_edges(),
            Sector::Diamond => self.gauge.free_edges().to_vec(),
        }
    }
}

/// `a + s·b` as sparse coefficient lists.
fn combine(a: &[(usize, i64)], b: &[(usize, i64)], s: i64) -> Vec<(usize, i64)> {
    let mut map: std::collections::BTreeMap<usize, i64> = a.iter().cloned().collect();
    for &(j, c) in b {
        *map.entry(j).or_insert(0) += s * c;
    }
    map.into_iter().filter(|&(_, c)| c != 0).collect()
}

/// Complex expectations plus bookkeeping.
#[derive(Clone, Debug)]
pub struct Expectation {
    pub values: Vec<Complex64>,
    /// Sum of weights (a grid partition function for spins, unnormalised).
    pub partition: f64,
    pub leaves: u64,
    /// Nominal number of enumerated states.
    pub states: f64,
    /// Truncation mass (heights) or aliasing bound (spins).
    pub error_estimate: f64,
    /// Angle grid used (spins).
    pub quadrature: Option<usize>,
    /// Largest height range used.
    pub truncation: Option<i64>,
}

impl Expectation {
    pub fn real(&self, i: usize) -> f64 {
        self.values[i].re
    }
}

/// Observables of the height one-form `n`.
#[derive(Clone, Debug)]
pub enum HeightObservable {
    /// `(n, ε)`.
    Linear(OneForm),
    /// `(n, ε)(n, ω)`.
    Pair(OneForm, OneForm),
    /// `e^{i(n, ε)}`.
    Character(OneForm),
    /// `n_e^k`.
    EdgePower(usize, u32),
    /// `(h, f)(h, g)` in the ★ sector.
    HeightPair(ZeroForm, ZeroForm),
}

/// A real function of one edge angle.
#[derive(Clone)]
pub enum EdgeFn {
    U,
    UPrime,
    U2,
    Cos(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for EdgeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeFn::U => f.write_str("U"),
            EdgeFn::UPrime => f.write_str("U'"),
            EdgeFn::U2 => f.write_str("U''"),
            EdgeFn::Cos(m) => write!(f, "cos({m}J)"),
            EdgeFn::Custom(_) => f.write_str("custom"),
        }
    }
}

impl EdgeFn {
    fn eval(&self, v: &SpinValues, theta: f64) -> f64 {
        match self {
            EdgeFn::U => v.u,
            EdgeFn::UPrime => v.du,
            EdgeFn::U2 => v.d2u,
            EdgeFn::Cos(m) => (m * theta).cos(),
            EdgeFn::Custom(f) => f(theta),
        }
    }
}

/// Observables of the spin one-form `J`.
#[derive(Clone, Debug)]
pub enum SpinObservable {
    /// `(U'(J), ε)`.
    UPrimeLinear(OneForm),
    /// `(U'(J), ε)(U'(J), ω)`.
    UPrimePair(OneForm, OneForm),
    /// `F(J_e)`.
    Edge(usize, EdgeFn),
    /// `F(J_e) G(J_f)`.
    EdgePair(usize, EdgeFn, usize, EdgeFn),
    /// `Π_e w(J_e + ε_e) / w(J_e)`, so the mean is `Z(ε)/Z`.
    Twist(OneForm),
    /// `(τ, f)(τ, g)` with `τ = Δ⁻¹ d* U'(J)` solved at every grid point.
    TauPair(ZeroForm, ZeroForm),
}

enum Recipe {
    Lin(usize),
    LinPair(usize, usize),
    Prod(usize),
    Tau(ZeroForm, ZeroForm),
}

/// The height-sector plan of a model.
struct HeightSetup {
    plan: Plan,
    weights: Vec<Vec<f64>>,
    values: Vec<Vec<i64>>,
    vertex_coef: Option<Vec<Vec<(usize, i64)>>>,
    tail: f64,
    k_max: i64,
}

fn height_setup(m: &ModelSpec) -> Result<HeightSetup> {
    let (sites, vertex_coef) = m.layout();
    let var_edges = m.variable_edges();
    let support: Vec<i64> = m.potentials.iter().map(|p| p.height.n_max() as i64).collect();
    let natural: Vec<i64> = var_edges.iter().map(|&e| support[e]).collect();
    let tables: Vec<&HeightPotential> = var_edges.iter().map(|&e| &m.potentials[e].height).collect();
    let states = |cap: i64| effective_states(&tables, cap);
    let cap = match m.truncation {
        Some(k) => k,
        None => {
            let mut cap = natural.iter().cloned().max().unwrap_or(0);
            while cap > 0 && states(cap) > m.budget as f64 {
                cap -= 1;
            }
            cap
        }
    };
    if states(cap) > m.budget as f64 || (cap < 1 && natural.iter().any(|&n| n > 0)) {
        return Err(Error::Budget {
            states: states(cap.max(1)),
            budget: m.budget,
        });
    }
    let k: Vec<i64> = natural.iter().map(|&n| n.min(cap)).collect();
    let tail = var_edges
        .iter()
        .zip(&k)
        .map(|(&e, &kj)| {
            let h = &m.potentials[e].height;
            h.tail_mass(kj as usize) / h.total()
        })
        .sum();
    let plan = Plan::new(k.len(), sites, Domain::Heights { k: k.clone(), support });
    let values: Vec<Vec<i64>> = (0..plan.n_sites()).map(|e| plan.site_values(e)).collect();
    let weights = values
        .iter()
        .enumerate()
        .map(|(e, vals)| vals.iter().map(|&n| m.potentials[e].height.c(n)).collect())
        .collect();
    Ok(HeightSetup {
        plan,
        weights,
        values,
        vertex_coef,
        tail,
        k_max: k.iter().cloned().max().unwrap_or(0),
    })
}

/// Number of variable assignments in `{-cap..cap}` whose own-edge weight
/// product survives pruning, counted on a histogram of `-ln(c_n / c_0)`.
/// This is what the enumeration visits, up to the extra pruning by
/// dependent sites.
fn effective_states(tables: &[&HeightPotential], cap: i64) -> f64 {
    const BIN: f64 = 0.25;
    let limit = -engine::PRUNE_RELATIVE.ln();
    let bins = (limit / BIN).ceil() as usize + 1;
    let mut hist = vec![0.0f64; bins];
    hist[0] = 1.0;
    for h in tables {
        let c0 = h.c(0);
        let costs: Vec<usize> = (-cap..=cap)
            .filter(|n| n.unsigned_abs() as usize <= h.n_max())
            .map(|n| (-(h.c(n) / c0).ln() / BIN).floor())
            .filter(|&b| b >= 0.0 && (b as usize) < bins)
            .map(|b| b as usize)
            .collect();
        let mut next = vec![0.0f64; bins];
        for (b, &count) in hist.iter().enumerate() {
            if count == 0.0 {
                continue;
            }
            for &c in &costs {
                if b + c < bins {
                    next[b + c] += count;
                }
            }
        }
        hist = next;
    }
    hist.iter().sum()
}

/// Coefficients of the one-form `ε` with `(n, ε) = (h, f)` when `n = dh`.
pub(crate) fn tree_path_form(m: &ModelSpec, coef: &[Vec<(usize, i64)>], f: &ZeroForm) -> OneForm {
    let tree = m.gauge.tree_edges();
    let mut eps = OneForm::zeros(m.n_edges());
    for (v, c) in coef.iter().enumerate() {
        for &(j, s) in c {
            eps[tree[j]] += s as f64 * f[v];
        }
    }
    eps
}

/// `ν_#[φ]` for each observable, by exhaustive summation.
pub fn height_expect(m: &ModelSpec, obs: &[HeightObservable]) -> Result<Expectation> {
    let setup = height_setup(m)?;
    let mut fun = Functionals::new(m.n_edges());
    let values = &setup.values;
    let lin_form = |fun: &mut Functionals, eps: &OneForm| {
        fun.add_lin(|e| (eps[e] != 0.0).then(|| values[e].iter().map(|&n| n as f64 * eps[e]).collect()))
    };
    let mut recipes = Vec::new();
    for o in obs {
        recipes.push(match o {
            HeightObservable::Linear(eps) => Recipe::Lin(lin_form(&mut fun, eps)),
            HeightObservable::Pair(a, b) => {
                let (i, j) = (lin_form(&mut fun, a), lin_form(&mut fun, b));
                Recipe::LinPair(i, j)
            }
            HeightObservable::Character(eps) => Recipe::Prod(fun.add_prod(|e| {
                (eps[e] != 0.0).then(|| {
                    values[e]
                        .iter()
                        .map(|&n| Complex64::from_polar(1.0, n as f64 * eps[e]))
                        .collect()
                })
            })),
            HeightObservable::EdgePower(edge, k) => Recipe::Lin(fun.add_lin(|e| {
                (e == *edge).then(|| values[e].iter().map(|&n| (n as f64).powi(*k as i32)).collect())
            })),
            HeightObservable::HeightPair(f, g) => {
                let coef = setup.vertex_coef.as_ref().ok_or_else(|| {
                    Error::Invalid("height pairings (h, f) exist only in the star sector".into())
                })?;
                let (ef, eg) = (tree_path_form(m, coef, f), tree_path_form(m, coef, g));
                let (i, j) = (lin_form(&mut fun, &ef), lin_form(&mut fun, &eg));
                Recipe::LinPair(i, j)
            }
        });
    }
    let acc = enumerate(&setup.plan, &setup.weights, &fun, 2 * recipes.len(), |leaf, out| {
        for (i, r) in recipes.iter().enumerate() {
            match r {
                Recipe::Lin(l) => out[2 * i] = leaf.lin[*l],
                Recipe::LinPair(a, b) => out[2 * i] = leaf.lin[*a] * leaf.lin[*b],
                Recipe::Prod(p) => {
                    out[2 * i] = leaf.prod[*p].re;
                    out[2 * i + 1] = leaf.prod[*p].im;
                }
                Recipe::Tau(..) => unreachable!(),
            }
        }
    });
    let means = acc.means();
    Ok(Expectation {
        values: (0..recipes.len()).map(|i| Complex64::new(means[2 * i], means[2 * i + 1])).collect(),
        partition: acc.z,
        leaves: acc.leaves,
        states: setup.plan.states(),
        error_estimate: setup.tail,
        quadrature: None,
        truncation: Some(setup.k_max),
    })
}

/// Relative Fourier envelopes of a potential: `(1+n²) c_n / c_0` for the
/// trigonometric-polynomial factors `w, w', w''`, and the same maxed with the
/// coefficients of `w'²/w` (the integrand carrying `U''`).
fn envelopes(p: &PotentialPair, len: usize) -> (Vec<f64>, Vec<f64>) {
    let c0 = p.height.c(0);
    let poly: Vec<f64> = (0..len).map(|n| (1.0 + (n * n) as f64) * p.height.c(n as i64) / c0).collect();
    let grid = 4 * len;
    let samples: Vec<(f64, f64)> = (0..grid)
        .map(|j| {
            let t = std::f64::consts::TAU * (j as f64 + 0.5) / grid as f64;
            let v = p.spin.eval(t);
            let dw = -v.du * v.w;
            (t, dw * dw / v.w)
        })
        .collect();
    let peak = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let obs = (0..len)
        .map(|n| {
            let b = samples.iter().map(|&(t, g)| g * (n as f64 * t).cos()).sum::<f64>() / grid as f64;
            let b = if b.abs() < 1e3 * f64::EPSILON * peak { 0.0 } else { b.abs() / c0 };
            b.max(poly[n])
        })
        .collect();
    (poly, obs)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Angle grid for a circle plan: the smallest even `M` whose aliasing bound
/// is below target, limited by the budget.
pub(crate) fn choose_quadrature(m: &ModelSpec, sites: &[Vec<(usize, i64)>], dim: usize) -> Result<(usize, f64)> {
    let mut touch = vec![0usize; dim];
    for s in sites {
        for &(j, _) in s {
            touch[j] += 1;
        }
    }
    let d = touch.iter().cloned().max().unwrap_or(1).max(1);
    let len = MAX_QUADRATURE + 2;
    let mut poly = vec![0.0f64; len];
    let mut obs = vec![0.0f64; len];
    let mut seen: Vec<*const PotentialPair> = Vec::new();
    for p in &m.potentials {
        let ptr = Arc::as_ptr(p);
        if seen.contains(&ptr) {
            continue;
        }
        seen.push(ptr);
        let (a, b) = envelopes(p, len);
        for n in 0..len {
            poly[n] = poly[n].max(a[n]);
            obs[n] = obs[n].max(b[n]);
        }
    }
    let estimate = |mm: usize| -> f64 {
        let q = mm.div_ceil(d).min(len - 1);
        binomial(mm + d - 1, d - 1) * obs[q] * poly[q].powi(d as i32 - 1)
    };
    let budget_cap = if dim == 0 {
        usize::MAX
    } else {
        (m.budget as f64).powf(1.0 / dim as f64).floor() as usize
    };
    let chosen = match m.quadrature {
        Some(q) => q,
        None => {
            let mut q = MIN_QUADRATURE;
            while q < MAX_QUADRATURE && estimate(q) > QUADRATURE_TARGET {
                q += 2;
            }
            q.min(budget_cap.max(1) / 2 * 2)
        }
    };
    if dim > 0 && ((chosen as f64).powi(dim as i32) > m.budget as f64 || chosen < MIN_QUADRATURE.min(m.quadrature.unwrap_or(MIN_QUADRATURE))) {
        return Err(Error::Budget {
            states: (MIN_QUADRATURE as f64).powi(dim as i32),
            budget: m.budget,
        });
    }
    Ok((chosen, if dim == 0 { 0.0 } else { estimate(chosen) }))
}

/// The spin-sector plan of a model.
pub(crate) struct SpinSetup {
    pub(crate) plan: Plan,
    pub(crate) m: usize,
    /// Per site, per grid slot.
    pub(crate) values: Vec<Arc<Vec<SpinValues>>>,
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) estimate: f64,
}

pub(crate) fn spin_values(p: &PotentialPair, m: usize) -> Vec<SpinValues> {
    (0..m).map(|s| p.spin.eval(grid_angle(s, m))).collect()
}

pub(crate) fn spin_tables(potentials: &[Arc<PotentialPair>], m: usize) -> Vec<Arc<Vec<SpinValues>>> {
    let mut cache: HashMap<*const PotentialPair, Arc<Vec<SpinValues>>> = HashMap::new();
    potentials
        .iter()
        .map(|p| {
            cache
                .entry(Arc::as_ptr(p))
                .or_insert_with(|| Arc::new(spin_values(p, m)))
                .clone()
        })
        .collect()
}

fn spin_setup(m: &ModelSpec) -> Result<SpinSetup> {
    let (sites, _) = m.layout();
    let dim = m.dimension();
    let (q, estimate) = choose_quadrature(m, &sites, dim)?;
    let plan = Plan::new(dim, sites, Domain::Circle { m: q });
    let values = spin_tables(&m.potentials, q);
    let weights = values.iter().map(|v| v.iter().map(|s| s.w).collect()).collect();
    Ok(SpinSetup {
        plan,
        m: q,
        values,
        weights,
        estimate,
    })
}

/// `μ_#[ψ]` for each observable, by tensor-grid quadrature.
pub fn spin_expect(m: &ModelSpec, obs: &[SpinObservable]) -> Result<Expectation> {
    let setup = spin_setup(m)?;
    let q = setup.m;
    let vals = &setup.values;
    let mut fun = Functionals::new(m.n_edges());
    let uprime_form = |fun: &mut Functionals, eps: &OneForm| {
        fun.add_lin(|e| (eps[e] != 0.0).then(|| vals[e].iter().map(|v| v.du * eps[e]).collect()))
    };
    let edge_fn = |fun: &mut Functionals, edge: usize, f: &EdgeFn| {
        fun.add_lin(|e| {
            (e == edge).then(|| {
                vals[e]
                    .iter()
                    .enumerate()
                    .map(|(s, v)| f.eval(v, grid_angle(s, q)))
                    .collect()
            })
        })
    };
    let mut recipes = Vec::new();
    let mut tau_needed = false;
    for o in obs {
        recipes.push(match o {
            SpinObservable::UPrimeLinear(eps) => Recipe::Lin(uprime_form(&mut fun, eps)),
            SpinObservable::UPrimePair(a, b) => {
                let (i, j) = (uprime_form(&mut fun, a), uprime_form(&mut fun, b));
                Recipe::LinPair(i, j)
            }
            SpinObservable::Edge(e, f) => Recipe::Lin(edge_fn(&mut fun, *e, f)),
            SpinObservable::EdgePair(e, f, e2, f2) => {
                let (i, j) = (edge_fn(&mut fun, *e, f), edge_fn(&mut fun, *e2, f2));
                Recipe::LinPair(i, j)
            }
            SpinObservable::Twist(eps) => {
                let pots = &m.potentials;
                Recipe::Prod(fun.add_prod(|e| {
                    (eps[e] != 0.0).then(|| {
                        vals[e]
                            .iter()
                            .enumerate()
                            .map(|(s, v)| Complex64::new(pots[e].spin.w(grid_angle(s, q) + eps[e]) / v.w, 0.0))
                            .collect()
                    })
                }))
            }
            SpinObservable::TauPair(f, g) => {
                tau_needed = true;
                Recipe::Tau(f.clone(), g.clone())
            }
        });
    }
    let inverse = if tau_needed {
        Some(Green::new(&m.graph)?.inverse_matrix()?)
    } else {
        None
    };
    let graph = &m.graph;
    let boundary = graph.boundary();
    let interior: Vec<usize> = graph.interior().collect();
    let plan = &setup.plan;
    let acc = enumerate(plan, &setup.weights, &fun, 2 * recipes.len(), |leaf, out| {
        for (i, r) in recipes.iter().enumerate() {
            match r {
                Recipe::Lin(l) => out[2 * i] = leaf.lin[*l],
                Recipe::LinPair(a, b) => out[2 * i] = leaf.lin[*a] * leaf.lin[*b],
                Recipe::Prod(p) => {
                    out[2 * i] = leaf.prod[*p].re;
                    out[2 * i + 1] = leaf.prod[*p].im;
                }
                Recipe::Tau(f, g) => {
                    let inv = inverse.as_ref().unwrap();
                    let mut div = vec![0.0; graph.n_vertices()];
                    for (e, edge) in graph.edges().iter().enumerate() {
                        let slot = plan.slot_of(e, leaf.x);
                        let du = vals[e][slot].du;
                        div[edge.head] += du;
                        div[edge.tail] -= du;
                    }
                    let (mut tf, mut tg) = (0.0, 0.0);
                    for (a, &v) in interior.iter().enumerate() {
                        let tau_v: f64 = interior.iter().enumerate().map(|(b, &u)| inv[(a, b)] * div[u]).sum();
                        debug_assert!(v != boundary);
                        tf += tau_v * f[v];
                        tg += tau_v * g[v];
                    }
                    out[2 * i] = tf * tg;
                }
            }
        }
    });
    let means = acc.means();
    Ok(Expectation {
        values: (0..recipes.len()).map(|i| Complex64::new(means[2 * i], means[2 * i + 1])).collect(),
        partition: acc.z,
        leaves: acc.leaves,
        states: setup.plan.states(),
        error_estimate: setup.estimate,
        quadrature: Some(q),
        truncation: None,
    })
}

/// `Z_#(ε) / Z_#(0)`.
pub fn twisted_partition(m: &ModelSpec, eps: &OneForm) -> Result<f64> {
    Ok(spin_expect(m, &[SpinObservable::Twist(eps.clone())])?.real(0))
}
