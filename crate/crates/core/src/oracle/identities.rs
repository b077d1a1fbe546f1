//! Named verification strategies and the small-graph corpus they run on.

use super::verify::*;
use super::{EdgeFn, ModelSpec};
use crate::calculus::Sector;
use crate::error::Result;
use crate::forms::{OneForm, ZeroForm};
use crate::graph::{build_torus, connected_simple_graphs, Edge, FiniteGraph};
use crate::potentials::PotentialRegistry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// One graph of the corpus with one potential on every edge.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph_name: String,
    pub potential: String,
    /// Star-sector model; identities take the dual where they need it.
    pub model: ModelSpec,
    /// Side length when the graph is a torus.
    pub torus_side: Option<usize>,
}

/// Graphs, potentials and sampling sizes for a verification run.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub graphs: Vec<(String, FiniteGraph, Option<usize>)>,
    pub potentials: Vec<String>,
    pub twists: usize,
    pub ginibre_trials: usize,
    pub rp_tests: usize,
    pub sweep_grid: Vec<f64>,
    pub seed: u64,
    pub budget: u64,
    /// Oracle overrides for the height range `K` and the angle grid `M`.
    pub truncation: Option<i64>,
    pub quadrature: Option<usize>,
}

pub const DEFAULT_POTENTIALS: [&str; 5] = ["xy:0.5", "xy:1", "xy:2", "ivgff:1", "lipschitz:1.5"];
pub const DEFAULT_SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

/// Connected simple graphs with up to five edges, a triangle with one
/// doubled edge, and the 2×2 torus.
pub fn default_corpus() -> Corpus {
    let mut graphs: Vec<(String, FiniteGraph, Option<usize>)> = Vec::new();
    let simple = connected_simple_graphs(5, "delta").expect("static graphs are valid");
    let mut per_size: BTreeMap<usize, usize> = BTreeMap::new();
    for g in simple {
        let k = per_size.entry(g.n_edges()).or_insert(0);
        *k += 1;
        graphs.push((format!("e{}-{}", g.n_edges(), k), g, None));
    }
    let multi = FiniteGraph::new(
        3,
        vec![Edge::new(0, 1, "delta"), Edge::new(1, 2, "delta"), Edge::new(2, 0, "delta"), Edge::new(0, 1, "delta")],
        0,
    )
    .expect("static graph is valid");
    graphs.push(("multi-triangle".into(), multi, None));
    graphs.push(("torus2".into(), build_torus(2, "delta").expect("static graph"), Some(2)));
    Corpus {
        graphs,
        potentials: DEFAULT_POTENTIALS.iter().map(|s| s.to_string()).collect(),
        twists: 20,
        ginibre_trials: 100,
        rp_tests: 50,
        sweep_grid: DEFAULT_SWEEP.to_vec(),
        seed: 20_240_601,
        budget: super::DEFAULT_BUDGET,
        truncation: None,
        quadrature: None,
    }
}

impl Corpus {
    pub fn instances(&self, reg: &PotentialRegistry) -> Result<Vec<Instance>> {
        let mut out = Vec::new();
        for (name, g, side) in &self.graphs {
            for pot in &self.potentials {
                let graph = g.map_potentials(|_, _| pot.clone());
                let mut model = ModelSpec::new(graph, reg, Sector::Star)?
                    .with_budget(self.budget)
                    .with_label(format!("{name}[{pot}]"));
                if let Some(k) = self.truncation {
                    model = model.with_truncation(k);
                }
                if let Some(m) = self.quadrature {
                    model = model.with_quadrature(m);
                }
                out.push(Instance {
                    graph_name: name.clone(),
                    potential: pot.clone(),
                    model,
                    torus_side: *side,
                });
            }
        }
        Ok(out)
    }
}

/// A named check that turns an instance into reports.
pub trait Identity: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Identities that ignore the potential run once per graph.
    fn uses_potential(&self) -> bool {
        true
    }
    fn run(&self, inst: &Instance, corpus: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>>;
}

fn random_form(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> OneForm {
    OneForm((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

/// Random integer test function in `{-2..2}`, zero at `∂`, not identically zero.
fn random_test_function(g: &FiniteGraph, rng: &mut ChaCha8Rng) -> ZeroForm {
    loop {
        let f = ZeroForm(
            (0..g.n_vertices())
                .map(|v| if v == g.boundary() { 0.0 } else { rng.random_range(-2i32..=2) as f64 })
                .collect(),
        );
        if f.0.iter().any(|&x| x != 0.0) {
            return f;
        }
    }
}

struct Duality;
struct Covariance;
struct GffBound;
struct Projection;
struct Monotonicity;
struct Ginibre;
struct ReflectionPositivity;

impl Identity for Duality {
    fn name(&self) -> &'static str {
        "duality"
    }
    fn summary(&self) -> &'static str {
        "characteristic function of heights = twisted spin partition ratio, both sectors"
    }
    fn run(&self, inst: &Instance, c: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let ne = inst.model.n_edges();
        let mut out = Vec::new();
        for sector in [Sector::Star, Sector::Diamond] {
            let twists: Vec<OneForm> = (0..c.twists).map(|_| random_form(ne, PI, rng)).collect();
            out.extend(verify_duality_batch(&inst.model.with_sector(sector), &twists)?);
        }
        Ok(out)
    }
}

impl Identity for Covariance {
    fn name(&self) -> &'static str {
        "covariance"
    }
    fn summary(&self) -> &'static str {
        "height covariance = U'' diagonal minus dual U' covariance, random pairs and edge indicators"
    }
    fn run(&self, inst: &Instance, _: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let ne = inst.model.n_edges();
        let mut out = Vec::new();
        for sector in [Sector::Star, Sector::Diamond] {
            let m = inst.model.with_sector(sector);
            let pairs: Vec<_> = (0..4).map(|_| (random_form(ne, 1.0, rng), random_form(ne, 1.0, rng))).collect();
            out.extend(verify_covariance_batch(&m, &pairs, "covariance-duality")?);
            out.extend(verify_covariance_specializations(&m)?);
        }
        Ok(out)
    }
}

impl Identity for GffBound {
    fn name(&self) -> &'static str {
        "gff-bound"
    }
    fn summary(&self) -> &'static str {
        "height variance <= max U'' times the Green pairing"
    }
    fn run(&self, inst: &Instance, _: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let g = &inst.model.graph;
        let mut out = Vec::new();
        for v in g.interior() {
            let mut f = ZeroForm::zeros(g.n_vertices());
            f[v] = 1.0;
            out.push(verify_gff_bound(&inst.model, &f)?);
        }
        out.push(verify_gff_bound(&inst.model, &random_test_function(g, rng))?);
        Ok(out)
    }
}

impl Identity for Projection {
    fn name(&self) -> &'static str {
        "projection"
    }
    fn summary(&self) -> &'static str {
        "GFF covariance of the projected field tau and the U' covariance identity"
    }
    fn run(&self, inst: &Instance, _: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let g = &inst.model.graph;
        let f = random_test_function(g, rng);
        let h = random_test_function(g, rng);
        let mut out = verify_projection_bounds(&inst.model, &f, &f)?;
        out.extend(verify_projection_bounds(&inst.model, &f, &h)?);
        Ok(out)
    }
}

impl Identity for Monotonicity {
    fn name(&self) -> &'static str {
        "monotonicity"
    }
    fn summary(&self) -> &'static str {
        "height variance and dual cos(J) are non-decreasing in one edge coupling"
    }
    fn run(&self, inst: &Instance, c: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let m = &inst.model;
        let prov = &m.potentials[0].provenance;
        if crate::oracle::verify::sweep_potential(prov, 1.0)?.is_none() {
            return Ok(Vec::new());
        }
        let g = &m.graph;
        let ne = g.n_edges();
        let edges: Vec<usize> = if ne <= 5 { (0..ne).collect() } else { vec![0, 1] };
        let mut out = Vec::new();
        for &e in &edges {
            let x = loop {
                let v = rng.random_range(0..g.n_vertices());
                if v != g.boundary() {
                    break v;
                }
            };
            let tracked = SweepTarget::HeightVariance(x, g.boundary());
            out.push(monotonicity_sweep(m, e, &c.sweep_grid, &tracked)?);
            let f = rng.random_range(0..ne);
            let mult = rng.random_range(1..=2) as f64;
            out.push(monotonicity_sweep(m, e, &c.sweep_grid, &SweepTarget::SpinFunction(f, EdgeFn::Cos(mult)))?);
        }
        Ok(out)
    }
}

impl Identity for Ginibre {
    fn name(&self) -> &'static str {
        "ginibre"
    }
    fn summary(&self) -> &'static str {
        "two-replica integral of products of cos(mJ) +- cos(mJ') is nonnegative"
    }
    fn uses_potential(&self) -> bool {
        false
    }
    fn run(&self, inst: &Instance, c: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let ne = inst.model.n_edges();
        (0..c.ginibre_trials)
            .map(|_| {
                let n = rng.random_range(1..=4);
                let terms: Vec<GinibreTerm> = (0..n)
                    .map(|_| GinibreTerm {
                        edge: rng.random_range(0..ne),
                        multiplier: rng.random_range(0..=2),
                        plus: rng.random_bool(0.5),
                    })
                    .collect();
                verify_ginibre(&inst.model, &terms)
            })
            .collect()
    }
}

impl Identity for ReflectionPositivity {
    fn name(&self) -> &'static str {
        "rp"
    }
    fn summary(&self) -> &'static str {
        "reflection positivity of the torus spin measure under edge reflections"
    }
    fn run(&self, inst: &Instance, c: &Corpus, rng: &mut ChaCha8Rng) -> Result<Vec<VerificationReport>> {
        let Some(side) = inst.torus_side else {
            return Ok(Vec::new());
        };
        if inst.potential.split('&').any(|p| !p.starts_with("xy:")) {
            return Ok(Vec::new());
        }
        let refl = Reflection::torus_edge(side, false)?;
        let k = refl.half.len();
        let tests: Vec<TrigPolynomial> = (0..c.rp_tests)
            .map(|_| TrigPolynomial {
                terms: (0..rng.random_range(1..=4))
                    .map(|_| {
                        let freq = (0..k).map(|_| rng.random_range(-2i64..=2)).collect();
                        (freq, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    })
                    .collect(),
            })
            .collect();
        rp_check(&inst.model, &refl, &tests)
    }
}

/// Identity strategies by name.
pub struct IdentityRegistry {
    identities: BTreeMap<&'static str, Box<dyn Identity>>,
}

impl Default for IdentityRegistry {
    fn default() -> Self {
        let mut reg = IdentityRegistry {
            identities: BTreeMap::new(),
        };
        reg.register(Box::new(Duality));
        reg.register(Box::new(Covariance));
        reg.register(Box::new(GffBound));
        reg.register(Box::new(Projection));
        reg.register(Box::new(Monotonicity));
        reg.register(Box::new(Ginibre));
        reg.register(Box::new(ReflectionPositivity));
        reg
    }
}

impl IdentityRegistry {
    pub fn register(&mut self, id: Box<dyn Identity>) {
        self.identities.insert(id.name(), id);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.identities.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Identity> {
        self.identities.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            crate::Error::Invalid(format!("unknown identity `{name}` (known: {})", self.names().join(", ")))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Identity> {
        self.identities.values().map(|b| b.as_ref())
    }

    /// Runs one identity over the corpus. Every (identity, instance) pair
    /// draws from its own stream, so results do not depend on which other
    /// identities or instances are run.
    pub fn run(&self, name: &str, corpus: &Corpus, reg: &PotentialRegistry) -> Result<Vec<VerificationReport>> {
        let id = self.get(name)?;
        let mut out = Vec::new();
        let mut done_graphs = Vec::new();
        for (i, inst) in corpus.instances(reg)?.iter().enumerate() {
            if !id.uses_potential() {
                if done_graphs.contains(&inst.graph_name) {
                    continue;
                }
                done_graphs.push(inst.graph_name.clone());
            }
            let mut rng = instance_rng(corpus.seed, name, i);
            out.extend(id.run(inst, corpus, &mut rng)?);
        }
        Ok(out)
    }
}

fn instance_rng(seed: u64, name: &str, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = name.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    rng.set_stream(tag.wrapping_mul(1 << 20).wrapping_add(index as u64));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let c = default_corpus();
        assert_eq!(c.graphs.len(), 24);
        assert!(c.graphs.iter().any(|g| g.1.has_parallel_edges()));
        let inst = c.instances(&PotentialRegistry::default()).unwrap();
        assert_eq!(inst.len(), 24 * 5);
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = instance_rng(1, "duality", 3);
        let mut b = instance_rng(1, "duality", 3);
        let mut c = instance_rng(1, "duality", 4);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn small_corpus_runs() {
        let mut c = default_corpus();
        c.graphs.truncate(4);
        c.potentials = vec!["xy:1".into()];
        c.twists = 3;
        c.ginibre_trials = 5;
        let ids = IdentityRegistry::default();
        let reg = PotentialRegistry::default();
        for name in ids.names() {
            let reps = ids.run(name, &c, &reg).unwrap();
            assert!(reps.iter().all(|r| r.pass), "{name}: {reps:?}");
        }
    }
}
