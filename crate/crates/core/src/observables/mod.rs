//! Estimators on sampled configurations: torus two-point series, the
//! increment variance of heights, the projected field `τ` and the CLT
//! statistic.
//!
//! Accumulators fold over edge fields (`n` or `J`) one sample at a time and
//! merge across independent chains.

mod torus;

pub use torus::{
    clt_statistic, ks_normal, susceptibility_partial, symmetric_sum_check, uprime_two_point, CltReport,
    SeriesReport, TorusSeries, TorusSeriesConfig, XyReport, CLT_KS_THRESHOLD,
};

use crate::calculus::{d_star, Green};
use crate::error::{Error, Result};
use crate::forms::{OneForm, ZeroForm};
use crate::gauge::TreeGauge;
use crate::graph::{EdgeId, FiniteGraph, VertexId};
use crate::mcmc::{BatchMeans, Estimate};
use crate::potentials::PotentialPair;
use std::sync::Arc;

/// Directed path `v_0 → v_n` as signed edges; `+1` when the edge points
/// along the path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    pub start: VertexId,
    pub edges: Vec<(EdgeId, i8)>,
}

impl PathSpec {
    /// Follows `edges` from `start`, checking that consecutive edges share
    /// endpoints.
    pub fn new(g: &FiniteGraph, start: VertexId, edges: &[EdgeId]) -> Result<PathSpec> {
        let mut at = start;
        let mut signed = Vec::with_capacity(edges.len());
        for (i, &e) in edges.iter().enumerate() {
            if e >= g.n_edges() {
                return Err(Error::Invalid(format!("path edge {e} out of range")));
            }
            let edge = g.edge(e);
            let s = if edge.tail == at {
                1
            } else if edge.head == at {
                -1
            } else {
                return Err(Error::Invalid(format!("path step {i}: edge {e} does not leave vertex {at}")));
            };
            at = edge.other(at);
            signed.push((e, s));
        }
        Ok(PathSpec { start, edges: signed })
    }

    /// `len` horizontal steps to the right from `(x, y)` on a `build_torus` torus.
    pub fn torus_horizontal(g: &FiniteGraph, side: usize, x: usize, y: usize, len: usize) -> Result<PathSpec> {
        let edges: Vec<EdgeId> = (0..len).map(|k| crate::mcmc::torus_horizontal(side, x + k, y)).collect();
        PathSpec::new(g, (x % side) + side * (y % side), &edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self, g: &FiniteGraph) -> VertexId {
        self.edges.iter().fold(self.start, |v, &(e, _)| g.edge(e).other(v))
    }

    /// The one-form `p_n`.
    pub fn one_form(&self, n_edges: usize) -> OneForm {
        let mut p = OneForm::zeros(n_edges);
        for &(e, s) in &self.edges {
            p[e] += s as f64;
        }
        p
    }
}

/// Heights with `h_∂ = 0` from a gradient field, summed along the tree.
pub fn heights_from_increments(g: &FiniteGraph, gauge: &TreeGauge, n: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; g.n_vertices()];
    for &v in gauge.bfs_order() {
        if let (Some(e), Some(p)) = (gauge.parent_edge(v), gauge.parent(v)) {
            h[v] = if g.edge(e).head == v { h[p] + n[e] } else { h[p] - n[e] };
        }
    }
    h
}

/// `ν[(h_x - h_y)²]` from height-gradient samples.
pub fn height_increment_variance<'a, I>(g: &FiniteGraph, gauge: &TreeGauge, samples: I, n_samples: u64, x: VertexId, y: VertexId) -> Estimate
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = BatchMeans::new(n_samples);
    for n in samples {
        let h = heights_from_increments(g, gauge, n);
        acc.push((h[x] - h[y]).powi(2));
    }
    acc.estimate()
}

/// `U'(J_e)` for every edge.
pub fn uprime_field(potentials: &[Arc<PotentialPair>], j: &[f64]) -> OneForm {
    OneForm(potentials.iter().zip(j).map(|(p, &x)| p.spin.du(x)).collect())
}

/// `τ = Δ⁻¹ d* U'(J)`, so that `dτ` is the ★ projection of `U'(J)`.
pub fn tau_field(g: &FiniteGraph, green: &Green, potentials: &[Arc<PotentialPair>], j: &[f64]) -> Result<ZeroForm> {
    green.solve(&d_star(g, &uprime_field(potentials, j)))
}

/// Streaming estimate of `μ[(τ, f)(τ, g)]`.
pub struct TauCovariance {
    graph: Arc<FiniteGraph>,
    green: Green,
    potentials: Vec<Arc<PotentialPair>>,
    f: ZeroForm,
    g: ZeroForm,
    acc: BatchMeans,
}

impl TauCovariance {
    pub fn new(graph: Arc<FiniteGraph>, potentials: Vec<Arc<PotentialPair>>, f: ZeroForm, g: ZeroForm, n_samples: u64) -> Result<TauCovariance> {
        let green = Green::new(&graph)?;
        Ok(TauCovariance {
            graph,
            green,
            potentials,
            f,
            g,
            acc: BatchMeans::new(n_samples),
        })
    }

    pub fn push(&mut self, j: &[f64]) -> Result<()> {
        let tau = tau_field(&self.graph, &self.green, &self.potentials, j)?;
        self.acc.push(tau.inner(&self.f) * tau.inner(&self.g));
        Ok(())
    }

    pub fn merge(&mut self, other: &TauCovariance) {
        self.acc.merge(&other.acc);
    }

    pub fn estimate(&self) -> Estimate {
        self.acc.estimate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::d;
    use crate::graph::{build_cycle, build_path, build_torus};
    use crate::mcmc::{height_chain, run, spin_diamond_chain, spin_star_chain, ChainSeed, RunParams};
    use crate::oracle::{spin_expect, ModelSpec, SpinObservable};
    use crate::{PotentialRegistry, Sector};

    #[test]
    fn paths_follow_edges() {
        let g = build_torus(4, "xy:1").unwrap();
        let p = PathSpec::torus_horizontal(&g, 4, 3, 1, 3).unwrap();
        assert_eq!(p.start, 7);
        assert_eq!(p.end(&g), 6);
        assert!(p.edges.iter().all(|&(_, s)| s == 1));
        let c = build_cycle(3, "xy:1").unwrap();
        let back = PathSpec::new(&c, 0, &[2, 1]).unwrap();
        assert_eq!(back.end(&c), 1);
        assert!(PathSpec::new(&c, 0, &[1]).is_err());
    }

    #[test]
    fn equal_points_have_zero_variance() {
        let reg = PotentialRegistry::default();
        let m = ModelSpec::new(build_cycle(4, "xy:1").unwrap(), &reg, Sector::Star).unwrap();
        let mut c = height_chain(&m).unwrap();
        let p = RunParams::new(2_000, 100, 1).unwrap();
        let mut rows = Vec::new();
        run(&mut c, &p, ChainSeed { master: 1, chain: 0 }, |s| rows.push(s.field().to_vec()));
        let est = height_increment_variance(&m.graph, &m.gauge, rows.iter().map(|r| r.as_slice()), p.n_samples(), 2, 2);
        assert_eq!(est.mean, 0.0);
        let h = heights_from_increments(&m.graph, &m.gauge, &rows[10]);
        let n = d(&m.graph, &ZeroForm(h));
        assert_eq!(n.0, rows[10]);
    }

    #[test]
    fn tau_on_a_tree_reproduces_the_field() {
        let reg = PotentialRegistry::default();
        let m = ModelSpec::new(build_path(4, "xy:1.5").unwrap(), &reg, Sector::Star).unwrap();
        let mut c = spin_star_chain(&m).unwrap();
        let p = RunParams::new(300, 100, 50).unwrap();
        let green = Green::new(&m.graph).unwrap();
        run(&mut c, &p, ChainSeed { master: 4, chain: 0 }, |s| {
            let tau = tau_field(&m.graph, &green, &m.potentials, s.field()).unwrap();
            let dt = d(&m.graph, &tau);
            let up = uprime_field(&m.potentials, s.field());
            assert!(dt.0.iter().zip(&up.0).all(|(a, b)| (a - b).abs() < 1e-12));
        });
    }

    #[test]
    fn tau_covariance_matches_oracle_on_a_triangle() {
        let reg = PotentialRegistry::default();
        let m = ModelSpec::new(build_cycle(3, "xy:1").unwrap(), &reg, Sector::Diamond).unwrap();
        let f = ZeroForm(vec![0.0, 1.0, 0.0]);
        let g = ZeroForm(vec![0.0, 0.5, -1.0]);
        let exact = spin_expect(&m, &[SpinObservable::TauPair(f.clone(), g.clone())]).unwrap().real(0);
        let p = RunParams::new(101_000, 1_000, 1).unwrap();
        let mut cov = TauCovariance::new(m.graph.clone(), m.potentials.clone(), f.clone(), g, p.n_samples()).unwrap();
        let mut c = spin_diamond_chain(&m).unwrap();
        run(&mut c, &p, ChainSeed { master: 8, chain: 0 }, |s| cov.push(s.field()).unwrap());
        let est = cov.estimate();
        assert!(est.z_score(exact) < 3.0, "{est} vs {exact}");
        let mut zero = TauCovariance::new(m.graph.clone(), m.potentials.clone(), ZeroForm::zeros(3), f, 10).unwrap();
        zero.push(&[0.3, -1.0, 0.7]).unwrap();
        assert_eq!(zero.estimate().mean, 0.0);
    }
}
