//! Monte Carlo estimates against exact oracle values on small graphs.

use super::{height_chain, run_chains, spin_diamond_chain, spin_star_chain, BatchMeans, ChainKind, Estimate, RunParams};
use crate::error::Result;
use crate::oracle::{height_expect, spin_expect, EdgeFn, HeightObservable, ModelSpec, SpinObservable};

/// One observable: exact value, Monte Carlo estimate and sample spread.
#[derive(Clone, Debug)]
pub struct Agreement {
    pub chain: ChainKind,
    pub observable: String,
    pub exact: f64,
    pub estimate: Estimate,
    /// Sample standard deviation of the observable.
    pub spread: f64,
}

impl Agreement {
    pub fn z(&self) -> f64 {
        self.estimate.z_score(self.exact)
    }

    /// `SE ≤ fraction · max(|exact|, spread)`.
    pub fn precise(&self, fraction: f64) -> bool {
        self.estimate.se <= fraction * self.exact.abs().max(self.spread)
    }
}

enum Probe {
    EdgeSquare(usize),
    U2(usize),
    UPrimePair(usize, usize),
}

impl Probe {
    fn label(&self) -> String {
        match self {
            Probe::EdgeSquare(e) => format!("n{e}^2"),
            Probe::U2(e) => format!("U''(J{e})"),
            Probe::UPrimePair(a, b) => format!("U'(J{a})U'(J{b})"),
        }
    }

    /// Value from the edge field `j` and the per-edge `(U', U'')`.
    fn value(&self, j: &[f64], d: &[(f64, f64)]) -> f64 {
        match *self {
            Probe::EdgeSquare(e) => j[e] * j[e],
            Probe::U2(e) => d[e].1,
            Probe::UPrimePair(a, b) => d[a].0 * d[b].0,
        }
    }
}

#[derive(Default)]
struct Moments {
    acc: Vec<BatchMeans>,
    sum: Vec<f64>,
    sq: Vec<f64>,
    derivs: Vec<(f64, f64)>,
}

/// `ν★[n_e²]` from the height chain, and `μ[U''(J_e)]`, `μ[U'(J_a)U'(J_b)]`
/// (`a ≤ b`) from both spin chains, each against the oracle.
pub fn oracle_agreement(m: &ModelSpec, p: &RunParams, master: u64, n_chains: usize) -> Result<Vec<Agreement>> {
    let n = m.n_edges();
    let mut out = Vec::new();
    for kind in [ChainKind::Height, ChainKind::SpinStar, ChainKind::SpinDiamond] {
        let model = m.with_sector(kind.sector());
        let probes: Vec<Probe> = if kind == ChainKind::Height {
            (0..n).map(Probe::EdgeSquare).collect()
        } else {
            (0..n)
                .map(Probe::U2)
                .chain((0..n).flat_map(|a| (a..n).map(move |b| Probe::UPrimePair(a, b))))
                .collect()
        };
        let exact: Vec<f64> = if kind == ChainKind::Height {
            let obs: Vec<HeightObservable> = (0..n).map(|e| HeightObservable::EdgePower(e, 2)).collect();
            let ex = height_expect(&model, &obs)?;
            (0..n).map(|i| ex.real(i)).collect()
        } else {
            let obs: Vec<SpinObservable> = probes
                .iter()
                .map(|pr| match *pr {
                    Probe::U2(e) => SpinObservable::Edge(e, EdgeFn::U2),
                    Probe::UPrimePair(a, b) => SpinObservable::EdgePair(a, EdgeFn::UPrime, b, EdgeFn::UPrime),
                    Probe::EdgeSquare(_) => unreachable!(),
                })
                .collect();
            let ex = spin_expect(&model, &obs)?;
            (0..obs.len()).map(|i| ex.real(i)).collect()
        };
        let build = |_| match kind {
            ChainKind::Height => height_chain(&model),
            ChainKind::SpinStar => spin_star_chain(&model),
            ChainKind::SpinDiamond => spin_diamond_chain(&model),
        };
        let init = || Moments {
            acc: vec![BatchMeans::new(p.n_samples()); probes.len()],
            sum: vec![0.0; probes.len()],
            sq: vec![0.0; probes.len()],
            derivs: vec![(0.0, 0.0); n],
        };
        let chains = run_chains(n_chains, master, p, build, init, |s, acc: &mut Moments| {
            let j = s.field();
            if kind.is_spin() {
                for (e, d) in acc.derivs.iter_mut().enumerate() {
                    *d = s.potential(e).spin.derivatives(j[e]);
                }
            }
            for (i, pr) in probes.iter().enumerate() {
                let x = pr.value(j, &acc.derivs);
                acc.acc[i].push(x);
                acc.sum[i] += x;
                acc.sq[i] += x * x;
            }
        })?;
        let mut iter = chains.into_iter().map(|(a, _)| a);
        let mut total = iter.next().unwrap_or_default();
        for other in iter {
            for i in 0..probes.len() {
                total.acc[i].merge(&other.acc[i]);
                total.sum[i] += other.sum[i];
                total.sq[i] += other.sq[i];
            }
        }
        for (i, pr) in probes.iter().enumerate() {
            let est = total.acc[i].estimate();
            let cnt = est.n.max(1) as f64;
            let mean = total.sum[i] / cnt;
            out.push(Agreement {
                chain: kind,
                observable: pr.label(),
                exact: exact[i],
                estimate: est,
                spread: (total.sq[i] / cnt - mean * mean).max(0.0).sqrt(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Sector;
    use crate::graph::build_cycle;
    use crate::PotentialRegistry;

    #[test]
    fn triangle_agrees_with_oracle() {
        let m = ModelSpec::new(build_cycle(3, "xy:1").unwrap(), &PotentialRegistry::default(), Sector::Star).unwrap();
        let p = RunParams::new(101_000, 1_000, 1).unwrap();
        let rows = oracle_agreement(&m, &p, 17, 1).unwrap();
        assert_eq!(rows.len(), 3 + 2 * (3 + 6));
        for r in &rows {
            assert!(r.z() < 4.0, "{r:?}");
            assert!(r.estimate.reliable());
        }
    }
}
