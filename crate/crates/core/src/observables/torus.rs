//! Two-point series of `U'(J)` along straight lines of a `build_torus`
//! torus, averaged over all translations and both lattice directions.

use crate::error::{Error, Result};
use crate::mcmc::{torus_horizontal, torus_vertical, BatchMeans, Estimate};
use crate::oracle::VerificationReport;
use crate::potentials::PotentialPair;
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::Arc;

/// Pass threshold for the Kolmogorov–Smirnov distance of the CLT check.
pub const CLT_KS_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusSeriesConfig {
    pub side: usize,
    /// Largest distance `L`; at most `side / 2`.
    pub max_distance: usize,
    /// Path lengths `n` for `Σ_{i<n} U''(J_i) - (Σ_{i<n} U'(J_i))²`.
    pub bridge_lengths: Vec<usize>,
    /// Path length for `n^{-1/2} Σ_{i<n} U'(J_i)`.
    pub clt_length: Option<usize>,
    /// `β` of an XY potential, enabling the spin-spin comparison.
    pub xy_beta: Option<f64>,
}

impl TorusSeriesConfig {
    pub fn new(side: usize, max_distance: usize) -> TorusSeriesConfig {
        TorusSeriesConfig {
            side,
            max_distance,
            bridge_lengths: Vec::new(),
            clt_length: None,
            xy_beta: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::Invalid("torus side must be at least 2".into()));
        }
        if 2 * self.max_distance > self.side {
            return Err(Error::Invalid(format!(
                "distance {} exceeds half the torus side {} (wrap-around bias)",
                self.max_distance, self.side
            )));
        }
        for &n in self.bridge_lengths.iter().chain(&self.clt_length) {
            if n == 0 || n > self.side {
                return Err(Error::Invalid(format!("path length {n} must lie in 1..={}", self.side)));
            }
        }
        Ok(())
    }
}

/// Fold over ◇-sector samples `J` on a torus.
#[derive(Clone)]
pub struct TorusSeries {
    cfg: TorusSeriesConfig,
    potentials: Vec<Arc<PotentialPair>>,
    /// `lines[o][l][k]`: edge `k` of line `l` in direction `o` (0 horizontal).
    lines: [Vec<Vec<usize>>; 2],
    corr: Vec<BatchMeans>,
    corr_dir: [Vec<BatchMeans>; 2],
    u2: BatchMeans,
    partial: Vec<BatchMeans>,
    symmetric: BatchMeans,
    bridge: Vec<BatchMeans>,
    clt_sq: BatchMeans,
    clt_gap: BatchMeans,
    clt_values: Vec<f64>,
    xy_g: Vec<BatchMeans>,
    xy_a: Vec<BatchMeans>,
    up: Vec<f64>,
    upp: Vec<f64>,
}

impl TorusSeries {
    pub fn new(cfg: TorusSeriesConfig, potentials: Vec<Arc<PotentialPair>>, n_samples: u64) -> Result<TorusSeries> {
        cfg.validate()?;
        let side = cfg.side;
        if potentials.len() != 2 * side * side {
            return Err(Error::Invalid(format!(
                "{} potentials for a torus of side {side} ({} edges)",
                potentials.len(),
                2 * side * side
            )));
        }
        let lines = [
            (0..side).map(|l| (0..side).map(|k| torus_horizontal(side, k, l)).collect()).collect(),
            (0..side).map(|l| (0..side).map(|k| torus_vertical(side, l, k)).collect()).collect(),
        ];
        let acc = |k: usize| vec![BatchMeans::new(n_samples); k];
        let l = cfg.max_distance;
        let xy = if cfg.xy_beta.is_some() { l } else { 0 };
        Ok(TorusSeries {
            corr: acc(l + 1),
            corr_dir: [acc(l + 1), acc(l + 1)],
            u2: BatchMeans::new(n_samples),
            partial: acc(l),
            symmetric: BatchMeans::new(n_samples),
            bridge: acc(cfg.bridge_lengths.len()),
            clt_sq: BatchMeans::new(n_samples),
            clt_gap: BatchMeans::new(n_samples),
            clt_values: Vec::new(),
            xy_g: acc(xy),
            xy_a: acc(xy),
            up: vec![0.0; 2 * side * side],
            upp: vec![0.0; 2 * side * side],
            lines,
            potentials,
            cfg,
        })
    }

    pub fn config(&self) -> &TorusSeriesConfig {
        &self.cfg
    }

    /// Whether the symmetric sum closes around the torus (`2L = side`).
    pub fn circular(&self) -> bool {
        2 * self.cfg.max_distance == self.cfg.side
    }

    pub fn push(&mut self, j: &[f64]) {
        let side = self.cfg.side;
        let big_l = self.cfg.max_distance;
        for (e, (&x, p)) in j.iter().zip(&self.potentials).enumerate() {
            (self.up[e], self.upp[e]) = p.spin.derivatives(x);
        }
        let per_dir = (side * side) as f64;
        let mut c = vec![0.0; big_l + 1];
        for (o, lines) in self.lines.iter().enumerate() {
            for (i, ci) in c.iter_mut().enumerate() {
                let mut s = 0.0;
                for line in lines {
                    for k in 0..side {
                        s += self.up[line[k]] * self.up[line[(k + i) % side]];
                    }
                }
                self.corr_dir[o][i].push(s / per_dir);
                *ci += s / (2.0 * per_dir);
            }
        }
        for (acc, &ci) in self.corr.iter_mut().zip(&c) {
            acc.push(ci);
        }
        let u2 = self.upp.iter().sum::<f64>() / self.upp.len() as f64;
        self.u2.push(u2);
        let mut partial = 0.0;
        for l in 1..=big_l {
            partial += l as f64 * c[l];
            self.partial[l - 1].push(partial);
        }
        self.symmetric.push(symmetric_sum(&c, self.circular()) - u2);

        let anchors = 2.0 * per_dir;
        for (b, &n) in self.cfg.bridge_lengths.iter().enumerate() {
            let mut s = 0.0;
            self.for_windows(n, |sum_up, sum_upp| s += sum_upp - sum_up * sum_up);
            self.bridge[b].push(s / anchors);
        }
        if let Some(n) = self.cfg.clt_length {
            let scale = 1.0 / (n as f64).sqrt();
            let mut sq = 0.0;
            self.for_windows(n, |sum_up, _| sq += (sum_up * scale).powi(2));
            self.clt_sq.push(sq / anchors);
            self.clt_gap.push(sq / anchors - u2);
            for lines in &self.lines {
                for line in lines {
                    self.clt_values.push(scale * (0..n).map(|k| self.up[line[k]]).sum::<f64>());
                }
            }
        }
        if self.cfg.xy_beta.is_some() {
            self.push_xy(j);
        }
    }

    /// Calls `f(Σ U', Σ U'')` over every window of `n` consecutive edges.
    fn for_windows<F: FnMut(f64, f64)>(&self, n: usize, mut f: F) {
        let side = self.cfg.side;
        for lines in &self.lines {
            for line in lines {
                let (mut a, mut b) = (0.0, 0.0);
                for &e in &line[..n] {
                    a += self.up[e];
                    b += self.upp[e];
                }
                for k in 0..side {
                    f(a, b);
                    let (out, inn) = (line[k], line[(k + n) % side]);
                    a += self.up[inn] - self.up[out];
                    b += self.upp[inn] - self.upp[out];
                }
            }
        }
    }

    /// Face angle differences along a row of faces are sums of `J` over the
    /// crossed edges: for the horizontal line `l` the vertical edges of row
    /// `l` (faces above) and row `l - 1` (faces below).
    fn push_xy(&mut self, j: &[f64]) {
        let side = self.cfg.side;
        let big_l = self.cfg.max_distance;
        let cross = |o: usize, l: usize, k: usize| match o {
            0 => torus_vertical(side, k, l),
            _ => torus_horizontal(side, l, k),
        };
        // Running products of e^{iJ} give the cosines of the partial sums.
        let z: Vec<Complex64> = j.iter().map(|&x| Complex64::from_polar(1.0, x)).collect();
        let mut g = vec![0.0; big_l];
        let mut a = vec![0.0; big_l];
        for o in 0..2 {
            for l in 0..side {
                let below = (l + side - 1) % side;
                for k in 0..side {
                    let (mut p1, mut p2) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
                    for i in 1..=big_l {
                        p1 *= z[cross(o, l, k + i)];
                        p2 *= z[cross(o, below, k + i)];
                        g[i - 1] += p1.re;
                        a[i - 1] += (p1 * p2).re;
                    }
                }
            }
        }
        let anchors = 2.0 * (side * side) as f64;
        for i in 0..big_l {
            self.xy_g[i].push(g[i] / anchors);
            self.xy_a[i].push(a[i] / anchors);
        }
    }

    /// Pools an accumulator of the same configuration from another chain.
    pub fn merge(&mut self, other: &TorusSeries) {
        assert_eq!(self.cfg, other.cfg, "merging torus series with different configurations");
        let pairs = |a: &mut Vec<BatchMeans>, b: &Vec<BatchMeans>| {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        };
        pairs(&mut self.corr, &other.corr);
        pairs(&mut self.corr_dir[0], &other.corr_dir[0]);
        pairs(&mut self.corr_dir[1], &other.corr_dir[1]);
        pairs(&mut self.partial, &other.partial);
        pairs(&mut self.bridge, &other.bridge);
        pairs(&mut self.xy_g, &other.xy_g);
        pairs(&mut self.xy_a, &other.xy_a);
        self.u2.merge(&other.u2);
        self.symmetric.merge(&other.symmetric);
        self.clt_sq.merge(&other.clt_sq);
        self.clt_gap.merge(&other.clt_gap);
        self.clt_values.extend_from_slice(&other.clt_values);
    }

    pub fn report(&self) -> SeriesReport {
        let c: Vec<Estimate> = self.corr.iter().map(|a| a.estimate()).collect();
        let means: Vec<f64> = c.iter().map(|e| e.mean).collect();
        let mut partial_sums: Vec<Estimate> = self.partial.iter().map(|a| a.estimate()).collect();
        let mut run = 0.0;
        let mut abs_partial_sums = Vec::with_capacity(partial_sums.len());
        let mut abs_run = 0.0;
        for (l, p) in partial_sums.iter_mut().enumerate() {
            run += (l + 1) as f64 * means[l + 1];
            abs_run += (l + 1) as f64 * means[l + 1].abs();
            p.mean = run;
            abs_partial_sums.push(abs_run);
        }
        let mut cesaro = Vec::with_capacity(means.len().saturating_sub(1));
        let (mut u_k, mut u_sum) = (0.0, 0.0);
        for n in 1..means.len() {
            // (1/n) Σ_{k=1}^{n-1} u_k with u_k = Σ_{i=1}^k c_i.
            cesaro.push(u_sum / n as f64);
            u_k += means[n];
            u_sum += u_k;
        }
        let u2 = self.u2.estimate();
        SeriesReport {
            side: self.cfg.side,
            circular: self.circular(),
            c_by_direction: [
                self.corr_dir[0].iter().map(|a| a.estimate()).collect(),
                self.corr_dir[1].iter().map(|a| a.estimate()).collect(),
            ],
            partial_sums,
            abs_partial_sums,
            cesaro,
            cesaro_target: 0.5 * (u2.mean - means[0]),
            symmetric_lhs: symmetric_sum(&means, self.circular()),
            symmetric_gap: self.symmetric.estimate(),
            u2,
            bridge: self
                .cfg
                .bridge_lengths
                .iter()
                .zip(&self.bridge)
                .map(|(&n, a)| (n, a.estimate()))
                .collect(),
            c,
        }
    }

    /// Empirical law of `n^{-1/2} Σ_{i<n} U'(J_i)` against `N(0, μ[U''])`.
    pub fn clt_report(&self) -> Option<CltReport> {
        let n = self.cfg.clt_length?;
        let target = self.u2.estimate();
        let ks = ks_normal(&self.clt_values, target.mean);
        let variance = self.clt_sq.estimate();
        let gap = self.clt_gap.estimate();
        Some(CltReport {
            n,
            ks,
            draws: self.clt_values.len(),
            variance,
            target,
            variance_pass: gap.mean.abs() <= 3.0 * gap.se,
            gap,
            ks_pass: ks <= CLT_KS_THRESHOLD,
        })
    }

    /// `½ μ[cos(θ_0+θ_0'-θ_i-θ_i')] + |c_i|/β² ≤ μ[cos(θ_0-θ_i)]²` for `i = 1..=L`.
    pub fn xy_reports(&self) -> Vec<XyReport> {
        let Some(beta) = self.cfg.xy_beta else { return Vec::new() };
        let c: Vec<Estimate> = self.corr.iter().map(|a| a.estimate()).collect();
        (1..=self.cfg.max_distance)
            .map(|i| {
                let g = self.xy_g[i - 1].estimate();
                let a = self.xy_a[i - 1].estimate();
                let b2 = beta * beta;
                let lhs = 0.5 * a.mean + c[i].mean.abs() / b2;
                let rhs = g.mean * g.mean;
                let se = ((0.5 * a.se).powi(2) + (c[i].se / b2).powi(2) + (2.0 * g.mean * g.se).powi(2)).sqrt();
                XyReport {
                    distance: i,
                    lhs,
                    rhs,
                    se,
                    spin_spin: g,
                    pass: lhs <= rhs + 3.0 * se,
                }
            })
            .collect()
    }
}

/// `c_0 + 2 Σ_{0<i<L} c_i + w c_L` with `w = 1` when the sum closes around
/// the torus and `w = 2` otherwise.
fn symmetric_sum(c: &[f64], circular: bool) -> f64 {
    let l = c.len() - 1;
    if l == 0 {
        return c[0];
    }
    let inner: f64 = c[1..l].iter().sum();
    c[0] + 2.0 * inner + if circular { 1.0 } else { 2.0 } * c[l]
}

/// Correlations `c_i`, partial sums and the symmetric-sum comparison.
#[derive(Clone, Debug)]
pub struct SeriesReport {
    pub side: usize,
    pub circular: bool,
    /// `c_i = μ[U'(J_0) U'(J_i)]`, `i = 0..=L`.
    pub c: Vec<Estimate>,
    /// The same from horizontal lines only and from vertical lines only.
    pub c_by_direction: [Vec<Estimate>; 2],
    /// `Σ_{1≤i≤l} i c_i` for `l = 1..=L`; means recompute from `c`.
    pub partial_sums: Vec<Estimate>,
    /// `Σ_{1≤i≤l} i |c_i|` from the means.
    pub abs_partial_sums: Vec<f64>,
    /// `(1/n) Σ_{k=1}^{n-1} Σ_{i=1}^k c_i` for `n = 1..=L`.
    pub cesaro: Vec<f64>,
    /// `½ (μ[U''] - c_0)`.
    pub cesaro_target: f64,
    pub u2: Estimate,
    pub symmetric_lhs: f64,
    /// Per-sample symmetric sum minus `U''` average.
    pub symmetric_gap: Estimate,
    /// `(n, Σ_{i<n} μ[U''(J_i)] - μ[(Σ_{i<n} U'(J_i))²])`.
    pub bridge: Vec<(usize, Estimate)>,
}

impl SeriesReport {
    pub const CSV_HEADER: &'static str = "i,c,c_se,partial_sum,partial_se,abs_partial_sum,cesaro";

    pub fn csv_rows(&self) -> Vec<String> {
        self.c
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (p, pse, ap) = if i == 0 {
                    (0.0, 0.0, 0.0)
                } else {
                    (self.partial_sums[i - 1].mean, self.partial_sums[i - 1].se, self.abs_partial_sums[i - 1])
                };
                // the Cesàro mean starts at i = 1
                let ces = if i == 0 { String::new() } else { format!("{:.12e}", self.cesaro[i - 1]) };
                format!("{i},{:.12e},{:.3e},{p:.12e},{pse:.3e},{ap:.12e},{ces}", c.mean, c.se)
            })
            .collect()
    }

    /// Symmetric sum against `μ[U'']` within 3 SE. Without the circular
    /// closure the dropped tail must be below the error: `|c_L| ≤ SE`.
    pub fn symmetric_check(&self, instance: &str) -> VerificationReport {
        let tol = 3.0 * self.symmetric_gap.se;
        let mut r = VerificationReport::with_residual(
            "symmetric-sum",
            instance,
            self.symmetric_lhs,
            self.u2.mean,
            self.symmetric_gap.mean,
            tol,
        );
        if !self.circular && self.c.last().is_some_and(|c| c.mean.abs() > self.symmetric_gap.se) {
            r.pass = false;
        }
        r
    }

    /// `Σ μ[U''] - μ[(Σ U')²] ≥ -3 SE` for each bridge length.
    pub fn bridge_checks(&self, instance: &str) -> Vec<VerificationReport> {
        self.bridge
            .iter()
            .map(|(n, e)| VerificationReport::at_least("bridge-nonnegative", &format!("{instance}/n={n}"), e.mean, 0.0, 3.0 * e.se))
            .collect()
    }

    /// `c_i ≥ -3 SE`, expected when `-U` is positive definite.
    pub fn reflection_checks(&self, instance: &str) -> Vec<VerificationReport> {
        self.c
            .iter()
            .enumerate()
            .map(|(i, e)| VerificationReport::at_least("rp-correlation", &format!("{instance}/i={i}"), e.mean, 0.0, 3.0 * e.se))
            .collect()
    }

    /// Horizontal and vertical estimates agree within 3 combined SE.
    pub fn direction_checks(&self, instance: &str) -> Vec<VerificationReport> {
        let [h, v] = &self.c_by_direction;
        h.iter()
            .zip(v)
            .enumerate()
            .map(|(i, (a, b))| {
                let tol = 3.0 * (a.se * a.se + b.se * b.se).sqrt();
                VerificationReport::equality("direction-consistency", &format!("{instance}/i={i}"), a.mean, b.mean, tol)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CltReport {
    pub n: usize,
    /// Kolmogorov–Smirnov distance to `N(0, μ[U''])`.
    pub ks: f64,
    pub draws: usize,
    /// Second moment of `n^{-1/2} Σ U'` averaged over anchors.
    pub variance: Estimate,
    pub target: Estimate,
    /// Per-sample `variance - U''` average.
    pub gap: Estimate,
    pub ks_pass: bool,
    pub variance_pass: bool,
}

#[derive(Clone, Debug)]
pub struct XyReport {
    pub distance: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
    pub spin_spin: Estimate,
    pub pass: bool,
}

/// `sup_x |F_n(x) - Φ(x / σ)|`.
pub fn ks_normal(values: &[f64], variance: f64) -> f64 {
    if values.is_empty() || !(variance > 0.0) {
        return f64::NAN;
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn torus_series<'a, I>(cfg: TorusSeriesConfig, potentials: &[Arc<PotentialPair>], samples: I, n_samples: u64) -> Result<TorusSeries>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = TorusSeries::new(cfg, potentials.to_vec(), n_samples)?;
    for j in samples {
        acc.push(j);
    }
    Ok(acc)
}

/// `μ[U'(J_0) U'(J_i)]` averaged over translations and both directions.
pub fn uprime_two_point<'a, I>(side: usize, potentials: &[Arc<PotentialPair>], samples: I, n_samples: u64, i: usize) -> Result<Estimate>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let acc = torus_series(TorusSeriesConfig::new(side, i), potentials, samples, n_samples)?;
    Ok(acc.report().c[i])
}

/// Symmetric sum up to `L` against `μ[U'']`.
pub fn symmetric_sum_check<'a, I>(side: usize, potentials: &[Arc<PotentialPair>], samples: I, n_samples: u64, l: usize) -> Result<VerificationReport>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let acc = torus_series(TorusSeriesConfig::new(side, l), potentials, samples, n_samples)?;
    Ok(acc.report().symmetric_check(&format!("torus{side}/L={l}")))
}

/// Series report with the bridge quantities for `n = 1..=L`.
pub fn susceptibility_partial<'a, I>(side: usize, potentials: &[Arc<PotentialPair>], samples: I, n_samples: u64, l: usize) -> Result<SeriesReport>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut cfg = TorusSeriesConfig::new(side, l);
    cfg.bridge_lengths = (1..=l).collect();
    Ok(torus_series(cfg, potentials, samples, n_samples)?.report())
}

/// CLT comparison for paths of length `n`.
pub fn clt_statistic<'a, I>(side: usize, potentials: &[Arc<PotentialPair>], samples: I, n_samples: u64, n: usize) -> Result<CltReport>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut cfg = TorusSeriesConfig::new(side, 0);
    cfg.clt_length = Some(n);
    Ok(torus_series(cfg, potentials, samples, n_samples)?.clt_report().expect("clt length set"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_torus;
    use crate::mcmc::{run, spin_diamond_chain, ChainSeed, RunParams};
    use crate::oracle::{spin_expect, EdgeFn, ModelSpec, SpinObservable};
    use crate::{PotentialRegistry, Sector};

    fn torus_model(side: usize, pot: &str) -> ModelSpec {
        ModelSpec::new(build_torus(side, pot).unwrap(), &PotentialRegistry::default(), Sector::Diamond).unwrap()
    }

    fn sample(m: &ModelSpec, cfg: TorusSeriesConfig, p: RunParams, seed: u64) -> TorusSeries {
        let mut acc = TorusSeries::new(cfg, m.potentials.clone(), p.n_samples()).unwrap();
        let mut c = spin_diamond_chain(m).unwrap();
        run(&mut c, &p, ChainSeed { master: seed, chain: 0 }, |s| acc.push(s.field()));
        acc
    }

    #[test]
    fn rejects_wrap_around_distances() {
        let m = torus_model(4, "xy:1");
        assert!(TorusSeries::new(TorusSeriesConfig::new(4, 3), m.potentials.clone(), 10).is_err());
        assert!(TorusSeries::new(TorusSeriesConfig::new(4, 2), m.potentials.clone(), 10).is_ok());
    }

    #[test]
    fn two_by_two_torus_matches_oracle() {
        let m = torus_model(2, "xy:1");
        let ex = spin_expect(
            &m,
            &[
                SpinObservable::EdgePair(0, EdgeFn::UPrime, 0, EdgeFn::UPrime),
                SpinObservable::EdgePair(0, EdgeFn::UPrime, 2, EdgeFn::UPrime),
                SpinObservable::Edge(0, EdgeFn::U2),
            ],
        )
        .unwrap();
        let mut cfg = TorusSeriesConfig::new(2, 1);
        cfg.bridge_lengths = vec![1, 2];
        let acc = sample(&m, cfg, RunParams::new(201_000, 1_000, 1).unwrap(), 3);
        let r = acc.report();
        assert!(r.c[0].mean > 0.0);
        for (est, exact) in [(r.c[0], ex.real(0)), (r.c[1], ex.real(1)), (r.u2, ex.real(2))] {
            assert!(est.z_score(exact) < 3.0, "{est} vs {exact}");
        }
        // The symmetric sum closes exactly around a side-2 torus.
        assert!(r.circular);
        assert!(r.symmetric_check("t2").pass);
        assert!(r.bridge_checks("t2").iter().all(|b| b.pass));
    }

    #[test]
    fn sums_recompute_from_the_table() {
        let m = torus_model(6, "xy:0.8");
        let mut cfg = TorusSeriesConfig::new(6, 3);
        cfg.bridge_lengths = vec![1, 2, 3, 6];
        let acc = sample(&m, cfg, RunParams::new(3_000, 500, 1).unwrap(), 1);
        let r = acc.report();
        let c: Vec<f64> = r.c.iter().map(|e| e.mean).collect();
        assert_eq!(r.partial_sums[2].mean, c[1] + 2.0 * c[2] + 3.0 * c[3]);
        assert_eq!(r.symmetric_lhs, c[0] + 2.0 * (c[1] + c[2]) + c[3]);
        assert!((r.cesaro[2] - (2.0 * c[1] + c[2]) / 3.0).abs() < 1e-15);
        // Averaged over the torus, the bridge is an exact combination of c_i.
        for (n, b) in &r.bridge {
            let n = *n;
            let mut pred = n as f64 * r.u2.mean - n as f64 * c[0];
            for i in 1..n {
                let ci = if i <= 3 { c[i] } else { c[6 - i] };
                pred -= 2.0 * (n - i) as f64 * ci;
            }
            assert!((b.mean - pred).abs() < 1e-9, "n={n}: {} vs {pred}", b.mean);
        }
        // Full loops carry no height increment.
        assert!(r.bridge[3].1.z_score(0.0) < 3.0, "{}", r.bridge[3].1);
    }

    #[test]
    fn infinite_temperature_has_no_correlations() {
        let m = torus_model(4, "xy:0");
        let mut cfg = TorusSeriesConfig::new(4, 2);
        cfg.bridge_lengths = vec![2];
        let acc = sample(&m, cfg, RunParams::new(2_000, 100, 1).unwrap(), 5);
        let r = acc.report();
        assert!(r.c.iter().all(|c| c.mean == 0.0));
        assert!(r.partial_sums.iter().all(|p| p.mean == 0.0));
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_small() {
        let normal = Normal::new(0.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        assert!(ks_normal(&xs, 4.0) < 0.001, "{}", ks_normal(&xs, 4.0));
        assert!(ks_normal(&xs, 1.0) > 0.1);
    }
}
