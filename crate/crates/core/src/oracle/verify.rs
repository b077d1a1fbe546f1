//! Verifiers: each identity or inequality evaluated on both sides by the
//! exact oracle and reported with its residual.

use super::engine::{enumerate, Domain, Functionals, Plan};
use super::{
    height_expect, spin_expect, spin_tables, EdgeFn, HeightObservable, ModelSpec, SpinObservable,
    MAX_QUADRATURE,
};
use crate::calculus::{d, Green, Sector};
use crate::error::{Error, Result};
use crate::forms::{OneForm, ZeroForm};
use crate::potentials::{
    check_positive_definite, grid_angle, make_delta, make_ivgff, make_xy, PotentialPair, Provenance,
};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

pub const DUALITY_TOLERANCE: f64 = 1e-8;
pub const COVARIANCE_TOLERANCE: f64 = 1e-7;
pub const BOUND_TOLERANCE: f64 = 1e-9;
pub const GINIBRE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub identity: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    /// Equality `lhs = rhs` with residual `lhs - rhs`.
    pub fn equality(identity: &str, instance: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_residual(identity, instance, lhs, rhs, lhs - rhs, tolerance)
    }

    /// Inequality `lhs >= rhs`; only the violation `min(lhs - rhs, 0)` counts.
    pub fn at_least(identity: &str, instance: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_residual(identity, instance, lhs, rhs, (lhs - rhs).min(0.0), tolerance)
    }

    pub fn with_residual(identity: &str, instance: &str, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        VerificationReport {
            identity: identity.to_string(),
            instance: instance.to_string(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
        }
    }

    pub const CSV_HEADER: &'static str = "identity,instance,lhs,rhs,residual,tolerance,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.6e},{:.1e},{}",
            self.identity, self.instance, self.lhs, self.rhs, self.residual, self.tolerance, self.pass
        )
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} on {}: lhs {:.12e} rhs {:.12e} residual {:.3e} (tol {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.identity,
            self.instance,
            self.lhs,
            self.rhs,
            self.residual,
            self.tolerance
        )
    }
}

/// `ν_{-#}[e^{i(n, ε)}]` against `Z_#(ε) / Z_#` for each twist, using one
/// enumeration per side.
pub fn verify_duality_batch(m: &ModelSpec, twists: &[OneForm]) -> Result<Vec<VerificationReport>> {
    let dual = m.dual();
    let chars: Vec<_> = twists.iter().map(|e| HeightObservable::Character(e.clone())).collect();
    let heights = height_expect(&dual, &chars)?;
    let tw: Vec<_> = twists.iter().map(|e| SpinObservable::Twist(e.clone())).collect();
    let spins = spin_expect(m, &tw)?;
    let instance = m.describe();
    Ok(heights
        .values
        .iter()
        .zip(&spins.values)
        .map(|(h, z)| {
            let residual = (h - z).norm();
            VerificationReport::with_residual("duality", &instance, h.re, z.re, residual, DUALITY_TOLERANCE)
        })
        .collect())
}

pub fn verify_duality(m: &ModelSpec, eps: &OneForm) -> Result<VerificationReport> {
    Ok(verify_duality_batch(m, std::slice::from_ref(eps))?.remove(0))
}

/// `ν_#[(n,ε)(n,ω)] = Σ_e μ_{-#}[U''(J_e)] ε_e ω_e - μ_{-#}[(U'(J),ε)(U'(J),ω)]`
/// for each pair.
pub fn verify_covariance_batch(m: &ModelSpec, pairs: &[(OneForm, OneForm)], identity: &str) -> Result<Vec<VerificationReport>> {
    let ne = m.n_edges();
    let hobs: Vec<_> = pairs.iter().map(|(a, b)| HeightObservable::Pair(a.clone(), b.clone())).collect();
    let heights = height_expect(m, &hobs)?;
    let dual = m.dual();
    let mut sobs: Vec<_> = (0..ne).map(|e| SpinObservable::Edge(e, EdgeFn::U2)).collect();
    sobs.extend(pairs.iter().map(|(a, b)| SpinObservable::UPrimePair(a.clone(), b.clone())));
    let spins = spin_expect(&dual, &sobs)?;
    let instance = m.describe();
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let diag: f64 = (0..ne).map(|e| spins.real(e) * a[e] * b[e]).sum();
            let rhs = diag - spins.real(ne + i);
            VerificationReport::equality(identity, &instance, heights.real(i), rhs, COVARIANCE_TOLERANCE)
        })
        .collect())
}

pub fn verify_covariance_duality(m: &ModelSpec, eps: &OneForm, omega: &OneForm) -> Result<VerificationReport> {
    Ok(verify_covariance_batch(m, &[(eps.clone(), omega.clone())], "covariance-duality")?.remove(0))
}

/// Diagonal `ν[n_e²] = μ[U''(J_e)] - μ[U'(J_e)²]` for every edge, and
/// off-diagonal `ν[n_e n_f] = -μ[U'(J_e) U'(J_f)]` for every pair `e < f`.
pub fn verify_covariance_specializations(m: &ModelSpec) -> Result<Vec<VerificationReport>> {
    let ne = m.n_edges();
    let diag: Vec<_> = (0..ne).map(|e| (OneForm::delta(ne, e, 1.0), OneForm::delta(ne, e, 1.0))).collect();
    let mut out = verify_covariance_batch(m, &diag, "covariance-diagonal")?;
    let off: Vec<_> = (0..ne)
        .flat_map(|e| (e + 1..ne).map(move |f| (e, f)))
        .map(|(e, f)| (OneForm::delta(ne, e, 1.0), OneForm::delta(ne, f, 1.0)))
        .collect();
    if !off.is_empty() {
        out.extend(verify_covariance_batch(m, &off, "covariance-offdiagonal")?);
    }
    Ok(out)
}

fn require_star(m: &ModelSpec, what: &str) -> Result<()> {
    if m.sector != Sector::Star {
        return Err(Error::Invalid(format!("{what} needs a star-sector model")));
    }
    Ok(())
}

fn require_boundary_zero(m: &ModelSpec, f: &ZeroForm) -> Result<()> {
    if f.len() != m.graph.n_vertices() {
        return Err(Error::Invalid("zero-form length does not match the graph".into()));
    }
    if f[m.graph.boundary()] != 0.0 {
        return Err(Error::Invalid("test functions must vanish at the boundary vertex".into()));
    }
    Ok(())
}

/// `ν_★[(h,f)²] <= C (Δ⁻¹f, f)` with `C = max_e |μ_◇[U''(J_e)]|`; the
/// report's lhs is the bound and rhs the variance.
pub fn verify_gff_bound(m: &ModelSpec, f: &ZeroForm) -> Result<VerificationReport> {
    require_star(m, "the GFF bound")?;
    require_boundary_zero(m, f)?;
    let var = height_expect(m, &[HeightObservable::HeightPair(f.clone(), f.clone())])?.real(0);
    let obs: Vec<_> = (0..m.n_edges()).map(|e| SpinObservable::Edge(e, EdgeFn::U2)).collect();
    let u2 = spin_expect(&m.dual(), &obs)?;
    let c = u2.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let green = Green::new(&m.graph)?.pairing(f, f)?;
    Ok(VerificationReport::at_least("gff-bound", &m.describe(), c * green, var, BOUND_TOLERANCE))
}

/// Projected-field covariance under `μ_★`. With `τ` solved pathwise:
/// the exact form `μ[(τ,f)(τ,g)] = Σ_e μ[U''(J_e)] d(Gf)_e d(Gg)_e`, the
/// companion identity `μ[(U',df)(U',dg)] = Σ_e μ[U''(J_e)] df_e dg_e`, and,
/// when `f = g`, the sandwich between `inf_e` and `sup_e` of `μ[U'']`
/// times `(f, Gf)`.
pub fn verify_projection_bounds(m: &ModelSpec, f: &ZeroForm, g: &ZeroForm) -> Result<Vec<VerificationReport>> {
    require_star(m, "the projection bounds")?;
    require_boundary_zero(m, f)?;
    require_boundary_zero(m, g)?;
    let ne = m.n_edges();
    let (df, dg) = (d(&m.graph, f), d(&m.graph, g));
    let mut obs: Vec<_> = (0..ne).map(|e| SpinObservable::Edge(e, EdgeFn::U2)).collect();
    obs.push(SpinObservable::TauPair(f.clone(), g.clone()));
    obs.push(SpinObservable::UPrimePair(df.clone(), dg.clone()));
    let r = spin_expect(m, &obs)?;
    let u2: Vec<f64> = (0..ne).map(|e| r.real(e)).collect();
    let (tau, uprime) = (r.real(ne), r.real(ne + 1));
    let green = Green::new(&m.graph)?;
    let (gf, gg) = (green.solve(f)?, green.solve(g)?);
    let (dgf, dgg) = (d(&m.graph, &gf), d(&m.graph, &gg));
    let exact: f64 = (0..ne).map(|e| u2[e] * dgf[e] * dgg[e]).sum();
    let uprime_rhs: f64 = (0..ne).map(|e| u2[e] * df[e] * dg[e]).sum();
    let inst = m.describe();
    let mut out = vec![
        VerificationReport::equality("projection-covariance", &inst, tau, exact, BOUND_TOLERANCE),
        VerificationReport::equality("projection-uprime", &inst, uprime, uprime_rhs, BOUND_TOLERANCE),
    ];
    if f == g {
        let fgf = green.pairing(f, f)?;
        let lo = u2.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.push(VerificationReport::at_least("projection-lower", &inst, tau, lo * fgf, BOUND_TOLERANCE));
        out.push(VerificationReport::at_least("projection-upper", &inst, hi * fgf, tau, BOUND_TOLERANCE));
    }
    Ok(out)
}

/// One factor `cos(m J_e) ± cos(m J'_e)` of the Ginibre core integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GinibreTerm {
    pub edge: usize,
    pub multiplier: i64,
    pub plus: bool,
}

/// `∫∫ Π_i (cos(m_i J_{e_i}) ± cos(m_i J'_{e_i})) dJ dJ'` over two
/// independent copies of `H_◇(𝕊)` with Haar probability measure.
///
/// Expanding the product over subsets `S` of factors, the integral is
/// `Σ_S (Π_{i∉S} ±_i) A(S) A(S^c)` with `A(S) = ∫ Π_{i∈S} cos(m_i J_{e_i})`.
/// Each `A(S)` is a trigonometric polynomial integral, done exactly on a
/// grid finer than its highest frequency.
pub fn ginibre_core_integral(m: &ModelSpec, terms: &[GinibreTerm]) -> Result<f64> {
    if terms.len() > 16 {
        return Err(Error::Invalid("at most 16 factors are supported".into()));
    }
    let m = m.with_sector(Sector::Diamond);
    let (sites, _) = m.layout();
    let dim = m.dimension();
    for t in terms {
        if t.edge >= m.n_edges() {
            return Err(Error::Invalid(format!("edge {} out of range", t.edge)));
        }
    }
    let freq = (0..dim)
        .map(|k| {
            terms
                .iter()
                .map(|t| {
                    let z = sites[t.edge].iter().find(|s| s.0 == k).map_or(0, |s| s.1);
                    (t.multiplier * z).abs()
                })
                .sum::<i64>()
        })
        .max()
        .unwrap_or(0);
    let q = (freq + 1).max(2) as usize;
    if (q as f64).powi(dim as i32) > m.budget as f64 {
        return Err(Error::Budget {
            states: (q as f64).powi(dim as i32),
            budget: m.budget,
        });
    }
    let n = terms.len();
    let mut fun = Functionals::new(m.n_edges());
    for s in 0..1usize << n {
        fun.add_prod(|e| {
            let chosen: Vec<&GinibreTerm> = (0..n).filter(|i| s >> i & 1 == 1).map(|i| &terms[i]).filter(|t| t.edge == e).collect();
            (!chosen.is_empty()).then(|| {
                (0..q)
                    .map(|slot| {
                        let th = grid_angle(slot, q);
                        Complex64::new(chosen.iter().map(|t| (t.multiplier as f64 * th).cos()).product(), 0.0)
                    })
                    .collect()
            })
        });
    }
    let plan = Plan::new(dim, sites, Domain::Circle { m: q });
    let weights = vec![vec![1.0; q]; m.n_edges()];
    let acc = enumerate(&plan, &weights, &fun, 1 << n, |leaf, out| {
        for (o, p) in out.iter_mut().zip(leaf.prod) {
            *o = p.re;
        }
    });
    let a = acc.means();
    let full = (1usize << n) - 1;
    Ok((0..1usize << n)
        .map(|s| {
            let sign: f64 = (0..n).filter(|i| s >> i & 1 == 0 && !terms[*i].plus).map(|_| -1.0).product();
            sign * a[s] * a[full ^ s]
        })
        .sum())
}

pub fn verify_ginibre(m: &ModelSpec, terms: &[GinibreTerm]) -> Result<VerificationReport> {
    let v = ginibre_core_integral(m, terms)?;
    let desc: Vec<String> = terms
        .iter()
        .map(|t| format!("{}{}@{}", if t.plus { '+' } else { '-' }, t.multiplier, t.edge))
        .collect();
    let inst = format!("{}:{}", m.graph_label(), desc.join(" "));
    Ok(VerificationReport::at_least("ginibre-core", &inst, v, 0.0, GINIBRE_TOLERANCE))
}

/// Quantity tracked by a monotonicity sweep.
#[derive(Clone, Debug)]
pub enum SweepTarget {
    /// `ν_★[(h_x - h_y)²]`.
    HeightVariance(usize, usize),
    /// `μ_◇[F(J_f)]` for a positive definite `F`.
    SpinFunction(usize, EdgeFn),
}

/// Potential of the same family at coupling `beta`, or `None` when the
/// family has no coupling scale. Gaussian tables use `V(n) = n²/(2β)`;
/// `β = 0` is the delta potential.
pub fn sweep_potential(prov: &Provenance, beta: f64) -> Result<Option<PotentialPair>> {
    if beta < 0.0 {
        return Err(Error::Invalid("couplings must be nonnegative".into()));
    }
    Ok(match prov {
        Provenance::Xy(_) => Some(make_xy(beta)?),
        Provenance::Ivgff(_) if beta == 0.0 => Some(make_delta()),
        Provenance::Ivgff(_) => Some(make_ivgff(1.0 / (2.0 * beta))?),
        Provenance::Delta => Some(make_delta()),
        _ => None,
    })
}

/// Evaluates `target` with edge `e` at each coupling of `grid` (increasing)
/// and checks that the sequence is non-decreasing.
pub fn monotonicity_sweep(m: &ModelSpec, e: usize, grid: &[f64], target: &SweepTarget) -> Result<VerificationReport> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Invalid("the coupling grid must be increasing".into()));
    }
    let prov = &m.potentials[e].provenance;
    let mut values = Vec::with_capacity(grid.len());
    for &beta in grid {
        let pair = sweep_potential(prov, beta)?
            .ok_or_else(|| Error::NotScalable(prov.id()))?;
        let mm = m.with_potential(e, Arc::new(pair));
        values.push(match target {
            SweepTarget::HeightVariance(x, y) => {
                let mut f = ZeroForm::zeros(m.graph.n_vertices());
                f[*x] += 1.0;
                f[*y] -= 1.0;
                let mm = mm.with_sector(Sector::Star);
                height_expect(&mm, &[HeightObservable::HeightPair(f.clone(), f)])?.real(0)
            }
            SweepTarget::SpinFunction(edge, func) => {
                let mm = mm.with_sector(Sector::Diamond);
                spin_expect(&mm, &[SpinObservable::Edge(*edge, func.clone())])?.real(0)
            }
        });
    }
    let worst = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let worst = if worst.is_finite() { worst } else { 0.0 };
    let what = match target {
        SweepTarget::HeightVariance(x, y) => format!("var(h{x}-h{y})"),
        SweepTarget::SpinFunction(f, func) => format!("{func:?}@{f}"),
    };
    let inst = format!("{}:edge{e}:{what}:{}", m.graph_label(), prov.family());
    Ok(VerificationReport::at_least(
        "monotonicity",
        &inst,
        worst,
        0.0,
        BOUND_TOLERANCE,
    ))
}

/// A trigonometric polynomial `Σ a_k cos(k·θ) + b_k sin(k·θ)` in the angles
/// of a fixed list of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    /// `(k, a_k, b_k)` with one frequency per vertex of the list.
    pub terms: Vec<(Vec<i64>, f64, f64)>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> TrigPolynomial {
        TrigPolynomial { terms: vec![(Vec::new(), c, 0.0)] }
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let phase: f64 = k.iter().zip(theta).map(|(&k, t)| k as f64 * t).sum();
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    }

    pub fn degree(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.0.iter().map(|k| k.abs())).max().unwrap_or(0)
    }
}

/// Reflection of a torus given as a vertex permutation together with the
/// half `T⁺` on which test functions live.
#[derive(Clone, Debug, PartialEq)]
pub struct Reflection {
    pub perm: Vec<usize>,
    pub half: Vec<usize>,
}

impl Reflection {
    /// Reflection of the `side`-torus (vertex `x + side·y`) through the
    /// midpoints of the edges between columns `side/2 - 1, side/2` and
    /// `side - 1, 0`: `x ↦ side - 1 - x`, with `T⁺ = {x < side/2}`.
    /// `vertical` reflects `y` instead.
    pub fn torus_edge(side: usize, vertical: bool) -> Result<Reflection> {
        if side < 2 || side % 2 == 1 {
            return Err(Error::Invalid("edge reflections need an even side".into()));
        }
        let n = side * side;
        let perm = (0..n)
            .map(|v| {
                let (x, y) = (v % side, v / side);
                if vertical {
                    x + side * (side - 1 - y)
                } else {
                    (side - 1 - x) + side * y
                }
            })
            .collect();
        let half = (0..n)
            .filter(|v| if vertical { v / side < side / 2 } else { v % side < side / 2 })
            .collect();
        Ok(Reflection { perm, half })
    }
}

/// Reflection positivity on the full vertex-angle measure
/// `Π_e w(θ_head - θ_tail)` (no gauge fixing: test functions need not be
/// rotation invariant). For each `g` checks `μ(g Θg) >= 0`; for consecutive
/// pairs `(f, g)` checks `μ(g Θf) = μ(f Θg)`.
pub fn rp_check(m: &ModelSpec, refl: &Reflection, tests: &[TrigPolynomial]) -> Result<Vec<VerificationReport>> {
    let g = &m.graph;
    let nv = g.n_vertices();
    if refl.perm.len() != nv {
        return Err(Error::Invalid("reflection does not match the graph".into()));
    }
    for p in &m.potentials {
        let rep = check_positive_definite(&|a| -p.spin.u(a), 256);
        if !rep.is_positive_definite() {
            return Err(Error::Invalid(format!(
                "-U is not positive definite for `{}` (margin {:e})",
                p.id(),
                rep.margin
            )));
        }
    }
    let sites: Vec<Vec<(usize, i64)>> = g
        .edges()
        .iter()
        .map(|e| vec![(e.tail.min(e.head), if e.tail < e.head { -1 } else { 1 }), (e.tail.max(e.head), if e.tail < e.head { 1 } else { -1 })])
        .collect();
    let degree = tests.iter().map(|t| t.degree()).max().unwrap_or(0) as usize;
    let q = match m.quadrature {
        Some(q) => q,
        None => {
            let inner = m.clone().with_sector(Sector::Star);
            let (q0, _) = super::choose_quadrature(&inner, &sites, nv)?;
            (q0 + 2 * degree + 1).div_ceil(2) * 2
        }
    }
    .min(MAX_QUADRATURE + 2 * degree + 2);
    if (q as f64).powi(nv as i32) > m.budget as f64 {
        return Err(Error::Budget {
            states: (q as f64).powi(nv as i32),
            budget: m.budget,
        });
    }
    let k = refl.half.len();
    let size = q.pow(k as u32);
    let tables: Vec<Vec<f64>> = tests
        .iter()
        .map(|t| {
            (0..size)
                .map(|idx| {
                    let theta: Vec<f64> = (0..k).map(|j| grid_angle(idx / q.pow(j as u32) % q, q)).collect();
                    t.eval(&theta)
                })
                .collect()
        })
        .collect();
    let index = |x: &[i64], verts: &mut dyn Iterator<Item = usize>| -> usize {
        verts.enumerate().map(|(j, v)| x[v] as usize * q.pow(j as u32)).sum()
    };
    let plan = Plan::new(nv, sites, Domain::Circle { m: q });
    let values = spin_tables(&m.potentials, q);
    let weights: Vec<Vec<f64>> = values.iter().map(|v| v.iter().map(|s| s.w).collect()).collect();
    let fun = Functionals::new(g.n_edges());
    let nt = tests.len();
    let n_pairs = nt.saturating_sub(1);
    let acc = enumerate(&plan, &weights, &fun, nt + 2 * n_pairs, |leaf, out| {
        let plus = index(leaf.x, &mut refl.half.iter().cloned());
        let minus = index(leaf.x, &mut refl.half.iter().map(|&v| refl.perm[v]));
        for i in 0..nt {
            out[i] = tables[i][plus] * tables[i][minus];
        }
        for i in 0..n_pairs {
            out[nt + 2 * i] = tables[i + 1][plus] * tables[i][minus];
            out[nt + 2 * i + 1] = tables[i][plus] * tables[i + 1][minus];
        }
    });
    let mean = acc.means();
    let inst = format!("{}:M{q}", m.graph_label());
    let mut out = Vec::new();
    for i in 0..nt {
        out.push(VerificationReport::at_least("rp-positivity", &inst, mean[i], 0.0, BOUND_TOLERANCE));
    }
    for i in 0..n_pairs {
        out.push(VerificationReport::equality(
            "rp-symmetry",
            &inst,
            mean[nt + 2 * i],
            mean[nt + 2 * i + 1],
            BOUND_TOLERANCE,
        ));
    }
    Ok(out)
}

/// `ν_★[h_v²]` for each vertex (zero at `∂`).
pub fn height_variances(m: &ModelSpec, vertices: &[usize]) -> Result<Vec<f64>> {
    let m = m.with_sector(Sector::Star);
    let nv = m.graph.n_vertices();
    let obs: Vec<_> = vertices
        .iter()
        .map(|&v| {
            let mut f = ZeroForm::zeros(nv);
            if v != m.graph.boundary() {
                f[v] = 1.0;
            }
            HeightObservable::HeightPair(f.clone(), f)
        })
        .collect();
    Ok(height_expect(&m, &obs)?.values.iter().map(|v| v.re).collect())
}

/// Compares `ν_★[h_x²]` at every original vertex `x` with the variance at
/// its image `map[x]` after a transform: non-increasing, or equal when
/// `exact`.
pub fn verify_transform(
    identity: &str,
    before: &ModelSpec,
    after: &ModelSpec,
    map: &[usize],
    exact: bool,
) -> Result<Vec<VerificationReport>> {
    let xs: Vec<usize> = before.graph.interior().collect();
    let images: Vec<usize> = xs.iter().map(|&x| map[x]).collect();
    let v0 = height_variances(before, &xs)?;
    let v1 = height_variances(after, &images)?;
    let inst = format!("{}->V{}E{}", before.graph_label(), after.graph.n_vertices(), after.graph.n_edges());
    Ok(xs
        .iter()
        .zip(v0.iter().zip(&v1))
        .map(|(x, (&a, &b))| {
            let inst = format!("{inst}:h{x}");
            if exact {
                VerificationReport::equality(identity, &inst, b, a, BOUND_TOLERANCE)
            } else {
                VerificationReport::at_least(identity, &inst, a, b, BOUND_TOLERANCE)
            }
        })
        .collect())
}

/// Characteristic function of `h_b - h_a` at `t = 2πj/16`, `j = 1..8`, on
/// both graphs: equal for all `j` means the laws of the difference agree
/// modulo 16.
pub fn verify_two_point_law(
    before: &ModelSpec,
    after: &ModelSpec,
    (a, b): (usize, usize),
    (a1, b1): (usize, usize),
) -> Result<Vec<VerificationReport>> {
    let chars = |m: &ModelSpec, a: usize, b: usize| -> Result<Vec<Complex64>> {
        let m = m.with_sector(Sector::Star);
        let coef = m.layout().1.expect("star layout has vertex coefficients");
        let mut f = ZeroForm::zeros(m.graph.n_vertices());
        f[b] += 1.0;
        f[a] -= 1.0;
        let base = super::tree_path_form(&m, &coef, &f);
        let obs: Vec<_> = (1..=8)
            .map(|j| HeightObservable::Character(base.scale(std::f64::consts::TAU * j as f64 / 16.0)))
            .collect();
        Ok(height_expect(&m, &obs)?.values)
    };
    let x = chars(before, a, b)?;
    let y = chars(after, a1, b1)?;
    let inst = format!("{}:h{b}-h{a}", before.graph_label());
    Ok(x
        .iter()
        .zip(&y)
        .map(|(p, q)| VerificationReport::with_residual("split-two-point", &inst, q.re, p.re, (p - q).norm(), BOUND_TOLERANCE))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle, build_path, build_torus};
    use crate::potentials::PotentialRegistry;

    fn model(g: crate::FiniteGraph, sector: Sector) -> ModelSpec {
        ModelSpec::new(g, &PotentialRegistry::default(), sector).unwrap()
    }

    #[test]
    fn single_edge_duality() {
        let m = model(build_path(2, "xy:1").unwrap(), Sector::Diamond);
        let r = verify_duality(&m, &OneForm(vec![0.7])).unwrap();
        let p = &m.potentials[0];
        assert!((r.rhs - p.spin.w(0.7) / p.spin.w(0.0)).abs() < 1e-14);
        assert!(r.pass, "{r}");
        let r = verify_duality(&m, &OneForm(vec![0.0])).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_twist_matches_characteristic_function() {
        let m = model(build_cycle(3, "xy:1").unwrap(), Sector::Diamond);
        let r = verify_duality(&m, &OneForm(vec![0.3, 0.0, 0.0])).unwrap();
        assert!(r.pass, "{r}");
        assert!(r.lhs < 1.0);
    }

    #[test]
    fn covariance_on_a_cycle() {
        let m = model(build_cycle(4, "xy:1").unwrap(), Sector::Star);
        let reps = verify_covariance_specializations(&m).unwrap();
        assert_eq!(reps.len(), 4 + 6);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        // distinct edges of a cycle carry negatively correlated heights
        let off = reps.iter().find(|r| r.identity == "covariance-offdiagonal").unwrap();
        assert!(off.lhs.abs() > 1e-6);
    }

    #[test]
    fn gff_bound_on_a_path_is_tight() {
        let m = model(build_path(3, "xy:1").unwrap(), Sector::Star);
        let r = verify_gff_bound(&m, &ZeroForm(vec![0.0, 1.0, 0.0])).unwrap();
        assert!(r.pass);
        assert!((r.lhs - r.rhs).abs() < 1e-12, "{r}");
        // On a single homogeneous cycle U'(J) is orthogonal to dGf under the
        // dual measure and the bound is attained; two cycles break this.
        let c = model(build_cycle(4, "xy:1").unwrap(), Sector::Star);
        let r = verify_gff_bound(&c, &ZeroForm(vec![0.0, 1.0, -2.0, 1.0])).unwrap();
        assert!(r.pass && (r.lhs - r.rhs).abs() < 1e-10, "{r}");
        let t = model(build_torus(2, "xy:1").unwrap(), Sector::Star);
        let r = verify_gff_bound(&t, &ZeroForm(vec![0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(r.pass && r.lhs - r.rhs > 1e-6, "{r}");
    }

    #[test]
    fn projection_on_one_edge_coincides() {
        let m = model(build_path(2, "xy:1").unwrap(), Sector::Star);
        let f = ZeroForm(vec![0.0, 1.0]);
        let reps = verify_projection_bounds(&m, &f, &f).unwrap();
        assert_eq!(reps.len(), 4);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!((reps[2].lhs - reps[2].rhs).abs() < 1e-12);
    }

    #[test]
    fn ginibre_trivial_cases() {
        let m = model(build_cycle(3, "xy:1").unwrap(), Sector::Diamond);
        let t = |m, plus| GinibreTerm { edge: 0, multiplier: m, plus };
        assert!((ginibre_core_integral(&m, &[t(0, true)]).unwrap() - 2.0).abs() < 1e-15);
        assert!(ginibre_core_integral(&m, &[t(0, false)]).unwrap().abs() < 1e-15);
        let v = ginibre_core_integral(
            &m,
            &[GinibreTerm { edge: 0, multiplier: 1, plus: true }, GinibreTerm { edge: 1, multiplier: 2, plus: false }],
        )
        .unwrap();
        assert!(v >= -1e-12);
    }

    #[test]
    fn sweep_on_one_edge() {
        let m = model(build_path(2, "xy:1").unwrap(), Sector::Star);
        let r = monotonicity_sweep(&m, 0, &[0.0, 0.5, 1.0, 2.0], &SweepTarget::HeightVariance(1, 0)).unwrap();
        assert!(r.pass && r.lhs > 0.0, "{r}");
        let l = model(build_path(2, "lipschitz:1.5").unwrap(), Sector::Star);
        assert!(monotonicity_sweep(&l, 0, &[0.0, 1.0], &SweepTarget::HeightVariance(1, 0)).is_err());
    }

    #[test]
    fn rp_trivial_and_cosine() {
        let m = model(build_torus(2, "xy:1").unwrap(), Sector::Star);
        let refl = Reflection::torus_edge(2, false).unwrap();
        assert_eq!(refl.perm, vec![1, 0, 3, 2]);
        let cos = TrigPolynomial { terms: vec![(vec![1, -1], 1.0, 0.0)] };
        let reps = rp_check(&m, &refl, &[TrigPolynomial::constant(1.0), cos]).unwrap();
        assert!((reps[0].lhs - 1.0).abs() < 1e-12);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    }
}
