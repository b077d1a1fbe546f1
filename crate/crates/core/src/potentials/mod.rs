//! Dual potential pairs `(V, U)`.
//!
//! A height potential is stored as the symmetric table `c_n = e^{-V(n)}`,
//! `|n| <= N_max`. Its spin dual is `w(α) = Σ_n c_n e^{inα}` and
//! `U = -ln w`. Positive definiteness of the pair means `w > 0`.

pub mod bessel;
mod diagnostics;
mod ops;
mod registry;

pub use diagnostics::{
    check_infinitely_divisible, check_positive_definite, convexity_check, DivisibilityReport,
    PdReport,
};
pub use ops::{convolution_power, convolution_residual, merge_parallel, split_potential};
pub use registry::{PotentialFamily, PotentialRegistry};

use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};
use std::fmt;

/// Dropped tail bound: `Σ_{|n| > N_max} (1 + n²) c_n < TAIL_TOLERANCE · c_0`.
pub const TAIL_TOLERANCE: f64 = 1e-14;
/// Grid on which `w > 0` is checked.
pub const CHECK_GRID: usize = 1024;
const MAX_TABLE: usize = 100_000;

/// Symmetric coefficient table `c_n = e^{-V(n)}`, zero beyond `N_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightPotential {
    coeffs: Vec<f64>,
}

impl HeightPotential {
    /// `coeffs[n] = c_n` for `n = 0..=N_max`; requires `c_0 > 0`, `c_n >= 0`.
    pub fn new(mut coeffs: Vec<f64>) -> Result<HeightPotential> {
        match coeffs.first() {
            Some(&c0) if c0 > 0.0 && c0.is_finite() => {}
            _ => return Err(Error::Potential("c_0 must be positive and finite".into())),
        }
        for (n, &c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Potential(format!("c_{n} is not finite")));
            }
            if c < 0.0 {
                return Err(Error::NegativeCoefficient { n, value: c });
            }
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(HeightPotential { coeffs })
    }

    /// `V(0) = 0`, `V = ∞` elsewhere.
    pub fn delta() -> HeightPotential {
        HeightPotential { coeffs: vec![1.0] }
    }

    /// Two-column text `n c_n`. Lines for negative `n` must mirror positive ones.
    pub fn from_two_column(text: &str) -> Result<HeightPotential> {
        let mut pos: Vec<Option<f64>> = Vec::new();
        let mut neg: Vec<(usize, f64)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut it = content.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let n: i64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("expected an integer n"))?;
            let c: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("expected a coefficient c_n"))?;
            if it.next().is_some() {
                return Err(err("expected two columns"));
            }
            if n < 0 {
                neg.push((n.unsigned_abs() as usize, c));
                continue;
            }
            let n = n as usize;
            if pos.len() <= n {
                pos.resize(n + 1, None);
            }
            if pos[n].replace(c).is_some() {
                return Err(err("duplicate n"));
            }
        }
        let coeffs: Vec<f64> = pos.iter().map(|c| c.unwrap_or(0.0)).collect();
        for (n, c) in neg {
            let mirror = coeffs.get(n).copied().unwrap_or(0.0);
            if (mirror - c).abs() > 1e-12 * mirror.abs().max(c.abs()) {
                return Err(Error::Potential(format!(
                    "table is not symmetric: c_-{n} = {c} but c_{n} = {mirror}"
                )));
            }
        }
        HeightPotential::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn c(&self, n: i64) -> f64 {
        self.coeffs.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `V(n) = -ln c_n` (`∞` outside the support).
    pub fn potential(&self, n: i64) -> f64 {
        -self.c(n).ln()
    }

    /// `Σ_{|n| > k} c_n`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        2.0 * self.coeffs.iter().skip(k + 1).sum::<f64>()
    }

    /// `Σ_n c_n = w(0)`.
    pub fn total(&self) -> f64 {
        self.coeffs[0] + self.tail_mass(0)
    }

    /// `Σ n² c_n / Σ c_n`, the variance of a single free edge.
    pub fn second_moment(&self) -> f64 {
        let num: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| 2.0 * (n * n) as f64 * c)
            .sum();
        num / self.total()
    }

    /// Same potential up to an additive constant, rescaled so `c_0 = 1`.
    pub fn normalized(&self) -> HeightPotential {
        let c0 = self.coeffs[0];
        HeightPotential {
            coeffs: self.coeffs.iter().map(|c| c / c0).collect(),
        }
    }

    /// Max relative deviation `max_n |c_n - c'_n| / c_0`.
    pub fn distance(&self, other: &HeightPotential) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len as i64)
            .map(|n| (self.c(n) - other.c(n)).abs())
            .fold(0.0, f64::max)
            / self.coeffs[0]
    }
}

/// Builds a table from a coefficient generator, truncated by the tail rule.
pub(crate) fn adaptive_table(mut c: impl FnMut(usize) -> f64) -> Result<Vec<f64>> {
    let c0 = c(0);
    let mut coeffs = vec![c0];
    let mut small = 0;
    for n in 1..=MAX_TABLE {
        let cn = c(n);
        coeffs.push(cn);
        if (1.0 + (n * n) as f64) * cn < 1e-24 * c0 {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        if n == MAX_TABLE {
            return Err(Error::Potential(format!(
                "coefficients have not decayed by n = {MAX_TABLE}"
            )));
        }
    }
    // Smallest N with Σ_{n > N} 2(1 + n²) c_n below tolerance.
    let mut tail = 0.0;
    let mut n_max = coeffs.len() - 1;
    while n_max > 0 {
        let add = 2.0 * (1.0 + (n_max * n_max) as f64) * coeffs[n_max];
        if tail + add >= TAIL_TOLERANCE * c0 {
            break;
        }
        tail += add;
        n_max -= 1;
    }
    coeffs.truncate(n_max + 1);
    Ok(coeffs)
}

/// `w`, `U`, `U'`, `U''` at one angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinValues {
    pub w: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

/// Spin potential `U = -ln w` evaluated from the Fourier table, or from the
/// closed form `U = -β cos α` for XY.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinPotential {
    coeffs: Vec<f64>,
    cosine: Option<f64>,
}

impl SpinPotential {
    /// Fourier synthesis `w(α) = c_0 + 2 Σ c_n cos nα`, with `w > 0` checked
    /// on a `CHECK_GRID`-point grid.
    pub fn from_height(h: &HeightPotential) -> Result<SpinPotential> {
        let s = SpinPotential {
            coeffs: h.coeffs.clone(),
            cosine: None,
        };
        s.check_positive()?;
        Ok(s)
    }

    /// `w = e^{β cos α}` exactly; the table is kept for reference.
    pub(crate) fn cosine(beta: f64, h: &HeightPotential) -> SpinPotential {
        SpinPotential {
            coeffs: h.coeffs.clone(),
            cosine: Some(beta),
        }
    }

    fn check_positive(&self) -> Result<()> {
        for j in 0..CHECK_GRID {
            let alpha = TAU * j as f64 / CHECK_GRID as f64;
            let w = self.series(alpha).0;
            if !(w > 0.0) {
                return Err(Error::NotPositiveDefinite { alpha, value: w });
            }
        }
        Ok(())
    }

    /// `(w, w', w'')` by direct cosine/sine sums.
    fn series(&self, alpha: f64) -> (f64, f64, f64) {
        let (mut w, mut dw, mut d2w) = (self.coeffs[0], 0.0, 0.0);
        if self.coeffs.len() > 1 {
            let (s1, c1) = alpha.sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for (n, &cn) in self.coeffs.iter().enumerate().skip(1) {
                (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
                if n % 32 == 0 {
                    // Resynchronise the rotation to stop rounding drift.
                    (s, c) = (n as f64 * alpha).sin_cos();
                }
                let nf = n as f64;
                w += 2.0 * cn * c;
                dw -= 2.0 * nf * cn * s;
                d2w -= 2.0 * nf * nf * cn * c;
            }
        }
        (w, dw, d2w)
    }

    pub fn eval(&self, alpha: f64) -> SpinValues {
        if let Some(beta) = self.cosine {
            let (s, c) = alpha.sin_cos();
            return SpinValues {
                w: (beta * c).exp(),
                u: -beta * c,
                du: beta * s,
                d2u: beta * c,
            };
        }
        let (w, dw, d2w) = self.series(alpha);
        SpinValues {
            w,
            u: -w.ln(),
            du: -dw / w,
            d2u: (dw * dw - d2w * w) / (w * w),
        }
    }

    pub fn w(&self, alpha: f64) -> f64 {
        self.eval(alpha).w
    }
    pub fn u(&self, alpha: f64) -> f64 {
        match self.cosine {
            Some(beta) => -beta * alpha.cos(),
            None => self.eval(alpha).u,
        }
    }
    pub fn du(&self, alpha: f64) -> f64 {
        match self.cosine {
            Some(beta) => beta * alpha.sin(),
            None => self.eval(alpha).du,
        }
    }
    /// `(U', U'')` without forming `w` in the closed-form case.
    pub fn derivatives(&self, alpha: f64) -> (f64, f64) {
        match self.cosine {
            Some(beta) => {
                let (s, c) = alpha.sin_cos();
                (beta * s, beta * c)
            }
            None => {
                let v = self.eval(alpha);
                (v.du, v.d2u)
            }
        }
    }
    pub fn d2u(&self, alpha: f64) -> f64 {
        self.eval(alpha).d2u
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Some(β)` when evaluated in closed form as `U = -β cos α`.
    pub fn cosine_beta(&self) -> Option<f64> {
        self.cosine
    }
}

/// `spin_from_height`: the spin dual of a height table.
pub fn spin_from_height(h: &HeightPotential) -> Result<SpinPotential> {
    SpinPotential::from_height(h)
}

fn extract(u: &dyn Fn(f64) -> f64, n_max: usize, m: usize) -> Result<(Vec<f64>, f64)> {
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let theta = TAU * (j as f64 + 0.5) / m as f64;
            (theta, (-u(theta)).exp())
        })
        .collect();
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max.min(m / 2) {
        let (mut re, mut im) = (0.0, 0.0);
        for &(theta, f) in &samples {
            let (s, c) = (k as f64 * theta).sin_cos();
            re += f * c;
            im -= f * s;
        }
        re /= m as f64;
        im /= m as f64;
        if im.abs() > 1e-12 * peak {
            return Err(Error::Potential(format!(
                "spin potential is not even: Im a_{k} = {im:e}"
            )));
        }
        out.push(re);
    }
    Ok((out, peak))
}

/// `height_from_spin`: coefficients `a_k = ∫ e^{-U} e^{-ikθ} dθ/2π` by the
/// midpoint rule. With `m = None` the grid starts at 256 points and doubles
/// until successive extractions agree to `1e-12 · a_0`. With `n_max = None`
/// the table is truncated by the tail rule above the rounding floor.
pub fn height_from_spin(
    u: &dyn Fn(f64) -> f64,
    n_max: Option<usize>,
    m: Option<usize>,
) -> Result<HeightPotential> {
    let (coeffs, peak) = match m {
        Some(m) => extract(u, n_max.unwrap_or(m / 2), m)?,
        None => {
            let mut m = 256;
            let (mut prev, _) = extract(u, n_max.unwrap_or(m / 2 - 1), m)?;
            loop {
                m *= 2;
                let (next, peak) = extract(u, n_max.unwrap_or(m / 2 - 1), m)?;
                let common = prev.len().min(next.len());
                let diff = (0..common).map(|k| (prev[k] - next[k]).abs()).fold(0.0, f64::max);
                if diff <= 1e-12 * next[0] || m >= 1 << 16 {
                    break (next, peak);
                }
                prev = next;
            }
        }
    };
    // Magnitudes below this are quadrature rounding, not signal.
    let floor = 64.0 * f64::EPSILON * peak;
    let tol = floor.max(1e-12 * coeffs[0]);
    let mut table = Vec::with_capacity(coeffs.len());
    for (n, &c) in coeffs.iter().enumerate() {
        if c < -tol {
            return Err(Error::NegativeCoefficient { n, value: c });
        }
        table.push(if c.abs() <= floor { 0.0 } else { c.max(0.0) });
    }
    if n_max.is_none() {
        let c0 = table[0];
        let mut tail = 0.0;
        let mut cut = table.len() - 1;
        while cut > 0 {
            let add = 2.0 * (1.0 + (cut * cut) as f64) * table[cut];
            if tail + add >= TAIL_TOLERANCE * c0 {
                break;
            }
            tail += add;
            cut -= 1;
        }
        table.truncate(cut + 1);
    }
    HeightPotential::new(table)
}

/// Where a pair came from; its `Display` is the canonical potential id.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Xy(f64),
    Ivgff(f64),
    Lipschitz(f64),
    /// `(γ, weight)` components of `Σ weight · e^{-γ n²/2}`.
    Annealed(Vec<(f64, f64)>),
    Delta,
    Table(String),
    Product(Vec<Provenance>),
}

impl Provenance {
    pub fn family(&self) -> &'static str {
        match self {
            Provenance::Xy(_) => "xy",
            Provenance::Ivgff(_) => "ivgff",
            Provenance::Lipschitz(_) => "lipschitz",
            Provenance::Annealed(_) => "annealed",
            Provenance::Delta => "delta",
            Provenance::Table(_) => "table",
            Provenance::Product(_) => "product",
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Xy(b) => write!(f, "xy:{b}"),
            Provenance::Ivgff(b) => write!(f, "ivgff:{b}"),
            Provenance::Lipschitz(b) => write!(f, "lipschitz:{b}"),
            Provenance::Annealed(pairs) => {
                f.write_str("annealed:")?;
                for (i, (g, w)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{g}@{w}")?;
                }
                Ok(())
            }
            Provenance::Delta => f.write_str("delta"),
            Provenance::Table(name) => write!(f, "table:{name}"),
            Provenance::Product(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("&")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// A height potential together with its spin dual.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPair {
    pub provenance: Provenance,
    pub height: HeightPotential,
    pub spin: SpinPotential,
}

impl PotentialPair {
    pub fn new(provenance: Provenance, height: HeightPotential) -> Result<PotentialPair> {
        let spin = SpinPotential::from_height(&height)?;
        Ok(PotentialPair {
            provenance,
            height,
            spin,
        })
    }

    pub fn id(&self) -> String {
        self.provenance.id()
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Potential(msg()))
    }
}

/// XY: `c_n = I_n(β)`, `U(α) = -β cos α`.
pub fn make_xy(beta: f64) -> Result<PotentialPair> {
    require(beta >= 0.0 && beta.is_finite() && beta <= 700.0, || {
        format!("xy needs 0 <= beta <= 700, got {beta}")
    })?;
    let height = HeightPotential::new(adaptive_table(|n| bessel::bessel_i(n as u32, beta))?)?;
    let spin = SpinPotential::cosine(beta, &height);
    Ok(PotentialPair {
        provenance: Provenance::Xy(beta),
        height,
        spin,
    })
}

/// Integer-valued Gaussian free field: `V(n) = β n²`.
pub fn make_ivgff(beta: f64) -> Result<PotentialPair> {
    require(beta > 0.0 && beta.is_finite(), || format!("ivgff needs beta > 0, got {beta}"))?;
    let table = adaptive_table(|n| (-beta * (n * n) as f64).exp())?;
    PotentialPair::new(Provenance::Ivgff(beta), HeightPotential::new(table)?)
}

/// Random Lipschitz function: `c_0 = 1`, `c_{±1} = e^{-β}`.
pub fn make_lipschitz(beta: f64) -> Result<PotentialPair> {
    require(beta.is_finite() && (-beta).exp() < 0.5, || {
        format!("lipschitz needs e^-beta < 1/2 so that w(π) = 1 - 2e^-beta > 0, got beta = {beta}")
    })?;
    PotentialPair::new(
        Provenance::Lipschitz(beta),
        HeightPotential::new(vec![1.0, (-beta).exp()])?,
    )
}

/// Annealed Gaussian: `c_n = Σ weight · e^{-γ n²/2}`.
pub fn make_annealed(pairs: &[(f64, f64)]) -> Result<PotentialPair> {
    require(!pairs.is_empty(), || "annealed needs at least one (gamma, weight) pair".into())?;
    for &(g, w) in pairs {
        require(g > 0.0 && g.is_finite(), || format!("annealed gamma must be > 0, got {g}"))?;
        require(w >= 0.0 && w.is_finite(), || format!("annealed weight must be >= 0, got {w}"))?;
    }
    require(pairs.iter().any(|p| p.1 > 0.0), || "annealed weights are all zero".into())?;
    let table = adaptive_table(|n| {
        pairs
            .iter()
            .map(|&(g, w)| w * (-g * (n * n) as f64 / 2.0).exp())
            .sum()
    })?;
    PotentialPair::new(Provenance::Annealed(pairs.to_vec()), HeightPotential::new(table)?)
}

/// `V = 0` at the origin and `∞` elsewhere: the edge is pinned (`U ≡ 0`).
pub fn make_delta() -> PotentialPair {
    let height = HeightPotential::delta();
    PotentialPair {
        provenance: Provenance::Delta,
        spin: SpinPotential::cosine(0.0, &height),
        height,
    }
}

pub fn make_table(name: &str, height: HeightPotential) -> Result<PotentialPair> {
    PotentialPair::new(Provenance::Table(name.to_string()), height)
}

/// Angle of grid point `j` of an `m`-point uniform grid, in `(-π, π]`.
pub(crate) fn grid_angle(j: usize, m: usize) -> f64 {
    let a = TAU * j as f64 / m as f64;
    if a > PI {
        a - TAU
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xy_coefficients() {
        let p = make_xy(1.0).unwrap();
        assert!((p.height.c(0) - 1.2660658778).abs() < 1e-10);
        assert!((p.height.c(1) - 0.5651591040).abs() < 1e-10);
        let z = make_xy(0.0).unwrap();
        assert_eq!(z.height.coeffs(), &[1.0]);
        assert_eq!(z.spin.u(1.3), 0.0);
    }

    #[test]
    fn closed_form_matches_series() {
        let p = make_xy(2.0).unwrap();
        let series = SpinPotential::from_height(&p.height).unwrap();
        for j in 0..64 {
            let a = grid_angle(j, 64);
            let (x, y) = (p.spin.eval(a), series.eval(a));
            assert!((x.w - y.w).abs() < 1e-12 * x.w);
            assert!((x.du - y.du).abs() < 1e-10);
            assert!((x.d2u - y.d2u).abs() < 1e-10);
        }
    }

    #[test]
    fn ivgff_and_lipschitz() {
        let p = make_ivgff(1.0).unwrap();
        assert!((p.spin.w(0.0) - 1.7726372).abs() < 1e-7);
        let l = make_lipschitz(1.0).unwrap();
        assert!((l.spin.w(PI) - 0.2642411).abs() < 1e-7);
        assert!(make_lipschitz(0.5).is_err());
        assert!(make_ivgff(0.0).is_err());
    }

    #[test]
    fn truncation_rule() {
        for p in [make_xy(4.0).unwrap(), make_ivgff(0.25).unwrap()] {
            let h = &p.height;
            let n = h.n_max();
            let dropped: f64 = (n + 1..n + 200)
                .map(|k| {
                    let c = match p.provenance {
                        Provenance::Xy(b) => bessel::bessel_i(k as u32, b),
                        _ => (-0.25 * (k * k) as f64).exp(),
                    };
                    2.0 * (1.0 + (k * k) as f64) * c
                })
                .sum();
            assert!(dropped < TAIL_TOLERANCE * h.c(0));
            assert!(h.c(n as i64) > 0.0);
        }
    }

    #[test]
    fn delta_spin_is_flat() {
        let d = make_delta();
        assert_eq!(d.spin.w(0.4), 1.0);
        assert_eq!(d.spin.d2u(0.4), 0.0);
    }

    #[test]
    fn extraction_of_cosine() {
        let h = height_from_spin(&|a: f64| -1.5 * a.cos(), None, None).unwrap();
        let x = make_xy(1.5).unwrap();
        assert!(h.distance(&x.height) < 1e-12);
        let flat = height_from_spin(&|_| 0.0, None, None).unwrap();
        assert_eq!(flat.coeffs(), &[1.0]);
    }

    #[test]
    fn two_column_tables() {
        let h = HeightPotential::from_two_column("0 1\n1 0.5\n-1 0.5\n# c\n2 0.1\n").unwrap();
        assert_eq!(h.coeffs(), &[1.0, 0.5, 0.1]);
        assert!(HeightPotential::from_two_column("0 1\n-1 0.2\n1 0.3\n").is_err());
        assert!(HeightPotential::from_two_column("0 1\n1 -0.1\n").is_err());
    }

    #[test]
    fn ids() {
        assert_eq!(Provenance::Xy(1.0).id(), "xy:1");
        assert_eq!(Provenance::Annealed(vec![(2.0, 0.5), (4.0, 0.5)]).id(), "annealed:2@0.5,4@0.5");
        assert_eq!(
            Provenance::Product(vec![Provenance::Xy(1.0), Provenance::Xy(0.5)]).id(),
            "xy:1&xy:0.5"
        );
    }
}
