//! Grid and coefficient criteria for positive definiteness, infinite
//! divisibility and convexity. These are numerical diagnostics, not proofs.

use super::HeightPotential;
use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq)]
pub struct PdReport {
    /// Smallest Fourier coefficient (after snapping rounding noise to zero).
    pub margin: f64,
    /// `a_n = (1/M) Σ_j F(θ_j) cos(nθ_j)` for `n = 0..M/2`.
    pub coefficients: Vec<f64>,
}

impl PdReport {
    pub fn is_positive_definite(&self) -> bool {
        self.margin >= 0.0
    }
}

fn cosine_coefficients(f: &dyn Fn(f64) -> f64, m: usize) -> Vec<f64> {
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let t = TAU * (j as f64 + 0.5) / m as f64;
            (t, f(t))
        })
        .collect();
    (0..=m / 2)
        .map(|n| samples.iter().map(|&(t, v)| v * (n as f64 * t).cos()).sum::<f64>() / m as f64)
        .collect()
}

/// Bochner criterion on an `m`-point grid: an even continuous `F` is positive
/// definite iff all its Fourier coefficients are nonnegative.
pub fn check_positive_definite(f: &dyn Fn(f64) -> f64, m: usize) -> PdReport {
    let mut coefficients = cosine_coefficients(f, m);
    let scale = coefficients.iter().fold(0.0f64, |s, c| s.max(c.abs()));
    for c in coefficients.iter_mut() {
        if c.abs() <= 1e-13 * scale {
            *c = 0.0;
        }
    }
    let margin = coefficients.iter().cloned().fold(f64::INFINITY, f64::min);
    PdReport {
        margin,
        coefficients,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityReport {
    /// `(m, min_n a_n / a_0)` for the coefficients of `e^{-U/m}`.
    pub entries: Vec<(u32, f64)>,
}

impl DivisibilityReport {
    pub fn all_nonnegative(&self) -> bool {
        self.entries.iter().all(|e| e.1 >= 0.0)
    }
}

/// For each divisor `m`, whether `e^{-U/m}` is still positive definite.
pub fn check_infinitely_divisible(u: &dyn Fn(f64) -> f64, powers: &[u32], grid: usize) -> DivisibilityReport {
    let entries = powers
        .iter()
        .map(|&m| {
            let report = check_positive_definite(&|a| (-u(a) / m as f64).exp(), grid);
            let a0 = report.coefficients[0];
            (m, report.margin.min(0.0) / a0)
        })
        .collect();
    DivisibilityReport { entries }
}

/// Worst Turán slack `min_k (c_k² - c_{k-1} c_{k+1})` over `0 <= k <= N_max`;
/// nonnegative iff `V` is convex on the support.
pub fn convexity_check(v: &HeightPotential) -> f64 {
    (0..=v.n_max() as i64)
        .map(|k| v.c(k) * v.c(k) - v.c(k - 1) * v.c(k + 1))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::super::{make_ivgff, make_lipschitz, make_xy};
    use super::*;

    #[test]
    fn bochner_examples() {
        let r = check_positive_definite(&|a: f64| (2.0 * a).cos(), 64);
        assert!(r.is_positive_definite());
        assert!((r.coefficients[2] - 0.5).abs() < 1e-14);
        let r = check_positive_definite(&|a: f64| -a.cos(), 64);
        assert!(!r.is_positive_definite());
    }

    #[test]
    fn xy_is_divisible() {
        let u = |a: f64| -1.0 * a.cos();
        let rep = check_infinitely_divisible(&u, &[1, 2, 3, 5, 10], 256);
        assert!(rep.all_nonnegative());
    }

    #[test]
    fn lipschitz_is_not() {
        let p = make_lipschitz(1.5).unwrap();
        let rep = check_infinitely_divisible(&|a| p.spin.u(a), &[2], 512);
        assert!(rep.entries[0].1 < 0.0);
    }

    #[test]
    fn turan() {
        for b in [0.25, 0.5, 1.0, 2.0, 4.0] {
            assert!(convexity_check(&make_xy(b).unwrap().height) >= 0.0);
            assert!(convexity_check(&make_ivgff(b).unwrap().height) >= 0.0);
        }
        let p = make_xy(1.0).unwrap();
        let direct = p.height.c(1).powi(2) - p.height.c(0) * p.height.c(2);
        assert!(direct > 0.0);
    }
}
