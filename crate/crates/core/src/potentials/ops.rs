//! Edge splitting (convolution roots) and parallel-edge merging (products).

use super::{
    make_delta, make_ivgff, make_lipschitz, HeightPotential, PotentialPair, PotentialRegistry,
    Provenance,
};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Potential whose `k`-fold convolution is `p`: the weight of a path of `k`
/// edges replacing one edge. Delegates to the family of `p`.
pub fn split_potential(reg: &PotentialRegistry, p: &PotentialPair, k: u32) -> Result<Arc<PotentialPair>> {
    if k == 0 {
        return Err(Error::Invalid("split factor must be >= 1".into()));
    }
    if k == 1 {
        return Ok(Arc::new(p.clone()));
    }
    let split = reg.family(p.provenance.family())?.split(&p.provenance, k)?;
    reg.build(&split)
}

/// `c^{*k}`, truncated to the natural support `k · N_max`.
pub fn convolution_power(h: &HeightPotential, k: u32) -> Vec<f64> {
    let n = h.n_max() as i64;
    let mut acc: Vec<f64> = vec![1.0];
    let mut half = 0i64;
    for _ in 0..k {
        let new_half = half + n;
        let mut next = vec![0.0; (2 * new_half + 1) as usize];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let x = i as i64 - half;
            for y in -n..=n {
                next[(x + y + new_half) as usize] += a * h.c(y);
            }
        }
        acc = next;
        half = new_half;
    }
    acc[half as usize..].to_vec()
}

/// `max_n |(part^{*k})_n - orig_n| / orig_0`.
pub fn convolution_residual(orig: &HeightPotential, part: &HeightPotential, k: u32) -> f64 {
    let conv = convolution_power(part, k);
    let len = conv.len().max(orig.n_max() + 1);
    (0..len)
        .map(|n| (conv.get(n).copied().unwrap_or(0.0) - orig.c(n as i64)).abs())
        .fold(0.0, f64::max)
        / orig.c(0)
}

fn flatten(p: &Provenance, out: &mut Vec<Provenance>) {
    match p {
        Provenance::Product(parts) => parts.iter().for_each(|q| flatten(q, out)),
        Provenance::Delta => {}
        other => out.push(other.clone()),
    }
}

/// Two parallel edges act as one with potential `V_1 + V_2`: the tables
/// multiply entrywise. Same-family Gaussian and Lipschitz pairs simplify.
pub fn merge_parallel(p1: &PotentialPair, p2: &PotentialPair) -> Result<PotentialPair> {
    let mut parts = Vec::new();
    flatten(&p1.provenance, &mut parts);
    flatten(&p2.provenance, &mut parts);
    match parts.as_slice() {
        [] => return Ok(make_delta()),
        [Provenance::Ivgff(a), Provenance::Ivgff(b)] => return make_ivgff(a + b),
        [Provenance::Lipschitz(a), Provenance::Lipschitz(b)] => return make_lipschitz(a + b),
        _ => {}
    }
    if p1.provenance == Provenance::Delta {
        return Ok(p2.clone());
    }
    if p2.provenance == Provenance::Delta {
        return Ok(p1.clone());
    }
    let n = p1.height.n_max().min(p2.height.n_max()) as i64;
    let mut table: Vec<f64> = (0..=n).map(|k| p1.height.c(k) * p2.height.c(k)).collect();
    let c0 = table[0];
    if !(1e-100..=1e100).contains(&c0) {
        table.iter_mut().for_each(|c| *c /= c0);
    }
    PotentialPair::new(Provenance::Product(parts), HeightPotential::new(table)?)
}

#[cfg(test)]
mod tests {
    use super::super::make_xy;
    use super::*;

    #[test]
    fn xy_splits_by_convolution() {
        let reg = PotentialRegistry::default();
        for (beta, k) in [(2.0, 2), (3.0, 3), (1.0, 4)] {
            let p = make_xy(beta).unwrap();
            let s = split_potential(&reg, &p, k).unwrap();
            assert_eq!(s.provenance, Provenance::Xy(beta / k as f64));
            assert!(convolution_residual(&p.height, &s.height, k) < 1e-9);
        }
    }

    #[test]
    fn split_identity_and_rejections() {
        let reg = PotentialRegistry::default();
        let g = make_ivgff(1.0).unwrap();
        assert_eq!(*split_potential(&reg, &g, 1).unwrap(), g);
        assert!(matches!(split_potential(&reg, &g, 2), Err(Error::NotScalable(_))));
    }

    #[test]
    fn merges() {
        let m = merge_parallel(&make_ivgff(0.5).unwrap(), &make_ivgff(0.25).unwrap()).unwrap();
        assert_eq!(m.provenance, Provenance::Ivgff(0.75));
        let x = make_xy(1.0).unwrap();
        let m = merge_parallel(&x, &make_delta()).unwrap();
        assert_eq!(m, x);
        let sq = merge_parallel(&x, &x).unwrap();
        assert_eq!(sq.id(), "xy:1&xy:1");
        assert!((sq.height.c(1) - x.height.c(1).powi(2)).abs() < 1e-15);
        for j in 0..1024 {
            assert!(sq.spin.w(super::super::grid_angle(j, 1024)) > 0.0);
        }
    }
}
