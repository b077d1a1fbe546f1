//! Streaming batch means.

use std::fmt;

/// Below this many complete batches the standard error is not trusted.
pub const MIN_BATCHES: usize = 16;

/// Mean with a batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    /// `b · Var(batch means) / Var(x)` for batch size `b`; 1 for independent draws.
    pub tau_int: f64,
    pub n: u64,
    pub batches: usize,
}

impl Estimate {
    /// A deterministic value with zero error, e.g. an exact oracle number.
    pub fn exact(value: f64) -> Estimate {
        Estimate {
            mean: value,
            se: 0.0,
            tau_int: 1.0,
            n: 0,
            batches: 0,
        }
    }

    pub fn reliable(&self) -> bool {
        self.batches >= MIN_BATCHES
    }

    /// `|mean - target| / se`; zero when both the error and the gap vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            gap / self.se
        }
    }

    pub fn effective_samples(&self) -> f64 {
        self.n as f64 / self.tau_int.max(1e-300)
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.2e} (τ={:.1}, n={}", self.mean, self.se, self.tau_int, self.n)?;
        if !self.reliable() {
            f.write_str(", unreliable SE")?;
        }
        f.write_str(")")
    }
}

/// Running mean and variance plus batch means with `⌈√n⌉` batches for an
/// expected sample count `n`. Accumulators for the same observable from
/// independent chains merge by pooling their batches.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    batch_size: u64,
    current: f64,
    current_n: u64,
    batches: Vec<f64>,
    n: u64,
    mean: f64,
    m2: f64,
}

impl BatchMeans {
    pub fn new(expected: u64) -> BatchMeans {
        let nb = (expected as f64).sqrt().ceil().max(1.0) as u64;
        BatchMeans {
            batch_size: (expected / nb).max(1),
            current: 0.0,
            current_n: 0,
            batches: Vec::with_capacity(nb as usize),
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.current += x;
        self.current_n += 1;
        if self.current_n == self.batch_size {
            self.batches.push(self.current / self.batch_size as f64);
            self.current = 0.0;
            self.current_n = 0;
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Pools another accumulator of the same observable (same batch size).
    pub fn merge(&mut self, other: &BatchMeans) {
        assert_eq!(self.batch_size, other.batch_size, "merging accumulators with different batch sizes");
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.mean += d * other.n as f64 / n as f64;
        self.n = n;
        self.batches.extend_from_slice(&other.batches);
    }

    pub fn estimate(&self) -> Estimate {
        let nb = self.batches.len();
        let var_x = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        let (se, tau) = if nb >= 2 {
            let bm = self.batches.iter().sum::<f64>() / nb as f64;
            let vb = self.batches.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (nb - 1) as f64;
            let tau = if var_x > 0.0 { self.batch_size as f64 * vb / var_x } else { 1.0 };
            ((vb / nb as f64).sqrt(), tau)
        } else {
            (f64::INFINITY, 1.0)
        };
        Estimate {
            mean: self.mean,
            se,
            tau_int: tau,
            n: self.n,
            batches: nb,
        }
    }
}

/// Sample standard deviation of a slice.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_uniform_has_unit_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let mut acc = BatchMeans::new(n);
        for _ in 0..n {
            acc.push(rng.random::<f64>());
        }
        let e = acc.estimate();
        assert_eq!(e.batches, 200);
        assert!(e.reliable());
        assert!((e.mean - 0.5).abs() < 4.0 * e.se);
        // Var = 1/12, so the standard error is about 0.00144.
        assert!((e.se / (1.0f64 / 12.0 / n as f64).sqrt() - 1.0).abs() < 0.2, "{e}");
        assert!((e.tau_int - 1.0).abs() < 0.3);
    }

    #[test]
    fn too_few_batches_is_unreliable() {
        let mut acc = BatchMeans::new(100);
        for i in 0..100 {
            acc.push(i as f64);
        }
        assert_eq!(acc.estimate().batches, 10);
        assert!(!acc.estimate().reliable());
    }

    #[test]
    fn merge_matches_concatenation() {
        let xs: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64).collect();
        let (mut a, mut b, mut all) = (BatchMeans::new(400), BatchMeans::new(400), BatchMeans::new(400));
        for (i, &x) in xs.iter().enumerate() {
            if i < 200 {
                a.push(x)
            } else {
                b.push(x)
            }
        }
        for &x in &xs[..200] {
            all.push(x);
        }
        for &x in &xs[200..] {
            all.push(x);
        }
        a.merge(&b);
        let (ea, eall) = (a.estimate(), all.estimate());
        assert!((ea.mean - eall.mean).abs() < 1e-12);
        assert_eq!(ea.batches, eall.batches);
        assert!((ea.se - eall.se).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_error() {
        let mut acc = BatchMeans::new(64);
        for _ in 0..64 {
            acc.push(2.5);
        }
        let e = acc.estimate();
        assert_eq!(e.se, 0.0);
        assert_eq!(e.z_score(2.5), 0.0);
    }
}
