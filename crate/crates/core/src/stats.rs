//! Sufficient statistics and distribution-free bounds.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Count, mean and centred second moment, mergeable in any fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        let mean = if self.mean == other.mean { self.mean } else { self.mean + delta * nb / n as f64 };
        Self { count: n, mean, m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Sample standard deviation over `sqrt(n)`.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Merges per-block statistics with a balanced binary tree whose shape only
/// depends on the number of blocks.
pub fn pairwise_merge(blocks: &[Moments]) -> Moments {
    match blocks.len() {
        0 => Moments::default(),
        1 => blocks[0],
        n => {
            let (lo, hi) = blocks.split_at(n / 2);
            pairwise_merge(lo).merge(&pairwise_merge(hi))
        }
    }
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band holding with
/// probability `1 - alpha`: `sqrt(ln(2 / alpha) / (2 n))`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical CDF of an ascending sample at `x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// `sup_x |F_a(x) - F_b(x)|` between two empirical CDFs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().chain(b.iter()).map(|&x| (empirical_cdf(&a, x) - empirical_cdf(&b, x)).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 7.5, 3.25, 0.0];
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((m.mean - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-12);
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..2].iter().for_each(|&x| a.push(x));
        xs[2..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(&b);
        assert!((merged.mean - mean).abs() < 1e-14);
        assert!((merged.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_have_zero_spread() {
        let blocks: Vec<Moments> = (0..5)
            .map(|_| {
                let mut m = Moments::default();
                (0..7).for_each(|_| m.push(1.0));
                m
            })
            .collect();
        let all = pairwise_merge(&blocks);
        assert_eq!(all.mean, 1.0);
        assert_eq!(all.stderr(), 0.0);
        assert_eq!(all.count, 35);
    }

    #[test]
    fn dkw_value() {
        assert!((dkw_epsilon(100_000, 0.01) - (200f64.ln() / 200_000.0).sqrt()).abs() < 1e-15);
        assert_eq!(empirical_cdf(&[1.0, 2.0, 3.0, 4.0], 2.0), 0.5);
    }
}
