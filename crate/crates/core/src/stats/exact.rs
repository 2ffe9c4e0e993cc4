//! Exact null distributions of the rank statistics.
//!
//! Both distributions are counted with a subset-sum recursion over (doubled)
//! ranks, which visits the same multiset of statistic values as listing all
//! `C(n+m, n)` rank splits or all `2ⁿ` sign vectors, without materializing them.

use alloc::vec;
use alloc::vec::Vec;

use super::StatsError;

/// Largest `n + m` for which the Mann-Whitney distribution is enumerated.
pub const MWU_EXACT_MAX: usize = 20;
/// Largest number of nonzero differences for which Wilcoxon is enumerated.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// A discrete null distribution with equiprobable underlying outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    /// Statistic values in increasing order.
    pub values: Vec<f64>,
    /// Number of outcomes producing each value.
    pub counts: Vec<u64>,
    /// Total number of outcomes.
    pub total: u64,
}

impl ExactDistribution {
    pub fn pmf(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }

    /// Outcomes whose value satisfies `pred`.
    pub fn count_where(&self, pred: impl Fn(f64) -> bool) -> u64 {
        self.values
            .iter()
            .zip(&self.counts)
            .filter(|(v, _)| pred(**v))
            .map(|(_, c)| c)
            .sum()
    }

    pub fn prob_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.count_where(pred) as f64 / self.total as f64
    }

    fn from_sums(sums: &[u64], scale: f64, offset: f64) -> Self {
        let mut values = Vec::new();
        let mut counts = Vec::new();
        for (s, &c) in sums.iter().enumerate() {
            if c > 0 {
                values.push(s as f64 / scale - offset);
                counts.push(c);
            }
        }
        let total = counts.iter().sum();
        Self { values, counts, total }
    }
}

/// Counts `k`-element subsets of `weights` by their sum.
fn k_subset_sums(weights: &[u32], k: usize) -> Vec<u64> {
    let max: usize = weights.iter().map(|&w| w as usize).sum();
    // dp[j][s]: subsets of size j with sum s
    let mut dp = vec![vec![0u64; max + 1]; k + 1];
    dp[0][0] = 1;
    for &w in weights {
        let w = w as usize;
        for j in (1..=k).rev() {
            let (lower, upper) = dp.split_at_mut(j);
            let (prev, cur) = (&lower[j - 1], &mut upper[0]);
            for s in (w..=max).rev() {
                cur[s] += prev[s - w];
            }
        }
    }
    dp.swap_remove(k)
}

/// Counts all subsets of `weights` by their sum.
fn subset_sums(weights: &[u32]) -> Vec<u64> {
    let max: usize = weights.iter().map(|&w| w as usize).sum();
    let mut dp = vec![0u64; max + 1];
    dp[0] = 1;
    for &w in weights {
        let w = w as usize;
        for s in (w..=max).rev() {
            dp[s] += dp[s - w];
        }
    }
    dp
}

/// Null distribution of the Mann-Whitney `U` of the first sample (pairs it
/// wins) for untied samples of sizes `n` and `m`.
pub fn mann_whitney_distribution(n: usize, m: usize) -> Result<ExactDistribution, StatsError> {
    if n == 0 || m == 0 {
        return Err(StatsError::EmptySample);
    }
    if n + m > MWU_EXACT_MAX {
        return Err(StatsError::TooLarge { n: n + m, max: MWU_EXACT_MAX });
    }
    let ranks: Vec<u32> = (1..=(n + m) as u32).collect();
    let sums = k_subset_sums(&ranks, n);
    let offset = (n * (n + 1) / 2) as f64;
    Ok(ExactDistribution::from_sums(&sums, 1.0, offset))
}

/// Null distribution of `W⁺` for `n` untied nonzero differences.
pub fn wilcoxon_distribution(n: usize) -> Result<ExactDistribution, StatsError> {
    let doubled: Vec<u32> = (1..=n as u32).map(|r| 2 * r).collect();
    wilcoxon_distribution_doubled(&doubled)
}

/// Null distribution of `W⁺` conditional on the observed (mid-)ranks, given
/// as doubled ranks so half-ranks stay integral.
pub fn wilcoxon_distribution_doubled(doubled_ranks: &[u32]) -> Result<ExactDistribution, StatsError> {
    let n = doubled_ranks.len();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    if n > WILCOXON_EXACT_MAX {
        return Err(StatsError::TooLarge { n, max: WILCOXON_EXACT_MAX });
    }
    Ok(ExactDistribution::from_sums(&subset_sums(doubled_ranks), 2.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_six_pairs() {
        let d = wilcoxon_distribution(6).unwrap();
        assert_eq!(d.total, 64);
        assert_eq!(d.count_where(|w| w <= 7.0), 18);
        assert_eq!(d.values.first(), Some(&0.0));
        assert_eq!(d.values.last(), Some(&21.0));
    }

    #[test]
    fn mann_whitney_small() {
        let d = mann_whitney_distribution(1, 1).unwrap();
        assert_eq!(d.values, vec![0.0, 1.0]);
        assert_eq!(d.pmf(), vec![0.5, 0.5]);
        let d = mann_whitney_distribution(2, 2).unwrap();
        assert_eq!(d.total, 6);
        assert_eq!(d.count_where(|u| u == 0.0), 1);
        let d = mann_whitney_distribution(6, 7).unwrap();
        assert_eq!(d.total, 1716);
    }

    #[test]
    fn pmfs_sum_to_one() {
        for n in 1..=WILCOXON_EXACT_MAX {
            let s: f64 = wilcoxon_distribution(n).unwrap().pmf().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for n in 1..MWU_EXACT_MAX {
            for m in 1..=(MWU_EXACT_MAX - n) {
                let s: f64 = mann_whitney_distribution(n, m).unwrap().pmf().iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn size_bounds() {
        assert_eq!(mann_whitney_distribution(11, 10), Err(StatsError::TooLarge { n: 21, max: 20 }));
        assert_eq!(wilcoxon_distribution(26), Err(StatsError::TooLarge { n: 26, max: 25 }));
        assert_eq!(mann_whitney_distribution(0, 3), Err(StatsError::EmptySample));
    }

    #[test]
    fn tied_ranks_stay_half_integral() {
        // |d| = {1, 1, 2}: mid-ranks 1.5, 1.5, 3
        let d = wilcoxon_distribution_doubled(&[3, 3, 6]).unwrap();
        assert_eq!(d.total, 8);
        assert_eq!(d.values, vec![0.0, 1.5, 3.0, 4.5, 6.0]);
        assert_eq!(d.counts, vec![1, 2, 2, 2, 1]);
    }
}
