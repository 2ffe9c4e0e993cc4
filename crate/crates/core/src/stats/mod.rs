//! Descriptive statistics and small-sample nonparametric tests.
//!
//! Exact p-values come from the enumerated null distributions in [`exact`];
//! larger samples fall back to the normal approximation with tie and
//! continuity corrections. Two-sided p counts every outcome at least as
//! extreme as the observed `min(U, nm − U)` (or `min(W⁺, W⁻)`); the one-sided
//! p is the tail in the direction of the observed effect.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;


pub mod cohort;
pub mod exact;

pub use cohort::{cohort_tables, Cohort, CohortTables, Parameter, ParameterRecord};
pub use exact::{mann_whitney_distribution, wilcoxon_distribution, ExactDistribution};

#[derive(Clone, Debug, PartialEq)]
pub enum StatsError {
    EmptySample,
    TooFew { n: usize, need: usize },
    NonFinite,
    LengthMismatch { before: usize, after: usize },
    AllZeroDifferences,
    TooLarge { n: usize, max: usize },
    EmptyGroup(String),
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::EmptySample => f.write_str("empty sample"),
            StatsError::TooFew { n, need } => write!(f, "{n} values, need at least {need}"),
            StatsError::NonFinite => f.write_str("sample contains a non-finite value"),
            StatsError::LengthMismatch { before, after } => {
                write!(f, "paired samples differ in length ({before} vs {after})")
            }
            StatsError::AllZeroDifferences => f.write_str("all paired differences are zero"),
            StatsError::TooLarge { n, max } => {
                write!(f, "size {n} exceeds the exact enumeration bound {max}")
            }
            StatsError::EmptyGroup(g) => write!(f, "group {g} has no sessions"),
        }
    }
}

impl core::error::Error for StatsError {}

/// A labelled column of finite values.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleVector {
    pub label: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl SampleVector {
    pub fn new(label: impl Into<String>, unit: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { label: label.into(), unit: unit.into(), values })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SdConvention {
    /// Divisor `n − 1`.
    #[default]
    Sample,
    /// Divisor `n`.
    Population,
}

/// Arithmetic mean and standard deviation.
pub fn mean_sd(values: &[f64], convention: SdConvention) -> Result<(f64, f64), StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFew { n, need: 2 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let divisor = match convention {
        SdConvention::Sample => (n - 1) as f64,
        SdConvention::Population => n as f64,
    };
    Ok((mean, (ss / divisor).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TestKind {
    MannWhitneyU,
    WilcoxonSignedRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sidedness {
    One,
    #[default]
    Two,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub test: TestKind,
    /// `U = min(U₁, U₂)` or `W = min(W⁺, W⁻)`.
    pub statistic: f64,
    pub n: usize,
    /// Second sample size (Mann-Whitney only).
    pub m: Option<usize>,
    pub method: Method,
    pub sidedness: Sidedness,
    pub p: f64,
    pub ties_present: bool,
    pub zeros_dropped: usize,
    /// Exact p as `count / total` when enumerated.
    pub exact_fraction: Option<(u64, u64)>,
}

/// Mid-ranks (1-based) of `values`, doubled so they stay integral, plus the
/// tie group sizes.
fn doubled_midranks(values: &[f64], same: impl Fn(f64, f64) -> bool) -> (Vec<u32>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0u32; values.len()];
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && same(values[order[i]], values[order[j]]) {
            j += 1;
        }
        // ranks i+1 ..= j share (i+1+j)/2, doubled: i+1+j
        let r = (i + 1 + j) as u32;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        groups.push(j - i);
        i = j;
    }
    (ranks, groups)
}

fn tie_term(groups: &[usize]) -> f64 {
    groups.iter().map(|&t| (t * t * t - t) as f64).sum()
}

fn normal_p(z: f64, sidedness: Sidedness) -> f64 {
    let two = libm::erfc(z / core::f64::consts::SQRT_2);
    let p = match sidedness {
        Sidedness::Two => two,
        Sidedness::One => 0.5 * two,
    };
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

struct MwuCounts {
    u: f64,
    cross_ties: bool,
    tie_groups: Vec<usize>,
}

fn mwu_counts(x: &[f64], y: &[f64]) -> Result<MwuCounts, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut u_x = 0.0;
    let mut cross_ties = false;
    for &a in x {
        for &b in y {
            if a > b {
                u_x += 1.0;
            } else if a == b {
                u_x += 0.5;
                cross_ties = true;
            }
        }
    }
    let nm = (x.len() * y.len()) as f64;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (_, tie_groups) = doubled_midranks(&pooled, |a, b| a == b);
    Ok(MwuCounts { u: u_x.min(nm - u_x), cross_ties, tie_groups })
}

fn mwu_normal(c: &MwuCounts, n: usize, m: usize, sidedness: Sidedness) -> TestResult {
    let nm = (n * m) as f64;
    let big_n = (n + m) as f64;
    let var = nm / 12.0 * ((big_n + 1.0) - tie_term(&c.tie_groups) / (big_n * (big_n - 1.0)));
    let p = if var > 0.0 {
        let z = (((nm / 2.0) - c.u).abs() - 0.5).max(0.0) / var.sqrt();
        normal_p(z, sidedness)
    } else {
        1.0
    };
    TestResult {
        test: TestKind::MannWhitneyU,
        statistic: c.u,
        n,
        m: Some(m),
        method: Method::NormalApprox,
        sidedness,
        p,
        ties_present: c.tie_groups.iter().any(|&g| g > 1),
        zeros_dropped: 0,
        exact_fraction: None,
    }
}

/// Mann-Whitney U test.
///
/// Enumerated exactly when `n + m ≤ 20` and no value is shared between the
/// two samples; within-sample ties leave `U` unchanged and use the untied
/// table. Otherwise the tie- and continuity-corrected normal approximation
/// is used.
pub fn mann_whitney_u(x: &[f64], y: &[f64], sidedness: Sidedness) -> Result<TestResult, StatsError> {
    let (n, m) = (x.len(), y.len());
    let c = mwu_counts(x, y)?;
    if n + m > exact::MWU_EXACT_MAX || c.cross_ties {
        return Ok(mwu_normal(&c, n, m, sidedness));
    }
    let nm = (n * m) as f64;
    let dist = mann_whitney_distribution(n, m)?;
    let count = match sidedness {
        Sidedness::Two => dist.count_where(|v| v.min(nm - v) <= c.u),
        Sidedness::One => dist.count_where(|v| v <= c.u),
    };
    Ok(TestResult {
        test: TestKind::MannWhitneyU,
        statistic: c.u,
        n,
        m: Some(m),
        method: Method::Exact,
        sidedness,
        p: count as f64 / dist.total as f64,
        ties_present: c.tie_groups.iter().any(|&g| g > 1),
        zeros_dropped: 0,
        exact_fraction: Some((count, dist.total)),
    })
}

/// Mann-Whitney with the normal approximation forced, whatever the size.
pub fn mann_whitney_u_normal(x: &[f64], y: &[f64], sidedness: Sidedness) -> Result<TestResult, StatsError> {
    let c = mwu_counts(x, y)?;
    Ok(mwu_normal(&c, x.len(), y.len(), sidedness))
}

/// Relative tolerance under which two absolute differences count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped and counted. Nonzero differences get
/// mid-ranks on `|d|`; up to 25 of them the conditional distribution over
/// all sign assignments is enumerated, otherwise the tie-corrected normal
/// approximation is used.
pub fn wilcoxon_signed_rank(before: &[f64], after: &[f64], sidedness: Sidedness) -> Result<TestResult, StatsError> {
    if before.len() != after.len() {
        return Err(StatsError::LengthMismatch { before: before.len(), after: after.len() });
    }
    if before.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if before.iter().chain(after).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = after
        .iter()
        .zip(before)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let zeros_dropped = before.len() - diffs.len();
    let n = diffs.len();
    if n == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, groups) = doubled_midranks(&abs, |a, b| (a - b).abs() <= TIE_TOLERANCE * a.max(b));
    let ties_present = groups.iter().any(|&g| g > 1);

    // all in doubled units
    let w_plus2: u32 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u32 = ranks.iter().sum();
    let w2 = w_plus2.min(total2 - w_plus2);
    let statistic = w2 as f64 / 2.0;

    if n <= exact::WILCOXON_EXACT_MAX {
        let dist = exact::wilcoxon_distribution_doubled(&ranks)?;
        let (w, total) = (statistic, total2 as f64 / 2.0);
        let count = match sidedness {
            Sidedness::Two => dist.count_where(|v| v.min(total - v) <= w),
            Sidedness::One => dist.count_where(|v| v <= w),
        };
        return Ok(TestResult {
            test: TestKind::WilcoxonSignedRank,
            statistic,
            n,
            m: None,
            method: Method::Exact,
            sidedness,
            p: count as f64 / dist.total as f64,
            ties_present,
            zeros_dropped,
            exact_fraction: Some((count, dist.total)),
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&groups) / 48.0;
    let p = if var > 0.0 {
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
        normal_p(z, sidedness)
    } else {
        1.0
    };
    Ok(TestResult {
        test: TestKind::WilcoxonSignedRank,
        statistic,
        n,
        m: None,
        method: Method::NormalApprox,
        sidedness,
        p,
        ties_present,
        zeros_dropped,
        exact_fraction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const ROME_T0: [f64; 6] = [135.8, 160.3, 148.3, 145.4, 145.3, 138.3];

    #[test]
    fn table_one_rome_footer() {
        let (m, sd) = mean_sd(&ROME_T0, SdConvention::Population).unwrap();
        assert!((m - 145.6).abs() < 0.1 && (sd - 7.9).abs() < 0.1);
        let (_, sd) = mean_sd(&ROME_T0, SdConvention::Sample).unwrap();
        assert!((sd - 8.64).abs() < 0.01);
    }

    #[test]
    fn constant_column_has_zero_sd() {
        for c in [SdConvention::Sample, SdConvention::Population] {
            assert_eq!(mean_sd(&[3.0, 3.0, 3.0], c).unwrap(), (3.0, 0.0));
        }
        assert_eq!(mean_sd(&[1.0], SdConvention::Sample), Err(StatsError::TooFew { n: 1, need: 2 }));
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Sidedness::Two).unwrap();
        assert_eq!(r.statistic, 4.5);
        assert_eq!(r.p, 1.0);
        assert!(r.ties_present);
    }

    #[test]
    fn mann_whitney_separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Sidedness::Two).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.exact_fraction, Some((2, 20)));
        assert_eq!(r.p, 0.1);
        let one = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Sidedness::One).unwrap();
        assert_eq!(one.p, 0.05);
    }

    #[test]
    fn mann_whitney_errors() {
        assert_eq!(mann_whitney_u(&[], &[1.0], Sidedness::Two), Err(StatsError::EmptySample));
        assert_eq!(mann_whitney_u(&[f64::NAN], &[1.0], Sidedness::Two), Err(StatsError::NonFinite));
    }

    #[test]
    fn wilcoxon_all_positive() {
        let before = [10.9, 21.3, 23.0, 30.3, 14.7, 25.7];
        let after = [32.3, 30.8, 31.1, 49.9, 28.8, 34.4];
        let r = wilcoxon_signed_rank(&before, &after, Sidedness::Two).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.exact_fraction, Some((2, 64)));
        assert_eq!(r.p, 0.03125);
    }

    #[test]
    fn wilcoxon_zero_handling() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a, Sidedness::Two), Err(StatsError::AllZeroDifferences));
        assert_eq!(
            wilcoxon_signed_rank(&a, &a[..2], Sidedness::Two),
            Err(StatsError::LengthMismatch { before: 3, after: 2 })
        );
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 4.0, 6.0], Sidedness::Two).unwrap();
        assert_eq!(r.zeros_dropped, 1);
        assert_eq!(r.n, 2);
    }

    #[test]
    fn wilcoxon_ties_use_midranks() {
        // |d| = 1, 1, 2 -> ranks 1.5, 1.5, 3; one negative of magnitude 1
        let r = wilcoxon_signed_rank(&[0.0, 0.0, 0.0], &[1.0, -1.0, 2.0], Sidedness::Two).unwrap();
        assert!(r.ties_present);
        assert_eq!(r.statistic, 1.5);
        // min(W+, 6 - W+) <= 1.5: W+ in {0, 1.5, 4.5, 6} -> 1 + 2 + 2 + 1 of 8
        assert_eq!(r.exact_fraction, Some((6, 8)));
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let x: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..15).map(|i| i as f64 + 7.5).collect();
        let r = mann_whitney_u(&x, &y, Sidedness::Two).unwrap();
        assert_eq!(r.method, Method::NormalApprox);
        assert!(r.p > 0.0 && r.p < 0.05);
        let before: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let after: Vec<f64> = before.iter().enumerate().map(|(i, b)| b + 1.0 + (i % 3) as f64).collect();
        let r = wilcoxon_signed_rank(&before, &after, Sidedness::Two).unwrap();
        assert_eq!(r.method, Method::NormalApprox);
        assert!(r.p < 1e-4);
    }

    #[test]
    fn sample_vector_validation() {
        assert_eq!(SampleVector::new("x", "deg", vec![]), Err(StatsError::EmptySample));
        assert!(SampleVector::new("x", "deg", vec![1.0, f64::INFINITY]).is_err());
        assert!(SampleVector::new("x", "deg", vec![1.0]).is_ok());
    }
}
