//! Finite-alphabet distributions, two-sample homogeneity tests and the
//! total variation metric.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{CssrError, Result};

/// Probability vector over an alphabet, in alphabet order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    support_count: u64,
}

impl Distribution {
    /// Exact (analytic) distribution. Entries must be nonnegative and sum to
    /// one within `1e-9`; the result is renormalized.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CssrError::InvalidDistribution("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(CssrError::InvalidDistribution(format!("negative or non-finite entry in {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CssrError::InvalidDistribution(format!("entries sum to {sum}, not 1")));
        }
        Ok(Distribution { probs: probs.iter().map(|p| p / sum).collect(), support_count: 0 })
    }

    /// Maximum-likelihood estimate from counts; `None` when there are no
    /// observations.
    pub fn from_counts(counts: &[u64]) -> Option<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        Some(Distribution {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            support_count: total,
        })
    }

    pub fn uniform(k: usize) -> Self {
        Distribution { probs: vec![1.0 / k as f64; k], support_count: 0 }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of observations behind an estimate; zero for exact ones.
    pub fn support_count(&self) -> u64 {
        self.support_count
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
    }
}

/// L1 distance `sum_a |P(a) - Q(a)|`, in `[0, 2]`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    tv_distance_slices(p.probs(), q.probs())
}

pub(crate) fn tv_distance_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CssrError::AlphabetMismatch(format!(
            "distributions over {} and {} symbols",
            p.len(),
            q.len()
        )));
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Which two-sample test decides whether histories share a next-symbol
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    #[default]
    #[serde(alias = "KS")]
    Ks,
    #[serde(alias = "chi-squared", alias = "chi2")]
    ChiSquared,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestKind::Ks => write!(f, "ks"),
            TestKind::ChiSquared => write!(f, "chi-squared"),
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = CssrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ks" | "kolmogorov-smirnov" => Ok(TestKind::Ks),
            "chi2" | "chi-squared" | "chisq" => Ok(TestKind::ChiSquared),
            other => Err(CssrError::InvalidConfig(format!("unknown test kind {other:?}"))),
        }
    }
}

/// Outcome of one homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestDecision {
    pub kind: TestKind,
    /// KS distance `D` or Pearson statistic.
    pub statistic: f64,
    /// Critical value for KS, p-value for chi-squared.
    pub critical_or_p: f64,
    pub reject: bool,
    /// One of the samples was empty; never a rejection.
    pub no_data: bool,
}

impl TestDecision {
    fn no_data(kind: TestKind) -> Self {
        TestDecision { kind, statistic: 0.0, critical_or_p: f64::NAN, reject: false, no_data: true }
    }
}

/// Asymptotic two-sample KS coefficient `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Two-sample Kolmogorov-Smirnov test on count vectors, with CDFs taken in
/// alphabet order.
pub fn ks_two_sample(counts1: &[u64], counts2: &[u64], alpha: f64) -> TestDecision {
    assert_eq!(counts1.len(), counts2.len(), "count vectors over different alphabets");
    let n1: u64 = counts1.iter().sum();
    let n2: u64 = counts2.iter().sum();
    if n1 == 0 || n2 == 0 {
        return TestDecision::no_data(TestKind::Ks);
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let (mut c1, mut c2) = (0u64, 0u64);
    let mut d: f64 = 0.0;
    for (a, b) in counts1.iter().zip(counts2) {
        c1 += a;
        c2 += b;
        d = d.max((c1 as f64 / n1f - c2 as f64 / n2f).abs());
    }
    let critical = ks_coefficient(alpha) * ((n1f + n2f) / (n1f * n2f)).sqrt();
    TestDecision { kind: TestKind::Ks, statistic: d, critical_or_p: critical, reject: d > critical, no_data: false }
}

/// Pearson chi-squared test of homogeneity for two count vectors. Symbols
/// unseen in both samples are dropped before counting degrees of freedom.
pub fn chi2_two_sample(counts1: &[u64], counts2: &[u64], alpha: f64) -> TestDecision {
    assert_eq!(counts1.len(), counts2.len(), "count vectors over different alphabets");
    let n1: u64 = counts1.iter().sum();
    let n2: u64 = counts2.iter().sum();
    if n1 == 0 || n2 == 0 {
        return TestDecision::no_data(TestKind::ChiSquared);
    }
    let total = (n1 + n2) as f64;
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&a, &b) in counts1.iter().zip(counts2) {
        let col = (a + b) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        let e1 = n1f * col / total;
        let e2 = n2f * col / total;
        stat += (a as f64 - e1).powi(2) / e1 + (b as f64 - e2).powi(2) / e2;
    }
    if cells < 2 {
        return TestDecision {
            kind: TestKind::ChiSquared,
            statistic: 0.0,
            critical_or_p: 1.0,
            reject: false,
            no_data: false,
        };
    }
    let dof = (cells - 1) as f64;
    let p = if stat <= 0.0 { 1.0 } else { gamma_ur(dof / 2.0, stat / 2.0) };
    TestDecision { kind: TestKind::ChiSquared, statistic: stat, critical_or_p: p, reject: p < alpha, no_data: false }
}

/// Dispatches to the selected test.
pub fn two_sample_test(kind: TestKind, counts1: &[u64], counts2: &[u64], alpha: f64) -> TestDecision {
    match kind {
        TestKind::Ks => ks_two_sample(counts1, counts2, alpha),
        TestKind::ChiSquared => chi2_two_sample(counts1, counts2, alpha),
    }
}
