//! Pearson goodness-of-fit test for sampled outcomes.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Smallest expected count kept in its own bin; smaller bins are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

/// Test `observed` counts against `probabilities` (same order, summing to
/// one). Bins with expected count below [`MIN_EXPECTED`] are pooled; an
/// observation in a zero-probability bin gives `p = 0`.
pub fn goodness_of_fit(observed: &[u64], probabilities: &[f64]) -> GoodnessOfFit {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p == 0.0 {
            if o > 0 {
                return GoodnessOfFit { statistic: f64::INFINITY, degrees_of_freedom: 0, p_value: 0.0 };
            }
            continue;
        }
        let e = p * total as f64;
        if e < MIN_EXPECTED {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1) as u64;
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive degrees of freedom").cdf(statistic)
    };
    GoodnessOfFit { statistic, degrees_of_freedom: dof, p_value }
}
