//! The network scale-up estimator and the quantities used to study its bias.

use crate::error::{Error, Result};
use crate::graph::SbmSpec;
use crate::observation::SufficientStats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsumResult {
    /// `n Σd(v) / 2E_S`.
    pub estimate: f64,
    /// The unsimplified moment estimator `1 + (n-1) Σd(v) / 2E_S`.
    pub alternate: f64,
    pub n: u64,
    pub sum_degrees: u64,
    pub e_s: u64,
    /// `estimate / n - 1`, the plug-in value of the asymptotic bias bound `N/n - 1`.
    pub bias_lower_bound: f64,
}

pub fn nsum_estimate(stats: &SufficientStats) -> Result<NsumResult> {
    let e_s = stats.e_s();
    if e_s == 0 {
        return Err(Error::Undefined(
            "scale-up estimate needs at least one edge inside the sample".into(),
        ));
    }
    let n = stats.n() as u64;
    let sum_degrees = stats.sum_degrees();
    let ratio = sum_degrees as f64 / (2.0 * e_s as f64);
    let estimate = n as f64 * ratio;
    Ok(NsumResult {
        estimate,
        alternate: 1.0 + (n as f64 - 1.0) * ratio,
        n,
        sum_degrees,
        e_s,
        bias_lower_bound: estimate / n as f64 - 1.0,
    })
}

/// Within-sample edge density `E_S / C(n,2)`.
pub fn estimate_p(stats: &SufficientStats) -> Result<f64> {
    let n = stats.n() as u64;
    if n < 2 {
        return Err(Error::Argument(format!(
            "edge density needs at least two sampled vertices, got {n}"
        )));
    }
    Ok(stats.e_s() as f64 / (n * (n - 1) / 2) as f64)
}

/// Probability that a sample with `v_counts[i]` vertices from block `i`
/// contains no edge at all.
pub fn prob_empty_sample(spec: &SbmSpec, v_counts: &[u64]) -> Result<f64> {
    let k = spec.k();
    if v_counts.len() != k {
        return Err(Error::Argument(format!(
            "expected {k} block counts, got {}",
            v_counts.len()
        )));
    }
    let mut log_p = 0.0;
    for i in 0..k {
        let within = v_counts[i] * v_counts[i].saturating_sub(1) / 2;
        log_p += log_no_edge(spec.prob(i, i), within);
        for j in (i + 1)..k {
            log_p += log_no_edge(spec.prob(i, j), v_counts[i] * v_counts[j]);
        }
    }
    Ok(log_p.exp())
}

fn log_no_edge(p: f64, pairs: u64) -> f64 {
    if pairs == 0 {
        0.0
    } else {
        pairs as f64 * (-p).ln_1p()
    }
}
