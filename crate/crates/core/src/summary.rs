//! Posterior summaries of recorded chain samples.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pulse::ChainTrace;

pub const DEFAULT_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    /// `(probability, value)` pairs in increasing probability.
    pub quantiles: Vec<(f64, f64)>,
}

impl Moments {
    fn of(values: &[u64]) -> Moments {
        let m = values.len() as f64;
        let mean = values.iter().map(|&x| x as f64).sum::<f64>() / m;
        let sd = if values.len() > 1 {
            let ss: f64 = values.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
            (ss / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let quantiles = DEFAULT_QUANTILES
            .iter()
            .map(|&q| (q, nearest_rank(&sorted, q) as f64))
            .collect();
        Moments {
            mean,
            sd,
            quantiles,
        }
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(p, _)| (p - q).abs() < 1e-12)
            .map(|&(_, v)| v)
    }
}

/// Lower nearest-rank quantile: the `ceil(q m)`-th smallest value (1-based),
/// at least the first.
pub fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    let m = sorted.len();
    let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
    sorted[rank - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Moments of `N = Σ_i ntilde_i + n`.
    pub n_total: Moments,
    /// Moments of `ntilde_i + V_i` for each block.
    pub per_block: Vec<Moments>,
    /// Most frequent recorded `N`, ties to the smaller value.
    pub map_n: u64,
    pub n_samples: usize,
}

impl PosteriorSummary {
    pub fn mean_n(&self) -> f64 {
        self.n_total.mean
    }

    pub fn sd_n(&self) -> f64 {
        self.n_total.sd
    }
}

pub fn summarize(
    trace: &ChainTrace,
    n_sample: usize,
    v_counts: &[u64],
) -> Result<PosteriorSummary> {
    summarize_samples(&trace.samples, n_sample, v_counts)
}

pub fn summarize_samples(
    samples: &[Vec<u64>],
    n_sample: usize,
    v_counts: &[u64],
) -> Result<PosteriorSummary> {
    if samples.is_empty() {
        return Err(Error::Argument("cannot summarize an empty trace".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.len() != v_counts.len()) {
        return Err(Error::Argument(format!(
            "sample has {} blocks but {} block counts were given",
            s.len(),
            v_counts.len()
        )));
    }
    let totals: Vec<u64> = samples
        .iter()
        .map(|s| s.iter().sum::<u64>() + n_sample as u64)
        .collect();
    let per_block = (0..v_counts.len())
        .map(|i| {
            let col: Vec<u64> = samples.iter().map(|s| s[i] + v_counts[i]).collect();
            Moments::of(&col)
        })
        .collect();
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &t in &totals {
        *counts.entry(t).or_default() += 1;
    }
    let mut map_n = 0;
    let mut best = 0;
    for (&value, &c) in &counts {
        if c > best {
            best = c;
            map_n = value;
        }
    }
    Ok(PosteriorSummary {
        n_total: Moments::of(&totals),
        per_block,
        map_n,
        n_samples: samples.len(),
    })
}

/// `(estimate - truth) / truth`.
pub fn relative_error(estimate: f64, truth: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(Error::Argument(format!(
            "truth must be positive, got {truth}"
        )));
    }
    Ok((estimate - truth) / truth)
}
