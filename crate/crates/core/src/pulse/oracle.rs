//! Brute-force likelihood evaluation by enumerating pendant allocations.
//! Intended for checking the samplers on small instances.

use crate::error::{Error, Result};
use crate::observation::SufficientStats;

use super::logspace::{ln_choose, log_sum_exp, xlogy};

/// Largest number of joint allocations the oracle will enumerate.
pub const MAX_ALLOCATIONS: u64 = 1_000_000;

/// All ways to write `total` as an ordered sum of `caps.len()` non-negative
/// parts with part `i` at most `caps[i]`, in lexicographic order.
pub fn compositions(total: u64, caps: &[u64]) -> Vec<Vec<u64>> {
    fn rec(remaining: u64, caps: &[u64], prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        match caps.split_first() {
            None => {
                if remaining == 0 {
                    out.push(prefix.clone());
                }
            }
            Some((&cap, rest)) => {
                let room: u64 = rest.iter().sum();
                let lo = remaining.saturating_sub(room);
                for x in lo..=cap.min(remaining) {
                    prefix.push(x);
                    rec(remaining - x, rest, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(total, caps, &mut Vec::with_capacity(caps.len()), &mut out);
    out
}

/// The likelihood of the unseen counts at fixed edge probabilities, computed
/// two ways (both as natural logs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalLikelihood {
    /// Sum of the joint likelihood over every allocation of every vertex.
    pub by_allocation: f64,
    /// Product over vertices of per-vertex sums over allocations.
    pub by_vertex: f64,
}

impl MarginalLikelihood {
    /// Relative disagreement `|e^a - e^b| / max(e^a, e^b)`.
    pub fn relative_gap(&self) -> f64 {
        let (a, b) = (self.by_allocation, self.by_vertex);
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            return 0.0;
        }
        let hi = a.max(b);
        ((a - hi).exp() - (b - hi).exp()).abs()
    }
}

fn ln_within_sample(stats: &SufficientStats, p: &[Vec<f64>]) -> f64 {
    let k = stats.k();
    let mut total = 0.0;
    for i in 0..k {
        for j in i..k {
            let e = stats.e()[i][j] as f64;
            let miss = stats.pair_count(i, j) as f64 - e;
            total += xlogy(e, p[i][j]) + xlogy(miss, 1.0 - p[i][j]);
        }
    }
    total
}

fn ln_vertex_term(alloc: &[u64], ntilde: &[u64], p_row: impl Fn(usize) -> f64) -> f64 {
    alloc
        .iter()
        .zip(ntilde)
        .enumerate()
        .map(|(i, (&y, &nt))| {
            let p = p_row(i);
            ln_choose(nt, y) + xlogy(y as f64, p) + xlogy((nt - y) as f64, 1.0 - p)
        })
        .sum()
}

pub fn marginal_likelihood_oracle(
    ntilde: &[u64],
    stats: &SufficientStats,
    p: &[Vec<f64>],
) -> Result<MarginalLikelihood> {
    let k = stats.k();
    if ntilde.len() != k || p.len() != k || p.iter().any(|r| r.len() != k) {
        return Err(Error::Argument(format!(
            "expected {k} counts and a {k}x{k} matrix"
        )));
    }
    let per_vertex: Vec<Vec<f64>> = stats
        .pendant()
        .iter()
        .zip(stats.blocks())
        .map(|(&d, &t)| {
            compositions(d, ntilde)
                .iter()
                .map(|c| ln_vertex_term(c, ntilde, |i| p[i][t]))
                .collect()
        })
        .collect();

    let mut joint_count: u64 = 1;
    for terms in &per_vertex {
        joint_count = joint_count.saturating_mul(terms.len() as u64);
        if joint_count > MAX_ALLOCATIONS {
            return Err(Error::Size(format!(
                "more than {MAX_ALLOCATIONS} joint allocations to enumerate"
            )));
        }
    }

    let base = ln_within_sample(stats, p);
    let by_vertex = base + per_vertex.iter().map(|t| log_sum_exp(t)).sum::<f64>();

    if joint_count == 0 {
        return Ok(MarginalLikelihood {
            by_allocation: f64::NEG_INFINITY,
            by_vertex,
        });
    }
    // Odometer over one allocation index per vertex.
    let mut idx = vec![0usize; per_vertex.len()];
    let mut joint = Vec::with_capacity(joint_count as usize);
    loop {
        joint.push(base + idx.iter().zip(&per_vertex).map(|(&c, t)| t[c]).sum::<f64>());
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                let by_allocation = log_sum_exp(&joint);
                return Ok(MarginalLikelihood {
                    by_allocation,
                    by_vertex,
                });
            }
            idx[pos] += 1;
            if idx[pos] < per_vertex[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
