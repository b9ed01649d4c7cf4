//! Unnormalised log posteriors with the edge probabilities integrated out
//! against their Beta priors.

use crate::error::{Error, Result};
use crate::observation::SufficientStats;

use super::logspace::{ln_beta, ln_choose};
use super::prior::PriorSpec;
use super::state::LatentState;

/// Single-block log posterior of the unseen count:
/// `ln φ + Σ_v ln C(Ñ, d̃(v)) + ln B(E + u + α, C(n,2) - E + nÑ - u + β)`
/// where `u = Σ_v d̃(v)`.
pub fn log_posterior_er(ntilde: u64, stats: &SufficientStats, prior: &PriorSpec) -> Result<f64> {
    if stats.k() != 1 || prior.k() != 1 {
        return Err(Error::Argument(format!(
            "single-block posterior called with K = {}",
            stats.k()
        )));
    }
    let lower = stats.max_pendant();
    if ntilde < lower {
        return Err(Error::Domain(format!(
            "ntilde = {ntilde} is below the largest pendant degree {lower}"
        )));
    }
    if ntilde > prior.ntilde_max() {
        return Err(Error::Domain(format!(
            "ntilde = {ntilde} exceeds ntilde_max = {}",
            prior.ntilde_max()
        )));
    }
    let n = stats.n() as f64;
    let e = stats.e_s() as f64;
    let u = stats.pendant_sum() as f64;
    let pairs = stats.pair_count(0, 0) as f64;
    let zeta: f64 = stats.pendant().iter().map(|&d| ln_choose(ntilde, d)).sum();
    let a = e + u + prior.alpha(0, 0);
    let b = pairs - e + n * ntilde as f64 - u + prior.beta(0, 0);
    Ok(prior.ln_phi() + zeta + ln_beta(a, b))
}

/// Column sums `S[j][i] = Σ_{v: t(v)=j} y_i(v)`.
pub(crate) fn allocation_sums(state: &LatentState, stats: &SufficientStats) -> Vec<Vec<u64>> {
    let k = stats.k();
    let mut s = vec![vec![0u64; k]; k];
    for (row, &t) in state.y.iter().zip(stats.blocks()) {
        for (i, &x) in row.iter().enumerate() {
            s[t][i] += x;
        }
    }
    s
}

/// Arguments `(η, θ + offset)` of the Beta factor for block pair `i <= j`.
pub(crate) fn beta_arguments(
    i: usize,
    j: usize,
    ntilde: &[u64],
    s: &[Vec<u64>],
    stats: &SufficientStats,
    prior: &PriorSpec,
) -> (f64, f64) {
    let v = stats.v_counts();
    let e = stats.e()[i][j] as f64;
    let pairs = stats.pair_count(i, j) as f64;
    let (alloc, offset) = if i == j {
        (s[i][i] as f64, (ntilde[i] * v[i]) as f64)
    } else {
        (
            (s[i][j] + s[j][i]) as f64,
            (ntilde[i] * v[j] + ntilde[j] * v[i]) as f64,
        )
    };
    let eta = e + alloc + prior.alpha(i, j);
    let theta = pairs - e - alloc + prior.beta(i, j);
    (eta, theta + offset)
}

/// Joint log posterior of counts and allocations:
/// `ln ζ(Ñ) + ln φ + Σ_i ln B(η_ii, θ_ii + Ñ_i V_i) + Σ_{i<j} ln B(η_ij, θ_ij + Ñ_i V_j + Ñ_j V_i)`
/// with `ζ(Ñ) = Π_v Π_i C(Ñ_i, y_i(v))`.
pub fn log_joint_posterior_sbm(
    state: &LatentState,
    stats: &SufficientStats,
    prior: &PriorSpec,
) -> Result<f64> {
    state.validate(stats, prior)?;
    let k = stats.k();
    let zeta: f64 = state
        .y
        .iter()
        .flat_map(|row| {
            row.iter()
                .zip(&state.ntilde)
                .map(|(&y, &nt)| ln_choose(nt, y))
        })
        .sum();
    let s = allocation_sums(state, stats);
    let mut total = zeta + prior.ln_phi();
    for i in 0..k {
        for j in i..k {
            let (a, b) = beta_arguments(i, j, &state.ntilde, &s, stats, prior);
            if a <= 0.0 || b <= 0.0 {
                return Err(Error::Domain(format!(
                    "non-positive Beta argument ({a}, {b}) for blocks ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            total += ln_beta(a, b);
        }
    }
    Ok(total)
}
