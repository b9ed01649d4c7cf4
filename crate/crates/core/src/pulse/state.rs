use crate::error::{Error, Result};
use crate::observation::SufficientStats;

use super::prior::PriorSpec;

/// Unseen vertices per block (`ntilde`) and, for each sampled vertex, how its
/// pendant edges split across the unseen blocks (`y`, aligned with the
/// sample order of the statistics).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentState {
    pub ntilde: Vec<u64>,
    pub y: Vec<Vec<u64>>,
}

impl LatentState {
    /// The only allocation available when there is a single block.
    pub fn single_block(ntilde: u64, stats: &SufficientStats) -> Self {
        LatentState {
            ntilde: vec![ntilde],
            y: stats.pendant().iter().map(|&d| vec![d]).collect(),
        }
    }

    /// Checks the state against the observation and the prior's support:
    /// rows of `y` sum to the pendant degrees, `y_i(v) <= ntilde_i`, and
    /// `ntilde_i <= ntilde_max`.
    pub fn validate(&self, stats: &SufficientStats, prior: &PriorSpec) -> Result<()> {
        let k = stats.k();
        if self.ntilde.len() != k || prior.k() != k {
            return Err(Error::Domain(format!(
                "state has {} blocks, prior {}, data {k}",
                self.ntilde.len(),
                prior.k()
            )));
        }
        if self.y.len() != stats.n() {
            return Err(Error::Domain(format!(
                "allocation has {} rows for {} sampled vertices",
                self.y.len(),
                stats.n()
            )));
        }
        if let Some(i) = self.ntilde.iter().position(|&x| x > prior.ntilde_max()) {
            return Err(Error::Domain(format!(
                "ntilde[{}] = {} exceeds ntilde_max = {}",
                i + 1,
                self.ntilde[i],
                prior.ntilde_max()
            )));
        }
        for (v, (row, &d)) in self.y.iter().zip(stats.pendant()).enumerate() {
            if row.len() != k {
                return Err(Error::Domain(format!(
                    "allocation row {v} has wrong length"
                )));
            }
            if row.iter().sum::<u64>() != d {
                return Err(Error::Domain(format!(
                    "allocation of sampled vertex {v} does not sum to its pendant degree {d}"
                )));
            }
            if let Some(i) = (0..k).find(|&i| row[i] > self.ntilde[i]) {
                return Err(Error::Domain(format!(
                    "sampled vertex {v} sends {} edges to block {} which has only {} unseen vertices",
                    row[i],
                    i + 1,
                    self.ntilde[i]
                )));
            }
        }
        Ok(())
    }

    /// `max_v y_i(v)`, the smallest admissible value of `ntilde_i`.
    pub fn lower_bounds(&self) -> Vec<u64> {
        let mut lb = vec![0; self.ntilde.len()];
        for row in &self.y {
            for (l, &x) in lb.iter_mut().zip(row) {
                *l = (*l).max(x);
            }
        }
        lb
    }
}

/// Builds a feasible starting state.
///
/// Counts start at `V_i * max(hint - n, n) / n` (the hint is usually the
/// scale-up estimate of N). Each vertex's pendant edges are then split in
/// proportion to `ntilde_i * p̂_{i,t(v)}`, with `p̂` the posterior-mean edge
/// density inside the sample; rounding is by largest remainder with ties to
/// the lower block index, and no block receives more than its count unless
/// the counts cannot hold the degree at all. Counts are finally raised to
/// the largest allocation they must cover.
pub fn init_state(
    stats: &SufficientStats,
    prior: &PriorSpec,
    nsum_hint: Option<f64>,
) -> Result<LatentState> {
    let k = stats.k();
    let n = stats.n() as f64;
    let cap_max = prior.ntilde_max();
    if prior.k() != k {
        return Err(Error::Initialization(format!(
            "prior has {} blocks, data {k}",
            prior.k()
        )));
    }
    if let Some(v) = stats
        .pendant()
        .iter()
        .position(|&d| d > cap_max.saturating_mul(k as u64))
    {
        return Err(Error::Initialization(format!(
            "sampled vertex {v} has pendant degree {} but at most {} unseen vertices are allowed",
            stats.pendant()[v],
            cap_max.saturating_mul(k as u64)
        )));
    }

    let unseen_total = match nsum_hint {
        Some(h) if h.is_finite() => (h - n).max(n),
        _ => n,
    };
    let mut ntilde: Vec<u64> = stats
        .v_counts()
        .iter()
        .map(|&v| ((v as f64 * unseen_total / n).round() as u64).min(cap_max))
        .collect();

    let density: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let a = stats.e()[i][j] as f64 + prior.alpha(i, j);
                    a / (stats.pair_count(i, j) as f64 + prior.alpha(i, j) + prior.beta(i, j))
                })
                .collect()
        })
        .collect();

    let y: Vec<Vec<u64>> = stats
        .pendant()
        .iter()
        .zip(stats.blocks())
        .map(|(&d, &t)| {
            let weights: Vec<f64> = (0..k).map(|i| ntilde[i] as f64 * density[i][t]).collect();
            split_proportionally(d, &weights, &ntilde, cap_max)
        })
        .collect();

    for row in &y {
        for (nt, &x) in ntilde.iter_mut().zip(row) {
            *nt = (*nt).max(x);
        }
    }
    let state = LatentState { ntilde, y };
    state
        .validate(stats, prior)
        .map_err(|e| Error::Initialization(e.to_string()))?;
    Ok(state)
}

fn split_proportionally(total: u64, weights: &[f64], caps: &[u64], hard_cap: u64) -> Vec<u64> {
    let k = weights.len();
    let wsum: f64 = weights.iter().sum();
    let target: Vec<f64> = if wsum > 0.0 {
        weights.iter().map(|w| total as f64 * w / wsum).collect()
    } else {
        vec![total as f64 / k as f64; k]
    };
    let mut y: Vec<u64> = (0..k)
        .map(|i| (target[i].floor() as u64).min(caps[i]))
        .collect();
    let mut remaining = total - y.iter().sum::<u64>();
    while remaining > 0 {
        let pick = |limit: &dyn Fn(usize) -> u64| {
            (0..k)
                .filter(|&i| y[i] < limit(i))
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if target[b] - y[b] as f64 >= target[i] - y[i] as f64 => Some(b),
                    _ => Some(i),
                })
        };
        let i = pick(&|i| caps[i])
            .or_else(|| pick(&|_| hard_cap))
            .expect("feasibility was checked");
        y[i] += 1;
        remaining -= 1;
    }
    y
}
