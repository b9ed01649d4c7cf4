//! Metropolis-within-Gibbs chains over the unseen block counts and the
//! pendant allocations.
//!
//! Each step evaluates only the change in the joint log posterior, using a
//! table of log factorials for the binomial terms and cached Beta factors.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::SufficientStats;

use super::logspace::{ln_beta, LnFactorial};
use super::moment::moment_existence;
use super::posterior::{allocation_sums, beta_arguments, log_joint_posterior_sbm};
use super::prior::PriorSpec;
use super::proposal::{count_log_proposal_ratio, draw_pendant_move, propose_block_count};
use super::state::LatentState;

/// How the windowed count proposal enters the acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalRatio {
    /// Use the true ratio `g(new → old) / g(old → new)`, which is zero when the
    /// window around the proposed value does not reach back to the current
    /// one (this only happens next to the lower bound).
    #[default]
    Exact,
    /// Treat the ratio as one everywhere.
    Unit,
}

/// Kernel used when an allocation update is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationUpdate {
    /// Move one pendant edge between a random admissible pair of blocks and
    /// accept or reject it.
    #[default]
    UnitMove,
    /// Redraw how the vertex's edges split between two random blocks from
    /// the exact conditional distribution of that split.
    PairGibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub iterations: u64,
    pub burn_in: u64,
    /// Half-width of the count proposal per block. `None` picks
    /// `max(1, round(0.05 * ntilde_i))` from the initial state.
    pub window: Option<Vec<u64>>,
    /// Probability of updating a count rather than an allocation.
    pub update_mix: f64,
    pub seed: u64,
    pub thin: u64,
    pub proposal_ratio: ProposalRatio,
    pub allocation_update: AllocationUpdate,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 200_000,
            burn_in: 50_000,
            window: None,
            update_mix: 0.5,
            seed: 0,
            thin: 10,
            proposal_ratio: ProposalRatio::default(),
            allocation_update: AllocationUpdate::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::validation(
                "burn_in",
                format!(
                    "burn-in {} must be below the iteration count {}",
                    self.burn_in, self.iterations
                ),
            ));
        }
        if self.thin == 0 {
            return Err(Error::validation("thin", "must be at least 1"));
        }
        if !(self.update_mix > 0.0 && self.update_mix < 1.0) {
            return Err(Error::validation(
                "update_mix",
                "must lie strictly between 0 and 1",
            ));
        }
        if let Some(w) = &self.window {
            if w.len() != k {
                return Err(Error::validation("window", format!("expected {k} entries")));
            }
            if w.contains(&0) {
                return Err(Error::validation("window", "entries must be at least 1"));
            }
        }
        Ok(())
    }

    /// Defaults for `k` blocks. With more than one block the counts move
    /// only as fast as the allocations follow them, so the chain is longer.
    pub fn for_blocks(k: usize) -> ChainConfig {
        if k > 1 {
            ChainConfig {
                iterations: 2_000_000,
                burn_in: 500_000,
                thin: 100,
                ..ChainConfig::default()
            }
        } else {
            ChainConfig::default()
        }
    }

    pub fn resolve_window(&self, init: &[u64]) -> Vec<u64> {
        self.window
            .clone()
            .unwrap_or_else(|| init.iter().map(|&x| default_window(x)).collect())
    }
}

pub fn default_window(scale: u64) -> u64 {
    ((0.05 * scale as f64).round() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainWarning {
    /// The posterior variance of N may not exist (`λ <= 3`).
    VarianceUndefined { lambda: f64 },
}

impl fmt::Display for ChainWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainWarning::VarianceUndefined { lambda } => write!(
                f,
                "posterior variance of N may not exist (lambda = {lambda} <= 3)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    /// Recorded count vectors after burn-in and thinning.
    pub samples: Vec<Vec<u64>>,
    /// Joint log posterior at each recorded sample.
    pub log_posterior_trace: Vec<f64>,
    pub accept_rate_ntilde: f64,
    pub accept_rate_y: f64,
    pub proposed_ntilde: u64,
    pub accepted_ntilde: u64,
    pub proposed_y: u64,
    pub accepted_y: u64,
    /// Allocation updates that found no admissible move.
    pub no_move_y: u64,
    pub lambda: f64,
    pub warnings: Vec<ChainWarning>,
    pub window: Vec<u64>,
    pub final_state: LatentState,
    /// Log posterior of the final state as tracked by the chain.
    pub final_log_posterior: f64,
}

fn rate(accepted: u64, proposed: u64) -> f64 {
    if proposed == 0 {
        0.0
    } else {
        accepted as f64 / proposed as f64
    }
}

fn accept<R: Rng>(log_q: f64, rng: &mut R) -> bool {
    log_q >= 0.0 || rng.random::<f64>().ln() < log_q
}

fn variance_warnings(stats: &SufficientStats, prior: &PriorSpec) -> (f64, Vec<ChainWarning>) {
    let check = moment_existence(stats, prior, 2);
    let mut warnings = Vec::new();
    if !check.exists {
        log::warn!(
            "lambda = {} <= 3: the posterior variance of N may not exist",
            check.lambda
        );
        warnings.push(ChainWarning::VarianceUndefined {
            lambda: check.lambda,
        });
    }
    (check.lambda, warnings)
}

/// Pendant degrees as `(value, multiplicity)` pairs, zero excluded.
fn histogram(values: &[u64]) -> Vec<(u64, u64)> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for v in sorted.into_iter().filter(|&v| v > 0) {
        match out.last_mut() {
            Some((val, count)) if *val == v => *count += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

struct ErTarget {
    lf: LnFactorial,
    hist: Vec<(u64, u64)>,
    n: f64,
    eta: f64,
    theta: f64,
    ln_phi: f64,
}

impl ErTarget {
    fn new(stats: &SufficientStats, prior: &PriorSpec) -> Self {
        let e = stats.e_s() as f64;
        let u = stats.pendant_sum() as f64;
        ErTarget {
            lf: LnFactorial::new(prior.ntilde_max()),
            hist: histogram(stats.pendant()),
            n: stats.n() as f64,
            eta: e + u + prior.alpha(0, 0),
            theta: stats.pair_count(0, 0) as f64 - e - u + prior.beta(0, 0),
            ln_phi: prior.ln_phi(),
        }
    }

    fn eval(&self, nt: u64) -> f64 {
        let zeta: f64 = self
            .hist
            .iter()
            .map(|&(d, c)| c as f64 * self.lf.ln_choose(nt, d))
            .sum();
        self.ln_phi + zeta + ln_beta(self.eta, self.theta + self.n * nt as f64)
    }
}

/// Single-block chain over the unseen count.
pub fn run_chain_er(
    stats: &SufficientStats,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    init_ntilde: u64,
) -> Result<ChainTrace> {
    if stats.k() != 1 || prior.k() != 1 {
        return Err(Error::Argument(format!(
            "single-block chain called with K = {}",
            stats.k()
        )));
    }
    cfg.validate(1)?;
    let lower = stats.max_pendant();
    if init_ntilde < lower || init_ntilde > prior.ntilde_max() {
        return Err(Error::Initialization(format!(
            "initial ntilde {init_ntilde} outside [{lower}, {}]",
            prior.ntilde_max()
        )));
    }
    let target = ErTarget::new(stats, prior);
    let mut current = init_ntilde;
    let mut lp = target.eval(current);
    if !lp.is_finite() {
        return Err(Error::Initialization(format!(
            "log posterior at ntilde = {init_ntilde} is not finite"
        )));
    }
    let window = cfg.resolve_window(&[init_ntilde]);
    let w = window[0];
    let (lambda, warnings) = variance_warnings(stats, prior);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let recorded = (cfg.iterations - cfg.burn_in).div_ceil(cfg.thin) as usize;
    let mut samples = Vec::with_capacity(recorded);
    let mut lp_trace = Vec::with_capacity(recorded);
    let mut accepted = 0u64;

    for iter in 0..cfg.iterations {
        let proposal = propose_block_count(current, lower, w, &mut rng);
        if proposal <= prior.ntilde_max() {
            let correction = match cfg.proposal_ratio {
                ProposalRatio::Exact => count_log_proposal_ratio(current, proposal, lower, w),
                ProposalRatio::Unit => 0.0,
            };
            if correction > f64::NEG_INFINITY {
                let new_lp = target.eval(proposal);
                if accept(new_lp - lp + correction, &mut rng) {
                    current = proposal;
                    lp = new_lp;
                    accepted += 1;
                }
            }
        }
        debug_assert!(current >= lower && current <= prior.ntilde_max());
        if iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0 {
            samples.push(vec![current]);
            lp_trace.push(lp);
        }
    }

    Ok(ChainTrace {
        samples,
        log_posterior_trace: lp_trace,
        accept_rate_ntilde: rate(accepted, cfg.iterations),
        accept_rate_y: 0.0,
        proposed_ntilde: cfg.iterations,
        accepted_ntilde: accepted,
        proposed_y: 0,
        accepted_y: 0,
        no_move_y: 0,
        lambda,
        warnings,
        window,
        final_state: LatentState::single_block(current, stats),
        final_log_posterior: lp,
    })
}

/// Mutable chain state with the bookkeeping needed for O(K) allocation moves
/// and O(max d̃ + K) count moves.
struct SbmState<'a> {
    stats: &'a SufficientStats,
    prior: &'a PriorSpec,
    lf: LnFactorial,
    ntilde: Vec<u64>,
    y: Vec<Vec<u64>>,
    s: Vec<Vec<u64>>,
    /// `hist[i][x]` = number of sampled vertices with `y_i(v) = x`.
    hist: Vec<Vec<u64>>,
    max_y: Vec<u64>,
    beta_terms: Vec<Vec<f64>>,
    lp: f64,
}

impl<'a> SbmState<'a> {
    fn new(stats: &'a SufficientStats, prior: &'a PriorSpec, init: LatentState) -> Result<Self> {
        let k = stats.k();
        let lp = log_joint_posterior_sbm(&init, stats, prior)
            .map_err(|e| Error::Initialization(e.to_string()))?;
        let s = allocation_sums(&init, stats);
        let width = stats.max_pendant() as usize + 1;
        let mut hist = vec![vec![0u64; width]; k];
        for row in &init.y {
            for (i, &x) in row.iter().enumerate() {
                hist[i][x as usize] += 1;
            }
        }
        let max_y = init.lower_bounds();
        let mut beta_terms = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let (a, b) = beta_arguments(i, j, &init.ntilde, &s, stats, prior);
                beta_terms[i][j] = ln_beta(a, b);
            }
        }
        Ok(SbmState {
            stats,
            prior,
            lf: LnFactorial::new(prior.ntilde_max()),
            ntilde: init.ntilde,
            y: init.y,
            s,
            hist,
            max_y,
            beta_terms,
            lp,
        })
    }

    fn beta_term(&self, i: usize, j: usize, ntilde: &[u64], s: &[Vec<u64>]) -> f64 {
        let (lo, hi) = (i.min(j), i.max(j));
        let (a, b) = beta_arguments(lo, hi, ntilde, s, self.stats, self.prior);
        ln_beta(a, b)
    }

    fn cached_beta(&self, i: usize, j: usize) -> f64 {
        self.beta_terms[i.min(j)][i.max(j)]
    }

    /// Change in log posterior when `ntilde[i]` becomes `to`, and the new
    /// Beta factors for the pairs `(i, j)`.
    fn count_delta(&mut self, i: usize, to: u64) -> (f64, Vec<f64>) {
        let from = self.ntilde[i];
        let lf = &self.lf;
        let mut delta = 0.0;
        for (x, &count) in self.hist[i].iter().enumerate().skip(1) {
            if count > 0 {
                let x = x as u64;
                let new = lf.get(to) - lf.get(to - x);
                let old = lf.get(from) - lf.get(from - x);
                delta += count as f64 * (new - old);
            }
        }
        self.ntilde[i] = to;
        let k = self.ntilde.len();
        let mut terms = Vec::with_capacity(k);
        for j in 0..k {
            let t = self.beta_term(i, j, &self.ntilde, &self.s);
            delta += t - self.cached_beta(i, j);
            terms.push(t);
        }
        self.ntilde[i] = from;
        (delta, terms)
    }

    fn apply_count(&mut self, i: usize, to: u64, delta: f64, terms: Vec<f64>) {
        self.ntilde[i] = to;
        for (j, t) in terms.into_iter().enumerate() {
            self.beta_terms[i.min(j)][i.max(j)] = t;
        }
        self.lp += delta;
    }

    /// Change in log posterior for moving one of `v`'s pendant edges from
    /// block `from` to block `to`, with the two affected Beta factors.
    fn move_delta(&mut self, v: usize, from: usize, to: usize) -> (f64, [f64; 2]) {
        let t = self.stats.blocks()[v];
        let (yf, yt) = (self.y[v][from], self.y[v][to]);
        let (nf, nt) = (self.ntilde[from], self.ntilde[to]);
        let lf = &self.lf;
        let mut delta = lf.ln_choose(nf, yf - 1) - lf.ln_choose(nf, yf) + lf.ln_choose(nt, yt + 1)
            - lf.ln_choose(nt, yt);
        self.s[t][from] -= 1;
        self.s[t][to] += 1;
        let new_from = self.beta_term(t, from, &self.ntilde, &self.s);
        let new_to = self.beta_term(t, to, &self.ntilde, &self.s);
        self.s[t][from] += 1;
        self.s[t][to] -= 1;
        delta += new_from - self.cached_beta(t, from) + new_to - self.cached_beta(t, to);
        (delta, [new_from, new_to])
    }

    fn apply_move(&mut self, v: usize, from: usize, to: usize, delta: f64, terms: [f64; 2]) {
        let t = self.stats.blocks()[v];
        let old_from = self.y[v][from];
        let old_to = self.y[v][to];
        self.y[v][from] -= 1;
        self.y[v][to] += 1;
        self.s[t][from] -= 1;
        self.s[t][to] += 1;

        self.hist[from][old_from as usize] -= 1;
        self.hist[from][old_from as usize - 1] += 1;
        if old_from == self.max_y[from] && self.hist[from][old_from as usize] == 0 {
            self.max_y[from] -= 1;
        }
        self.hist[to][old_to as usize] -= 1;
        self.hist[to][old_to as usize + 1] += 1;
        self.max_y[to] = self.max_y[to].max(old_to + 1);

        self.beta_terms[t.min(from)][t.max(from)] = terms[0];
        self.beta_terms[t.min(to)][t.max(to)] = terms[1];
        self.lp += delta;
    }

    /// Redraws `(y_i(v), y_j(v))` with their sum fixed from the conditional
    /// distribution given everything else. Returns whether the split changed.
    fn resample_pair<R: Rng>(&mut self, v: usize, i: usize, j: usize, rng: &mut R) -> bool {
        let t = self.stats.blocks()[v];
        let (yi, yj) = (self.y[v][i], self.y[v][j]);
        let total = yi + yj;
        let (ni, nj) = (self.ntilde[i], self.ntilde[j]);
        let lo = total.saturating_sub(nj);
        let hi = total.min(ni);
        if lo == hi {
            return false;
        }
        self.s[t][i] -= yi;
        self.s[t][j] -= yj;
        let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
        let mut terms = Vec::with_capacity(weights.capacity());
        for a in lo..=hi {
            self.s[t][i] += a;
            self.s[t][j] += total - a;
            let bi = self.beta_term(t, i, &self.ntilde, &self.s);
            let bj = self.beta_term(t, j, &self.ntilde, &self.s);
            self.s[t][i] -= a;
            self.s[t][j] -= total - a;
            weights.push(self.lf.ln_choose(ni, a) + self.lf.ln_choose(nj, total - a) + bi + bj);
            terms.push([bi, bj]);
        }
        let top = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mass: Vec<f64> = weights.iter().map(|w| (w - top).exp()).collect();
        let mut u = rng.random::<f64>() * mass.iter().sum::<f64>();
        let mut pick = mass.len() - 1;
        for (idx, m) in mass.iter().enumerate() {
            if u < *m {
                pick = idx;
                break;
            }
            u -= m;
        }
        let a = lo + pick as u64;
        let old = (yi - lo) as usize;
        self.s[t][i] += a;
        self.s[t][j] += total - a;
        if a == yi {
            return false;
        }
        self.set_allocation(v, i, a);
        self.set_allocation(v, j, total - a);
        let [bi, bj] = terms[pick];
        self.beta_terms[t.min(i)][t.max(i)] = bi;
        self.beta_terms[t.min(j)][t.max(j)] = bj;
        self.lp += weights[pick] - weights[old];
        true
    }

    fn set_allocation(&mut self, v: usize, i: usize, value: u64) {
        let old = self.y[v][i];
        self.y[v][i] = value;
        self.hist[i][old as usize] -= 1;
        self.hist[i][value as usize] += 1;
        if value > self.max_y[i] {
            self.max_y[i] = value;
        }
        while self.max_y[i] > 0 && self.hist[i][self.max_y[i] as usize] == 0 {
            self.max_y[i] -= 1;
        }
    }

    fn into_state(self) -> (LatentState, f64) {
        (
            LatentState {
                ntilde: self.ntilde,
                y: self.y,
            },
            self.lp,
        )
    }
}

/// Multi-block chain over counts and allocations. With a single block the
/// allocation is forced and the single-block chain is used.
pub fn run_chain_sbm(
    stats: &SufficientStats,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    init: LatentState,
) -> Result<ChainTrace> {
    let k = stats.k();
    if k == 1 {
        init.validate(stats, prior)
            .map_err(|e| Error::Initialization(e.to_string()))?;
        return run_chain_er(stats, prior, cfg, init.ntilde[0]);
    }
    cfg.validate(k)?;
    let window = cfg.resolve_window(&init.ntilde);
    let (lambda, warnings) = variance_warnings(stats, prior);
    let mut chain = SbmState::new(stats, prior, init)?;
    let movable: Vec<usize> = (0..stats.n()).filter(|&v| stats.pendant()[v] > 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ntilde_max = prior.ntilde_max();

    let recorded = (cfg.iterations - cfg.burn_in).div_ceil(cfg.thin) as usize;
    let mut samples = Vec::with_capacity(recorded);
    let mut lp_trace = Vec::with_capacity(recorded);
    let (mut prop_n, mut acc_n, mut prop_y, mut acc_y, mut no_move) =
        (0u64, 0u64, 0u64, 0u64, 0u64);

    for iter in 0..cfg.iterations {
        let update_count = movable.is_empty() || rng.random::<f64>() < cfg.update_mix;
        if update_count {
            let i = rng.random_range(0..k);
            let current = chain.ntilde[i];
            let lower = chain.max_y[i];
            let proposal = propose_block_count(current, lower, window[i], &mut rng);
            prop_n += 1;
            if proposal <= ntilde_max {
                let correction = match cfg.proposal_ratio {
                    ProposalRatio::Exact => {
                        count_log_proposal_ratio(current, proposal, lower, window[i])
                    }
                    ProposalRatio::Unit => 0.0,
                };
                if correction > f64::NEG_INFINITY {
                    let (delta, terms) = chain.count_delta(i, proposal);
                    if accept(delta + correction, &mut rng) {
                        chain.apply_count(i, proposal, delta, terms);
                        acc_n += 1;
                    }
                }
            }
        } else {
            let v = movable[rng.random_range(0..movable.len())];
            if cfg.allocation_update == AllocationUpdate::PairGibbs {
                let i = rng.random_range(0..k);
                let mut j = rng.random_range(0..k - 1);
                if j >= i {
                    j += 1;
                }
                prop_y += 1;
                if chain.resample_pair(v, i, j, &mut rng) {
                    acc_y += 1;
                }
            } else {
                match draw_pendant_move(&chain.y[v], &chain.ntilde, &mut rng) {
                    None => no_move += 1,
                    Some(m) => {
                        prop_y += 1;
                        let (delta, terms) = chain.move_delta(v, m.from, m.to);
                        if accept(delta + m.log_ratio, &mut rng) {
                            chain.apply_move(v, m.from, m.to, delta, terms);
                            acc_y += 1;
                        }
                    }
                }
            }
        }
        debug_assert!(
            (0..k).all(|i| chain.ntilde[i] >= chain.max_y[i] && chain.ntilde[i] <= ntilde_max)
        );
        if iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0 {
            samples.push(chain.ntilde.clone());
            lp_trace.push(chain.lp);
        }
    }

    let (final_state, final_lp) = chain.into_state();
    Ok(ChainTrace {
        samples,
        log_posterior_trace: lp_trace,
        accept_rate_ntilde: rate(acc_n, prop_n),
        accept_rate_y: rate(acc_y, prop_y),
        proposed_ntilde: prop_n,
        accepted_ntilde: acc_n,
        proposed_y: prop_y,
        accepted_y: acc_y,
        no_move_y: no_move,
        lambda,
        warnings,
        window,
        final_state,
        final_log_posterior: final_lp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::log_posterior_er;

    fn small_sbm() -> (SufficientStats, PriorSpec) {
        let stats = SufficientStats::from_parts(
            2,
            vec![0, 0, 1, 1],
            vec![3, 1, 2, 0],
            vec![vec![1, 2], vec![2, 1]],
        )
        .unwrap();
        (stats, PriorSpec::uniform(2, 12))
    }

    fn short(seed: u64) -> ChainConfig {
        ChainConfig {
            iterations: 20_000,
            burn_in: 1_000,
            thin: 7,
            seed,
            window: Some(vec![2, 2]),
            ..ChainConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ChainConfig::default();
        cfg.burn_in = cfg.iterations;
        assert!(cfg.validate(1).is_err());
        let cfg = ChainConfig {
            update_mix: 1.0,
            ..ChainConfig::default()
        };
        assert!(cfg.validate(2).is_err());
        let cfg = ChainConfig {
            window: Some(vec![1]),
            ..ChainConfig::default()
        };
        assert!(cfg.validate(2).is_err());
        let cfg = ChainConfig {
            thin: 0,
            ..ChainConfig::default()
        };
        assert!(cfg.validate(2).is_err());
        assert_eq!(
            ChainConfig::default().resolve_window(&[720, 3]),
            vec![36, 1]
        );
    }

    #[test]
    fn incremental_log_posterior_matches_full_evaluation() {
        let (stats, prior) = small_sbm();
        let init = LatentState {
            ntilde: vec![4, 4],
            y: vec![vec![2, 1], vec![1, 0], vec![1, 1], vec![0, 0]],
        };
        let trace = run_chain_sbm(&stats, &prior, &short(5), init).unwrap();
        let full = log_joint_posterior_sbm(&trace.final_state, &stats, &prior).unwrap();
        assert!((full - trace.final_log_posterior).abs() < 1e-8);
        assert!(trace.accepted_y > 0 && trace.accepted_ntilde > 0);
    }

    #[test]
    fn recorded_states_stay_in_support() {
        let (stats, prior) = small_sbm();
        let init = LatentState {
            ntilde: vec![3, 3],
            y: vec![vec![3, 0], vec![1, 0], vec![2, 0], vec![0, 0]],
        };
        let trace = run_chain_sbm(&stats, &prior, &short(9), init).unwrap();
        trace.final_state.validate(&stats, &prior).unwrap();
        assert_eq!(trace.samples.len(), (19_000usize).div_ceil(7));
        assert!(trace.samples.iter().flatten().all(|&x| x <= 12));
        assert!((0.0..=1.0).contains(&trace.accept_rate_ntilde));
        assert!((0.0..=1.0).contains(&trace.accept_rate_y));
    }

    #[test]
    fn deterministic_given_seed() {
        let (stats, prior) = small_sbm();
        let init = init_for(&stats, &prior);
        let a = run_chain_sbm(&stats, &prior, &short(1), init.clone()).unwrap();
        let b = run_chain_sbm(&stats, &prior, &short(1), init).unwrap();
        assert_eq!(a, b);
    }

    fn init_for(stats: &SufficientStats, prior: &PriorSpec) -> LatentState {
        crate::pulse::init_state(stats, prior, None).unwrap()
    }

    #[test]
    fn single_block_routes_to_er_chain() {
        let stats =
            SufficientStats::from_parts(1, vec![0; 3], vec![2, 1, 1], vec![vec![1]]).unwrap();
        let prior = PriorSpec::uniform(1, 15);
        let cfg = ChainConfig {
            window: Some(vec![2]),
            ..short(4)
        };
        let a = run_chain_er(&stats, &prior, &cfg, 5).unwrap();
        let b = run_chain_sbm(&stats, &prior, &cfg, LatentState::single_block(5, &stats)).unwrap();
        assert_eq!(a, b);
        let full = log_posterior_er(a.final_state.ntilde[0], &stats, &prior).unwrap();
        assert!((full - a.final_log_posterior).abs() < 1e-9);
    }

    #[test]
    fn er_chain_never_goes_below_pendant_degree() {
        let stats =
            SufficientStats::from_parts(1, vec![0; 3], vec![4, 1, 0], vec![vec![1]]).unwrap();
        let prior = PriorSpec::uniform(1, 30);
        for ratio in [ProposalRatio::Exact, ProposalRatio::Unit] {
            let cfg = ChainConfig {
                window: Some(vec![3]),
                proposal_ratio: ratio,
                ..short(2)
            };
            let trace = run_chain_er(&stats, &prior, &cfg, 4).unwrap();
            assert!(trace.samples.iter().all(|s| s[0] >= 4 && s[0] <= 30));
        }
    }

    #[test]
    fn er_chain_rejects_bad_init() {
        let stats = SufficientStats::from_parts(1, vec![0; 2], vec![4, 1], vec![vec![1]]).unwrap();
        let prior = PriorSpec::uniform(1, 30);
        let cfg = ChainConfig {
            window: Some(vec![2]),
            ..short(0)
        };
        assert!(matches!(
            run_chain_er(&stats, &prior, &cfg, 3),
            Err(Error::Initialization(_))
        ));
    }

    #[test]
    fn variance_warning_follows_lambda() {
        // lambda = E_11 + alpha = 2 + 1 = 3 -> warning
        let sparse = SufficientStats::from_parts(1, vec![0; 4], vec![1; 4], vec![vec![2]]).unwrap();
        let prior = PriorSpec::uniform(1, 50);
        let cfg = ChainConfig {
            window: Some(vec![2]),
            ..short(1)
        };
        let t = run_chain_er(&sparse, &prior, &cfg, 3).unwrap();
        assert_eq!(
            t.warnings,
            vec![ChainWarning::VarianceUndefined { lambda: 3.0 }]
        );
        let dense = SufficientStats::from_parts(1, vec![0; 4], vec![1; 4], vec![vec![3]]).unwrap();
        let t = run_chain_er(&dense, &prior, &cfg, 3).unwrap();
        assert!(t.warnings.is_empty());
    }
}
