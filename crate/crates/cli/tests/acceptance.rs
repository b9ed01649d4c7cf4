use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::process::Command;
use std::time::Instant;

use gauss_quad::GaussLegendre;
use netsize_core::experiment::{run_experiment, ExperimentPlan, Row, RunOptions};
use netsize_core::graph::{cohesion_spec, generate_sbm, SbmSpec};
use netsize_core::nsum::nsum_estimate;
use netsize_core::observation::{sample_induced, sufficient_stats, SufficientStats};
use netsize_core::pulse::{
    avail, count_window, init_state, log_joint_posterior_sbm, log_posterior_er,
    marginal_likelihood_oracle, moment_existence, propose_block_count, propose_pendant_move,
    run_chain_er, run_chain_sbm, ChainConfig, ChainWarning, LatentState, PriorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta;
use statrs::function::factorial::binomial;

type Outcome = Result<String, String>;

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed_form_vs_quadrature", closed_form_vs_quadrature),
        ("composition_identity", composition_identity),
        (
            "chain_matches_exact_posterior",
            chain_matches_exact_posterior,
        ),
        ("vary_p_reduced", vary_p_reduced),
        ("nsum_positive_bias", nsum_positive_bias),
        ("epsilon_sweep_reduced", epsilon_sweep_reduced),
        ("moment_diagnostic", moment_diagnostic),
        ("proposal_laws", proposal_laws),
        ("experiment_determinism", experiment_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn rule(nodes: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(nodes.max(1)).unwrap())
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn normalize_log(lw: &[f64]) -> Vec<f64> {
    let hi = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    normalize(&lw.iter().map(|x| (x - hi).exp()).collect::<Vec<_>>())
}

fn sym(
    rng: &mut ChaCha8Rng,
    k: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let x = draw(rng);
            m[i][j] = x;
            m[j][i] = x;
        }
    }
    m
}

fn pair_count(v: &[u64], i: usize, j: usize) -> u64 {
    if i == j {
        v[i] * v[i].saturating_sub(1) / 2
    } else {
        v[i] * v[j]
    }
}

/// Random statistics with `k` blocks and up to `max_w` sampled vertices.
fn random_stats(rng: &mut ChaCha8Rng, k: usize, max_w: usize, max_d: u64) -> SufficientStats {
    let w = rng.random_range(1..=max_w);
    let blocks: Vec<usize> = (0..w).map(|_| rng.random_range(0..k)).collect();
    let pendant: Vec<u64> = (0..w).map(|_| rng.random_range(0..=max_d)).collect();
    let mut v = vec![0u64; k];
    for &b in &blocks {
        v[b] += 1;
    }
    let mut e = vec![vec![0u64; k]; k];
    for i in 0..k {
        for j in i..k {
            let x = rng.random_range(0..=pair_count(&v, i, j));
            e[i][j] = x;
            e[j][i] = x;
        }
    }
    SufficientStats::from_parts(k, blocks, pendant, e).unwrap()
}

/// Every `(ntilde, y)` in the support, ntilde on `[0, cap]^K`.
fn enumerate_states(stats: &SufficientStats, cap: u64) -> Vec<LatentState> {
    let k = stats.k();
    let mut counts: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..k {
        counts = counts
            .into_iter()
            .flat_map(|c| {
                (0..=cap).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for nt in counts {
        let mut rows: Vec<Vec<Vec<u64>>> = vec![Vec::new()];
        for &d in stats.pendant() {
            let opts = splits(d, &nt);
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    opts.iter().map(move |o| {
                        let mut r = r.clone();
                        r.push(o.clone());
                        r
                    })
                })
                .collect();
        }
        out.extend(rows.into_iter().map(|y| LatentState {
            ntilde: nt.clone(),
            y,
        }));
    }
    out
}

/// Ways to split `d` across blocks with `y_i <= caps[i]`.
fn splits(d: u64, caps: &[u64]) -> Vec<Vec<u64>> {
    match caps.split_first() {
        None => {
            if d == 0 {
                vec![Vec::new()]
            } else {
                Vec::new()
            }
        }
        Some((&cap, rest)) => (0..=d.min(cap))
            .flat_map(|x| {
                splits(d - x, rest).into_iter().map(move |mut tail| {
                    tail.insert(0, x);
                    tail
                })
            })
            .collect(),
    }
}

/// Exponents of `p_ij` and `1 - p_ij` in the likelihood of one state.
fn exponents(stats: &SufficientStats, state: &LatentState, i: usize, j: usize) -> (u64, u64) {
    let mut hits = stats.e()[i][j];
    let mut misses = pair_count(stats.v_counts(), i, j) - hits;
    for (&t, row) in stats.blocks().iter().zip(&state.y) {
        // unseen partner block of a sampled vertex in block t
        let partner = if t == j {
            Some(i)
        } else if t == i {
            Some(j)
        } else {
            None
        };
        if let Some(b) = partner {
            hits += row[b];
            misses += state.ntilde[b] - row[b];
        }
    }
    (hits, misses)
}

/// Likelihood of one state times the Beta prior density, integrated over the
/// edge probabilities by nested Gauss-Legendre rules.
fn state_quadrature(
    stats: &SufficientStats,
    prior: &PriorSpec,
    state: &LatentState,
    nodes: usize,
) -> f64 {
    let k = stats.k();
    let comb: f64 = state
        .y
        .iter()
        .flat_map(|row| row.iter().zip(&state.ntilde).map(|(&y, &n)| binomial(n, y)))
        .product();
    let mut factors: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    for i in 0..k {
        for j in i..k {
            let (h, m) = exponents(stats, state, i, j);
            let (a, b) = (prior.alpha(i, j), prior.beta(i, j));
            let norm = beta(a, b);
            factors.push(Box::new(move |p: f64| {
                p.powi(h as i32 + a as i32 - 1) * (1.0 - p).powi(m as i32 + b as i32 - 1) / norm
            }));
        }
    }
    let gl = rule(nodes);
    fn nest(gl: &GaussLegendre, factors: &[Box<dyn Fn(f64) -> f64>], acc: f64) -> f64 {
        match factors.split_first() {
            None => acc,
            Some((f, rest)) => gl.integrate(0.0, 1.0, |p| nest(gl, rest, acc * f(p))),
        }
    }
    comb * nest(&gl, &factors, 1.0)
}

fn closed_form_vs_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC105ED);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut states_checked = 0;
    while done < 50 {
        let k = rng.random_range(1..=2);
        let cap = rng.random_range(1..=8u64);
        let stats = random_stats(&mut rng, k, 4, 3.min(cap * k as u64));
        let alpha = sym(&mut rng, k, |r| r.random_range(1..=3) as f64);
        let betas = sym(&mut rng, k, |r| r.random_range(1..=3) as f64);
        let prior = PriorSpec::new(alpha, betas, cap).unwrap();
        let states = enumerate_states(&stats, cap);
        if states.is_empty() || states.len() > 2000 {
            continue;
        }
        // integer priors keep the integrand polynomial; the rule is exact
        // once 2 * nodes - 1 reaches its degree
        let degree = states
            .iter()
            .flat_map(|s| {
                (0..k)
                    .flat_map(move |i| (i..k).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let (h, m) = exponents(&stats, s, i, j);
                        h + m + 4
                    })
            })
            .max()
            .unwrap_or(0);
        let nodes = degree as usize / 2 + 2;
        let closed: Vec<f64> = states
            .iter()
            .map(|s| log_joint_posterior_sbm(s, &stats, &prior).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let quad: Vec<f64> = states
            .iter()
            .map(|s| state_quadrature(&stats, &prior, s, nodes))
            .collect();
        let (closed, quad) = (normalize_log(&closed), normalize(&quad));
        for (c, q) in closed.iter().zip(&quad) {
            worst = worst.max((c - q).abs() / q);
        }
        states_checked += states.len();
        done += 1;
    }
    let detail = format!(
        "50 instances, {states_checked} states, max relative error {worst:.2e} (limit 1e-6)"
    );
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn composition_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0A1);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let k = rng.random_range(1..=3);
        let stats = random_stats(&mut rng, k, 5, 4);
        let ntilde: Vec<u64> = (0..k).map(|_| rng.random_range(0..=6)).collect();
        let p = sym(&mut rng, k, |r| r.random_range(0.01..0.99));
        match marginal_likelihood_oracle(&ntilde, &stats, &p) {
            Ok(m) => {
                worst = worst.max(m.relative_gap());
                done += 1;
            }
            Err(netsize_core::Error::Size(_)) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    let detail = format!("100 instances, max relative gap {worst:.2e} (limit 1e-10)");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn total_variation(exact: &BTreeMap<Vec<u64>, f64>, samples: &[Vec<u64>]) -> f64 {
    let mut emp: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let w = 1.0 / samples.len() as f64;
    for s in samples {
        *emp.entry(s.clone()).or_default() += w;
    }
    let mut keys: Vec<&Vec<u64>> = exact.keys().chain(emp.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (exact.get(k).unwrap_or(&0.0) - emp.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

fn chain_matches_exact_posterior() -> Outcome {
    // single block
    let er = SufficientStats::from_parts(1, vec![0; 3], vec![1, 0, 1], vec![vec![1]]).unwrap();
    let er_prior = PriorSpec::uniform(1, 15);
    let weights = normalize_log(
        &(0..=15)
            .map(|nt| log_posterior_er(nt, &er, &er_prior).unwrap_or(f64::NEG_INFINITY))
            .collect::<Vec<_>>(),
    );
    let er_exact: BTreeMap<Vec<u64>, f64> = weights
        .iter()
        .enumerate()
        .map(|(nt, &w)| (vec![nt as u64], w))
        .collect();
    let cfg = ChainConfig {
        iterations: 200_000,
        burn_in: 20_000,
        thin: 1,
        window: Some(vec![2]),
        seed: 11,
        ..ChainConfig::default()
    };
    let trace = run_chain_er(&er, &er_prior, &cfg, 3).map_err(|e| e.to_string())?;
    let tv_er = total_variation(&er_exact, &trace.samples);

    // two blocks
    let sbm = SufficientStats::from_parts(
        2,
        vec![0, 0, 1],
        vec![2, 1, 1],
        vec![vec![1, 0], vec![0, 0]],
    )
    .unwrap();
    let sbm_prior = PriorSpec::uniform(2, 8);
    let states = enumerate_states(&sbm, 8);
    let logs: Vec<f64> = states
        .iter()
        .map(|s| log_joint_posterior_sbm(s, &sbm, &sbm_prior).unwrap())
        .collect();
    let mut sbm_exact: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    for (s, w) in states.iter().zip(normalize_log(&logs)) {
        *sbm_exact.entry(s.ntilde.clone()).or_default() += w;
    }
    let cfg = ChainConfig {
        iterations: 500_000,
        burn_in: 50_000,
        thin: 1,
        window: Some(vec![2, 2]),
        seed: 12,
        ..ChainConfig::default()
    };
    let init = init_state(&sbm, &sbm_prior, None).map_err(|e| e.to_string())?;
    let trace = run_chain_sbm(&sbm, &sbm_prior, &cfg, init).map_err(|e| e.to_string())?;
    let tv_sbm = total_variation(&sbm_exact, &trace.samples);

    let detail = format!(
        "TV single-block {tv_er:.4} (200k iterations, 16 states), two-block {tv_sbm:.4} (500k iterations, {} states); limit 0.05",
        states.len()
    );
    if tv_er < 0.05 && tv_sbm < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn iqr(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |f: f64| {
        let pos = f * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    q(0.75) - q(0.25)
}

fn run_plan(json: &str) -> Result<Vec<Row>, String> {
    let plan = ExperimentPlan::from_json(json).map_err(|e| e.to_string())?;
    run_experiment(&plan, &RunOptions::default()).map_err(|e| e.to_string())
}

/// `rel_err` of the usable rows of one estimator, grouped by grid point.
fn errors_by_point(rows: &[Row], estimator: &str) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.estimator == estimator && r.is_ok())
    {
        if let Some(e) = r.rel_err {
            out.entry(r.point.clone()).or_default().push(e);
        }
    }
    out
}

fn vary_p_reduced() -> Outcome {
    let rows = run_plan(
        r#"{"name": "vary_p", "grid": {"N": [1000], "n": [280], "p": [0.1, 0.3, 0.5, 0.7, 0.9]},
            "replicates_per_point": 20, "chains_per_graph": 3, "base_seed": 20240601}"#,
    )?;
    let groups = errors_by_point(&rows, "pulse");
    let mut ok = groups.len() == 5;
    let mut parts = Vec::new();
    let mut iqrs = BTreeMap::new();
    for (point, errs) in &groups {
        let mut e = errs.clone();
        let med = median(&mut e);
        let spread = iqr(&mut e);
        ok &= (-1.0..=1.0).contains(&med) && e.len() == 60;
        parts.push(format!(
            "{point}: median {med:+.3}% IQR {spread:.3}% ({} chains)",
            e.len()
        ));
        iqrs.insert(point.clone(), spread);
    }
    let low = iqrs
        .iter()
        .find(|(k, _)| k.ends_with("p=0.1"))
        .map(|(_, v)| *v);
    let high = iqrs
        .iter()
        .find(|(k, _)| k.ends_with("p=0.9"))
        .map(|(_, v)| *v);
    let narrowing = matches!((low, high), (Some(l), Some(h)) if h < l);
    ok &= narrowing;
    let detail = format!(
        "{}; IQR at p=0.9 below p=0.1: {narrowing}",
        parts.join("; ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nsum_mean_bias(n: usize, replicates: usize, base: u64) -> (f64, usize) {
    let spec = SbmSpec::erdos_renyi(1000, 0.3).unwrap();
    let mut total = 0.0;
    let mut kept = 0;
    let mut seed = base;
    while kept < replicates {
        seed += 1;
        let g = generate_sbm(&spec, seed);
        let obs = sample_induced(&g, n, seed ^ 0x5A5A_5A5A).unwrap();
        let stats = sufficient_stats(&obs).unwrap();
        if let Ok(est) = nsum_estimate(&stats) {
            total += est.estimate - 1000.0;
            kept += 1;
        }
    }
    (total / kept as f64, kept)
}

fn nsum_positive_bias() -> Outcome {
    let (bias100, kept) = nsum_mean_bias(100, 2000, 1 << 32);
    let (bias500, _) = nsum_mean_bias(500, 2000, 2 << 32);
    let detail = format!(
        "mean bias {bias100:.3} at n=100 over {kept} replicates (need >= 8.0, bound N/n-1 = 9), {bias500:.3} at n=500"
    );
    if bias100 >= 8.0 && bias500 < bias100 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn epsilon_sweep_reduced() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (eps, expect) in [(0.3, [0.9298, 0.7104, 0.2]), (-0.3, [0.0702, 0.2896, 0.8])] {
        let spec = cohesion_spec(350, 500, 0.5, eps).map_err(|e| e.to_string())?;
        let got = [spec.prob(0, 0), spec.prob(1, 1), spec.prob(0, 1)];
        let matches = got.iter().zip(&expect).all(|(g, e)| (g - e).abs() < 5e-5);
        ok &= matches;
        parts.push(format!(
            "eps={eps:+}: p11/p22/p12 = {:.4}/{:.4}/{:.4}",
            got[0], got[1], got[2]
        ));
    }
    let rows = run_plan(
        r#"{"name": "epsilon_sweep", "grid": {"N1": 350, "N2": 500, "p_tilde": 0.5, "epsilon": [-0.3, 0.0, 0.3], "n": [280]},
            "replicates_per_point": 20, "chains_per_graph": 3, "base_seed": 20240602}"#,
    )?;
    let mut by_eps: BTreeMap<String, (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let key = format!("{:+.1}", r.epsilon.unwrap_or(f64::NAN));
        let entry = by_eps.entry(key).or_default();
        let Some(err) = r.rel_err else { continue };
        if r.estimator == "pulse" {
            let blocks = r.block_errors();
            entry.0.push(err);
            entry.1.push(blocks[0]);
            entry.2.push(blocks[1]);
        } else if r.estimator == "nsum" {
            entry.3.push(err);
        }
    }
    ok &= by_eps.len() == 3;
    for (eps, (mut n, mut n1, mut n2, mut ns)) in by_eps {
        let (mn, m1, m2, mns) = (
            median(&mut n),
            median(&mut n1),
            median(&mut n2),
            median(&mut ns),
        );
        let within = [mn, m1, m2].iter().all(|m| m.abs() <= 1.5);
        ok &= within && mns > 0.0 && n.len() == 60;
        parts.push(format!(
            "eps={eps}: PULSE median N {mn:+.2}% N1 {m1:+.2}% N2 {m2:+.2}% ({} chains){}, NSUM median {mns:+.2}%",
            n.len(),
            if within { "" } else { " [outside 1.5%]" }
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn moment_diagnostic() -> Outcome {
    let blocks = vec![0, 0, 0, 1, 1];
    let example =
        SufficientStats::from_parts(2, blocks.clone(), vec![0; 5], vec![vec![2, 1], vec![1, 0]])
            .unwrap();
    let check = moment_existence(&example, &PriorSpec::uniform(2, 10), 2);
    let mut ok = check.lambda == 3.0 && !check.exists;
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for e11 in 0..=3u64 {
        for e12 in 0..=3u64 {
            for e22 in 0..=1u64 {
                let e = vec![vec![e11, e12], vec![e12, e22]];
                let stats = SufficientStats::from_parts(2, blocks.clone(), vec![1; 5], e).unwrap();
                let prior = PriorSpec::uniform(2, 20);
                let lambda = moment_existence(&stats, &prior, 2).lambda;
                let cfg = ChainConfig {
                    iterations: 200,
                    burn_in: 100,
                    thin: 1,
                    ..ChainConfig::default()
                };
                let init = init_state(&stats, &prior, None).map_err(|e| e.to_string())?;
                let trace = run_chain_sbm(&stats, &prior, &cfg, init).map_err(|e| e.to_string())?;
                let warned = trace
                    .warnings
                    .iter()
                    .any(|w| matches!(w, ChainWarning::VarianceUndefined { .. }));
                if warned != (lambda <= 3.0) {
                    mismatches.push(format!(
                        "E=({e11},{e12},{e22}) lambda={lambda} warned={warned}"
                    ));
                }
                runs += 1;
            }
        }
    }
    ok &= mismatches.is_empty();
    let detail = format!(
        "worked example lambda = {} (variance exists: {}); warning agreed with lambda <= 3 on {}/{runs} chains{}",
        check.lambda,
        check.exists,
        runs - mismatches.len(),
        if mismatches.is_empty() { String::new() } else { format!(" ({})", mismatches.join(", ")) }
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Chi-square statistic for observed counts against equal expected counts,
/// and its 99th percentile.
fn chi_square(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let crit = ChiSquared::new((counts.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    (stat, crit)
}

fn proposal_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC41);
    let mut ok = true;
    let mut parts = Vec::new();
    let draws = 60_000;
    for (current, lower, window) in [(50u64, 0u64, 5u64), (3, 2, 4), (0, 0, 3), (10, 10, 1)] {
        let (lo, hi) = count_window(current, lower, window);
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        let mut outside = 0;
        for _ in 0..draws {
            let x = propose_block_count(current, lower, window, &mut rng);
            if (lo..=hi).contains(&x) {
                counts[(x - lo) as usize] += 1;
            } else {
                outside += 1;
            }
        }
        let (stat, crit) = chi_square(&counts);
        ok &= outside == 0 && stat < crit;
        parts.push(format!(
            "count({current},{lower},{window}) chi2 {stat:.1} < {crit:.1}"
        ));
    }
    let cases: [(&[u64], &[u64]); 3] = [
        (&[2, 0, 1], &[3, 2, 1]),
        (&[1, 1, 1, 0], &[1, 4, 2, 2]),
        (&[3, 1], &[5, 3]),
    ];
    for (y, nt) in cases {
        let k = y.len();
        let admissible: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && y[i] > 0 && y[j] < nt[j])
            .collect();
        let mut counts = vec![0u64; admissible.len()];
        let mut bad = 0;
        for _ in 0..draws {
            let Some((next, _)) = propose_pendant_move(y, nt, &mut rng) else {
                bad += 1;
                continue;
            };
            let from = (0..k).find(|&i| next[i] + 1 == y[i]);
            let to = (0..k).find(|&i| next[i] == y[i] + 1);
            match (from, to) {
                (Some(f), Some(t)) => match admissible.iter().position(|&p| p == (f, t)) {
                    Some(idx) => counts[idx] += 1,
                    None => bad += 1,
                },
                _ => bad += 1,
            }
        }
        let (stat, crit) = chi_square(&counts);
        ok &= bad == 0 && stat < crit;
        parts.push(format!(
            "pendant{y:?}/{nt:?} chi2 {stat:.1} < {crit:.1} over {} pairs",
            admissible.len()
        ));
    }
    let mut avail_mismatch = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=6);
        let nt: Vec<u64> = (0..k).map(|_| rng.random_range(0..=5)).collect();
        let y: Vec<u64> = nt.iter().map(|&n| rng.random_range(0..=n)).collect();
        let brute = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && y[i] > 0 && y[j] < nt[j])
            .count() as u64;
        if avail(&y, &nt) != brute {
            avail_mismatch += 1;
        }
    }
    ok &= avail_mismatch == 0;
    parts.push(format!("avail mismatches {avail_mismatch}/10000"));
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn experiment_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"name": "vary_p", "grid": {"N": [80], "n": [30], "p": [0.2, 0.5]},
            "replicates_per_point": 2, "chains_per_graph": 2, "base_seed": 7,
            "chain": {"iterations": 4000, "burn_in": 1000}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for (i, jobs) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_netsize"))
            .arg("experiment")
            .arg(&plan)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "netsize experiment failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        let bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
        let body = match bytes.first() {
            Some(b'#') => {
                let cut = bytes
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |p| p + 1);
                bytes[cut..].to_vec()
            }
            _ => bytes,
        };
        bodies.push(body);
    }
    let rows = bodies[0].iter().filter(|&&b| b == b'\n').count();
    if bodies[0] == bodies[1] && rows > 1 {
        Ok(format!(
            "two runs (--jobs 1 and 2) gave identical CSV bodies, {rows} lines"
        ))
    } else {
        Err(format!(
            "CSV bodies differ ({} vs {} bytes)",
            bodies[0].len(),
            bodies[1].len()
        ))
    }
}
