use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{cohesion_spec, crp_assignment, generate_sbm, SbmSpec};
use crate::nsum::nsum_estimate;
use crate::observation::{sample_induced, sufficient_stats, SufficientStats};
use crate::pulse::{init_state, run_chain_sbm, ChainConfig};
use crate::summary::{relative_error, summarize};

use super::plan::{ExperimentPlan, Protocol, ScaleCounts};
use super::seeds::{derive_seed, point_key, SLOT_CHAIN, SLOT_GRAPH, SLOT_PARAMS, SLOT_SAMPLE};

/// How the generative model of a grid point is obtained for each graph.
#[derive(Debug, Clone, PartialEq)]
pub enum PointModel {
    Fixed(SbmSpec),
    /// Two blocks with `p11, p22 ~ U[0.5, 1]` and `p12 ~ U[0, min(p11, p22)]`.
    RandomTwoBlock {
        n1: usize,
        n2: usize,
    },
    /// Restaurant-process blocks with `p_ii ~ U[0.7, 1]` and
    /// `p_ij ~ U[0, min(p_ii, p_jj)]`.
    RandomCrp {
        n_total: usize,
        n_seed: usize,
        concentration: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub n_sample: usize,
    pub epsilon: Option<f64>,
    pub n1_fraction: Option<f64>,
    /// The model, or why this point cannot be run.
    pub model: std::result::Result<PointModel, String>,
}

impl GridPoint {
    fn max_vertices(&self) -> usize {
        match &self.model {
            Ok(PointModel::Fixed(s)) => s.n_vertices(),
            Ok(PointModel::RandomTwoBlock { n1, n2 }) => n1 + n2,
            Ok(PointModel::RandomCrp { n_total, .. }) => *n_total,
            Err(_) => 0,
        }
    }
}

fn check_sample(model: PointModel, n: usize) -> std::result::Result<PointModel, String> {
    let total = match &model {
        PointModel::Fixed(s) => s.n_vertices(),
        PointModel::RandomTwoBlock { n1, n2 } => n1 + n2,
        PointModel::RandomCrp { n_total, .. } => *n_total,
    };
    if n == 0 || n > total {
        Err(format!("sample size {n} outside 1..={total}"))
    } else {
        Ok(model)
    }
}

pub fn grid_points(plan: &ExperimentPlan) -> Vec<GridPoint> {
    let mut points = Vec::new();
    match &plan.protocol {
        Protocol::VaryP(g) | Protocol::VaryNetworkSize(g) | Protocol::VarySampleSize(g) => {
            let (dn, dsample, dp): (Vec<usize>, Vec<usize>, Vec<f64>) = match &plan.protocol {
                Protocol::VaryP(_) => (
                    vec![1000],
                    vec![280],
                    vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                ),
                Protocol::VaryNetworkSize(_) => (
                    vec![400, 500, 600, 700, 800, 900, 1000],
                    vec![280],
                    vec![0.3],
                ),
                _ => (vec![1000], vec![100, 200, 300, 400, 500], vec![0.3]),
            };
            for &n_total in g.n_total.as_ref().unwrap_or(&dn) {
                for &n in g.n.as_ref().unwrap_or(&dsample) {
                    for &p in g.p.as_ref().unwrap_or(&dp) {
                        let model = SbmSpec::erdos_renyi(n_total, p)
                            .map_err(|e| e.to_string())
                            .and_then(|s| check_sample(PointModel::Fixed(s), n));
                        points.push(GridPoint {
                            label: format!("N={n_total},n={n},p={p}"),
                            n_sample: n,
                            epsilon: None,
                            n1_fraction: None,
                            model,
                        });
                    }
                }
            }
        }
        Protocol::PartitionHeatmap(g) => {
            for &frac in &g.n1_fraction {
                for &n in &g.n {
                    let n1 = (frac * g.n_total as f64).round() as usize;
                    let model = if n1 == 0 || n1 >= g.n_total {
                        Err(format!("N1/N = {frac} leaves an empty block"))
                    } else {
                        check_sample(
                            PointModel::RandomTwoBlock {
                                n1,
                                n2: g.n_total - n1,
                            },
                            n,
                        )
                    };
                    points.push(GridPoint {
                        label: format!("N={},N1/N={frac},n={n}", g.n_total),
                        n_sample: n,
                        epsilon: None,
                        n1_fraction: Some(frac),
                        model,
                    });
                }
            }
        }
        Protocol::EpsilonSweep(g) => {
            for &eps in &g.epsilon {
                for &n in &g.n {
                    let model = cohesion_spec(g.n1, g.n2, g.p_tilde, eps)
                        .map_err(|e| e.to_string())
                        .and_then(|s| check_sample(PointModel::Fixed(s), n));
                    points.push(GridPoint {
                        label: format!(
                            "N1={},N2={},p_tilde={},epsilon={eps},n={n}",
                            g.n1, g.n2, g.p_tilde
                        ),
                        n_sample: n,
                        epsilon: Some(eps),
                        n1_fraction: None,
                        model,
                    });
                }
            }
        }
        Protocol::CrpKSweep(g) => {
            for &frac in &g.sampling_fraction {
                let n = (frac * g.n_total as f64).round() as usize;
                let model = check_sample(
                    PointModel::RandomCrp {
                        n_total: g.n_total,
                        n_seed: g.n_seed,
                        concentration: g.concentration,
                    },
                    n,
                );
                points.push(GridPoint {
                    label: format!("N={},n/N={frac}", g.n_total),
                    n_sample: n,
                    epsilon: None,
                    n1_fraction: None,
                    model,
                });
            }
        }
        Protocol::SingleRun(g) => points.push(GridPoint {
            label: format!("N={},K={},n={}", g.spec.n_vertices(), g.spec.k(), g.n),
            n_sample: g.n,
            epsilon: None,
            n1_fraction: None,
            model: check_sample(PointModel::Fixed(g.spec.clone()), g.n),
        }),
    }
    points
}

/// Draws the concrete model of one graph.
pub fn realize_model(model: &PointModel, params_seed: u64) -> Result<SbmSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(params_seed);
    match model {
        PointModel::Fixed(spec) => Ok(spec.clone()),
        PointModel::RandomTwoBlock { n1, n2 } => {
            let p11 = rng.random_range(0.5..=1.0);
            let p22 = rng.random_range(0.5..=1.0);
            let p12 = rng.random_range(0.0..=f64::min(p11, p22));
            SbmSpec::new(vec![*n1, *n2], vec![vec![p11, p12], vec![p12, p22]])
        }
        PointModel::RandomCrp {
            n_total,
            n_seed,
            concentration,
        } => {
            let partition =
                crp_assignment(*n_seed, n_total - n_seed, *concentration, rng.random())?;
            let k = partition.k();
            let mut p = vec![vec![0.0; k]; k];
            for (i, row) in p.iter_mut().enumerate() {
                row[i] = rng.random_range(0.7..=1.0);
            }
            for i in 0..k {
                for j in (i + 1)..k {
                    let x = rng.random_range(0.0..=f64::min(p[i][i], p[j][j]));
                    p[i][j] = x;
                    p[j][i] = x;
                }
            }
            SbmSpec::new(partition.block_sizes, p)
        }
    }
}

/// One CSV record. Relative errors are in percent; list-valued fields are
/// joined with `;` in block order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Row {
    pub experiment: String,
    pub point: String,
    pub graph: usize,
    pub chain: Option<usize>,
    pub estimator: String,
    pub status: String,
    pub base_seed: u64,
    pub params_seed: Option<u64>,
    pub graph_seed: Option<u64>,
    pub sample_seed: Option<u64>,
    pub chain_seed: Option<u64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "N_true")]
    pub n_true: Option<usize>,
    pub n: Option<usize>,
    pub block_sizes: String,
    /// Upper triangle of the edge-probability matrix, row by row.
    pub p: String,
    pub epsilon: Option<f64>,
    pub n1_frac: Option<f64>,
    #[serde(rename = "N_hat")]
    pub n_hat: Option<f64>,
    pub rel_err: Option<f64>,
    pub sd: Option<f64>,
    pub q025: Option<f64>,
    pub q975: Option<f64>,
    #[serde(rename = "map_N")]
    pub map_n: Option<u64>,
    pub block_hat: String,
    pub block_rel_err: String,
    pub accept_nt: Option<f64>,
    pub accept_y: Option<f64>,
    pub lambda: Option<f64>,
    pub warnings: String,
}

pub const COLUMNS: [&str; 30] = [
    "experiment",
    "point",
    "graph",
    "chain",
    "estimator",
    "status",
    "base_seed",
    "params_seed",
    "graph_seed",
    "sample_seed",
    "chain_seed",
    "K",
    "N_true",
    "n",
    "block_sizes",
    "p",
    "epsilon",
    "n1_frac",
    "N_hat",
    "rel_err",
    "sd",
    "q025",
    "q975",
    "map_N",
    "block_hat",
    "block_rel_err",
    "accept_nt",
    "accept_y",
    "lambda",
    "warnings",
];

impl Row {
    /// Per-block relative errors in percent.
    pub fn block_errors(&self) -> Vec<f64> {
        parse_list(&self.block_rel_err)
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn parse_list(field: &str) -> Vec<f64> {
    field
        .split(';')
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse().ok())
        .collect()
}

fn join<T: fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn upper_triangle(spec: &SbmSpec) -> String {
    let k = spec.k();
    join(
        (0..k)
            .flat_map(|i| (i..k).map(move |j| (i, j)))
            .map(|(i, j)| spec.prob(i, j)),
    )
}

pub(crate) fn percent(estimate: f64, truth: f64) -> Option<f64> {
    relative_error(estimate, truth).ok().map(|e| 100.0 * e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub points: usize,
    pub graphs: usize,
    pub pair_draws: f64,
    pub chains: usize,
    pub chain_iterations: f64,
    pub seconds: f64,
}

impl fmt::Display for CostEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} grid points, {} graphs ({:.2e} pair draws), {} chains ({:.2e} iterations); roughly {:.0} s on one core",
            self.points, self.graphs, self.pair_draws, self.chains, self.chain_iterations, self.seconds
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub full_scale: bool,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

pub fn estimate_cost(plan: &ExperimentPlan, opts: &RunOptions) -> CostEstimate {
    let ScaleCounts {
        replicates_per_point: reps,
        chains_per_graph: chains,
    } = plan.counts(opts.full_scale);
    let points = grid_points(plan);
    let iterations = plan.chain_config().iterations as f64;
    let mut pair_draws = 0.0;
    let mut seconds = 0.0;
    let mut runnable = 0;
    for p in &points {
        if p.model.is_err() {
            continue;
        }
        runnable += 1;
        let nv = p.max_vertices() as f64;
        pair_draws += reps as f64 * nv * (nv - 1.0) / 2.0;
        let per_iter = if matches!(p.model, Ok(PointModel::Fixed(ref s)) if s.k() == 1) {
            2.5e-7
        } else {
            6e-7
        };
        seconds += reps as f64 * (nv * nv * 4e-9 + chains as f64 * iterations * per_iter);
    }
    CostEstimate {
        points: points.len(),
        graphs: runnable * reps,
        pair_draws,
        chains: runnable * reps * chains,
        chain_iterations: (runnable * reps * chains) as f64 * iterations,
        seconds,
    }
}

struct Context<'a> {
    plan: &'a ExperimentPlan,
    chain: ChainConfig,
    chains: usize,
}

impl Context<'_> {
    fn base_row(&self, point: &GridPoint, graph: usize) -> Row {
        Row {
            experiment: self.plan.name().to_string(),
            point: point.label.clone(),
            graph,
            base_seed: self.plan.base_seed,
            n: Some(point.n_sample),
            epsilon: point.epsilon,
            n1_frac: point.n1_fraction,
            ..Row::default()
        }
    }

    fn run_graph(&self, point: &GridPoint, graph: usize) -> Vec<Row> {
        let mut base = self.base_row(point, graph);
        let model = match &point.model {
            Ok(m) => m,
            Err(msg) => {
                return if graph == 0 {
                    base.estimator = "-".into();
                    base.status = format!("error: {msg}");
                    vec![base]
                } else {
                    Vec::new()
                };
            }
        };
        let key = point_key(&point.label);
        let seed = |slot| derive_seed(self.plan.base_seed, key, graph as u64, slot);
        base.params_seed = Some(seed(SLOT_PARAMS));
        base.graph_seed = Some(seed(SLOT_GRAPH));
        base.sample_seed = Some(seed(SLOT_SAMPLE));

        let prepared = realize_model(model, seed(SLOT_PARAMS)).and_then(|spec| {
            let g = generate_sbm(&spec, seed(SLOT_GRAPH));
            let obs = sample_induced(&g, point.n_sample, seed(SLOT_SAMPLE))?;
            Ok((spec, sufficient_stats(&obs)?))
        });
        let (spec, stats) = match prepared {
            Ok(x) => x,
            Err(e) => {
                base.estimator = "-".into();
                base.status = format!("error: {e}");
                return vec![base];
            }
        };
        base.k = Some(spec.k());
        base.n_true = Some(spec.n_vertices());
        base.block_sizes = join(spec.block_sizes());
        base.p = upper_triangle(&spec);
        log::info!("{} graph {graph}", point.label);

        let mut rows = Vec::with_capacity(self.chains + 1);
        let truth = spec.n_vertices() as f64;
        let mut nsum_row = Row {
            estimator: "nsum".into(),
            ..base.clone()
        };
        let hint = match nsum_estimate(&stats) {
            Ok(r) => {
                nsum_row.status = "ok".into();
                nsum_row.n_hat = Some(r.estimate);
                nsum_row.rel_err = percent(r.estimate, truth);
                Some(r.estimate)
            }
            Err(e) => {
                nsum_row.status = format!("undefined: {e}");
                None
            }
        };
        rows.push(nsum_row);

        for c in 0..self.chains {
            let chain_seed = seed(SLOT_CHAIN + c as u64);
            let mut row = Row {
                estimator: "pulse".into(),
                chain: Some(c),
                chain_seed: Some(chain_seed),
                ..base.clone()
            };
            match self.run_pulse(&spec, &stats, point.n_sample, hint, chain_seed, &mut row) {
                Ok(()) => row.status = "ok".into(),
                Err(e) => row.status = format!("error: {e}"),
            }
            rows.push(row);
        }
        rows
    }

    fn run_pulse(
        &self,
        spec: &SbmSpec,
        stats: &SufficientStats,
        n: usize,
        hint: Option<f64>,
        chain_seed: u64,
        row: &mut Row,
    ) -> Result<()> {
        let prior = self.plan.prior.resolve(stats.k(), n)?;
        let init = init_state(stats, &prior, hint)?;
        let cfg = ChainConfig {
            seed: chain_seed,
            ..self.chain.clone()
        };
        let trace = run_chain_sbm(stats, &prior, &cfg, init)?;
        let summary = summarize(&trace, n, stats.v_counts())?;
        let truth = spec.n_vertices() as f64;
        row.n_hat = Some(summary.mean_n());
        row.rel_err = percent(summary.mean_n(), truth);
        row.sd = Some(summary.sd_n());
        row.q025 = summary.n_total.quantile(0.025);
        row.q975 = summary.n_total.quantile(0.975);
        row.map_n = Some(summary.map_n);
        row.block_hat = join(summary.per_block.iter().map(|m| m.mean));
        row.block_rel_err = join(
            summary
                .per_block
                .iter()
                .zip(spec.block_sizes())
                .map(|(m, &b)| percent(m.mean, b as f64).unwrap_or(f64::NAN)),
        );
        row.accept_nt = Some(trace.accept_rate_ntilde);
        row.accept_y = Some(trace.accept_rate_y);
        row.lambda = Some(trace.lambda);
        row.warnings = trace
            .warnings
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(" | ");
        Ok(())
    }
}

/// Runs every grid point, graph replicate and chain. Rows come back in
/// (point, graph, chain) order whatever the thread count.
pub fn run_experiment(plan: &ExperimentPlan, opts: &RunOptions) -> Result<Vec<Row>> {
    plan.validate()?;
    let counts = plan.counts(opts.full_scale);
    let ctx = Context {
        plan,
        chain: plan.chain_config(),
        chains: counts.chains_per_graph,
    };
    let points = grid_points(plan);
    let tasks: Vec<(&GridPoint, usize)> = points
        .iter()
        .flat_map(|p| (0..counts.replicates_per_point).map(move |g| (p, g)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(Error::validation("jobs", "must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker threads: {e}")))?;
    let rows: Vec<Vec<Row>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, g)| ctx.run_graph(p, g))
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Writes the rows as CSV. A leading `# ...` comment line carries the
/// timestamp when one is given.
pub fn write_csv<W: Write>(out: W, rows: &[Row], comment: Option<&str>) -> Result<()> {
    let mut out = out;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
