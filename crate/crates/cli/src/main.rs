use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use netsize_core::experiment::{
    emit_plot_script, estimate_cost, run_experiment, write_csv, ExperimentPlan, PlotKind,
    RunOptions,
};
use netsize_core::graph::{generate_sbm, read_typed_graph, write_edge_list, write_labels, SbmSpec};
use netsize_core::nsum::nsum_estimate;
use netsize_core::observation::{sample_induced, sufficient_stats, ObservedData};
use netsize_core::pulse::{init_state, run_chain_sbm, ChainConfig, PriorConfig};
use netsize_core::summary::{relative_error, summarize};
use netsize_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "netsize",
    version,
    about = "Estimate the size of a hidden block-model graph from an induced subgraph sample"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a block-model spec (JSON with block_sizes and p).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes PREFIX.edges and PREFIX.labels.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a uniform induced-subgraph sample and write the observed data as JSON.
    Sample {
        edges: PathBuf,
        labels: PathBuf,
        /// Sample size.
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale-up estimate from an observed-data file.
    EstimateNsum {
        observed: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior sampling of the unseen block counts.
    EstimatePulse {
        observed: PathBuf,
        /// JSON with optional "prior" and "chain" sections.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the chain seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every recorded sample to this CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// True N, if known, to report the relative error.
        #[arg(long)]
        truth: Option<f64>,
    },
    /// Run an experiment plan.
    Experiment {
        plan: PathBuf,
        /// Output CSV; defaults to the plan's output_path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the plan's base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Use the full replicate counts instead of the desk-scale ones.
        #[arg(long)]
        full_scale: bool,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write a gnuplot script for an experiment CSV.
    PlotScript {
        csv: PathBuf,
        #[arg(long, default_value = "boxplot")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseConfig {
    #[serde(default)]
    prior: PriorConfig,
    #[serde(default)]
    chain: Option<ChainConfig>,
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Argument(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io(io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", path.display()),
        ))
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Validation {
            field: what.to_string(),
            reason: e.to_string(),
        },
        _ => Error::Parse(format!("{what}: {e}")),
    })
}

fn generate(config: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec: SbmSpec = parse_json(&read_input(config)?, "spec")?;
    let graph = generate_sbm(&spec, seed);
    let edges = out.with_extension("edges");
    let labels = out.with_extension("labels");
    write_edge_list(&graph, BufWriter::new(create(&edges)?))?;
    write_labels(&graph, BufWriter::new(create(&labels)?))?;
    eprintln!(
        "wrote {} vertices and {} edges to {} and {}",
        graph.n_vertices(),
        graph.n_edges(),
        edges.display(),
        labels.display()
    );
    Ok(())
}

fn sample(edges: &Path, labels: &Path, n: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let graph = read_typed_graph(open_input(edges)?, open_input(labels)?)?;
    let obs = sample_induced(&graph, n, seed)?;
    let mut w = output(out)?;
    writeln!(w, "{}", obs.to_json()?)?;
    w.flush()?;
    Ok(())
}

fn estimate_nsum(observed: &Path, out: Option<&Path>) -> Result<()> {
    let obs = ObservedData::from_json(&read_input(observed)?)?;
    let stats = sufficient_stats(&obs)?;
    let r = nsum_estimate(&stats)?;
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record([
        "estimate",
        "alternate",
        "n",
        "sum_degrees",
        "e_s",
        "bias_lower_bound",
    ])?;
    w.write_record([
        r.estimate.to_string(),
        r.alternate.to_string(),
        r.n.to_string(),
        r.sum_degrees.to_string(),
        r.e_s.to_string(),
        r.bias_lower_bound.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn estimate_pulse(
    observed: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    trace_path: Option<&Path>,
    truth: Option<f64>,
) -> Result<()> {
    let obs = ObservedData::from_json(&read_input(observed)?)?;
    let cfg: PulseConfig = match config {
        Some(p) => parse_json(&read_input(p)?, "config")?,
        None => PulseConfig::default(),
    };
    let stats = sufficient_stats(&obs)?;
    let n = stats.n();
    let prior = cfg.prior.resolve(stats.k(), n)?;
    let mut chain = cfg
        .chain
        .unwrap_or_else(|| ChainConfig::for_blocks(stats.k()));
    if let Some(s) = seed {
        chain.seed = s;
    }
    let hint = nsum_estimate(&stats).ok().map(|r| r.estimate);
    let init = init_state(&stats, &prior, hint)?;
    let trace = run_chain_sbm(&stats, &prior, &chain, init)?;
    let summary = summarize(&trace, n, stats.v_counts())?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }

    let q = |m: &netsize_core::summary::Moments, p: f64| m.quantile(p).unwrap_or(f64::NAN);
    let t = &summary.n_total;
    let rel_err = match truth {
        Some(x) => (100.0 * relative_error(summary.mean_n(), x)?).to_string(),
        None => String::new(),
    };
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record([
        "estimator",
        "seed",
        "N_hat",
        "rel_err",
        "sd",
        "q025",
        "q25",
        "q50",
        "q75",
        "q975",
        "map_N",
        "block_hat",
        "block_sd",
        "block_q025",
        "block_q975",
        "accept_nt",
        "accept_y",
        "lambda",
        "n_samples",
        "warnings",
    ])?;
    let pb = &summary.per_block;
    w.write_record([
        "pulse".to_string(),
        chain.seed.to_string(),
        summary.mean_n().to_string(),
        rel_err,
        summary.sd_n().to_string(),
        q(t, 0.025).to_string(),
        q(t, 0.25).to_string(),
        q(t, 0.5).to_string(),
        q(t, 0.75).to_string(),
        q(t, 0.975).to_string(),
        summary.map_n.to_string(),
        join(pb.iter().map(|m| m.mean)),
        join(pb.iter().map(|m| m.sd)),
        join(pb.iter().map(|m| q(m, 0.025))),
        join(pb.iter().map(|m| q(m, 0.975))),
        trace.accept_rate_ntilde.to_string(),
        trace.accept_rate_y.to_string(),
        trace.lambda.to_string(),
        summary.n_samples.to_string(),
        trace
            .warnings
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(" | "),
    ])?;
    w.flush()?;

    if let Some(path) = trace_path {
        let k = stats.k();
        let mut tw = csv::Writer::from_writer(create(path)?);
        let mut header = vec!["sample".to_string()];
        header.extend((1..=k).map(|i| format!("ntilde_{i}")));
        header.extend(["N".to_string(), "log_posterior".to_string()]);
        tw.write_record(&header)?;
        for (idx, (s, lp)) in trace
            .samples
            .iter()
            .zip(&trace.log_posterior_trace)
            .enumerate()
        {
            let mut rec = vec![idx.to_string()];
            rec.extend(s.iter().map(|x| x.to_string()));
            rec.push((s.iter().sum::<u64>() + n as u64).to_string());
            rec.push(lp.to_string());
            tw.write_record(&rec)?;
        }
        tw.flush()?;
    }
    Ok(())
}

fn experiment(
    plan_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    full_scale: bool,
    jobs: Option<usize>,
) -> Result<()> {
    let mut plan = ExperimentPlan::from_json(&read_input(plan_path)?)?;
    if let Some(s) = seed {
        plan.base_seed = s;
    }
    let opts = RunOptions { full_scale, jobs };
    eprintln!("{}: {}", plan.name(), estimate_cost(&plan, &opts));
    let rows = run_experiment(&plan, &opts)?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let comment = format!(
        "netsize experiment {}, generated at unix time {stamp}",
        plan.name()
    );
    let target = out
        .map(Path::to_path_buf)
        .or_else(|| plan.output_path.as_ref().map(PathBuf::from));
    write_csv(output(target.as_deref())?, &rows, Some(&comment))?;
    let failed = rows
        .iter()
        .filter(|r| r.status.starts_with("error"))
        .count();
    if failed > 0 {
        eprintln!("{failed} rows recorded errors");
    }
    Ok(())
}

fn plot_script(csv_path: &Path, kind: &str, out: Option<&Path>) -> Result<()> {
    let kind: PlotKind = kind.parse()?;
    let text = read_input(csv_path)?;
    let script = emit_plot_script(&text, kind)?;
    for w in &script.warnings {
        eprintln!("warning: {w}");
    }
    let mut w = output(out)?;
    w.write_all(script.script.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, seed, out } => generate(&config, seed, &out),
        Command::Sample {
            edges,
            labels,
            n,
            seed,
            out,
        } => sample(&edges, &labels, n, seed, out.as_deref()),
        Command::EstimateNsum { observed, out } => estimate_nsum(&observed, out.as_deref()),
        Command::EstimatePulse {
            observed,
            config,
            seed,
            out,
            trace,
            truth,
        } => estimate_pulse(
            &observed,
            config.as_deref(),
            seed,
            out.as_deref(),
            trace.as_deref(),
            truth,
        ),
        Command::Experiment {
            plan,
            out,
            seed,
            full_scale,
            jobs,
        } => experiment(&plan, out.as_deref(), seed, full_scale, jobs),
        Command::PlotScript { csv, kind, out } => plot_script(&csv, &kind, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
