use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use bmfsim::eigenmodel::fit;
use bmfsim::io::read_matrix;
use bmfsim::network::load_edge_list;
use bmfsim::stats::{mean, psrf, quantile};
use bmfsim::{stream_rng, ChainOutput, EigenmodelConfig, Init, NetworkData, Unlisted};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::output::{format_table, num};
use crate::{Format, Globals, UsageError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `i j [value]` lines, 1-based unless a 0 index appears.
    Edges,
    /// Square adjacency matrix; NA or -1 marks a missing pair.
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnlistedArg {
    Absent,
    Missing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Random,
    Spectral,
    /// Alternate spectral and random starts across chains.
    Mixed,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Edges)]
    pub input_format: InputFormat,
    /// Node count for edge lists; otherwise taken from the file.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// How pairs missing from an edge list are treated.
    #[arg(long, value_enum, default_value_t = UnlistedArg::Absent)]
    pub unlisted: UnlistedArg,
    /// Latent dimension.
    #[arg(long = "R")]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Mixed)]
    pub init: InitArg,
    #[arg(long, default_value_t = 11_000)]
    pub n_iter: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    /// Prior variance of each eigenvalue; defaults to the node count.
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long, default_value_t = bmfsim::eigenmodel::DEFAULT_C_PRIOR_VAR)]
    pub c_prior_var: f64,
    #[arg(long, default_value_t = 1)]
    pub n_inner: usize,
}

fn load(args: &FitArgs) -> anyhow::Result<NetworkData> {
    Ok(match args.input_format {
        InputFormat::Edges => {
            let unlisted = match args.unlisted {
                UnlistedArg::Absent => Unlisted::Absent,
                UnlistedArg::Missing => Unlisted::Missing,
            };
            load_edge_list(&args.input, args.nodes, unlisted)
                .with_context(|| format!("reading {}", args.input.display()))?
        }
        InputFormat::Matrix => {
            let mat = read_matrix(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
            NetworkData::from_matrix(&mat)?
        }
    })
}

fn chain_init(init: InitArg, k: usize) -> Init {
    match init {
        InitArg::Random => Init::Random,
        InitArg::Spectral => Init::Spectral,
        InitArg::Mixed if k.is_multiple_of(2) => Init::Spectral,
        InitArg::Mixed => Init::Random,
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn write(dir: &Path, name: &str, text: &str, outputs: &mut Vec<String>) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(name.to_string());
    Ok(())
}

fn matrix_text(m: &DMatrix<f64>, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            bmfsim::io::write_matrix(&mut buf, m, ",")?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
            Ok(serde_json::to_string(&rows)? + "\n")
        }
    }
}

fn trace_text(chain: &ChainOutput, r: usize, format: Format) -> anyhow::Result<String> {
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=r).map(|k| format!("lambda_{k}")));
    header.push("c".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Value>> = chain
        .iterations
        .iter()
        .zip(&chain.lambda)
        .zip(&chain.c)
        .map(|((&it, l), &c)| {
            let mut row = vec![json!(it)];
            row.extend(l.iter().map(|&v| num(v)));
            row.push(num(c));
            row
        })
        .collect();
    format_table(&header, &rows, format)
}

/// PSRF and pooled summaries of each sorted eigenvalue and of `c`.
fn convergence_rows(chains: &[ChainOutput], r: usize) -> Vec<Vec<Value>> {
    let sorted: Vec<Vec<nalgebra::DVector<f64>>> = chains.iter().map(ChainOutput::sorted_lambda).collect();
    let mut rows = Vec::new();
    let mut push = |name: String, per_chain: Vec<Vec<f64>>| {
        let pooled: Vec<f64> = per_chain.iter().flatten().copied().collect();
        let r_hat = if per_chain.len() >= 2 { psrf(&per_chain) } else { f64::NAN };
        rows.push(vec![
            json!(name),
            num(r_hat),
            num(mean(&pooled)),
            num(quantile(&pooled, 0.025)),
            num(quantile(&pooled, 0.975)),
        ]);
    };
    for k in 0..r {
        push(format!("lambda_sorted_{}", k + 1), sorted.iter().map(|s| s.iter().map(|v| v[k]).collect()).collect());
    }
    push("c".into(), chains.iter().map(|c| c.c.clone()).collect());
    rows
}

pub fn run(globals: &Globals, args: &FitArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let Some(dir) = &globals.out else {
        return Err(UsageError("eigenmodel-fit needs --out DIR".into()).into());
    };
    if args.chains == 0 {
        return Err(UsageError("--chains must be at least 1".into()).into());
    }
    if args.thin == 0 {
        return Err(UsageError("--thin must be at least 1".into()).into());
    }
    if args.burn_in >= args.n_iter {
        return Err(UsageError("--burn-in must be smaller than --n-iter".into()).into());
    }
    let data = load(args)?;
    let m = data.nodes();
    if args.r == 0 || args.r >= m {
        return Err(UsageError(format!("need 1 <= R < nodes, got R={}, nodes={m}", args.r)).into());
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let base = EigenmodelConfig {
        tau2: args.tau2,
        n_iter: args.n_iter,
        burn_in: args.burn_in,
        thin: args.thin,
        c_prior_var: args.c_prior_var,
        n_inner: args.n_inner,
        ..EigenmodelConfig::new(args.r)
    };
    let chains: Vec<ChainOutput> = (0..args.chains)
        .into_par_iter()
        .map(|k| {
            let config = EigenmodelConfig { init: chain_init(args.init, k), ..base.clone() };
            let mut rng = stream_rng(globals.seed, k as u64);
            fit(&data, &config, &mut rng)
        })
        .collect::<bmfsim::Result<_>>()?;

    let format = globals.format;
    let mut outputs = Vec::new();
    for (k, chain) in chains.iter().enumerate() {
        write(dir, &format!("trace_chain{k}.{}", ext(format)), &trace_text(chain, args.r, format)?, &mut outputs)?;
    }
    let n_chains = chains.len() as f64;
    let post_mean = chains.iter().fold(DMatrix::zeros(m, m), |acc, c| acc + &c.posterior_mean) / n_chains;
    let link = chains.iter().fold(DMatrix::zeros(m, m), |acc, c| acc + &c.link_probability) / n_chains;
    write(dir, &format!("posterior_mean.{}", ext(format)), &matrix_text(&post_mean, format)?, &mut outputs)?;
    write(dir, &format!("link_probability.{}", ext(format)), &matrix_text(&link, format)?, &mut outputs)?;
    let header = ["parameter", "psrf", "mean", "lower95", "upper95"];
    let conv = format_table(&header, &convergence_rows(&chains, args.r), format)?;
    write(dir, &format!("convergence.{}", ext(format)), &conv, &mut outputs)?;

    let mut manifest = RunManifest::new(
        "eigenmodel-fit",
        globals.seed,
        json!({
            "input": args.input, "input_format": args.input_format, "nodes": m,
            "unlisted": args.unlisted, "R": args.r, "chains": args.chains, "init": args.init,
            "chain_inits": (0..args.chains).map(|k| format!("{:?}", chain_init(args.init, k)).to_lowercase()).collect::<Vec<_>>(),
            "n_iter": args.n_iter, "burn_in": args.burn_in, "thin": args.thin,
            "tau2": base.tau2_for(m), "c_prior_var": args.c_prior_var, "n_inner": args.n_inner,
            "format": format,
        }),
    );
    manifest.count("observed_pairs", data.n_observed() as f64);
    manifest.count("density", data.density());
    manifest.count("retained_per_chain", chains[0].iterations.len() as f64);
    let violations: u64 = chains.iter().map(|c| c.constraint_violations).sum();
    manifest.count("constraint_violations", violations as f64);
    let mut stats = bmfsim::SweepStats::default();
    for c in &chains {
        stats += c.stats;
    }
    manifest.count("theta_draws", stats.theta_draws as f64);
    manifest.count("theta_rejections", stats.theta_rejections as f64);
    manifest.count("theta_fallbacks", stats.theta_fallbacks as f64);
    manifest.count("degenerate_redraws", stats.degenerate_redraws as f64);
    outputs.push("manifest.json".into());
    manifest.outputs = outputs;
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(&dir.join("manifest.json"))?;
    Ok(())
}
