use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use bmfsim::io::read_matrix;
use bmfsim::linalg::sample_uniform_stiefel;
use bmfsim::mf::{sample_mf_matrix_gibbs, sample_mf_matrix_rejection_capped, DEFAULT_REJECTION_CAP};
use bmfsim::{stream_rng, BMFParams, BmfGibbs, MFParams, StiefelMatrix, SymmetricMatrix};
use clap::{Args, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::output::{emit, format_samples, manifest_path};
use crate::{Globals, UsageError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rejection,
    Gibbs,
}

#[derive(Args, Debug)]
pub struct SampleMfArgs {
    /// Concentration matrix C (m x R).
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Number of draws to write.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Method::Rejection)]
    pub method: Method,
    /// Gibbs sweeps discarded before the first recorded draw.
    #[arg(long, default_value_t = 1000)]
    pub burn: usize,
    /// Gibbs sweeps between recorded draws.
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    /// Proposals allowed per exact draw.
    #[arg(long, default_value_t = DEFAULT_REJECTION_CAP)]
    pub max_proposals: u64,
}

#[derive(Args, Debug)]
pub struct SampleBmfArgs {
    /// Symmetric matrix A (m x m); zero when omitted.
    #[arg(long = "A")]
    pub a: Option<PathBuf>,
    /// Diagonal of B (R values, or an R x R diagonal matrix); zero when omitted.
    #[arg(long = "B")]
    pub b: Option<PathBuf>,
    /// Linear term C (m x R); zero when omitted.
    #[arg(long = "C")]
    pub c: Option<PathBuf>,
    /// Row count, needed when no parameter file fixes it.
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Column count, needed when neither B nor C fixes it.
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    /// Vector sweeps per column visit.
    #[arg(long, default_value_t = 1)]
    pub n_inner: usize,
}

fn check_thin(thin: usize) -> anyhow::Result<()> {
    if thin == 0 {
        return Err(UsageError("--thin must be at least 1".into()).into());
    }
    Ok(())
}

fn finish(
    globals: &Globals,
    samples: &[StiefelMatrix],
    mut manifest: RunManifest,
    start: Instant,
) -> anyhow::Result<()> {
    let max_err = samples.iter().map(StiefelMatrix::orthonormality_error).fold(0.0, f64::max);
    manifest.count("max_orthonormality_error", max_err);
    manifest.count("draws", samples.len() as f64);
    emit(globals.out.as_deref(), &format_samples(samples, globals.format)?)?;
    if let Some(out) = &globals.out {
        manifest.outputs.push(out.display().to_string());
        manifest.wall_time_secs = start.elapsed().as_secs_f64();
        manifest.write(&manifest_path(out))?;
    }
    Ok(())
}

pub fn run_mf(globals: &Globals, args: &SampleMfArgs) -> anyhow::Result<()> {
    check_thin(args.thin)?;
    let start = Instant::now();
    let c = read_matrix(&args.c).with_context(|| format!("reading {}", args.c.display()))?;
    let params = MFParams::new(c)?;
    let mut rng = stream_rng(globals.seed, 0);
    let mut manifest = RunManifest::new(
        "sample-mf",
        globals.seed,
        json!({
            "C": args.c, "n": args.n, "method": args.method, "burn": args.burn,
            "thin": args.thin, "max_proposals": args.max_proposals, "format": globals.format,
        }),
    );
    let samples = match args.method {
        Method::Rejection => {
            let mut total = 0u64;
            let mut worst = 0u64;
            let mut draws = Vec::with_capacity(args.n);
            for _ in 0..args.n {
                let (x, rejected) = sample_mf_matrix_rejection_capped(&params, args.max_proposals, &mut rng)?;
                total += rejected;
                worst = worst.max(rejected);
                draws.push(x);
            }
            manifest.count("mean_rejections", total as f64 / args.n.max(1) as f64);
            manifest.count("max_rejections", worst as f64);
            draws
        }
        Method::Gibbs => {
            // start at the mode U Vᵀ
            let svd = params.svd();
            let mut x = StiefelMatrix::new(&svd.u * svd.v.transpose()).context("starting point")?;
            for _ in 0..args.burn {
                x = sample_mf_matrix_gibbs(&params, &x, &mut rng)?;
            }
            let mut draws = Vec::with_capacity(args.n);
            for _ in 0..args.n {
                for _ in 0..args.thin {
                    x = sample_mf_matrix_gibbs(&params, &x, &mut rng)?;
                }
                draws.push(x.clone());
            }
            manifest.count("sweeps", (args.burn + args.n * args.thin) as f64);
            draws
        }
    };
    finish(globals, &samples, manifest, start)
}

/// `B` from a vector file or the diagonal of a square matrix file.
fn read_b(path: &Path) -> anyhow::Result<DVector<f64>> {
    let b = read_matrix(path).with_context(|| format!("reading {}", path.display()))?;
    if b.nrows() == 1 || b.ncols() == 1 {
        return Ok(DVector::from_iterator(b.len(), b.iter().copied()));
    }
    if b.is_square() {
        let off = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| if i == j { 0.0 } else { b[(i, j)] });
        if off.amax() == 0.0 {
            return Ok(b.diagonal());
        }
    }
    Err(UsageError(format!("{}: B must be a vector or a diagonal matrix", path.display())).into())
}

fn resolve(label: &str, candidates: &[(&str, Option<usize>)]) -> anyhow::Result<usize> {
    let known: Vec<(&str, usize)> = candidates.iter().filter_map(|&(s, v)| v.map(|v| (s, v))).collect();
    let Some(&(_, first)) = known.first() else {
        return Err(UsageError(format!("cannot determine {label}: pass --{label} or a parameter file")).into());
    };
    if let Some(&(src, v)) = known.iter().find(|&&(_, v)| v != first) {
        return Err(UsageError(format!("{label} from {src} is {v}, expected {first}")).into());
    }
    Ok(first)
}

pub fn run_bmf(globals: &Globals, args: &SampleBmfArgs) -> anyhow::Result<()> {
    check_thin(args.thin)?;
    let start = Instant::now();
    let a = args.a.as_ref().map(|p| read_matrix(p).with_context(|| format!("reading {}", p.display()))).transpose()?;
    let b = args.b.as_deref().map(read_b).transpose()?;
    let c = args.c.as_ref().map(|p| read_matrix(p).with_context(|| format!("reading {}", p.display()))).transpose()?;
    if let Some(a) = &a {
        if !a.is_square() {
            return Err(UsageError("A must be square".into()).into());
        }
    }
    let m =
        resolve("m", &[("--m", args.m), ("A", a.as_ref().map(|a| a.nrows())), ("C", c.as_ref().map(|c| c.nrows()))])?;
    let r = resolve("R", &[("--R", args.r), ("B", b.as_ref().map(|b| b.len())), ("C", c.as_ref().map(|c| c.ncols()))])?;
    if r == 0 || r > m {
        return Err(UsageError(format!("need 1 <= R <= m, got m={m}, R={r}")).into());
    }
    let all_zero = [a.as_ref().map(|x| x.amax()), b.as_ref().map(|x| x.amax()), c.as_ref().map(|x| x.amax())]
        .iter()
        .all(|v| v.is_none_or(|v| v == 0.0));
    let params = BMFParams::new(
        SymmetricMatrix::new(a.unwrap_or_else(|| DMatrix::zeros(m, m)))?,
        b.unwrap_or_else(|| DVector::zeros(r)),
        c.unwrap_or_else(|| DMatrix::zeros(m, r)),
    )?;

    let mut manifest = RunManifest::new(
        "sample-bmf",
        globals.seed,
        json!({
            "A": args.a, "B": args.b, "C": args.c, "m": m, "R": r, "n": args.n, "burn": args.burn,
            "thin": args.thin, "n_inner": args.n_inner, "format": globals.format,
        }),
    );
    let mut rng = stream_rng(globals.seed, 0);
    let samples = if all_zero {
        manifest.notes.push("all parameters zero: exact uniform draws".into());
        (0..args.n).map(|_| sample_uniform_stiefel(m, r, &mut rng)).collect::<bmfsim::Result<Vec<_>>>()?
    } else {
        let square = m == r && m >= 2;
        if square {
            manifest.notes.push("m = R: two-column (pair) updates".into());
        }
        let mut gibbs = BmfGibbs::new(args.n_inner);
        let mut x = StiefelMatrix::identity(m, r)?;
        for _ in 0..args.burn {
            x = gibbs.sweep_auto(&params, &x, &mut rng)?;
        }
        let mut draws = Vec::with_capacity(args.n);
        for _ in 0..args.n {
            for _ in 0..args.thin {
                x = gibbs.sweep_auto(&params, &x, &mut rng)?;
            }
            draws.push(x.clone());
        }
        let stats = gibbs.stats();
        manifest.count("sweeps", (args.burn + args.n * args.thin) as f64);
        manifest.count("theta_draws", stats.theta_draws as f64);
        manifest.count("theta_rejections", stats.theta_rejections as f64);
        manifest.count("theta_fallbacks", stats.theta_fallbacks as f64);
        manifest.count("degenerate_redraws", stats.degenerate_redraws as f64);
        manifest.count("pair_updates", stats.pair_updates as f64);
        draws
    };
    finish(globals, &samples, manifest, start)
}
