use std::time::Instant;

use bmfsim::mf::sample_mf_matrix_rejection_capped;
use bmfsim::stats::{mean, std_error};
use bmfsim::{stream_rng, Error, MFParams};
use clap::Args;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::output::{emit, format_table, manifest_path, num};
use crate::{Globals, UsageError};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Draws per cell.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Cells as `m:R:d` separated by commas; the full grid when omitted.
    #[arg(long)]
    pub cells: Option<String>,
    /// Total proposals allowed per cell; cells that exceed it are marked skipped.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Cell {
    pub m: usize,
    pub r: usize,
    pub d: f64,
}

/// m ∈ {10, 20, 200}, R ∈ {2, 4, 6}, d ∈ {m/2, m, 2m}.
pub fn default_grid() -> Vec<Cell> {
    let mut cells = Vec::new();
    for m in [10, 20, 200] {
        for d in [m as f64 / 2.0, m as f64, 2.0 * m as f64] {
            for r in [2, 4, 6] {
                cells.push(Cell { m, r, d });
            }
        }
    }
    cells
}

pub fn parse_cells(spec: &str) -> Result<Vec<Cell>, UsageError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parts: Vec<&str> = s.split(':').collect();
            let bad = || UsageError(format!("bad cell '{s}': expected m:R:d"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let m: usize = parts[0].parse().map_err(|_| bad())?;
            let r: usize = parts[1].parse().map_err(|_| bad())?;
            let d: f64 = parts[2].parse().map_err(|_| bad())?;
            if r == 0 || r > m || !(d >= 0.0 && d.is_finite()) {
                return Err(UsageError(format!("bad cell '{s}': need 1 <= R <= m and finite d >= 0")));
            }
            Ok(Cell { m, r, d })
        })
        .collect()
}

/// Stream index of a cell, fixed by its coordinates so results do not depend
/// on which other cells run.
fn cell_stream(cell: &Cell) -> u64 {
    ((cell.m as u64) << 40) ^ ((cell.r as u64) << 32) ^ cell.d.to_bits().rotate_left(17)
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub n: usize,
    pub mean_rejections: f64,
    pub se: f64,
    pub status: &'static str,
}

pub fn run_cell(cell: Cell, n: usize, seed: u64, budget: Option<u64>) -> bmfsim::Result<CellResult> {
    let params = MFParams::isotropic(cell.m, cell.r, cell.d)?;
    let mut rng = stream_rng(seed, cell_stream(&cell));
    let mut counts = Vec::with_capacity(n);
    let mut spent = 0u64;
    for _ in 0..n {
        let cap = budget.map_or(u64::MAX, |b| b.saturating_sub(spent));
        match sample_mf_matrix_rejection_capped(&params, cap, &mut rng) {
            Ok((_, rejected)) => {
                spent += rejected + 1;
                counts.push(rejected as f64);
            }
            Err(Error::RejectionCap(_)) => {
                return Ok(CellResult {
                    cell,
                    n: counts.len(),
                    mean_rejections: f64::NAN,
                    se: f64::NAN,
                    status: "skipped",
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(CellResult { cell, n, mean_rejections: mean(&counts), se: std_error(&counts), status: "ok" })
}

pub fn run(globals: &Globals, args: &BenchArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    if args.n == 0 {
        return Err(UsageError("--n must be at least 1".into()).into());
    }
    let cells = match &args.cells {
        Some(s) => parse_cells(s)?,
        None => default_grid(),
    };
    let results: Vec<CellResult> =
        cells.par_iter().map(|&c| run_cell(c, args.n, globals.seed, args.budget)).collect::<bmfsim::Result<_>>()?;

    let rows: Vec<Vec<Value>> = results
        .iter()
        .map(|r| {
            vec![
                json!(r.cell.m),
                json!(r.cell.r),
                num(r.cell.d),
                json!(r.n),
                num(r.mean_rejections),
                num(r.se),
                json!(r.status),
            ]
        })
        .collect();
    let header = ["m", "R", "d", "n", "mean_rejections", "se", "status"];
    emit(globals.out.as_deref(), &format_table(&header, &rows, globals.format)?)?;

    if let Some(out) = &globals.out {
        let mut manifest = RunManifest::new(
            "bench-rejection",
            globals.seed,
            json!({ "n": args.n, "cells": cells, "budget": args.budget, "format": globals.format }),
        );
        let skipped = results.iter().filter(|r| r.status == "skipped").count();
        manifest.count("cells", results.len() as f64);
        manifest.count("cells_skipped", skipped as f64);
        manifest.outputs.push(out.display().to_string());
        manifest.wall_time_secs = start.elapsed().as_secs_f64();
        manifest.write(&manifest_path(out))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_27_distinct_cells() {
        let g = default_grid();
        assert_eq!(g.len(), 27);
        let streams: std::collections::HashSet<u64> = g.iter().map(cell_stream).collect();
        assert_eq!(streams.len(), 27);
    }

    #[test]
    fn parses_cells() {
        let c = parse_cells("10:2:5, 200:6:400").unwrap();
        assert_eq!(c, vec![Cell { m: 10, r: 2, d: 5.0 }, Cell { m: 200, r: 6, d: 400.0 }]);
        assert!(parse_cells("10:2").is_err());
        assert!(parse_cells("2:3:1").is_err());
        assert!(parse_cells("10:2:x").is_err());
    }

    #[test]
    fn tiny_budget_skips() {
        let r = run_cell(Cell { m: 10, r: 6, d: 20.0 }, 50, 1, Some(3)).unwrap();
        assert_eq!(r.status, "skipped");
        assert!(r.mean_rejections.is_nan());
    }

    #[test]
    fn cell_result_is_independent_of_other_cells() {
        let a = run_cell(Cell { m: 10, r: 2, d: 5.0 }, 20, 9, None).unwrap();
        let b = run_cell(Cell { m: 10, r: 2, d: 5.0 }, 20, 9, None).unwrap();
        assert_eq!(a.mean_rejections, b.mean_rejections);
    }
}
