//! Resumable ensemble sweeps.
//!
//! A sweep directory holds `sweep.csv` and `manifest.json`. Rerunning the
//! same spec reuses every row already in the CSV and computes only the
//! missing cells, so deleting rows and rerunning regenerates them exactly.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use resetsim::stats::BootstrapOptions;
use resetsim::{aggregate, run_ensemble, CircuitConfig, EnsembleStats};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::spec::{Cell, SweepSpec};
use crate::table;

pub const CSV_NAME: &str = "sweep.csv";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library: String,
    pub version: String,
    pub spec: SweepSpec,
    pub cells: Vec<Cell>,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Ignore and overwrite outputs of a different spec.
    pub fresh: bool,
    pub quiet: bool,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: Vec<EnsembleStats>,
    /// Cells computed in this run, as `(L, T, p)`.
    pub computed: Vec<(usize, usize, f64)>,
    pub reused: usize,
}

/// Runs one cell: `n_samples` trajectories on streams `0..n`, then the
/// ensemble statistics with a bootstrap seeded by the cell seed.
pub fn run_cell(spec: &SweepSpec, cell: &Cell) -> Result<EnsembleStats> {
    let cfg = CircuitConfig { cut: spec.cut.clone(), ..cell.config() };
    let records = run_ensemble(&cfg, cell.streams.0, (cell.streams.1 - cell.streams.0) as usize)?;
    Ok(aggregate(&records, &BootstrapOptions { resamples: spec.bootstrap, seed: cell.seed })?)
}

/// Spec fields that change results; the output directory does not.
fn same_sweep(a: &SweepSpec, b: &SweepSpec) -> bool {
    SweepSpec { out: PathBuf::new(), ..a.clone() } == SweepSpec { out: PathBuf::new(), ..b.clone() }
}

fn existing_rows(spec: &SweepSpec, dir: &Path, fresh: bool) -> Result<Vec<EnsembleStats>> {
    let (csv, manifest) = (dir.join(CSV_NAME), dir.join(MANIFEST_NAME));
    if fresh || !manifest.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(&manifest).map_err(CliError::io(&manifest))?;
    let old: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", manifest.display())))?;
    if !same_sweep(&old.spec, spec) {
        return Err(CliError::Validation(format!("{} holds a different sweep; choose another --out or pass --fresh", dir.display())));
    }
    if csv.exists() {
        table::load(&csv)
    } else {
        Ok(Vec::new())
    }
}

fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<SweepOutcome> {
    spec.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
    };
    let dir = spec.out.as_path();
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let started = Instant::now();
    let cells = spec.cells()?;
    let mut have: HashMap<(usize, usize, u64), EnsembleStats> =
        existing_rows(spec, dir, opts.fresh)?.into_iter().map(|s| ((s.key.sites, s.key.steps, s.key.p.to_bits()), s)).collect();
    // drop rows that are not part of this spec or were cut short
    have.retain(|_, s| s.n_samples == spec.n_samples);

    let csv_path = dir.join(CSV_NAME);
    let manifest_path = dir.join(MANIFEST_NAME);
    let mut manifest = Manifest { library: "resetsim".into(), version: resetsim::VERSION.into(), spec: spec.clone(), cells: cells.clone(), wall_time_seconds: 0.0 };
    write_manifest(&manifest_path, &manifest)?;

    let collect = |have: &HashMap<_, EnsembleStats>| cells.iter().filter_map(|c| have.get(&c.key()).copied()).collect::<Vec<_>>();
    let reused = cells.iter().filter(|c| have.contains_key(&c.key())).count();
    let mut computed = Vec::new();
    for cell in &cells {
        if have.contains_key(&cell.key()) {
            continue;
        }
        let t0 = Instant::now();
        let stats = pool.install(|| run_cell(spec, cell))?;
        if !opts.quiet {
            eprintln!(
                "L={} T={} p={}: S_p = {:.4}, E_N = {:.4} ({:.1} s)",
                cell.sites,
                cell.steps,
                cell.p,
                stats.mean_sp,
                stats.mean_en,
                t0.elapsed().as_secs_f64()
            );
        }
        have.insert(cell.key(), stats);
        computed.push((cell.sites, cell.steps, cell.p));
        table::save(&csv_path, &collect(&have))?;
    }
    let rows = collect(&have);
    table::save(&csv_path, &rows)?;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    write_manifest(&manifest_path, &manifest)?;
    Ok(SweepOutcome { csv: csv_path, manifest: manifest_path, rows, computed, reused })
}

/// Removes the rows of the listed `(L, T, p)` cells from `csv` and returns
/// how many were dropped.
pub fn delete_cells(csv: &Path, drop: &[(usize, usize, f64)]) -> Result<usize> {
    let rows = table::load(csv)?;
    let kept: Vec<_> = rows.iter().copied().filter(|s| !drop.iter().any(|&(l, t, p)| (l, t, p.to_bits()) == (s.key.sites, s.key.steps, s.key.p.to_bits()))).collect();
    let removed = rows.len() - kept.len();
    table::save(csv, &kept)?;
    Ok(removed)
}
