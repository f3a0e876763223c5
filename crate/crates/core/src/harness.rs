//! Seeded trial runner and phase-transition grids.
//!
//! Every trial plants its own instance from a seed mixed out of
//! `(master_seed, n, m, round(s * 1e6), trial)`, so a grid's numbers depend
//! only on its config, never on scheduling or thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{plant_instance, CorruptionSpec, NoiseModel};
use crate::model::{count_nonzero, dist_unchecked, residual_unchecked, MeasurementModel, Signal};
use crate::rng::derive_seed;
use crate::solvers::{solve, spectral_init, SolverConfig, Termination};

/// Residual entries below `L0_THRESHOLD_REL * max|b|` count as zero.
pub const L0_THRESHOLD_REL: f64 = 1e-8;
pub const DEFAULT_TAU: f64 = 1e-5;
pub const RESULTS_HEADER: &str = "n,m,s,trials,successes,rate,mean_final_dist,mean_iters";
const TRIALS_HEADER: &str =
    "n,m,s,trial,seed,success,final_dist,final_objective,residual_l0,planted_l0,l0_within_planted,iterations,termination";

/// A problem size, either explicit or as an oversampling ratio `m / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Explicit { n: usize, m: usize },
    Oversampled { n: usize, oversampling: f64 },
}

impl DimSpec {
    pub fn resolve(&self) -> (usize, usize) {
        match *self {
            DimSpec::Explicit { n, m } => (n, m),
            DimSpec::Oversampled { n, oversampling } => (n, (n as f64 * oversampling).round() as usize),
        }
    }
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Vec<DimSpec>,
    pub fractions: Vec<f64>,
    pub p: u8,
    pub noise: NoiseModel,
    pub solver: SolverConfig,
    pub trials: usize,
    pub master_seed: u64,
    /// Success threshold on `dist(x, {+-x*}) / ||x*||`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker cap; `None` uses every available core.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn model(&self) -> Result<MeasurementModel> {
        MeasurementModel::from_exponent(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if self.dims.is_empty() || self.fractions.is_empty() {
            return Err(Error::invalid("dims and fractions must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        self.solver.validate()?;
        for cell in self.cells() {
            if cell.n == 0 || cell.m == 0 {
                return Err(Error::invalid(format!(
                    "empty problem size n = {}, m = {}",
                    cell.n, cell.m
                )));
            }
            self.corruption(cell.s).validate(cell.m)?;
        }
        Ok(())
    }

    pub fn corruption(&self, s: f64) -> CorruptionSpec {
        CorruptionSpec::uniform(s, self.noise)
    }

    /// All `(n, m, s)` cells sorted by `(n, m, s)`, duplicates removed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self
            .dims
            .iter()
            .flat_map(|d| {
                let (n, m) = d.resolve();
                self.fractions.iter().map(move |&s| Cell { n, m, s })
            })
            .collect();
        cells.sort_by(|a, b| a.key().cmp(&b.key()).then(a.s.total_cmp(&b.s)));
        cells.dedup_by(|a, b| a.n == b.n && a.m == b.m && a.s.to_bits() == b.s.to_bits());
        cells
    }

    pub fn trial_seed(&self, cell: &Cell, trial: usize) -> u64 {
        derive_seed(&[
            self.master_seed,
            cell.n as u64,
            cell.m as u64,
            (cell.s * 1e6).round() as u64,
            trial as u64,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub s: f64,
}

impl Cell {
    fn key(&self) -> (usize, usize) {
        (self.n, self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// `dist(x_hat, {+-x*}) / ||x*||`.
    pub final_dist: f64,
    pub final_objective: f64,
    /// Entries of `| |A x_hat|^p - b |` above `1e-8 max|b|`.
    pub residual_l0: usize,
    pub planted_l0: usize,
    pub l0_within_planted: bool,
    pub iterations: usize,
    pub termination: Termination,
    pub x_hat: Signal,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

impl TrialRecord {
    /// Copy with the timing field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

/// Plants the trial's instance, runs spectral initialization and the configured solver.
pub fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let context = || format!("cell n={} m={} s={} trial={trial}", cell.n, cell.m, cell.s);
    run_trial_inner(config, cell, trial).map_err(|e| Error::Cell {
        context: context(),
        source: Box::new(e),
    })
}

fn run_trial_inner(config: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let model = config.model()?;
    let seed = config.trial_seed(cell, trial);
    let inst = plant_instance(cell.m, cell.n, model, &config.corruption(cell.s), seed)?;
    let problem = inst.problem();
    let x0 = spectral_init(&inst.matrix, &inst.b, model)?;
    let trace = solve(&problem, &config.solver, &x0)?;

    let xnorm = inst.xstar.norm();
    let final_dist = dist_unchecked(trace.x.as_slice(), inst.xstar.as_slice()) / xnorm;
    let r = residual_unchecked(&inst.matrix, &inst.b, trace.x.as_slice());
    let bmax = inst.b.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual_l0 = count_nonzero(&r, L0_THRESHOLD_REL * bmax);
    let planted_l0 = config.corruption(cell.s).corrupted_count(cell.m);
    Ok(TrialRecord {
        n: cell.n,
        m: cell.m,
        s: cell.s,
        trial,
        seed,
        success: final_dist <= config.tau,
        final_dist,
        final_objective: trace.final_objective(),
        residual_l0,
        planted_l0,
        l0_within_planted: residual_l0 <= planted_l0,
        iterations: trace.iterations,
        termination: trace.termination,
        x_hat: trace.x,
        wall_time: trace.wall_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_final_dist: f64,
    pub mean_iters: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: ExperimentConfig,
    /// Sorted by `(n, m, s)`.
    pub cells: Vec<CellSummary>,
    /// Grouped by cell in the same order, then by trial index.
    pub trials: Vec<TrialRecord>,
}

impl GridResult {
    pub fn summarize(config: ExperimentConfig, trials: Vec<TrialRecord>) -> Self {
        let mut cells: Vec<CellSummary> = Vec::new();
        for t in &trials {
            let same = cells
                .last()
                .is_some_and(|c| c.n == t.n && c.m == t.m && c.s.to_bits() == t.s.to_bits());
            if !same {
                cells.push(CellSummary {
                    n: t.n,
                    m: t.m,
                    s: t.s,
                    trials: 0,
                    successes: 0,
                    rate: 0.0,
                    mean_final_dist: 0.0,
                    mean_iters: 0.0,
                    seeds: Vec::new(),
                });
            }
            let c = cells.last_mut().expect("pushed above");
            c.trials += 1;
            c.successes += usize::from(t.success);
            c.mean_final_dist += t.final_dist;
            c.mean_iters += t.iterations as f64;
            c.seeds.push(t.seed);
        }
        for c in &mut cells {
            let k = c.trials as f64;
            c.rate = c.successes as f64 / k;
            c.mean_final_dist /= k;
            c.mean_iters /= k;
        }
        Self { config, cells, trials }
    }
}

/// Runs every cell and trial, on at most `config.threads` workers.
pub fn run_grid(config: &ExperimentConfig) -> Result<GridResult> {
    config.validate()?;
    let tasks: Vec<(Cell, usize)> = config
        .cells()
        .into_iter()
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    let trials = pool.install(|| {
        tasks
            .par_iter()
            .map(|(c, t)| run_trial(config, c, *t))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(GridResult::summarize(config.clone(), trials))
}

/// Shortest decimal that parses back to `v`, in exponent form outside `[1e-5, 1e16)`.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Per-cell CSV with the fixed header, floats in shortest round-trip form.
pub fn results_csv(grid: &GridResult) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for c in &grid.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.n,
            c.m,
            fmt_float(c.s),
            c.trials,
            c.successes,
            fmt_float(c.rate),
            fmt_float(c.mean_final_dist),
            fmt_float(c.mean_iters)
        );
    }
    out
}

/// Per-trial CSV; wall time is left out so the file is reproducible.
pub fn trials_csv(grid: &GridResult) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for t in &grid.trials {
        let term = match t.termination {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::Stalled => "stalled",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.n,
            t.m,
            fmt_float(t.s),
            t.trial,
            t.seed,
            t.success,
            fmt_float(t.final_dist),
            fmt_float(t.final_objective),
            t.residual_l0,
            t.planted_l0,
            t.l0_within_planted,
            t.iterations,
            term
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct ManifestCell {
    n: usize,
    m: usize,
    s: f64,
    seed_list: Vec<u64>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    master_seed: u64,
    version: &'static str,
    tau: f64,
    l0_threshold_rel: f64,
    cells: Vec<ManifestCell>,
    /// Seconds since the Unix epoch; the only field that changes between reruns.
    timestamp: u64,
}

pub fn manifest_json(grid: &GridResult) -> Result<String> {
    let manifest = Manifest {
        config: &grid.config,
        master_seed: grid.config.master_seed,
        version: crate::VERSION,
        tau: grid.config.tau,
        l0_threshold_rel: L0_THRESHOLD_REL,
        cells: grid
            .cells
            .iter()
            .map(|c| ManifestCell {
                n: c.n,
                m: c.m,
                s: c.s,
                seed_list: c.seeds.clone(),
            })
            .collect(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    Ok(serde_json::to_string_pretty(&manifest)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPaths {
    pub results: PathBuf,
    pub trials: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `results.csv`, `trials.csv` and `manifest.json` into `dir`.
pub fn write_results(grid: &GridResult, dir: &Path) -> Result<ResultPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ResultPaths {
        results: dir.join("results.csv"),
        trials: dir.join("trials.csv"),
        manifest: dir.join("manifest.json"),
    };
    let write = |p: &Path, s: String| fs::write(p, s).map_err(|e| Error::io(p, e));
    write(&paths.results, results_csv(grid))?;
    write(&paths.trials, trials_csv(grid))?;
    write(&paths.manifest, manifest_json(grid)?)?;
    Ok(paths)
}
