//! First-order methods for `min_x f_p(x)` with full iterate traces.
//!
//! All solvers are deterministic and sign-covariant: starting from `-x0`
//! reproduces the trace with every iterate negated, bit for bit.

mod geometric;
mod polyak;
mod prox_linear;
mod spectral;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Problem;
use crate::model::{dist_unchecked, Signal};

pub use geometric::solve_geometric;
pub use polyak::solve_polyak;
pub use prox_linear::{solve_prox_linear, ProxModel};
pub use spectral::spectral_init;

/// Consecutive iterations with negligible relative objective change before a run is declared stalled.
pub const STALL_WINDOW: usize = 200;
pub const STALL_REL_CHANGE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Polyak,
    Geometric,
    ProxLinear,
}

/// Optimal value used by Polyak steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FStar {
    /// `f_p(x*)` of the planted solution; requires a problem with a known `x*`.
    #[default]
    Planted,
    Known {
        value: f64,
    },
    /// Zero, a valid lower bound for any instance.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometricParams {
    /// Initial step length. `None` uses `0.5 * ||x0||`.
    pub lambda0: Option<f64>,
    /// Decay factor in `(0, 1)`.
    pub q: f64,
}

impl Default for GeometricParams {
    fn default() -> Self {
        Self { lambda0: None, q: 0.98 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxParams {
    /// Proximal weight `t`. `None` uses `1 / (2 ||A||_2^2)`, which makes the
    /// model an upper bound of `f_2`.
    pub t: Option<f64>,
    /// Inner duality-gap tolerance, relative to `max(1, f_2(x_k))`.
    pub inner_tol: f64,
    /// Inner sweep cap. `None` uses `ceil(10 n ln(1/inner_tol))`.
    pub inner_max_iters: Option<usize>,
}

impl Default for ProxParams {
    fn default() -> Self {
        Self {
            t: None,
            inner_tol: 1e-13,
            inner_max_iters: None,
        }
    }
}

fn default_tol_dist() -> Option<f64> {
    Some(1e-10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Stop once `dist(x, {+-x*}) <= tol_dist * ||x*||` (needs a planted solution).
    /// Omitted in JSON means the default; an explicit `null` disables it.
    #[serde(default = "default_tol_dist")]
    pub tol_dist: Option<f64>,
    /// Stop once `f_p(x) - f* <= tol_obj`.
    #[serde(default)]
    pub tol_obj: Option<f64>,
    #[serde(default)]
    pub fstar: FStar,
    #[serde(default)]
    pub geometric: GeometricParams,
    #[serde(default)]
    pub prox: ProxParams,
    /// Keep every k-th iterate in the trace (0 keeps none besides the final point).
    #[serde(default)]
    pub keep_every: usize,
}

impl SolverConfig {
    pub fn new(method: Method, max_iters: usize) -> Self {
        Self {
            method,
            max_iters,
            tol_dist: default_tol_dist(),
            tol_obj: None,
            fstar: FStar::Planted,
            geometric: GeometricParams::default(),
            prox: ProxParams::default(),
            keep_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: Option<f64>, name: &str| match v {
            Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::invalid(format!(
                "{name} must be a positive finite number, got {t}"
            ))),
            _ => Ok(()),
        };
        positive(self.tol_dist, "tol_dist")?;
        positive(self.tol_obj, "tol_obj")?;
        if self.tol_dist.is_none() && self.tol_obj.is_none() {
            return Err(Error::invalid("one of tol_dist or tol_obj must be set"));
        }
        if let FStar::Known { value } = self.fstar {
            if !value.is_finite() {
                return Err(Error::invalid(format!("f* must be finite, got {value}")));
            }
        }
        let q = self.geometric.q;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("geometric decay q must lie in (0, 1), got {q}")));
        }
        if let Some(l) = self.geometric.lambda0 {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda0 must be >= 0, got {l}")));
            }
        }
        positive(self.prox.t, "proximal weight t")?;
        positive(Some(self.prox.inner_tol), "inner_tol")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub method: Method,
    /// Final iterate.
    pub x: Signal,
    /// `(iteration, iterate)` pairs kept according to `keep_every`.
    pub iterates: Vec<(usize, Signal)>,
    /// `f_p(x_k)` for `k = 0..=iterations` (unnormalized).
    pub objective: Vec<f64>,
    /// `dist(x_k, {+-x*})`, empty when no planted solution is known.
    pub dist: Vec<f64>,
    pub fstar: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub wall_time: f64,
}

impl SolveTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trace has at least one entry")
    }

    pub fn final_dist(&self) -> Option<f64> {
        self.dist.last().copied()
    }

    /// Running minimum of the objective history.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.objective
            .iter()
            .scan(f64::INFINITY, |best, &f| {
                *best = best.min(f);
                Some(*best)
            })
            .collect()
    }
}

/// Runs the configured method.
pub fn solve(problem: &Problem<'_>, config: &SolverConfig, x0: &Signal) -> Result<SolveTrace> {
    match config.method {
        Method::Polyak => solve_polyak(problem, config, x0),
        Method::Geometric => solve_geometric(problem, config, x0),
        Method::ProxLinear => solve_prox_linear(problem, config, x0),
    }
}

pub(crate) fn resolve_fstar(problem: &Problem<'_>, fstar: FStar) -> Result<f64> {
    match fstar {
        FStar::Known { value } if value.is_finite() => Ok(value),
        FStar::Known { value } => Err(Error::invalid(format!("f* must be finite, got {value}"))),
        FStar::Zero => Ok(0.0),
        FStar::Planted => {
            let xs = problem
                .xstar
                .ok_or_else(|| Error::invalid("f* mode 'planted' needs a planted solution"))?;
            Ok(crate::model::objective_unchecked(
                problem.matrix,
                problem.b,
                xs.as_slice(),
            ))
        }
    }
}

/// Shared history bookkeeping, stopping tests and stall detection.
pub(crate) struct Recorder<'a> {
    method: Method,
    config: &'a SolverConfig,
    xstar: Option<&'a Signal>,
    xstar_norm: f64,
    fstar: f64,
    objective: Vec<f64>,
    dist: Vec<f64>,
    iterates: Vec<(usize, Signal)>,
    quiet_run: usize,
    start: Instant,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(problem: &Problem<'a>, config: &'a SolverConfig, method: Method) -> Result<Self> {
        config.validate()?;
        let fstar = match method {
            Method::Polyak => resolve_fstar(problem, config.fstar)?,
            _ => resolve_fstar(problem, config.fstar).unwrap_or(0.0),
        };
        if config.tol_obj.is_none() && problem.xstar.is_none() {
            return Err(Error::invalid("tol_dist needs a planted solution; set tol_obj instead"));
        }
        Ok(Self {
            method,
            config,
            xstar: problem.xstar,
            xstar_norm: problem.xstar.map_or(0.0, Signal::norm),
            fstar,
            objective: Vec::with_capacity(config.max_iters + 1),
            dist: Vec::new(),
            iterates: Vec::new(),
            quiet_run: 0,
            start: Instant::now(),
        })
    }

    pub(crate) fn fstar(&self) -> f64 {
        self.fstar
    }

    /// Records iterate `k` and reports whether the run should stop here.
    pub(crate) fn record(&mut self, k: usize, x: &[f64], f: f64) -> Option<Termination> {
        if let Some(prev) = self.objective.last() {
            let change = (f - prev).abs();
            if change <= STALL_REL_CHANGE * prev.abs().max(f.abs()) {
                self.quiet_run += 1;
            } else {
                self.quiet_run = 0;
            }
        }
        self.objective.push(f);
        let d = self.xstar.map(|xs| dist_unchecked(x, xs.as_slice()));
        if let Some(d) = d {
            self.dist.push(d);
        }
        let keep = self.config.keep_every;
        if keep > 0 && k.is_multiple_of(keep) {
            self.iterates.push((k, Signal::from_vec_unchecked(x.to_vec())));
        }
        if self.criteria_met(f, d) {
            Some(Termination::Converged)
        } else if self.quiet_run >= STALL_WINDOW {
            Some(Termination::Stalled)
        } else {
            None
        }
    }

    fn criteria_met(&self, f: f64, d: Option<f64>) -> bool {
        let by_dist = matches!((self.config.tol_dist, d), (Some(tol), Some(d)) if d <= tol * self.xstar_norm);
        let by_obj = matches!(self.config.tol_obj, Some(tol) if f - self.fstar <= tol);
        by_dist || by_obj
    }

    pub(crate) fn finish(self, x: Vec<f64>, termination: Termination) -> SolveTrace {
        let iterations = self.objective.len() - 1;
        SolveTrace {
            method: self.method,
            x: Signal::from_vec_unchecked(x),
            iterates: self.iterates,
            objective: self.objective,
            dist: self.dist,
            fstar: self.fstar,
            termination,
            iterations,
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}

pub(crate) fn check_start(problem: &Problem<'_>, x0: &Signal) -> Result<()> {
    problem.matrix.check_cols(x0.len(), "initial point length")?;
    problem.matrix.check_rows(problem.b.len(), "measurement length")
}
