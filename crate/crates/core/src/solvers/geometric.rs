use super::{check_start, Method, Recorder, SolveTrace, SolverConfig, Termination};
use crate::error::Result;
use crate::instance::Problem;
use crate::linalg::{axpy, norm};
use crate::model::{subgradient_unchecked, Signal};

/// Normalized subgradient method with geometrically decaying steps
/// `x_{k+1} = x_k - lambda0 q^k g_k / |g_k|`. A zero subgradient skips the update.
pub fn solve_geometric(problem: &Problem<'_>, config: &SolverConfig, x0: &Signal) -> Result<SolveTrace> {
    check_start(problem, x0)?;
    let mut rec = Recorder::new(problem, config, Method::Geometric)?;
    let lambda0 = config.geometric.lambda0.unwrap_or(0.5 * x0.norm());
    let q = config.geometric.q;
    let mut x = x0.as_slice().to_vec();
    let (mut g, mut f) = subgradient_unchecked(problem.matrix, problem.b, &x);
    if let Some(t) = rec.record(0, &x, f) {
        return Ok(rec.finish(x, t));
    }
    let mut step = lambda0;
    for k in 1..=config.max_iters {
        let gn = norm(&g);
        if gn > 0.0 && step > 0.0 {
            axpy(-step / gn, &g, &mut x);
        }
        step *= q;
        (g, f) = subgradient_unchecked(problem.matrix, problem.b, &x);
        if let Some(t) = rec.record(k, &x, f) {
            return Ok(rec.finish(x, t));
        }
    }
    Ok(rec.finish(x, Termination::MaxIters))
}
