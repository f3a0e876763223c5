use super::{check_start, Method, Recorder, SolveTrace, SolverConfig, Termination};
use crate::error::Result;
use crate::instance::Problem;
use crate::linalg::{axpy, dot};
use crate::model::{subgradient_unchecked, Signal};

/// Subgradient method with Polyak steps `x+ = x - ((f(x) - f*) / |g|^2) g`.
///
/// Stops as stalled when the subgradient vanishes (or the gap is nonpositive)
/// before a stopping criterion holds.
pub fn solve_polyak(problem: &Problem<'_>, config: &SolverConfig, x0: &Signal) -> Result<SolveTrace> {
    check_start(problem, x0)?;
    let mut rec = Recorder::new(problem, config, Method::Polyak)?;
    let fstar = rec.fstar();
    let mut x = x0.as_slice().to_vec();
    let (mut g, mut f) = subgradient_unchecked(problem.matrix, problem.b, &x);
    if let Some(t) = rec.record(0, &x, f) {
        return Ok(rec.finish(x, t));
    }
    for k in 1..=config.max_iters {
        let gap = f - fstar;
        let gg = dot(&g, &g);
        if gg == 0.0 || gap <= 0.0 {
            return Ok(rec.finish(x, Termination::Stalled));
        }
        axpy(-gap / gg, &g, &mut x);
        (g, f) = subgradient_unchecked(problem.matrix, problem.b, &x);
        if let Some(t) = rec.record(k, &x, f) {
            return Ok(rec.finish(x, t));
        }
    }
    Ok(rec.finish(x, Termination::MaxIters))
}
