use super::{AlgorithmError, AlgorithmState};
use crate::exec::Execution;
use crate::metrics::{
    round_metrics, Diagnostics, InnerAccumulator, Measure, ReferenceOptimum, RunTrace, Termination, TraceInfo,
};
use crate::problems::Problem;
use crate::topology::MixingMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub max_rounds: usize,
    pub epsilon: f64,
    pub measure: Measure,
}

impl StoppingRule {
    pub fn new(max_rounds: usize, epsilon: f64, measure: Measure) -> Result<Self, AlgorithmError> {
        if max_rounds == 0 {
            return Err(AlgorithmError::BadStop("max_rounds must be at least 1".into()));
        }
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(AlgorithmError::BadStop(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(StoppingRule {
            max_rounds,
            epsilon,
            measure,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions<'a> {
    pub diagnostics: Diagnostics,
    pub exec: Execution,
    pub reference: Option<&'a ReferenceOptimum>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            diagnostics: Diagnostics::Full,
            exec: Execution::Sequential,
            reference: None,
        }
    }
}

/// Step until the measure reaches `epsilon` or `max_rounds` rounds have run.
///
/// One row per round, row 0 before any step. Divergence ends the trace with
/// [`Termination::Diverged`] instead of an error.
pub fn run(
    mut state: AlgorithmState,
    p: &Problem,
    w: &MixingMatrix,
    stop: &StoppingRule,
    opts: &RunOptions<'_>,
) -> Result<RunTrace, AlgorithmError> {
    if stop.measure == Measure::DistMinNorm && opts.reference.and_then(|r| r.x_star.as_ref()).is_none() {
        return Err(AlgorithmError::BadStop("dist_min_norm needs a reference minimizer".into()));
    }
    let info = TraceInfo {
        method: state.method(),
        k: state.local_steps(),
        eta: state.eta(),
        rho: w.rho(),
        m: p.m(),
        d: p.d(),
        f_is_suboptimality: opts.reference.is_some(),
    };
    let reached = |row: &crate::metrics::RoundMetrics| row.measure(stop.measure).is_some_and(|v| v <= stop.epsilon);

    let first = round_metrics(p, &state, None, opts.reference, opts.diagnostics, opts.exec);
    let mut termination = if reached(&first) {
        Termination::ReachedEpsilon
    } else {
        Termination::MaxRounds
    };
    let mut rows = vec![first];
    if termination == Termination::MaxRounds {
        for _ in 0..stop.max_rounds {
            let mut acc = InnerAccumulator::new(opts.diagnostics);
            let outcome = state.step_round_observed(p, w, opts.exec, &mut |x| acc.observe(p, x, opts.exec));
            match outcome {
                Ok(()) => {}
                Err(AlgorithmError::Diverged { round }) => {
                    termination = Termination::Diverged { round };
                    break;
                }
                Err(e) => return Err(e),
            }
            let row = round_metrics(p, &state, acc.finish(), opts.reference, opts.diagnostics, opts.exec);
            let done = reached(&row);
            rows.push(row);
            if done {
                termination = Termination::ReachedEpsilon;
                break;
            }
        }
    }
    Ok(RunTrace {
        info,
        rows,
        termination,
    })
}
