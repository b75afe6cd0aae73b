use std::cmp::Ordering;

use super::{run, AlgorithmError, AlgorithmState, InitPolicy, Method, RunOptions, StoppingRule};
use crate::metrics::{rounds_to_epsilon, RunTrace, Termination};
use crate::problems::Problem;
use crate::topology::MixingMatrix;

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CandidateOutcome {
    Reached { rounds: usize },
    NotReached { final_measure: f64 },
    Diverged { round: usize },
    /// Stopped after `rounds` rounds: a larger step already reached epsilon
    /// in `rounds + 1`, so this one could no longer win.
    Pruned { rounds: usize },
}

#[derive(Clone, Debug)]
pub struct Tuned {
    pub eta: f64,
    pub trace: RunTrace,
    /// Every grid point with its outcome, in grid order.
    pub candidates: Vec<(f64, CandidateOutcome)>,
}

fn outcome(trace: &RunTrace, stop: &StoppingRule, cap: Option<usize>) -> CandidateOutcome {
    match trace.termination {
        Termination::Diverged { round } => CandidateOutcome::Diverged { round },
        _ => match rounds_to_epsilon(trace, stop.measure, stop.epsilon) {
            Some(rounds) => CandidateOutcome::Reached { rounds },
            None => match cap {
                Some(rounds) => CandidateOutcome::Pruned { rounds },
                None => CandidateOutcome::NotReached {
                    final_measure: trace.final_measure(stop.measure).unwrap_or(f64::INFINITY),
                },
            },
        },
    }
}

/// Reached before not-reached before diverged; then fewer rounds, then
/// smaller final measure; ties go to the larger step.
fn rank(a: (f64, &CandidateOutcome), b: (f64, &CandidateOutcome)) -> Ordering {
    use CandidateOutcome::*;
    let class = |o: &CandidateOutcome| match o {
        Reached { .. } => 0,
        NotReached { .. } | Pruned { .. } => 1,
        Diverged { .. } => 2,
    };
    let measure = |o: &CandidateOutcome| match o {
        NotReached { final_measure } => *final_measure,
        _ => f64::INFINITY,
    };
    class(a.1)
        .cmp(&class(b.1))
        .then_with(|| match (a.1, b.1) {
            (Reached { rounds: x }, Reached { rounds: y }) => x.cmp(y),
            _ => measure(a.1).total_cmp(&measure(b.1)),
        })
        .then_with(|| b.0.total_cmp(&a.0))
}

/// Run every step size on the grid and keep the fastest.
///
/// Candidates run from the largest step down. Once one reaches epsilon in
/// `R` rounds, later (smaller) steps are capped at `R - 1` rounds: with ties
/// going to the larger step they could only win by being strictly faster, so
/// the cap never changes the choice.
#[allow(clippy::too_many_arguments)]
pub fn tune_step_size(
    p: &Problem,
    w: &MixingMatrix,
    method: Method,
    k: usize,
    init: InitPolicy,
    grid: &[f64],
    stop: &StoppingRule,
    opts: &RunOptions<'_>,
) -> Result<Tuned, AlgorithmError> {
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(AlgorithmError::BadGrid);
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));

    let mut outcomes: Vec<Option<CandidateOutcome>> = vec![None; grid.len()];
    let mut best: Option<(usize, RunTrace)> = None;
    let mut best_rounds: Option<usize> = None;
    for &i in &order {
        let cap = best_rounds.map(|r| r.saturating_sub(1));
        if cap == Some(0) {
            outcomes[i] = Some(CandidateOutcome::Pruned { rounds: 0 });
            continue;
        }
        let rule = StoppingRule {
            max_rounds: cap.map_or(stop.max_rounds, |c| c.min(stop.max_rounds)),
            ..*stop
        };
        let state = AlgorithmState::init(p, w, method, k, grid[i], init)?;
        let trace = run(state, p, w, &rule, opts)?;
        let o = outcome(&trace, stop, cap.filter(|&c| c < stop.max_rounds));
        let better = match &best {
            None => true,
            Some((j, _)) => rank((grid[i], &o), (grid[*j], outcomes[*j].as_ref().expect("ranked"))) == Ordering::Less,
        };
        if let CandidateOutcome::Reached { rounds } = o {
            best_rounds = Some(best_rounds.map_or(rounds, |b| b.min(rounds)));
        }
        outcomes[i] = Some(o);
        if better {
            best = Some((i, trace));
        }
    }
    let (i, trace) = best.expect("nonempty grid");
    if matches!(outcomes[i], Some(CandidateOutcome::Diverged { .. })) {
        return Err(AlgorithmError::AllDiverged);
    }
    Ok(Tuned {
        eta: grid[i],
        trace,
        candidates: grid
            .iter()
            .zip(outcomes)
            .map(|(&e, o)| (e, o.expect("every candidate ran")))
            .collect(),
    })
}
