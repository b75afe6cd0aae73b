//! Per-round convergence diagnostics and trace post-processing.
//!
//! Row `r` of a trace describes the iterate `X_r` at the start of round `r`:
//!
//! * `F_r = f(x̄^r) - f⋆` (raw `f(x̄^r)` when `f⋆` is unknown)
//! * `S_r = Σ_i ‖x^i_r - x̄^r‖²`
//! * `Γ_r = (1/m) ‖Y_r - ∇f(X_r)‖²` (tracking methods only)
//! * `G` and `D`, the mean squared average-gradient norm and the drift
//!   `Σ_i Σ_k ‖x^i_{·,k} - x̄‖²` over the `K + 1` inner iterates of the round
//!   that produced `X_r`. Row 0 reports the `k = 0` values at `X_0`.

mod fit;
mod reference;
mod trace;

use thiserror::Error;

use crate::algorithms::AlgorithmState;
use crate::exec::Execution;
use crate::linalg::{dist_sq, norm, norm_sq, DenseMatrix, Vector};
use crate::problems::{Problem, ProblemError};

pub use fit::{fit_linear_rate, fit_log_linear, LinearFit};
pub use reference::{reference_optimum, ReferenceOptimum};
pub use trace::{rounds_to_epsilon, Measure, RunTrace, Termination, TraceInfo, TRACE_CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least {needed} positive values in the fit window, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("window fraction must lie in (0, 1], got {0}")]
    BadWindow(f64),
    #[error("reference solve did not converge: {0}")]
    OracleFailed(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Which optional diagnostics a run computes.
///
/// `Full` adds `Γ`, `G` and `D`, which cost `m` full-gradient evaluations
/// (`m²` local ones) per inner iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Diagnostics {
    Basic,
    #[default]
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub comm_rounds: usize,
    pub grad_evals_per_agent: usize,
    /// Suboptimality, or the raw objective when the trace says `f⋆` is unknown.
    pub f_value: f64,
    pub consensus: f64,
    pub tracking: Option<f64>,
    pub grad_sq: Option<f64>,
    pub drift: Option<f64>,
    pub avg_grad_norm: f64,
    pub dist_min_norm: Option<f64>,
}

impl RoundMetrics {
    pub fn measure(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::AvgGradNorm => Some(self.avg_grad_norm),
            Measure::Suboptimality => Some(self.f_value),
            Measure::DistMinNorm => self.dist_min_norm,
        }
    }
}

/// Row means of a stacked iterate (one agent per row), accumulated as
/// offsets from the first row so identical rows give their common value exactly.
pub fn agent_mean(x: &DenseMatrix) -> Vector {
    let base = x.row(0);
    let mut acc = vec![0.0; x.cols()];
    for row in x.rows_iter().skip(1) {
        for ((a, v), b) in acc.iter_mut().zip(row).zip(base) {
            *a += v - b;
        }
    }
    let inv = 1.0 / x.rows() as f64;
    acc.iter().zip(base).map(|(a, b)| b + a * inv).collect::<Vec<f64>>().into()
}

/// `Σ_i ‖x^i - x̄‖²`.
pub fn consensus_error(x: &DenseMatrix) -> f64 {
    let mean = agent_mean(x);
    x.rows_iter().map(|row| dist_sq(row, &mean)).sum()
}

fn full_gradients(p: &Problem, x: &DenseMatrix, exec: Execution) -> Vec<Vec<f64>> {
    let d = p.d();
    exec.map(x.rows(), |i| {
        let mut g = vec![0.0; d];
        p.average_gradient_into(x.row(i), &mut g, &mut vec![0.0; d]);
        g
    })
}

/// Accumulates `G` and `D` over the inner iterates of one round.
#[derive(Clone, Debug)]
pub struct InnerAccumulator {
    enabled: bool,
    center: Option<Vector>,
    grad_sq: f64,
    drift: f64,
    points: usize,
    agents: usize,
}

impl InnerAccumulator {
    pub fn new(diagnostics: Diagnostics) -> Self {
        InnerAccumulator {
            enabled: diagnostics == Diagnostics::Full,
            center: None,
            grad_sq: 0.0,
            drift: 0.0,
            points: 0,
            agents: 0,
        }
    }

    /// Record inner iterate `X_{r,k}`; the first call must be `k = 0`.
    pub fn observe(&mut self, p: &Problem, x: &DenseMatrix, exec: Execution) {
        if !self.enabled {
            return;
        }
        let center = self.center.get_or_insert_with(|| agent_mean(x));
        self.drift += x.rows_iter().map(|row| dist_sq(row, center)).sum::<f64>();
        self.grad_sq += full_gradients(p, x, exec).iter().map(|g| norm_sq(g)).sum::<f64>();
        self.points += 1;
        self.agents = x.rows();
    }

    /// `(G, D)` for the observed round.
    pub fn finish(&self) -> Option<(f64, f64)> {
        (self.enabled && self.points > 0).then(|| {
            (
                self.grad_sq / (self.agents * self.points) as f64,
                self.drift,
            )
        })
    }
}

/// Diagnostics for the current state. `inner` carries `(G, D)` of the round
/// just finished; `None` means row 0 and the `k = 0` values are used.
pub fn round_metrics(
    p: &Problem,
    state: &AlgorithmState,
    inner: Option<(f64, f64)>,
    reference: Option<&ReferenceOptimum>,
    diagnostics: Diagnostics,
    exec: Execution,
) -> RoundMetrics {
    let x = state.x();
    let m = x.rows();
    let mean = agent_mean(x);
    let grad_bar = {
        let mut g = vec![0.0; p.d()];
        p.average_gradient_into(&mean, &mut g, &mut vec![0.0; p.d()]);
        g
    };
    let f_bar = p.average_value_unchecked(&mean);
    let consensus: f64 = x.rows_iter().map(|row| dist_sq(row, &mean)).sum();

    let (mut tracking, mut grad_sq, mut drift) = (None, None, None);
    if diagnostics == Diagnostics::Full {
        let full = full_gradients(p, x, exec);
        if let Some(y) = state.y() {
            let t: f64 = y.rows_iter().zip(&full).map(|(yi, gi)| dist_sq(yi, gi)).sum();
            tracking = Some(t / m as f64);
        }
        match inner {
            Some((g, dr)) => {
                grad_sq = Some(g);
                drift = Some(dr);
            }
            None => {
                grad_sq = Some(full.iter().map(|g| norm_sq(g)).sum::<f64>() / m as f64);
                drift = Some(consensus);
            }
        }
    }

    let r = state.round();
    RoundMetrics {
        round: r,
        comm_rounds: r,
        grad_evals_per_agent: r * (state.local_steps() + 1),
        f_value: reference.map_or(f_bar, |rf| f_bar - rf.f_star),
        consensus,
        tracking,
        grad_sq,
        drift,
        avg_grad_norm: norm(&grad_bar),
        dist_min_norm: reference
            .and_then(|rf| rf.x_star.as_ref())
            .map(|xs| dist_sq(&mean, xs).sqrt()),
    }
}
