use std::fmt::Write as _;

use super::RoundMetrics;
use crate::algorithms::Method;

pub const TRACE_CSV_HEADER: &str =
    "round,comm_rounds,grad_evals_per_agent,F_r,S_r,Gamma_r,G_r,D_r,avg_grad_norm,dist_min_norm";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    AvgGradNorm,
    Suboptimality,
    DistMinNorm,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::AvgGradNorm => "avg_grad_norm",
            Measure::Suboptimality => "suboptimality",
            Measure::DistMinNorm => "dist_min_norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "avg_grad_norm" => Some(Measure::AvgGradNorm),
            "suboptimality" => Some(Measure::Suboptimality),
            "dist_min_norm" => Some(Measure::DistMinNorm),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedEpsilon,
    MaxRounds,
    /// Divergence detected while computing this round.
    Diverged { round: usize },
}

/// Run settings captured alongside the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceInfo {
    pub method: Method,
    pub k: usize,
    pub eta: f64,
    pub rho: f64,
    pub m: usize,
    pub d: usize,
    /// `false` when `F_r` holds the raw objective because `f⋆` is unknown.
    pub f_is_suboptimality: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub info: TraceInfo,
    pub rows: Vec<RoundMetrics>,
    pub termination: Termination,
}

fn cell(s: &mut String, v: Option<f64>) {
    s.push(',');
    if let Some(v) = v {
        let _ = write!(s, "{v:.16e}");
    }
}

impl RunTrace {
    pub fn values(&self, measure: Measure) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.measure(measure)).collect()
    }

    pub fn last(&self) -> Option<&RoundMetrics> {
        self.rows.last()
    }

    pub fn final_measure(&self, measure: Measure) -> Option<f64> {
        self.last().and_then(|r| r.measure(measure))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 + self.rows.len() * 200);
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.round, r.comm_rounds, r.grad_evals_per_agent);
            cell(&mut s, Some(r.f_value));
            cell(&mut s, Some(r.consensus));
            cell(&mut s, r.tracking);
            cell(&mut s, r.grad_sq);
            cell(&mut s, r.drift);
            cell(&mut s, Some(r.avg_grad_norm));
            cell(&mut s, r.dist_min_norm);
            s.push('\n');
        }
        s
    }
}

/// First round whose measure is at most `epsilon`; later rises do not matter.
pub fn rounds_to_epsilon(trace: &RunTrace, measure: Measure, epsilon: f64) -> Option<usize> {
    trace
        .rows
        .iter()
        .find(|r| r.measure(measure).is_some_and(|v| v <= epsilon))
        .map(|r| r.round)
}

#[cfg(test)]
pub(crate) fn synthetic(values: &[f64]) -> RunTrace {
    RunTrace {
        info: TraceInfo {
            method: Method::Dgt,
            k: 0,
            eta: 0.1,
            rho: 0.0,
            m: 1,
            d: 1,
            f_is_suboptimality: true,
        },
        rows: values
            .iter()
            .enumerate()
            .map(|(r, &v)| RoundMetrics {
                round: r,
                comm_rounds: r,
                grad_evals_per_agent: r,
                f_value: v,
                consensus: 0.0,
                tracking: None,
                grad_sq: None,
                drift: None,
                avg_grad_norm: v,
                dist_min_norm: None,
            })
            .collect(),
        termination: Termination::MaxRounds,
    }
}
