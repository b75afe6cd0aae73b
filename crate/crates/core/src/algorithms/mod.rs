//! Local DGD and local DGT as round-based state machines.
//!
//! Iterates are stored one agent per row (`m × d`). A round performs `K`
//! local steps and one more gradient step fused with the gossip average, so
//! every agent evaluates its gradient `K + 1` times per round.

mod run;
mod tune;

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::exec::Execution;
use crate::linalg::{axpy, DenseMatrix};
use crate::problems::{Problem, ProblemError};
use crate::rng;
use crate::topology::MixingMatrix;

pub use run::{run, RunOptions, StoppingRule};
pub use tune::{log_grid, tune_step_size, CandidateOutcome, Tuned};

/// Any entry above this magnitude counts as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("step size must be positive and finite, got {0}")]
    BadStepSize(f64),
    #[error("iterate shape {got:?} does not match problem/network {expected:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("{0} state passed to the {1} step")]
    WrongMethod(Method, Method),
    #[error("iterates diverged in round {round}")]
    Diverged { round: usize },
    #[error("stopping rule: {0}")]
    BadStop(String),
    #[error("step-size grid is empty or has a nonpositive entry")]
    BadGrid,
    #[error("every step size on the grid diverged")]
    AllDiverged,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Dgd,
    Dgt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dgd => "dgd",
            Method::Dgt => "dgt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dgd" => Some(Method::Dgd),
            "dgt" => Some(Method::Dgt),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitPolicy {
    Zeros,
    /// One `N(0, I)` draw copied to every agent.
    SharedRandom(u64),
    /// Independent `N(0, I)` draws, agent by agent.
    PerAgentRandom(u64),
}

fn initial_iterates(m: usize, d: usize, policy: InitPolicy) -> DenseMatrix {
    match policy {
        InitPolicy::Zeros => DenseMatrix::zeros(m, d),
        InitPolicy::SharedRandom(seed) => {
            let mut rng = rng::seeded(seed);
            let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let data = (0..m).flat_map(|_| x.iter().copied()).collect();
            DenseMatrix::from_vec(m, d, data).expect("shape")
        }
        InitPolicy::PerAgentRandom(seed) => {
            let mut rng = rng::seeded(seed);
            let data = (0..m * d).map(|_| StandardNormal.sample(&mut rng)).collect();
            DenseMatrix::from_vec(m, d, data).expect("shape")
        }
    }
}

/// Stacked per-agent gradients `∇F(X)`.
fn stacked_gradients(p: &Problem, x: &DenseMatrix, exec: Execution) -> DenseMatrix {
    let (m, d) = x.shape();
    let mut g = DenseMatrix::zeros(m, d);
    exec.for_each_row(g.as_mut_slice(), d, |i, gi| p.gradient_into(i, x.row(i), gi));
    g
}

/// `out_i = Σ_j w_ij z_j`, summed in increasing `j`, zero weights skipped.
pub(crate) fn gossip(w: &MixingMatrix, z: &DenseMatrix, exec: Execution) -> DenseMatrix {
    let (m, d) = z.shape();
    let mut out = DenseMatrix::zeros(m, d);
    exec.for_each_row(out.as_mut_slice(), d, |i, row| {
        for j in 0..m {
            let wij = w.weight(i, j);
            if wij != 0.0 {
                axpy(wij, z.row(j), row);
            }
        }
    });
    out
}

fn check_finite(x: &DenseMatrix, round: usize) -> Result<(), AlgorithmError> {
    let bad = x
        .as_slice()
        .iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD);
    if bad {
        Err(AlgorithmError::Diverged { round })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmState {
    method: Method,
    k: usize,
    eta: f64,
    x: DenseMatrix,
    y: Option<DenseMatrix>,
    /// DGT: `∇F(X_r)`, reused as the anchor of the local corrections.
    grad: Option<DenseMatrix>,
    round: usize,
}

impl AlgorithmState {
    /// Fresh state; DGT starts its trackers at `y^i = ∇f_i(x^i)`.
    pub fn init(
        p: &Problem,
        w: &MixingMatrix,
        method: Method,
        k: usize,
        eta: f64,
        policy: InitPolicy,
    ) -> Result<Self, AlgorithmError> {
        if w.m() != p.m() {
            return Err(AlgorithmError::Shape {
                expected: (p.m(), p.d()),
                got: (w.m(), p.d()),
            });
        }
        let x = initial_iterates(p.m(), p.d(), policy);
        Self::from_iterates(p, method, k, eta, x, None)
    }

    /// State from explicit iterates. `y = None` gives DGT the default trackers.
    pub fn from_iterates(
        p: &Problem,
        method: Method,
        k: usize,
        eta: f64,
        x: DenseMatrix,
        y: Option<DenseMatrix>,
    ) -> Result<Self, AlgorithmError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(AlgorithmError::BadStepSize(eta));
        }
        let expected = (p.m(), p.d());
        if x.shape() != expected {
            return Err(AlgorithmError::Shape {
                expected,
                got: x.shape(),
            });
        }
        if let Some(y) = &y {
            if y.shape() != expected {
                return Err(AlgorithmError::Shape {
                    expected,
                    got: y.shape(),
                });
            }
        }
        let (y, grad) = match method {
            Method::Dgd => (None, None),
            Method::Dgt => {
                let g = stacked_gradients(p, &x, Execution::Sequential);
                (Some(y.unwrap_or_else(|| g.clone())), Some(g))
            }
        };
        Ok(AlgorithmState {
            method,
            k,
            eta,
            x,
            y,
            grad,
            round: 0,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Number of additional local updates per round.
    pub fn local_steps(&self) -> usize {
        self.k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> Option<&DenseMatrix> {
        self.y.as_ref()
    }

    pub fn step_round(&mut self, p: &Problem, w: &MixingMatrix, exec: Execution) -> Result<(), AlgorithmError> {
        self.step_round_observed(p, w, exec, &mut |_| {})
    }

    /// One round; `observer` sees the inner iterates `X_{r,0}, …, X_{r,K}`.
    ///
    /// On divergence the state is left unusable and should be discarded.
    pub fn step_round_observed(
        &mut self,
        p: &Problem,
        w: &MixingMatrix,
        exec: Execution,
        observer: &mut dyn FnMut(&DenseMatrix),
    ) -> Result<(), AlgorithmError> {
        match self.method {
            Method::Dgd => self.step_dgd(p, w, exec, observer),
            Method::Dgt => self.step_dgt(p, w, exec, observer),
        }
    }

    pub fn step_round_dgd(&mut self, p: &Problem, w: &MixingMatrix, exec: Execution) -> Result<(), AlgorithmError> {
        if self.method != Method::Dgd {
            return Err(AlgorithmError::WrongMethod(self.method, Method::Dgd));
        }
        self.step_dgd(p, w, exec, &mut |_| {})
    }

    pub fn step_round_dgt(&mut self, p: &Problem, w: &MixingMatrix, exec: Execution) -> Result<(), AlgorithmError> {
        if self.method != Method::Dgt {
            return Err(AlgorithmError::WrongMethod(self.method, Method::Dgt));
        }
        self.step_dgt(p, w, exec, &mut |_| {})
    }

    fn step_dgd(
        &mut self,
        p: &Problem,
        w: &MixingMatrix,
        exec: Execution,
        observer: &mut dyn FnMut(&DenseMatrix),
    ) -> Result<(), AlgorithmError> {
        let d = self.x.cols();
        let eta = self.eta;
        let next = self.round + 1;
        let mut scratch = DenseMatrix::zeros(self.x.rows(), d);
        observer(&self.x);
        // K local steps, then the fused step whose result is gossiped
        for k in 0..=self.k {
            exec.for_each_row2(self.x.as_mut_slice(), scratch.as_mut_slice(), d, |i, xi, gi| {
                p.gradient_into(i, xi, gi);
                axpy(-eta, gi, xi);
            });
            check_finite(&self.x, next)?;
            if k < self.k {
                observer(&self.x);
            }
        }
        self.x = gossip(w, &self.x, exec);
        check_finite(&self.x, next)?;
        self.round = next;
        Ok(())
    }

    fn step_dgt(
        &mut self,
        p: &Problem,
        w: &MixingMatrix,
        exec: Execution,
        observer: &mut dyn FnMut(&DenseMatrix),
    ) -> Result<(), AlgorithmError> {
        let d = self.x.cols();
        let eta = self.eta;
        let next = self.round + 1;
        let y_r = self.y.take().expect("tracking state");
        let g_r = self.grad.take().expect("gradient cache");
        let mut y = y_r.clone();
        let mut g = g_r.clone();
        observer(&self.x);
        for _ in 0..self.k {
            exec.for_each_row3(
                self.x.as_mut_slice(),
                y.as_mut_slice(),
                g.as_mut_slice(),
                d,
                |i, xi, yi, gi| {
                    axpy(-eta, yi, xi);
                    p.gradient_into(i, xi, gi);
                    let (yr, gr) = (y_r.row(i), g_r.row(i));
                    for t in 0..d {
                        yi[t] = (yr[t] + gi[t]) - gr[t];
                    }
                },
            );
            check_finite(&self.x, next)?;
            observer(&self.x);
        }
        // X_{r+1} = (X_{r,K} - η Y_{r,K}) W
        let mut z = self.x.clone();
        exec.for_each_row2(z.as_mut_slice(), y.as_mut_slice(), d, |_, zi, yi| axpy(-eta, yi, zi));
        let x_new = gossip(w, &z, exec);
        check_finite(&x_new, next)?;
        // Y_{r+1} = (Y_{r,K} + ∇F(X_{r+1}) - ∇F(X_{r,K})) W
        let g_new = stacked_gradients(p, &x_new, exec);
        exec.for_each_row2(y.as_mut_slice(), g.as_mut_slice(), d, |i, yi, gi| {
            let gn = g_new.row(i);
            for t in 0..d {
                yi[t] = (yi[t] + gn[t]) - gi[t];
            }
        });
        let y_new = gossip(w, &y, exec);
        check_finite(&y_new, next)?;
        self.x = x_new;
        self.y = Some(y_new);
        self.grad = Some(g_new);
        self.round = next;
        Ok(())
    }
}
