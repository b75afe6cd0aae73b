//! Local loss suite, datasets, generators and problem constants.

mod constants;
mod generate;
pub mod libsvm;
mod partition;

use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

use crate::linalg::{axpy, dot, norm_sq, DenseMatrix, LinalgError, Vector};

pub use constants::{measure_constants, ProblemConstants};
pub use generate::{
    drlr_connectivity_scenario, drlr_heterogeneity_scenario, label_from_rule, overparam_ols,
    DrlrConnectivityConfig, DrlrHeterogeneityConfig, OverparamOlsConfig, PlantedOls,
};
pub use partition::{partition_dataset, ClassCounts, PartitionScheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("agent index {agent} out of range (m = {m})")]
    AgentOutOfRange { agent: usize, m: usize },
    #[error("dataset has no agents or an agent has no samples")]
    EmptyData,
    #[error("labels must be -1 or +1 for classification (agent {agent}, sample {sample}: {label})")]
    BadLabel { agent: usize, sample: usize, label: f64 },
    #[error("invalid generator parameters: {0}")]
    BadConfig(String),
    #[error("partition: {0}")]
    Partition(String),
    #[error("dataset csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One agent's local data: an `n_i x d` feature matrix and `n_i` targets.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentData {
    pub features: DenseMatrix,
    pub targets: Vec<f64>,
}

impl AgentData {
    pub fn new(features: DenseMatrix, targets: Vec<f64>) -> Result<Self, ProblemError> {
        if features.rows() != targets.len() {
            return Err(ProblemError::Dimension {
                expected: features.rows(),
                got: targets.len(),
            });
        }
        if targets.is_empty() {
            return Err(ProblemError::EmptyData);
        }
        Ok(AgentData { features, targets })
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }
}

/// A single densified sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
}

/// Per-agent samples sharing one feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d: usize,
    agents: Vec<AgentData>,
}

impl Dataset {
    pub fn new(d: usize, agents: Vec<AgentData>) -> Result<Self, ProblemError> {
        if agents.is_empty() {
            return Err(ProblemError::EmptyData);
        }
        for a in &agents {
            if a.features.cols() != d {
                return Err(ProblemError::Dimension {
                    expected: d,
                    got: a.features.cols(),
                });
            }
            if a.n() == 0 {
                return Err(ProblemError::EmptyData);
            }
        }
        Ok(Dataset { d, agents })
    }

    pub fn from_samples(d: usize, per_agent: Vec<Vec<Sample>>) -> Result<Self, ProblemError> {
        let agents = per_agent
            .into_iter()
            .map(|samples| {
                let mut feats = Vec::with_capacity(samples.len() * d);
                let mut labels = Vec::with_capacity(samples.len());
                for s in samples {
                    if s.features.len() != d {
                        return Err(ProblemError::Dimension {
                            expected: d,
                            got: s.features.len(),
                        });
                    }
                    feats.extend_from_slice(&s.features);
                    labels.push(s.label);
                }
                AgentData::new(DenseMatrix::from_vec(labels.len(), d, feats)?, labels)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Dataset::new(d, agents)
    }

    pub fn m(&self) -> usize {
        self.agents.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn agent(&self, i: usize) -> &AgentData {
        &self.agents[i]
    }

    pub fn agents(&self) -> &[AgentData] {
        &self.agents
    }

    pub fn sample_counts(&self) -> Vec<usize> {
        self.agents.iter().map(AgentData::n).collect()
    }

    pub fn total_samples(&self) -> usize {
        self.agents.iter().map(AgentData::n).sum()
    }

    fn check_labels(&self) -> Result<(), ProblemError> {
        for (agent, a) in self.agents.iter().enumerate() {
            for (sample, &label) in a.targets.iter().enumerate() {
                if label != 1.0 && label != -1.0 {
                    return Err(ProblemError::BadLabel { agent, sample, label });
                }
            }
        }
        Ok(())
    }

    /// All agents' rows stacked into one `N x d` matrix with matching targets.
    pub fn stacked(&self) -> (DenseMatrix, Vec<f64>) {
        let n: usize = self.total_samples();
        let mut data = Vec::with_capacity(n * self.d);
        let mut targets = Vec::with_capacity(n);
        for a in &self.agents {
            data.extend_from_slice(a.features.as_slice());
            targets.extend_from_slice(&a.targets);
        }
        (
            DenseMatrix::from_vec(n, self.d, data).expect("consistent shapes"),
            targets,
        )
    }

    /// CSV sidecar: `agent,sample,label,f0..f{d-1}`, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("agent,sample,label");
        for k in 0..self.d {
            let _ = write!(s, ",f{k}");
        }
        s.push('\n');
        for (i, a) in self.agents.iter().enumerate() {
            for (j, row) in a.features.rows_iter().enumerate() {
                let _ = write!(s, "{i},{j},{}", a.targets[j]);
                for v in row {
                    let _ = write!(s, ",{v}");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, ProblemError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(ProblemError::Csv {
            line: 1,
            message: "missing header".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || cols[..3] != ["agent", "sample", "label"] {
            return Err(ProblemError::Csv {
                line: 1,
                message: "expected header agent,sample,label,f0..".into(),
            });
        }
        let d = cols.len() - 3;
        let mut per_agent: Vec<Vec<Sample>> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let err = |message: String| ProblemError::Csv { line: lineno, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 3 {
                return Err(err(format!("expected {} fields, got {}", d + 3, fields.len())));
            }
            let agent: usize = fields[0].parse().map_err(|_| err("bad agent index".into()))?;
            let label: f64 = fields[2].parse().map_err(|_| err("bad label".into()))?;
            let features = fields[3..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad value `{f}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if agent > per_agent.len() {
                return Err(err("agents must appear in order".into()));
            }
            if agent == per_agent.len() {
                per_agent.push(Vec::new());
            }
            per_agent[agent].push(Sample { features, label });
        }
        Dataset::from_samples(d, per_agent)
    }
}

/// Loss family of every agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossKind {
    /// `f_i(x) = Σ_j ln(1 + exp(-y_j a_jᵀx)) + reg ‖x‖²` (sample sum not normalized).
    RidgeLogistic { reg: f64 },
    /// `f_i(x) = (1 / 2n_i) ‖A_i x - b_i‖²`.
    LeastSquares,
}

/// `m` local losses over a shared dataset, with cached measured constants.
#[derive(Debug)]
pub struct Problem {
    kind: LossKind,
    data: Dataset,
    constants: OnceLock<ProblemConstants>,
}

impl Clone for Problem {
    fn clone(&self) -> Self {
        let constants = OnceLock::new();
        if let Some(c) = self.constants.get() {
            let _ = constants.set(*c);
        }
        Problem {
            kind: self.kind,
            data: self.data.clone(),
            constants,
        }
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(z))` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Problem {
    pub fn ridge_logistic(data: Dataset, reg: f64) -> Result<Self, ProblemError> {
        if !(reg >= 0.0) || !reg.is_finite() {
            return Err(ProblemError::BadConfig(format!("ridge coefficient {reg}")));
        }
        data.check_labels()?;
        Ok(Problem {
            kind: LossKind::RidgeLogistic { reg },
            data,
            constants: OnceLock::new(),
        })
    }

    pub fn least_squares(data: Dataset) -> Self {
        Problem {
            kind: LossKind::LeastSquares,
            data,
            constants: OnceLock::new(),
        }
    }

    /// Scalar quadratics `f_i(x) = c_i (x - t_i)² / 2`, encoded as one-row least squares.
    pub fn scalar_quadratics(curvatures: &[f64], centers: &[f64]) -> Result<Self, ProblemError> {
        if curvatures.len() != centers.len() || curvatures.is_empty() {
            return Err(ProblemError::BadConfig(
                "curvatures and centers must be nonempty and equally long".into(),
            ));
        }
        let agents = curvatures
            .iter()
            .zip(centers)
            .map(|(&c, &t)| {
                if !(c >= 0.0) {
                    return Err(ProblemError::BadConfig(format!("negative curvature {c}")));
                }
                let s = c.sqrt();
                AgentData::new(DenseMatrix::from_vec(1, 1, vec![s])?, vec![s * t])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Problem::least_squares(Dataset::new(1, agents)?))
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn m(&self) -> usize {
        self.data.m()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    /// Measured constants, computed on first use.
    pub fn constants(&self) -> Result<ProblemConstants, ProblemError> {
        if let Some(c) = self.constants.get() {
            return Ok(*c);
        }
        let c = measure_constants(self)?;
        Ok(*self.constants.get_or_init(|| c))
    }

    fn check(&self, agent: usize, x: &[f64]) -> Result<(), ProblemError> {
        if agent >= self.m() {
            return Err(ProblemError::AgentOutOfRange { agent, m: self.m() });
        }
        if x.len() != self.d() {
            return Err(ProblemError::Dimension {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn loss_value(&self, agent: usize, x: &[f64]) -> Result<f64, ProblemError> {
        self.check(agent, x)?;
        Ok(self.value_unchecked(agent, x))
    }

    pub fn loss_gradient(&self, agent: usize, x: &[f64]) -> Result<Vector, ProblemError> {
        self.check(agent, x)?;
        let mut g = vec![0.0; self.d()];
        self.gradient_into(agent, x, &mut g);
        Ok(g.into())
    }

    pub(crate) fn value_unchecked(&self, agent: usize, x: &[f64]) -> f64 {
        let a = self.data.agent(agent);
        match self.kind {
            LossKind::RidgeLogistic { reg } => {
                let mut s = 0.0;
                for (row, &y) in a.features.rows_iter().zip(&a.targets) {
                    s += softplus(-y * dot(row, x));
                }
                s + reg * norm_sq(x)
            }
            LossKind::LeastSquares => {
                let mut s = 0.0;
                for (row, &b) in a.features.rows_iter().zip(&a.targets) {
                    let r = dot(row, x) - b;
                    s += r * r;
                }
                s / (2.0 * a.n() as f64)
            }
        }
    }

    /// Unchecked gradient `out = ∇f_agent(x)`; hot path of every algorithm.
    #[inline]
    pub fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d());
        debug_assert_eq!(out.len(), self.d());
        let a = self.data.agent(agent);
        out.iter_mut().for_each(|o| *o = 0.0);
        match self.kind {
            LossKind::RidgeLogistic { reg } => {
                for (row, &y) in a.features.rows_iter().zip(&a.targets) {
                    let coef = -y * sigmoid(-y * dot(row, x));
                    axpy(coef, row, out);
                }
                axpy(2.0 * reg, x, out);
            }
            LossKind::LeastSquares => {
                for (row, &b) in a.features.rows_iter().zip(&a.targets) {
                    axpy(dot(row, x) - b, row, out);
                }
                let inv_n = 1.0 / a.n() as f64;
                out.iter_mut().for_each(|o| *o *= inv_n);
            }
        }
    }

    /// `f(x) = (1/m) Σ_i f_i(x)`.
    pub fn average_value(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.check(0, x)?;
        Ok(self.average_value_unchecked(x))
    }

    pub(crate) fn average_value_unchecked(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m() {
            s += self.value_unchecked(i, x);
        }
        s / self.m() as f64
    }

    /// `∇f(x) = (1/m) Σ_i ∇f_i(x)`, summed in agent order.
    pub fn average_gradient(&self, x: &[f64]) -> Result<Vector, ProblemError> {
        self.check(0, x)?;
        let mut out = vec![0.0; self.d()];
        self.average_gradient_into(x, &mut out, &mut vec![0.0; self.d()]);
        Ok(out.into())
    }

    pub(crate) fn average_gradient_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.m() {
            self.gradient_into(i, x, scratch);
            axpy(1.0, scratch, out);
        }
        let inv_m = 1.0 / self.m() as f64;
        out.iter_mut().for_each(|o| *o *= inv_m);
    }

    /// Relabel agents: new agent `perm[i]` holds old agent `i`'s data.
    pub fn permuted(&self, perm: &[usize]) -> Problem {
        let mut agents = vec![None; self.m()];
        for (old, &new) in perm.iter().enumerate() {
            agents[new] = Some(self.data.agent(old).clone());
        }
        Problem {
            kind: self.kind,
            data: Dataset {
                d: self.d(),
                agents: agents.into_iter().map(|a| a.expect("permutation")).collect(),
            },
            constants: OnceLock::new(),
        }
    }
}
