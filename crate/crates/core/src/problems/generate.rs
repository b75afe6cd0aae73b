//! Synthetic data generators.
//!
//! Draw order is part of the contract: changing it changes every dataset
//! produced from a given seed.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{AgentData, Dataset, Problem, ProblemError};
use crate::linalg::{dot, DenseMatrix, Vector};
use crate::rng::{self, Rng};

fn normals(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Label rule: with `s ~ 1 + U(0,1)`, `y = +1` iff `s <= 1 + exp(-margin)`.
pub fn label_from_rule(margin: f64, s: f64) -> f64 {
    if s <= 1.0 + (-margin).exp() {
        1.0
    } else {
        -1.0
    }
}

fn draw_label(rng: &mut Rng, features: &[f64], model: &[f64]) -> f64 {
    let s = 1.0 + rng.random::<f64>();
    label_from_rule(dot(features, model), s)
}

/// Per-agent ground-truth models `x_i = x_b + v_i`, drawn as `x_b` then `v_1..v_m`.
fn local_models(rng: &mut Rng, m: usize, d: usize) -> Vec<Vec<f64>> {
    let base = normals(rng, d);
    (0..m)
        .map(|_| {
            let v = normals(rng, d);
            base.iter().zip(&v).map(|(b, v)| b + v).collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrlrConnectivityConfig {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl Default for DrlrConnectivityConfig {
    fn default() -> Self {
        DrlrConnectivityConfig {
            m: 20,
            n: 1000,
            d: 5,
            seed: 0,
        }
    }
}

/// Features `a_ij ~ N(0.2 i 1_d, 0.55 I_d)` with 1-based agent index `i`.
///
/// Draws: models, then per agent (in order) per sample: `d` normals, one uniform.
pub fn drlr_connectivity_scenario(cfg: &DrlrConnectivityConfig) -> Result<Dataset, ProblemError> {
    if cfg.m == 0 || cfg.n == 0 || cfg.d == 0 {
        return Err(ProblemError::BadConfig("m, n and d must be positive".into()));
    }
    let mut rng = rng::seeded(cfg.seed);
    let models = local_models(&mut rng, cfg.m, cfg.d);
    let sd = 0.55_f64.sqrt();
    let mut agents = Vec::with_capacity(cfg.m);
    for (idx, model) in models.iter().enumerate() {
        let mean = 0.2 * (idx + 1) as f64;
        let mut feats = Vec::with_capacity(cfg.n * cfg.d);
        let mut labels = Vec::with_capacity(cfg.n);
        for _ in 0..cfg.n {
            let a: Vec<f64> = normals(&mut rng, cfg.d)
                .into_iter()
                .map(|z| mean + sd * z)
                .collect();
            labels.push(draw_label(&mut rng, &a, model));
            feats.extend_from_slice(&a);
        }
        agents.push(AgentData::new(
            DenseMatrix::from_vec(cfg.n, cfg.d, feats)?,
            labels,
        )?);
    }
    Dataset::new(cfg.d, agents)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrlrHeterogeneityConfig {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    /// Perturbation scale; the reference levels are 0.99, 4 and 1e4.
    pub delta_gen: f64,
    pub seed: u64,
}

impl Default for DrlrHeterogeneityConfig {
    fn default() -> Self {
        DrlrHeterogeneityConfig {
            m: 20,
            n: 100,
            d: 80,
            delta_gen: 0.99,
            seed: 0,
        }
    }
}

/// Agent 1 draws `a_1j ~ N(0, I_d)`; agent `i >= 2` uses `a_1j + delta_gen · N(0, I_d)`.
///
/// Draws: models, agent-1 features, then for each agent `i >= 2` its
/// perturbations, then labels agent by agent.
pub fn drlr_heterogeneity_scenario(cfg: &DrlrHeterogeneityConfig) -> Result<Dataset, ProblemError> {
    if cfg.m == 0 || cfg.n == 0 || cfg.d == 0 {
        return Err(ProblemError::BadConfig("m, n and d must be positive".into()));
    }
    if !(cfg.delta_gen >= 0.0) || !cfg.delta_gen.is_finite() {
        return Err(ProblemError::BadConfig(format!(
            "delta_gen must be finite and nonnegative, got {}",
            cfg.delta_gen
        )));
    }
    let mut rng = rng::seeded(cfg.seed);
    let models = local_models(&mut rng, cfg.m, cfg.d);
    let first: Vec<f64> = (0..cfg.n).flat_map(|_| normals(&mut rng, cfg.d)).collect();
    let mut features = vec![first.clone()];
    for _ in 1..cfg.m {
        let pert: Vec<f64> = first
            .iter()
            .map(|a| a + cfg.delta_gen * rng.sample::<f64, _>(StandardNormal))
            .collect();
        features.push(pert);
    }
    let mut agents = Vec::with_capacity(cfg.m);
    for (feats, model) in features.into_iter().zip(&models) {
        let labels = feats
            .chunks(cfg.d)
            .map(|a| draw_label(&mut rng, a, model))
            .collect();
        agents.push(AgentData::new(
            DenseMatrix::from_vec(cfg.n, cfg.d, feats)?,
            labels,
        )?);
    }
    Dataset::new(cfg.d, agents)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverparamOlsConfig {
    pub m: usize,
    pub n_per_agent: usize,
    pub d: usize,
    /// Scale of the per-agent row means `mu_i = heterogeneity · g_i`, `g_i ~ N(0, I_d)`.
    pub heterogeneity: f64,
    pub seed: u64,
}

/// An interpolating least-squares instance and the model that generated it.
#[derive(Clone, Debug)]
pub struct PlantedOls {
    pub problem: Problem,
    pub x_planted: Vector,
}

/// Rows `a ~ N(mu_i, I_d)`, targets `b_i = A_i x_planted` for one shared planted model.
///
/// Draws: `x_planted`, then per agent `g_i` followed by its rows.
pub fn overparam_ols(cfg: &OverparamOlsConfig) -> Result<PlantedOls, ProblemError> {
    if cfg.m == 0 || cfg.n_per_agent == 0 {
        return Err(ProblemError::BadConfig("m and n_per_agent must be positive".into()));
    }
    if cfg.m * cfg.n_per_agent >= cfg.d {
        return Err(ProblemError::BadConfig(format!(
            "over-parameterization requires m * n_per_agent < d ({} >= {})",
            cfg.m * cfg.n_per_agent,
            cfg.d
        )));
    }
    if !(cfg.heterogeneity >= 0.0) || !cfg.heterogeneity.is_finite() {
        return Err(ProblemError::BadConfig(format!(
            "heterogeneity must be finite and nonnegative, got {}",
            cfg.heterogeneity
        )));
    }
    let mut rng = rng::seeded(cfg.seed);
    let x_planted = normals(&mut rng, cfg.d);
    let mut agents = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        let center: Vec<f64> = normals(&mut rng, cfg.d)
            .into_iter()
            .map(|g| cfg.heterogeneity * g)
            .collect();
        let mut rows = Vec::with_capacity(cfg.n_per_agent * cfg.d);
        for _ in 0..cfg.n_per_agent {
            rows.extend(center.iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)));
        }
        let a = DenseMatrix::from_vec(cfg.n_per_agent, cfg.d, rows)?;
        let b = a.matvec(&x_planted)?.into_inner();
        agents.push(AgentData::new(a, b)?);
    }
    Ok(PlantedOls {
        problem: Problem::least_squares(Dataset::new(cfg.d, agents)?),
        x_planted: x_planted.into(),
    })
}
