//! Experiment configuration, written in TOML.
//!
//! Parsing is two-staged: serde reads the raw document (numbers stay wide so
//! that e.g. a negative `K` is reported by validation rather than as a type
//! error), then [`ExperimentConfig::validate`] checks every field and reports
//! all problems with their field paths.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithms::{InitPolicy, Method};
use crate::metrics::{Diagnostics, Measure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<String>,
    pub diagnostics: Option<String>,
    pub problem: RawProblem,
    #[serde(default)]
    pub topology: Vec<RawTopology>,
    pub algorithm: RawAlgorithm,
    pub step_size: RawStepSize,
    pub stop: RawStop,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub kind: String,
    pub m: Option<i64>,
    pub n: Option<i64>,
    pub d: Option<i64>,
    pub reg: Option<f64>,
    pub delta_gen: Option<f64>,
    pub n_per_agent: Option<i64>,
    pub heterogeneity: Option<f64>,
    pub path: Option<String>,
    pub partition: Option<String>,
    pub positive: Option<i64>,
    pub negative: Option<i64>,
    pub pure_agents: Option<i64>,
    pub per_agent: Option<i64>,
    pub first_label: Option<f64>,
    pub curvatures: Option<Vec<f64>>,
    pub centers: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTopology {
    pub kind: String,
    pub p: Option<f64>,
    pub weights: Option<String>,
    pub max_resamples: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAlgorithm {
    pub methods: Vec<String>,
    pub k: Vec<i64>,
    pub init: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStepSize {
    pub policy: String,
    pub eta: Option<f64>,
    pub lo_factor: Option<f64>,
    pub hi_factor: Option<f64>,
    pub count: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStop {
    pub epsilon: f64,
    pub measure: String,
    pub max_rounds: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Partition {
    Uniform,
    Mixed { positive: usize, negative: usize },
    Segregated { pure_agents: usize, per_agent: usize, first_label: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    DrlrConnectivity { m: usize, n: usize, d: usize, reg: f64 },
    DrlrHeterogeneity { m: usize, n: usize, d: usize, delta_gen: f64, reg: f64 },
    OverparamOls { m: usize, n_per_agent: usize, d: usize, heterogeneity: f64 },
    Libsvm { path: PathBuf, m: usize, d: usize, reg: f64, partition: Partition },
    ScalarQuadratics { curvatures: Vec<f64>, centers: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    Metropolis,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TopologyKind {
    Complete,
    Ring,
    ErdosRenyi { p: f64, max_resamples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub weights: WeightScheme,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSizePolicy {
    Fixed(f64),
    /// The closed-form step size from the measured constants.
    Thm1,
    /// `count` log-spaced points over `[lo_factor / L, hi_factor / L]`.
    Grid { lo_factor: f64, hi_factor: f64, count: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub diagnostics: Diagnostics,
    pub problem: ProblemSpec,
    pub topologies: Vec<TopologySpec>,
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    pub init: InitKind,
    pub step_size: StepSizePolicy,
    pub epsilon: f64,
    pub measure: Measure,
    pub max_rounds: usize,
}

/// Initialization without its seed; the seed comes from the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Zeros,
    SharedRandom,
    PerAgentRandom,
}

impl InitKind {
    pub fn with_seed(self, seed: u64) -> InitPolicy {
        match self {
            InitKind::Zeros => InitPolicy::Zeros,
            InitKind::SharedRandom => InitPolicy::SharedRandom(seed),
            InitKind::PerAgentRandom => InitPolicy::PerAgentRandom(seed),
        }
    }
}

struct Checker {
    errors: Vec<ConfigError>,
}

impl Checker {
    fn count(&mut self, path: &str, v: Option<i64>, default: Option<i64>, min: i64) -> usize {
        match v.or(default) {
            None => {
                self.errors.push(err(path, "missing"));
                0
            }
            Some(x) if x < min => {
                self.errors.push(err(path, format!("must be >= {min}, got {x}")));
                0
            }
            Some(x) => x as usize,
        }
    }

    fn real(&mut self, path: &str, v: Option<f64>, default: Option<f64>, ok: impl Fn(f64) -> bool, what: &str) -> f64 {
        match v.or(default) {
            None => {
                self.errors.push(err(path, "missing"));
                f64::NAN
            }
            Some(x) if !x.is_finite() || !ok(x) => {
                self.errors.push(err(path, format!("must be {what}, got {x}")));
                f64::NAN
            }
            Some(x) => x,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Vec<ConfigError>> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| vec![err("<document>", e.to_string().trim().to_string())])?;
        Self::validate(raw, base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self, Vec<ConfigError>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![err("<file>", format!("cannot read {}: {e}", path.display()))])?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Check every field; all problems are reported together.
    pub fn validate(raw: RawConfig, base_dir: &Path) -> Result<Self, Vec<ConfigError>> {
        let mut c = Checker { errors: Vec::new() };
        if raw.name.is_empty() || raw.name.contains(['/', '\\']) || raw.name == "." || raw.name == ".." {
            c.errors.push(err("name", "must be a nonempty file-name-safe string"));
        }
        let diagnostics = match raw.diagnostics.as_deref() {
            None | Some("full") => Diagnostics::Full,
            Some("basic") => Diagnostics::Basic,
            Some(other) => {
                c.errors.push(err("diagnostics", format!("unknown diagnostics level `{other}`")));
                Diagnostics::Full
            }
        };

        let problem = validate_problem(&mut c, &raw.problem, base_dir);

        let mut topologies = Vec::new();
        if raw.topology.is_empty() {
            c.errors.push(err("topology", "at least one [[topology]] entry is required"));
        }
        for (j, t) in raw.topology.iter().enumerate() {
            let path = format!("topology[{j}]");
            let weights = match t.weights.as_deref().unwrap_or("metropolis") {
                "metropolis" => WeightScheme::Metropolis,
                "uniform" => WeightScheme::Uniform,
                other => {
                    c.errors.push(err(format!("{path}.weights"), format!("unknown weight scheme `{other}`")));
                    WeightScheme::Metropolis
                }
            };
            let kind = match t.kind.as_str() {
                "complete" => Some(TopologyKind::Complete),
                "ring" => Some(TopologyKind::Ring),
                "erdos_renyi" => {
                    let p = c.real(&format!("{path}.p"), t.p, None, |p| (0.0..=1.0).contains(&p), "in [0, 1]");
                    let max_resamples = c.count(&format!("{path}.max_resamples"), t.max_resamples, Some(1000), 1);
                    Some(TopologyKind::ErdosRenyi { p, max_resamples })
                }
                other => {
                    c.errors.push(err(format!("{path}.kind"), format!("unknown topology `{other}`")));
                    None
                }
            };
            if let Some(kind) = kind {
                if weights == WeightScheme::Uniform && kind != TopologyKind::Complete {
                    c.errors.push(err(format!("{path}.weights"), "uniform weights need a complete graph"));
                }
                topologies.push(TopologySpec { kind, weights });
            }
        }

        let mut methods = Vec::new();
        if raw.algorithm.methods.is_empty() {
            c.errors.push(err("algorithm.methods", "must not be empty"));
        }
        for (i, name) in raw.algorithm.methods.iter().enumerate() {
            match Method::parse(name) {
                Some(m) => methods.push(m),
                None => c.errors.push(err(format!("algorithm.methods[{i}]"), format!("unknown algorithm `{name}`"))),
            }
        }
        let mut ks = Vec::new();
        if raw.algorithm.k.is_empty() {
            c.errors.push(err("algorithm.k", "must not be empty"));
        }
        for (i, &k) in raw.algorithm.k.iter().enumerate() {
            if k < 0 {
                c.errors.push(err(format!("algorithm.k[{i}]"), format!("K must be >= 0, got {k}")));
            } else {
                ks.push(k as usize);
            }
        }
        let init = match raw.algorithm.init.as_deref().unwrap_or("zeros") {
            "zeros" => InitKind::Zeros,
            "shared_random" => InitKind::SharedRandom,
            "per_agent_random" => InitKind::PerAgentRandom,
            other => {
                c.errors.push(err("algorithm.init", format!("unknown init policy `{other}`")));
                InitKind::Zeros
            }
        };

        let s = &raw.step_size;
        let step_size = match s.policy.as_str() {
            "fixed" => StepSizePolicy::Fixed(c.real("step_size.eta", s.eta, None, |e| e > 0.0, "> 0")),
            "thm1" => StepSizePolicy::Thm1,
            "grid" => {
                let lo = c.real("step_size.lo_factor", s.lo_factor, Some(1e-2), |e| e > 0.0, "> 0");
                let hi = c.real("step_size.hi_factor", s.hi_factor, Some(1.0), |e| e > 0.0, "> 0");
                if lo > hi {
                    c.errors.push(err("step_size.lo_factor", "must not exceed hi_factor"));
                }
                let count = c.count("step_size.count", s.count, Some(8), 1);
                StepSizePolicy::Grid {
                    lo_factor: lo,
                    hi_factor: hi,
                    count,
                }
            }
            other => {
                c.errors.push(err("step_size.policy", format!("unknown step-size policy `{other}`")));
                StepSizePolicy::Thm1
            }
        };

        let epsilon = c.real("stop.epsilon", Some(raw.stop.epsilon), None, |e| e >= 0.0, ">= 0");
        let measure = Measure::parse(&raw.stop.measure).unwrap_or_else(|| {
            c.errors.push(err("stop.measure", format!("unknown measure `{}`", raw.stop.measure)));
            Measure::AvgGradNorm
        });
        let max_rounds = c.count("stop.max_rounds", Some(raw.stop.max_rounds), None, 1);
        if measure == Measure::DistMinNorm && !matches!(problem, Some(ProblemSpec::OverparamOls { .. })) {
            c.errors.push(err("stop.measure", "dist_min_norm is only defined for overparam_ols"));
        }

        if !c.errors.is_empty() {
            return Err(c.errors);
        }
        Ok(ExperimentConfig {
            name: raw.name,
            seed: raw.seed,
            out_dir: raw.out_dir.map(PathBuf::from),
            diagnostics,
            problem: problem.expect("validated"),
            topologies,
            methods,
            ks,
            init,
            step_size,
            epsilon,
            measure,
            max_rounds,
        })
    }
}

fn validate_problem(c: &mut Checker, p: &RawProblem, base_dir: &Path) -> Option<ProblemSpec> {
    let reg = |c: &mut Checker| c.real("problem.reg", p.reg, Some(1e-4), |r| r > 0.0, "> 0");
    let spec = match p.kind.as_str() {
        "drlr_connectivity" => ProblemSpec::DrlrConnectivity {
            m: c.count("problem.m", p.m, Some(20), 1),
            n: c.count("problem.n", p.n, Some(1000), 1),
            d: c.count("problem.d", p.d, Some(5), 1),
            reg: reg(c),
        },
        "drlr_heterogeneity" => ProblemSpec::DrlrHeterogeneity {
            m: c.count("problem.m", p.m, Some(20), 1),
            n: c.count("problem.n", p.n, Some(100), 1),
            d: c.count("problem.d", p.d, Some(80), 1),
            delta_gen: c.real("problem.delta_gen", p.delta_gen, Some(0.99), |v| v >= 0.0, ">= 0"),
            reg: reg(c),
        },
        "overparam_ols" => {
            let m = c.count("problem.m", p.m, None, 1);
            let n_per_agent = c.count("problem.n_per_agent", p.n_per_agent, None, 1);
            let d = c.count("problem.d", p.d, None, 1);
            if m * n_per_agent >= d && d > 0 {
                c.errors.push(err("problem.d", format!("must exceed m * n_per_agent = {}", m * n_per_agent)));
            }
            ProblemSpec::OverparamOls {
                m,
                n_per_agent,
                d,
                heterogeneity: c.real("problem.heterogeneity", p.heterogeneity, Some(1.0), |v| v >= 0.0, ">= 0"),
            }
        }
        "libsvm" => {
            let path = match &p.path {
                None => {
                    c.errors.push(err("problem.path", "missing"));
                    PathBuf::new()
                }
                Some(s) => {
                    let full = base_dir.join(s);
                    if !full.is_file() {
                        c.errors.push(err("problem.path", format!("file not found: {}", full.display())));
                    }
                    full
                }
            };
            let m = c.count("problem.m", p.m, None, 1);
            let partition = match p.partition.as_deref().unwrap_or("uniform") {
                "uniform" => Partition::Uniform,
                "mixed" => Partition::Mixed {
                    positive: c.count("problem.positive", p.positive, None, 0),
                    negative: c.count("problem.negative", p.negative, None, 0),
                },
                "segregated" => Partition::Segregated {
                    pure_agents: c.count("problem.pure_agents", p.pure_agents, None, 0),
                    per_agent: c.count("problem.per_agent", p.per_agent, None, 1),
                    first_label: c.real("problem.first_label", p.first_label, Some(1.0), |v| v == 1.0 || v == -1.0, "+1 or -1"),
                },
                other => {
                    c.errors.push(err("problem.partition", format!("unknown partition scheme `{other}`")));
                    Partition::Uniform
                }
            };
            ProblemSpec::Libsvm {
                path,
                m,
                d: c.count("problem.d", p.d, None, 1),
                reg: reg(c),
                partition,
            }
        }
        "scalar_quadratics" => {
            let curvatures = p.curvatures.clone().unwrap_or_default();
            let centers = p.centers.clone().unwrap_or_default();
            if curvatures.is_empty() {
                c.errors.push(err("problem.curvatures", "must not be empty"));
            }
            if curvatures.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                c.errors.push(err("problem.curvatures", "entries must be positive"));
            }
            if centers.len() != curvatures.len() {
                c.errors.push(err("problem.centers", "must have one entry per curvature"));
            }
            ProblemSpec::ScalarQuadratics { curvatures, centers }
        }
        other => {
            c.errors.push(err("problem.kind", format!("unknown problem kind `{other}`")));
            return None;
        }
    };
    Some(spec)
}
