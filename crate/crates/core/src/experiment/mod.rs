//! Config-driven experiment sweeps: build the problem and networks, run every
//! (topology, algorithm, K) cell, and write traces, summary tables and plots.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algorithms::{log_grid, run, tune_step_size, AlgorithmError, AlgorithmState, Method, RunOptions, StoppingRule};
use crate::exec::Execution;
use crate::metrics::{fit_linear_rate, reference_optimum, rounds_to_epsilon, Diagnostics, Measure, ReferenceOptimum, RunTrace, Termination};
use crate::problems::libsvm::{densify, parse_libsvm};
use crate::problems::{
    drlr_connectivity_scenario, drlr_heterogeneity_scenario, overparam_ols, partition_dataset, DrlrConnectivityConfig,
    DrlrHeterogeneityConfig, OverparamOlsConfig, PartitionScheme, Problem, ProblemConstants,
};
use crate::rng::{self, offsets};
use crate::theory::{stepsize_thm1, BoundInputs};
use crate::topology::{complete, erdos_renyi, metropolis_weights, ring, uniform_weights, Graph, MixingMatrix, TopologyError};

pub use config::{ConfigError, ExperimentConfig, Partition, ProblemSpec, StepSizePolicy, TopologyKind, TopologySpec, WeightScheme};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error("problem setup failed: {0}")]
    Problem(String),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Settings that come from the command line rather than the config file.
#[derive(Clone, Debug)]
pub struct RunSettings {
    /// Output root; the experiment writes into `<out_root>/<name>/`.
    pub out_root: PathBuf,
    pub seed: Option<u64>,
    pub exec: Execution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub topology: usize,
    pub method: Method,
    pub k: usize,
    pub rho: f64,
    pub eta: f64,
    pub rounds_to_eps: Option<usize>,
    pub final_measure: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellError {
    pub topology: usize,
    pub method: Method,
    pub k: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub dir: PathBuf,
    pub constants: ProblemConstants,
    pub rows: Vec<SummaryRow>,
    pub errors: Vec<CellError>,
}

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<Problem, ExperimentError> {
    let perr = |e: &dyn std::fmt::Display| ExperimentError::Problem(e.to_string());
    match spec {
        &ProblemSpec::DrlrConnectivity { m, n, d, reg } => {
            let ds = drlr_connectivity_scenario(&DrlrConnectivityConfig { m, n, d, seed }).map_err(|e| perr(&e))?;
            Problem::ridge_logistic(ds, reg).map_err(|e| perr(&e))
        }
        &ProblemSpec::DrlrHeterogeneity { m, n, d, delta_gen, reg } => {
            let ds = drlr_heterogeneity_scenario(&DrlrHeterogeneityConfig { m, n, d, delta_gen, seed })
                .map_err(|e| perr(&e))?;
            Problem::ridge_logistic(ds, reg).map_err(|e| perr(&e))
        }
        &ProblemSpec::OverparamOls { m, n_per_agent, d, heterogeneity } => overparam_ols(&OverparamOlsConfig {
            m,
            n_per_agent,
            d,
            heterogeneity,
            seed,
        })
        .map(|p| p.problem)
        .map_err(|e| perr(&e)),
        ProblemSpec::Libsvm { path, m, d, reg, partition } => {
            let file = fs::File::open(path).map_err(|e| ExperimentError::Problem(format!("{}: {e}", path.display())))?;
            let records = parse_libsvm(std::io::BufReader::new(file))
                .map_err(|e| ExperimentError::Problem(format!("{}: {e}", path.display())))?;
            let samples = densify(&records, *d).map_err(|e| ExperimentError::Problem(format!("{}: {e}", path.display())))?;
            let scheme = match *partition {
                Partition::Uniform => PartitionScheme::Uniform,
                Partition::Mixed { positive, negative } => PartitionScheme::mixed(*m, positive, negative),
                Partition::Segregated { pure_agents, per_agent, first_label } => {
                    PartitionScheme::segregated(*m, pure_agents, per_agent, first_label)
                }
            };
            let ds = partition_dataset(samples, *m, &scheme, seed).map_err(|e| perr(&e))?;
            Problem::ridge_logistic(ds, *reg).map_err(|e| perr(&e))
        }
        ProblemSpec::ScalarQuadratics { curvatures, centers } => {
            Problem::scalar_quadratics(curvatures, centers).map_err(|e| perr(&e))
        }
    }
}

pub fn build_topology(spec: &TopologySpec, m: usize, seed: u64) -> Result<(Graph, MixingMatrix), TopologyError> {
    let g = match spec.kind {
        TopologyKind::Complete => complete(m)?,
        TopologyKind::Ring => ring(m)?,
        TopologyKind::ErdosRenyi { p, max_resamples } => erdos_renyi(m, p, seed, max_resamples)?,
    };
    let w = match spec.weights {
        WeightScheme::Metropolis => metropolis_weights(&g)?,
        WeightScheme::Uniform => uniform_weights(&g)?,
    };
    Ok((g, w))
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ExperimentError::Io {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, contents).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn fmt_f(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.16e}"))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("algo,K,rho,eta,rounds_to_eps,final_measure,slope,r_squared\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.k,
            fmt_f(Some(r.rho)),
            fmt_f(Some(r.eta)),
            fmt_opt(r.rounds_to_eps),
            fmt_f(r.final_measure),
            fmt_f(r.slope),
            fmt_f(r.r_squared)
        );
    }
    s
}

pub fn errors_csv(errors: &[CellError]) -> String {
    let mut s = String::from("topology,algo,K,error\n");
    for e in errors {
        let _ = writeln!(s, "{},{},{},{}", e.topology, e.method, e.k, csv_quote(&e.message));
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Cell {
    topology: usize,
    method: Method,
    k: usize,
}

enum CellResult {
    Done { trace: RunTrace, eta: f64 },
    Failed { trace: Option<RunTrace>, message: String },
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    problem: &'a Problem,
    constants: ProblemConstants,
    reference: Option<&'a ReferenceOptimum>,
    init_seed: u64,
}

fn run_cell(ctx: &Context<'_>, w: &MixingMatrix, cell: &Cell, exec: Execution) -> CellResult {
    let cfg = ctx.cfg;
    let fail = |message: String| CellResult::Failed { trace: None, message };
    let stop = match StoppingRule::new(cfg.max_rounds, cfg.epsilon, cfg.measure) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let init = cfg.init.with_seed(ctx.init_seed);
    let opts = RunOptions {
        diagnostics: cfg.diagnostics,
        exec,
        reference: ctx.reference,
    };
    let c = ctx.constants;
    let eta = match cfg.step_size {
        StepSizePolicy::Fixed(eta) => eta,
        StepSizePolicy::Thm1 => {
            let inputs = BoundInputs {
                l: c.l,
                mu: c.mu,
                delta: c.delta,
                beta: c.beta,
                rho: w.rho(),
                k: cell.k,
                epsilon: cfg.epsilon.max(f64::MIN_POSITIVE),
            };
            match stepsize_thm1(&inputs) {
                Ok(eta) => eta,
                Err(e) => return fail(e.to_string()),
            }
        }
        StepSizePolicy::Grid { lo_factor, hi_factor, count } => {
            let grid = log_grid(lo_factor / c.l, hi_factor / c.l, count);
            // tune cheaply, then replay the winner with the requested diagnostics
            let quick = RunOptions {
                diagnostics: Diagnostics::Basic,
                ..opts
            };
            match tune_step_size(ctx.problem, w, cell.method, cell.k, init, &grid, &stop, &quick) {
                Ok(t) if cfg.diagnostics == Diagnostics::Basic => return CellResult::Done { trace: t.trace, eta: t.eta },
                Ok(t) => t.eta,
                Err(e) => return fail(e.to_string()),
            }
        }
    };
    let state = match AlgorithmState::init(ctx.problem, w, cell.method, cell.k, eta, init) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    match run(state, ctx.problem, w, &stop, &opts) {
        Ok(trace) => match trace.termination {
            Termination::Diverged { round } => CellResult::Failed {
                message: AlgorithmError::Diverged { round }.to_string(),
                trace: Some(trace),
            },
            _ => CellResult::Done { trace, eta },
        },
        Err(e) => fail(e.to_string()),
    }
}

fn summarize(cell: &Cell, trace: &RunTrace, eta: f64, cfg: &ExperimentConfig) -> SummaryRow {
    let fit = fit_linear_rate(trace, cfg.measure, 0.5).ok();
    SummaryRow {
        topology: cell.topology,
        method: cell.method,
        k: cell.k,
        rho: trace.info.rho,
        eta,
        rounds_to_eps: rounds_to_epsilon(trace, cfg.measure, cfg.epsilon),
        final_measure: trace.final_measure(cfg.measure),
        slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
    }
}

fn measure_label(m: Measure) -> &'static str {
    match m {
        Measure::AvgGradNorm => "||grad f(x_bar)||",
        Measure::Suboptimality => "f(x_bar) - f*",
        Measure::DistMinNorm => "||x_bar - x*||",
    }
}

/// Run every cell of the sweep and write all outputs.
///
/// Outputs land in `<out_root>/<name>/`: with one topology the traces are
/// `<algo>_K<k>.csv`; with several, each topology `j` gets a `topo<j>/`
/// subdirectory. Cells run in parallel under [`Execution::Parallel`]; the
/// files are identical either way.
pub fn run_experiment(cfg: &ExperimentConfig, config_text: &str, settings: &RunSettings) -> Result<Summary, ExperimentError> {
    let seed = settings.seed.unwrap_or(cfg.seed);
    let dir = settings.out_root.join(&cfg.name);
    let problem = build_problem(&cfg.problem, rng::derive(seed, offsets::DATA))?;
    let constants = problem.constants().map_err(|e| ExperimentError::Problem(e.to_string()))?;
    let reference = match reference_optimum(&problem) {
        Ok(r) => Some(r),
        Err(e) if cfg.measure == Measure::AvgGradNorm => {
            eprintln!("warning: no reference optimum ({e}); F_r holds raw objective values");
            None
        }
        Err(e) => return Err(ExperimentError::Problem(format!("reference optimum: {e}"))),
    };
    let ctx = Context {
        cfg,
        problem: &problem,
        constants,
        reference: reference.as_ref(),
        init_seed: rng::derive(seed, offsets::INIT),
    };

    let multi = cfg.topologies.len() > 1;
    let panel_dir = |j: usize| if multi { dir.join(format!("topo{j}")) } else { dir.clone() };
    let topo_seed = rng::derive(seed, offsets::TOPOLOGY);

    let mut networks = Vec::new();
    let mut errors = Vec::new();
    for (j, spec) in cfg.topologies.iter().enumerate() {
        match build_topology(spec, problem.m(), topo_seed) {
            Ok((g, w)) => {
                write(&panel_dir(j).join("topology.txt"), &g.to_edge_list())?;
                networks.push(Some(w));
            }
            Err(e) => {
                for &method in &cfg.methods {
                    for &k in &cfg.ks {
                        errors.push(CellError {
                            topology: j,
                            method,
                            k,
                            message: e.to_string(),
                        });
                    }
                }
                networks.push(None);
            }
        }
    }

    let mut cells = Vec::new();
    for (j, w) in networks.iter().enumerate() {
        if w.is_none() {
            continue;
        }
        for &method in &cfg.methods {
            for &k in &cfg.ks {
                cells.push(Cell { topology: j, method, k });
            }
        }
    }
    let results = settings.exec.map(cells.len(), |i| {
        let cell = &cells[i];
        let w = networks[cell.topology].as_ref().expect("built");
        run_cell(&ctx, w, cell, Execution::Sequential)
    });

    let mut rows = Vec::new();
    let mut traces: Vec<(usize, Method, usize, RunTrace)> = Vec::new();
    for (cell, result) in cells.iter().zip(results) {
        let trace_path = panel_dir(cell.topology).join(format!("{}_K{}.csv", cell.method, cell.k));
        match result {
            CellResult::Done { trace, eta } => {
                write(&trace_path, &trace.to_csv())?;
                rows.push(summarize(cell, &trace, eta, cfg));
                traces.push((cell.topology, cell.method, cell.k, trace));
            }
            CellResult::Failed { trace, message } => {
                if let Some(trace) = trace {
                    write(&trace_path, &trace.to_csv())?;
                    traces.push((cell.topology, cell.method, cell.k, trace));
                }
                errors.push(CellError {
                    topology: cell.topology,
                    method: cell.method,
                    k: cell.k,
                    message,
                });
            }
        }
    }
    errors.sort_by_key(|e| (e.topology, cfg.methods.iter().position(|&m| m == e.method), cfg.ks.iter().position(|&k| k == e.k)));

    for (j, w) in networks.iter().enumerate() {
        let Some(w) = w else { continue };
        for &method in &cfg.methods {
            let series: Vec<svg::Series> = traces
                .iter()
                .filter(|t| t.0 == j && t.1 == method)
                .map(|(_, _, k, trace)| svg::Series {
                    label: format!("K={k}"),
                    points: trace
                        .rows
                        .iter()
                        .filter_map(|r| r.measure(cfg.measure).map(|v| (r.round as f64, v)))
                        .collect(),
                })
                .collect();
            if series.is_empty() {
                continue;
            }
            let title = format!("{} {}, rho = {:.4}", cfg.name, method, w.rho());
            let plot = svg::log_plot(&title, "communication round", measure_label(cfg.measure), &series);
            write(&panel_dir(j).join(format!("{method}.svg")), &plot)?;
        }
    }

    write(&dir.join("summary.csv"), &summary_csv(&rows))?;
    write(&dir.join("errors.csv"), &errors_csv(&errors))?;
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "rng": rng::RNG_ALGORITHM,
        "config_sha256": sha256_hex(config_text.as_bytes()),
        "seed": seed,
        "constants": {
            "L": constants.l,
            "mu": constants.mu,
            "delta": constants.delta,
            "delta_exact": constants.delta_exact,
            "beta": constants.beta,
        },
        "f_star": reference.as_ref().map(|r| r.f_star),
        "rho": networks.iter().map(|w| w.as_ref().map(|w| w.rho())).collect::<Vec<_>>(),
    });
    let meta_text = serde_json::to_string_pretty(&meta).expect("serializable") + "\n";
    write(&dir.join("meta.json"), &meta_text)?;

    Ok(Summary {
        dir,
        constants,
        rows,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_helpers() {
        assert_eq!(csv_quote("a,\"b\""), "\"a,\"\"b\"\"\"");
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let rows = [SummaryRow {
            topology: 0,
            method: Method::Dgt,
            k: 2,
            rho: 0.0,
            eta: 0.5,
            rounds_to_eps: None,
            final_measure: Some(1.0),
            slope: None,
            r_squared: None,
        }];
        let s = summary_csv(&rows);
        assert_eq!(s.lines().nth(1).unwrap(), "dgt,2,0.0000000000000000e0,5.0000000000000000e-1,,1.0000000000000000e0,,");
    }
}
