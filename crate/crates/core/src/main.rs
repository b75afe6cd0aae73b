use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use localdgt::exec::Execution;
use localdgt::experiment::{run_experiment, ExperimentConfig, RunSettings};
use localdgt::theory::{
    optimal_k, rounds_dgd_ols, rounds_dgd_pl, rounds_dgt_ols, rounds_dgt_pl, rounds_dgt_scvx, stepsize_thm1, zeta,
    BoundInputs, TheoryError,
};

#[derive(Parser)]
#[command(name = "localdgt", version, about = "Local DGD / local DGT simulator and bound calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Output root (overrides `out_dir` in the config; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 runs the canonical sequential mode.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Evaluate step size, round bounds, zeta and the best K for given constants.
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long = "K")]
        k: i64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
}

fn execution(threads: usize) -> Result<Execution, String> {
    if threads == 0 {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
        Ok(Execution::Parallel)
    }
    #[cfg(not(feature = "parallel"))]
    {
        eprintln!("note: built without the `parallel` feature; running sequentially");
        Ok(Execution::Sequential)
    }
}

fn cmd_run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, threads: usize) -> Result<(), String> {
    let text = std::fs::read_to_string(&config).map_err(|e| format!("cannot read {}: {e}", config.display()))?;
    let base = config.parent().map(PathBuf::from).unwrap_or_default();
    let cfg = ExperimentConfig::parse(&text, &base).map_err(|errs| {
        errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
    })?;
    let exec = execution(threads)?;
    let settings = RunSettings {
        out_root: out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed,
        exec,
    };
    let summary = run_experiment(&cfg, &text, &settings).map_err(|e| e.to_string())?;
    let c = summary.constants;
    println!(
        "constants: L = {:.6e}, mu = {:.6e}, delta = {:.6e}{}",
        c.l,
        c.mu,
        c.delta,
        if c.delta_exact { "" } else { " (sampled lower bound)" }
    );
    println!("{:<5} {:>4} {:>10} {:>12} {:>10} {:>14}", "algo", "K", "rho", "eta", "rounds", "final");
    for r in &summary.rows {
        println!(
            "{:<5} {:>4} {:>10.6} {:>12.4e} {:>10} {:>14.6e}",
            r.method.name(),
            r.k,
            r.rho,
            r.eta,
            r.rounds_to_eps.map_or_else(|| "-".to_string(), |v| v.to_string()),
            r.final_measure.unwrap_or(f64::NAN)
        );
    }
    for e in &summary.errors {
        eprintln!("cell topology {} {} K={} failed: {}", e.topology, e.method, e.k, e.message);
    }
    println!("outputs written to {}", summary.dir.display());
    Ok(())
}

fn cmd_validate(config: PathBuf) -> Result<(), String> {
    ExperimentConfig::from_file(&config)
        .map(|_| println!("ok"))
        .map_err(|errs| errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))
}

fn show<T: std::fmt::Display>(name: &str, v: Result<T, TheoryError>) -> Result<(), String> {
    match v {
        Ok(v) => println!("{name:<16} {v}"),
        Err(TheoryError::Regime { .. }) => println!("{name:<16} regime: inapplicable (requires delta < mu)"),
        Err(e) => return Err(e.to_string()),
    }
    Ok(())
}

fn cmd_bounds(l: f64, mu: f64, delta: f64, beta: f64, rho: f64, k: i64, eps: f64) -> Result<(), String> {
    if k < 0 {
        return Err(format!("K = {k} is outside its domain (K >= 0)"));
    }
    let b = BoundInputs {
        l,
        mu,
        delta,
        beta,
        rho,
        k: k as usize,
        epsilon: eps,
    };
    println!("# order-level quantities: hidden constants set to 1");
    show("eta_thm1", stepsize_thm1(&b))?;
    show("rounds_dgt_scvx", rounds_dgt_scvx(&b))?;
    show("rounds_dgt_pl", rounds_dgt_pl(&b))?;
    show("zeta", zeta(&b))?;
    show("rounds_dgd_pl", rounds_dgd_pl(&b))?;
    show("rounds_dgd_ols", rounds_dgd_ols(&b))?;
    show("rounds_dgt_ols", rounds_dgt_ols(&b))?;
    show("K_star", optimal_k(&b))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, threads } => cmd_run(config, out, seed, threads),
        Command::Validate { config } => cmd_validate(config),
        Command::Bounds { l, mu, delta, beta, rho, k, eps } => cmd_bounds(l, mu, delta, beta, rho, k, eps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
