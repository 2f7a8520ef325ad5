//! Command-line front end. Every subcommand reads a TOML experiment file and
//! writes one CSV into the output directory.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimators::cor_cfd_coordinate;
use crate::harness::{ExperimentConfig, GridSpec, Profile};
use crate::metrics;
use crate::optimizers::Recording;
use crate::oracle::{derive_seed, seeded_rng, NoisyOracle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const ESTIMATE_TAG: u64 = 0x45;

#[derive(Debug, Parser)]
#[command(
    name = "stochopt",
    version,
    about = "Noisy derivative-free optimization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one replication and write trajectory.csv
    Run(CommonArgs),
    /// Run all replications and write table.csv
    Bench(CommonArgs),
    /// Run the SPSA (a, c) grid and write grid.csv
    Grid(CommonArgs),
    /// Estimate one gradient with Cor-CFD and write diagnostics.csv
    Estimate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML)
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, created if absent
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// full or desk
    #[arg(long, default_value = "full", value_parser = parse_profile)]
    pub profile: Profile,
    /// Overrides master_seed
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for replications (0 = one per core)
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub workers: usize,
}

fn parse_profile(s: &str) -> std::result::Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(message) => {
            println!("{message}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Runs a parsed command; returns a one-line report for stdout.
pub fn execute(command: &Command) -> Result<String> {
    let (args, job): (
        &CommonArgs,
        fn(&ExperimentConfig, &CommonArgs) -> Result<String>,
    ) = match command {
        Command::Run(a) => (a, cmd_run),
        Command::Bench(a) => (a, cmd_bench),
        Command::Grid(a) => (a, cmd_grid),
        Command::Estimate(a) => (a, cmd_estimate),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    job(&cfg, args)
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn single<T: Copy>(items: &[T], what: &str) -> Result<T> {
    match items {
        [one] => Ok(*one),
        _ => Err(Error::Config(format!(
            "this command needs exactly one {what}, got {}",
            items.len()
        ))),
    }
}

/// Single replication, one row per iterate within the budget.
pub fn cmd_run(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<String> {
    let exp = cfg.resolve(args.profile)?;
    let algorithm = single(&exp.algorithms, "algorithm")?;
    let sigma = single(&exp.noise_levels, "noise level")?;
    let (trajectory, oracle) = exp.run_single(algorithm, sigma, cfg.replication, Recording::All)?;

    let d = exp.dimension();
    let cap = 2 * exp.largest_budget();
    let rows: Vec<_> = trajectory
        .iterates
        .iter()
        .filter(|it| it.k > 0 && it.n_count <= cap)
        .collect();
    let stride = cfg.trajectory_stride as u64;

    let mut out = String::from("iter,pairs_used");
    for i in 1..=d {
        write!(out, ",x_{i}").unwrap();
    }
    out.push_str(",solution_gap,optimality_gap\n");
    for (idx, it) in rows.iter().enumerate() {
        if it.k % stride != 0 && idx + 1 != rows.len() {
            continue;
        }
        write!(out, "{},{}", it.k, it.pairs_used()).unwrap();
        for v in &it.x {
            write!(out, ",{}", fmt_real(*v)).unwrap();
        }
        let gap = metrics::solution_gap(&it.x, exp.function.optimum_point())?;
        let opt = metrics::optimality_gap(oracle.true_mean(&it.x), exp.function.optimum_value());
        writeln!(out, ",{},{}", fmt_real(gap), fmt_real(opt)).unwrap();
    }
    let path = write_output(&args.out, "trajectory.csv", &out)?;
    Ok(format!(
        "{} on {} (sigma {sigma}): {} iterates, {} evaluations -> {}",
        algorithm,
        exp.function.name(),
        rows.len(),
        oracle.evaluations(),
        path.display()
    ))
}

/// RMSE table over replications, plus oscillation percentiles for bounded 1-d problems.
pub fn cmd_bench(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<String> {
    let exp = cfg.resolve(args.profile)?;
    if exp.algorithms.is_empty() {
        return Err(Error::Config(
            "algorithms must list at least one of kw, spsa, corcfd".into(),
        ));
    }
    let mut out = String::from("sigma,method,metric,checkpoint,value\n");
    for &sigma in &exp.noise_levels {
        for &algorithm in &exp.algorithms {
            let outcome = exp.run_replications(algorithm, sigma, args.workers)?;
            let s = &outcome.summary;
            let method = algorithm.label();
            for (metric, values) in [
                ("rmse_solution_gap", &s.rmse_solution),
                ("rmse_optimality_gap", &s.rmse_optimality),
            ] {
                for (cp, v) in s.checkpoints.iter().zip(values) {
                    writeln!(out, "{sigma},{method},{metric},{cp},{}", fmt_real(*v)).unwrap();
                }
            }
            if let Some((p5, p50, p95)) = s.oscillation_percentiles {
                for (metric, v) in [("osc_p5", p5), ("osc_median", p50), ("osc_p95", p95)] {
                    writeln!(out, "{sigma},{method},{metric},,{v}").unwrap();
                }
            }
        }
    }
    let path = write_output(&args.out, "table.csv", &out)?;
    Ok(format!(
        "{} replications per cell -> {}",
        exp.replications,
        path.display()
    ))
}

/// SPSA grid at every noise level; reports the selected cell per level.
pub fn cmd_grid(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<String> {
    let exp = cfg.resolve(args.profile)?;
    let grid = GridSpec {
        a_values: cfg.spsa.grid_a.clone(),
        c_values: cfg.spsa.grid_c.clone(),
    };
    grid.validate()?;
    let mut out = String::from("a,c,sigma,rmse_opt_gap\n");
    let mut report = Vec::new();
    for &sigma in &exp.noise_levels {
        let res = exp.grid_search_spsa(&grid, sigma, args.workers)?;
        for cell in &res.cells {
            writeln!(
                out,
                "{},{},{},{}",
                cell.a,
                cell.c,
                cell.sigma,
                fmt_real(cell.rmse_opt_gap)
            )
            .unwrap();
        }
        report.push(format!(
            "sigma {sigma}: best a = {}, c = {} (rmse_opt_gap {})",
            res.best.a,
            res.best.c,
            fmt_real(res.best.rmse_opt_gap)
        ));
    }
    let path = write_output(&args.out, "grid.csv", &out)?;
    report.push(format!("-> {}", path.display()));
    Ok(report.join("\n"))
}

/// Cor-CFD gradient at `x0` with `corcfd.n0` pairs per coordinate; one row per coordinate.
/// `pairs_used` is cumulative, so the last row shows `d * n0`.
pub fn cmd_estimate(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<String> {
    let exp = cfg.resolve(args.profile)?;
    let sigma = single(&exp.noise_levels, "noise level")?;
    exp.estimator
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    let seed = derive_seed(&[
        exp.master_seed,
        ESTIMATE_TAG,
        sigma.to_bits(),
        cfg.replication,
    ]);
    let mut oracle = NoisyOracle::new(exp.function.clone(), sigma, seed)?;
    let mut rng = seeded_rng(seed, 1);

    let mut out = String::from("c_hat,sigma2_hat,mu3_hat,intercept,estimate,pairs_used\n");
    for coord in 0..exp.dimension() {
        let (estimate, diag) =
            cor_cfd_coordinate(&mut oracle, &exp.x0, coord, &exp.estimator, &mut rng)?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_real(diag.c_hat),
            fmt_real(diag.sigma2_hat),
            fmt_real(diag.mu3_hat),
            fmt_real(diag.intercept),
            fmt_real(estimate),
            oracle.evaluations() / 2
        )
        .unwrap();
    }
    let path = write_output(&args.out, "diagnostics.csv", &out)?;
    Ok(format!(
        "{} pairs used -> {}",
        oracle.evaluations() / 2,
        path.display()
    ))
}
