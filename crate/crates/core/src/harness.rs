//! Experiment orchestration.
//!
//! A replication is fully determined by `(master_seed, algorithm, sigma, index)`:
//! the oracle noise and the optimizer's own randomness are two streams of one
//! derived seed. Replications run on a worker pool and are reduced in index
//! order, so the worker count never changes a result.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::CorCfdConfig;
use crate::metrics;
use crate::optimizers::{
    cor_cfd_gd_run, kw_run, spsa_run, ArmijoParams, GainSchedule, Recording, Trajectory,
};
use crate::oracle::{derive_seed, seeded_rng, BoxDomain, NoisyOracle, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "kw")]
    Kw,
    #[serde(rename = "spsa")]
    Spsa,
    #[serde(rename = "corcfd")]
    CorCfdGd,
}

impl Algorithm {
    /// Label used in output tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Kw => "KW",
            Algorithm::Spsa => "SPSA",
            Algorithm::CorCfdGd => "CorCFD-GD",
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Algorithm::Kw => 1,
            Algorithm::Spsa => 2,
            Algorithm::CorCfdGd => 3,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Profile {
    /// Configuration as written.
    #[default]
    Full,
    /// At most [`DESK_REPLICATIONS`] replications.
    Desk,
}

pub const DESK_REPLICATIONS: usize = 50;

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected full or desk)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct KwParams {
    pub a: f64,
    pub c: f64,
}

impl Default for KwParams {
    fn default() -> Self {
        Self { a: 1.0, c: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaParams {
    pub a: f64,
    pub c: f64,
    /// Stability offset `A`; defaults to 10% of the largest pair budget.
    pub stability: Option<f64>,
    pub grid_a: Vec<f64>,
    pub grid_c: Vec<f64>,
}

impl Default for SpsaParams {
    fn default() -> Self {
        Self {
            a: 1e-9,
            c: 2.0,
            stability: None,
            grid_a: (1..=9).map(|e| 10f64.powi(-e)).collect(),
            grid_c: vec![0.01, 0.1, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CorCfdParams {
    pub n0: usize,
    pub pilot_count: usize,
    pub base_perturbation: f64,
    pub pilot_spread: f64,
    pub bootstrap_reps: usize,
    pub l1: f64,
    pub l2: f64,
    pub a0: f64,
    pub max_backtracks: u32,
}

impl Default for CorCfdParams {
    fn default() -> Self {
        let est = CorCfdConfig::default();
        let ls = ArmijoParams::default();
        Self {
            n0: est.batch_pairs,
            pilot_count: est.pilot_count,
            base_perturbation: est.base_perturbation,
            pilot_spread: est.pilot_spread,
            bootstrap_reps: est.bootstrap_reps,
            l1: ls.l1,
            l2: ls.l2,
            a0: ls.a0,
            max_backtracks: ls.max_backtracks,
        }
    }
}

impl CorCfdParams {
    pub fn estimator(&self) -> CorCfdConfig {
        CorCfdConfig {
            pilot_count: self.pilot_count,
            batch_pairs: self.n0,
            base_perturbation: self.base_perturbation,
            pilot_spread: self.pilot_spread,
            bootstrap_reps: self.bootstrap_reps,
        }
    }

    pub fn armijo(&self) -> ArmijoParams {
        ArmijoParams {
            l1: self.l1,
            l2: self.l2,
            a0: self.a0,
            max_backtracks: self.max_backtracks,
            sigma2: 0.0,
        }
    }
}

fn default_dimension() -> usize {
    1
}

fn default_replications() -> usize {
    200
}

fn default_replication() -> u64 {
    1
}

fn default_stride() -> usize {
    1
}

/// Experiment description as read from a configuration file.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub noise_levels: Vec<f64>,
    /// Defaults to 30 for the one-dimensional functions and `(3, 1, ..., 3, 1)` for fn213.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// One value per coordinate, or a single value for all. Defaults to
    /// `[-50, 50]` for quartic/cos100 and unbounded otherwise.
    #[serde(default)]
    pub domain_lower: Option<Vec<f64>>,
    #[serde(default)]
    pub domain_upper: Option<Vec<f64>>,
    /// Listed pair budgets, strictly increasing.
    pub checkpoints: Vec<u64>,
    /// Multiply listed budgets by the dimension. Defaults to true for fn213.
    #[serde(default)]
    pub budget_per_dimension: Option<bool>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    /// Replication index used by single runs.
    #[serde(default = "default_replication")]
    pub replication: u64,
    /// Keep every n-th iterate in trajectory output (the last one is always kept).
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
    #[serde(default)]
    pub kw: KwParams,
    #[serde(default)]
    pub spsa: SpsaParams,
    #[serde(default)]
    pub corcfd: CorCfdParams,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Validates and expands defaults.
    pub fn resolve(&self, profile: Profile) -> Result<Experiment> {
        let cfg_err = |m: String| Err(Error::Config(m));
        let d = self.dimension;
        let function =
            TestFunction::from_id(&self.function, d).map_err(|e| Error::Config(e.to_string()))?;

        if self.noise_levels.is_empty() {
            return cfg_err("noise_levels must not be empty".into());
        }
        if let Some(s) = self
            .noise_levels
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            return cfg_err(format!("noise level {s} must be finite and >= 0"));
        }
        if self.checkpoints.is_empty() || self.checkpoints[0] == 0 {
            return cfg_err("checkpoints must be a non-empty list of positive pair budgets".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return cfg_err("checkpoints must be strictly increasing".into());
        }
        if self.replications == 0 {
            return cfg_err("replications must be >= 1".into());
        }
        if self.replication == 0 {
            return cfg_err("replication index starts at 1".into());
        }
        if self.trajectory_stride == 0 {
            return cfg_err("trajectory_stride must be >= 1".into());
        }

        let one_dim_default = matches!(self.function.as_str(), "quartic" | "cos100");
        let broadcast = |v: &Option<Vec<f64>>, fallback: f64, name: &str| -> Result<Vec<f64>> {
            match v {
                None => Ok(vec![fallback; d]),
                Some(v) if v.len() == 1 => Ok(vec![v[0]; d]),
                Some(v) if v.len() == d => Ok(v.clone()),
                Some(v) => Err(Error::Config(format!(
                    "{name} has {} entries, expected 1 or {d}",
                    v.len()
                ))),
            }
        };
        let (lo, hi) = if one_dim_default {
            (-50.0, 50.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        let domain = BoxDomain::new(
            broadcast(&self.domain_lower, lo, "domain_lower")?,
            broadcast(&self.domain_upper, hi, "domain_upper")?,
        )
        .map_err(|e| Error::Config(e.to_string()))?;

        let x0 = match &self.x0 {
            Some(v) => broadcast(&Some(v.clone()), 0.0, "x0")?,
            None if self.function == "fn213" => {
                (0..d).map(|i| if i % 2 == 0 { 3.0 } else { 1.0 }).collect()
            }
            None => vec![30.0; d],
        };
        if !domain.contains(&x0) || x0.iter().any(|v| !v.is_finite()) {
            return cfg_err(format!("x0 {x0:?} is not a finite point of the domain"));
        }

        let per_dim = self
            .budget_per_dimension
            .unwrap_or(self.function == "fn213");
        let scale = if per_dim { d as u64 } else { 1 };
        let budgets: Vec<u64> = self.checkpoints.iter().map(|c| c * scale).collect();
        let largest = *budgets.last().expect("non-empty");

        let kw = GainSchedule::kw(self.kw.a, self.kw.c);
        let stability = self.spsa.stability.unwrap_or(0.1 * largest as f64);
        let spsa = GainSchedule::spsa(self.spsa.a, self.spsa.c, stability);
        let estimator = self.corcfd.estimator();
        let armijo = self.corcfd.armijo();
        for alg in &self.algorithms {
            match alg {
                Algorithm::Kw => {
                    kw.validate().map_err(|e| Error::Config(e.to_string()))?;
                    if d != 1 {
                        return cfg_err("KW runs on one-dimensional problems only".into());
                    }
                }
                Algorithm::Spsa => spsa.validate().map_err(|e| Error::Config(e.to_string()))?,
                Algorithm::CorCfdGd => {
                    estimator
                        .validate()
                        .map_err(|e| Error::Config(e.to_string()))?;
                    armijo
                        .validate()
                        .map_err(|e| Error::Config(e.to_string()))?;
                    if (d * estimator.batch_pairs) as u64 > largest {
                        return cfg_err(format!(
                            "budget of {} pairs cannot fund the initial Cor-CFD gradient ({} pairs)",
                            largest,
                            d * estimator.batch_pairs
                        ));
                    }
                }
            }
        }

        let replications = match profile {
            Profile::Full => self.replications,
            Profile::Desk => self.replications.min(DESK_REPLICATIONS),
        };

        Ok(Experiment {
            function,
            domain,
            x0,
            noise_levels: self.noise_levels.clone(),
            listed_checkpoints: self.checkpoints.clone(),
            budgets,
            replications,
            master_seed: self.master_seed,
            algorithms: self.algorithms.clone(),
            kw,
            spsa,
            estimator,
            armijo,
        })
    }
}

/// A validated experiment with every default filled in.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub function: TestFunction,
    pub domain: BoxDomain,
    pub x0: Vec<f64>,
    pub noise_levels: Vec<f64>,
    /// Budgets as listed in the configuration (table column labels).
    pub listed_checkpoints: Vec<u64>,
    /// Effective pair budgets, aligned with `listed_checkpoints`.
    pub budgets: Vec<u64>,
    pub replications: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub kw: GainSchedule,
    pub spsa: GainSchedule,
    pub estimator: CorCfdConfig,
    pub armijo: ArmijoParams,
}

impl Experiment {
    pub fn largest_budget(&self) -> u64 {
        *self.budgets.last().expect("validated non-empty")
    }

    pub fn dimension(&self) -> usize {
        self.function.dimension()
    }

    /// Seed of replication `index` (1-based).
    pub fn replication_seed(&self, algorithm: Algorithm, sigma: f64, index: u64) -> u64 {
        derive_seed(&[
            self.master_seed,
            algorithm.seed_tag(),
            sigma.to_bits(),
            index,
        ])
    }

    /// Runs one replication up to the largest budget.
    pub fn run_single(
        &self,
        algorithm: Algorithm,
        sigma: f64,
        index: u64,
        recording: Recording,
    ) -> Result<(Trajectory, NoisyOracle)> {
        self.run_with_schedule(algorithm, sigma, index, recording, &self.spsa)
    }

    fn run_with_schedule(
        &self,
        algorithm: Algorithm,
        sigma: f64,
        index: u64,
        recording: Recording,
        spsa: &GainSchedule,
    ) -> Result<(Trajectory, NoisyOracle)> {
        let seed = self.replication_seed(algorithm, sigma, index);
        let mut oracle = NoisyOracle::new(self.function.clone(), sigma, seed)?;
        let mut rng = seeded_rng(seed, 1);
        let budget = self.largest_budget();
        let trajectory = match algorithm {
            Algorithm::Kw => kw_run(
                &mut oracle,
                &self.domain,
                self.x0[0],
                &self.kw,
                budget,
                &self.budgets,
                recording,
            )?,
            Algorithm::Spsa => spsa_run(
                &mut oracle,
                &self.domain,
                &self.x0,
                spsa,
                budget,
                &mut rng,
                &self.budgets,
                recording,
            )?,
            Algorithm::CorCfdGd => cor_cfd_gd_run(
                &mut oracle,
                &self.domain,
                &self.x0,
                &self.estimator,
                &self.armijo,
                budget,
                &mut rng,
                &self.budgets,
                recording,
            )?,
        };
        Ok((trajectory, oracle))
    }

    fn bounded_1d(&self) -> Option<(f64, f64)> {
        let (lo, hi) = (self.domain.lower()[0], self.domain.upper()[0]);
        (self.dimension() == 1 && lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }

    fn measure(&self, trajectory: &Trajectory, oracle: &NoisyOracle) -> Result<ReplicationResult> {
        let opt_point = self.function.optimum_point();
        let opt_value = self.function.optimum_value();
        let mut solution = Vec::with_capacity(self.budgets.len());
        let mut optimality = Vec::with_capacity(self.budgets.len());
        for &pairs in &self.budgets {
            let cp = trajectory
                .checkpoint(pairs)
                .ok_or_else(|| Error::InvalidArgument(format!("missing checkpoint {pairs}")))?;
            if trajectory.diverged && 2 * pairs >= trajectory.ledger.n_count {
                solution.push(f64::INFINITY);
                optimality.push(f64::INFINITY);
                continue;
            }
            let x = &cp.iterate.x;
            solution.push(metrics::solution_gap(x, opt_point)?);
            optimality.push(metrics::optimality_gap(oracle.true_mean(x), opt_value));
        }
        let oscillation = match self.bounded_1d() {
            Some((lo, hi)) => {
                let cap = 2 * self.largest_budget();
                let path: Vec<f64> = trajectory
                    .iterates
                    .iter()
                    .filter(|it| it.n_count <= cap)
                    .map(|it| it.x[0])
                    .collect();
                Some(metrics::oscillatory_period(&path, lo, hi) as u64)
            }
            None => None,
        };
        Ok(ReplicationResult {
            solution,
            optimality,
            oscillation,
        })
    }

    /// Runs every replication of one algorithm at one noise level.
    pub fn run_replications(
        &self,
        algorithm: Algorithm,
        sigma: f64,
        workers: usize,
    ) -> Result<ReplicationOutcome> {
        let spsa = self.spsa;
        self.replicate(algorithm, sigma, workers, &spsa)
    }

    fn replicate(
        &self,
        algorithm: Algorithm,
        sigma: f64,
        workers: usize,
        spsa: &GainSchedule,
    ) -> Result<ReplicationOutcome> {
        let recording = if self.bounded_1d().is_some() {
            Recording::All
        } else {
            Recording::Checkpoints
        };
        let results = with_workers(workers, || {
            (1..=self.replications as u64)
                .into_par_iter()
                .map(|r| {
                    let (t, o) = self.run_with_schedule(algorithm, sigma, r, recording, spsa)?;
                    self.measure(&t, &o)
                })
                .collect::<Result<Vec<_>>>()
        })??;
        ReplicationOutcome::aggregate(algorithm, sigma, &self.listed_checkpoints, results)
    }

    /// Runs SPSA replications for every `(a, c)` cell at one noise level and picks
    /// the cell with the smallest RMSE(optimality gap) at the largest budget.
    /// Ties go to the smaller `a`, then the smaller `c`.
    pub fn grid_search_spsa(
        &self,
        grid: &GridSpec,
        sigma: f64,
        workers: usize,
    ) -> Result<GridResult> {
        grid.validate()?;
        let mut cells = Vec::with_capacity(grid.a_values.len() * grid.c_values.len());
        for &a in &grid.a_values {
            for &c in &grid.c_values {
                let schedule = GainSchedule { a, c, ..self.spsa };
                let outcome = self.replicate(Algorithm::Spsa, sigma, workers, &schedule)?;
                let metric = *outcome.summary.rmse_optimality.last().expect("non-empty");
                cells.push(GridCell {
                    a,
                    c,
                    sigma,
                    rmse_opt_gap: metric,
                });
            }
        }
        let best = *cells
            .iter()
            .min_by(|x, y| {
                let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
                key(x.rmse_opt_gap)
                    .total_cmp(&key(y.rmse_opt_gap))
                    .then(x.a.total_cmp(&y.a))
                    .then(x.c.total_cmp(&y.c))
            })
            .expect("non-empty grid");
        Ok(GridResult { cells, best })
    }
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

struct ReplicationResult {
    solution: Vec<f64>,
    optimality: Vec<f64>,
    oscillation: Option<u64>,
}

/// Per-replication gaps at each checkpoint: `values[checkpoint][replication]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSeries {
    pub checkpoints: Vec<u64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSummary {
    pub algorithm: Algorithm,
    pub sigma: f64,
    /// Listed budgets the RMSE vectors are aligned with.
    pub checkpoints: Vec<u64>,
    pub rmse_solution: Vec<f64>,
    pub rmse_optimality: Vec<f64>,
    /// `(p5, median, p95)` of the oscillatory period, for bounded 1-d problems.
    pub oscillation_percentiles: Option<(u64, u64, u64)>,
    pub replication_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationOutcome {
    pub summary: ReplicationSummary,
    pub solution_gaps: GapSeries,
    pub optimality_gaps: GapSeries,
    pub oscillations: Option<Vec<u64>>,
}

impl ReplicationOutcome {
    fn aggregate(
        algorithm: Algorithm,
        sigma: f64,
        checkpoints: &[u64],
        results: Vec<ReplicationResult>,
    ) -> Result<Self> {
        let columns = |pick: fn(&ReplicationResult) -> &Vec<f64>| -> Vec<Vec<f64>> {
            (0..checkpoints.len())
                .map(|j| results.iter().map(|r| pick(r)[j]).collect())
                .collect()
        };
        let solution = columns(|r| &r.solution);
        let optimality = columns(|r| &r.optimality);
        let rmse_solution = solution
            .iter()
            .map(|v| metrics::rmse(v))
            .collect::<Result<Vec<_>>>()?;
        let rmse_optimality = optimality
            .iter()
            .map(|v| metrics::rmse(v))
            .collect::<Result<Vec<_>>>()?;
        let oscillations: Option<Vec<u64>> = results.iter().map(|r| r.oscillation).collect();
        let oscillation_percentiles = match &oscillations {
            Some(v) => Some(metrics::percentiles(v)?),
            None => None,
        };
        Ok(Self {
            summary: ReplicationSummary {
                algorithm,
                sigma,
                checkpoints: checkpoints.to_vec(),
                rmse_solution,
                rmse_optimality,
                oscillation_percentiles,
                replication_count: results.len(),
            },
            solution_gaps: GapSeries {
                checkpoints: checkpoints.to_vec(),
                values: solution,
            },
            optimality_gaps: GapSeries {
                checkpoints: checkpoints.to_vec(),
                values: optimality,
            },
            oscillations,
        })
    }
}

/// SPSA parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub a_values: Vec<f64>,
    pub c_values: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.a_values.is_empty() || self.c_values.is_empty() {
            return Err(Error::Config(
                "grid needs at least one a and one c value".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub a: f64,
    pub c: f64,
    pub sigma: f64,
    pub rmse_opt_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            function = "quartic"
            noise_levels = [0.0]
            checkpoints = [10, 50]
            replications = 3
            master_seed = 7
            algorithms = ["kw", "corcfd"]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_resolve() {
        let exp = quartic_config().resolve(Profile::Full).unwrap();
        assert_eq!(exp.x0, vec![30.0]);
        assert_eq!(exp.domain.lower(), &[-50.0]);
        assert_eq!(exp.budgets, vec![10, 50]);
        assert_eq!(exp.kw, GainSchedule::kw(1.0, 1.0));
    }

    #[test]
    fn fn213_budgets_scale_with_dimension() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            function = "fn213"
            dimension = 64
            noise_levels = [1.0]
            checkpoints = [1000]
            algorithms = ["spsa", "corcfd"]
            "#,
        )
        .unwrap();
        let exp = cfg.resolve(Profile::Desk).unwrap();
        assert_eq!(exp.budgets, vec![64_000]);
        assert_eq!(exp.spsa.stability, 6400.0);
        assert_eq!(exp.replications, DESK_REPLICATIONS);
        assert_eq!(exp.x0[..4], [3.0, 1.0, 3.0, 1.0]);
        assert!(exp.domain.upper()[0].is_infinite());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = quartic_config();
        cfg.checkpoints = vec![50, 10];
        assert!(matches!(cfg.resolve(Profile::Full), Err(Error::Config(_))));
        let mut cfg = quartic_config();
        cfg.function = "nope".into();
        assert!(cfg.resolve(Profile::Full).is_err());
        let mut cfg = quartic_config();
        cfg.checkpoints = vec![5];
        // 20 pairs needed for the first Cor-CFD gradient
        assert!(cfg.resolve(Profile::Full).is_err());
        assert!(ExperimentConfig::from_toml("function = 3").is_err());
        assert!(ExperimentConfig::from_toml(
            "function = \"quartic\"\nnoise_levels = [1.0]\ncheckpoints = [10]\nbogus = 1"
        )
        .is_err());
    }

    #[test]
    fn single_noiseless_replication_is_its_own_rmse() {
        let mut cfg = quartic_config();
        cfg.replications = 1;
        let exp = cfg.resolve(Profile::Full).unwrap();
        let out = exp.run_replications(Algorithm::CorCfdGd, 0.0, 1).unwrap();
        let (t, _) = exp
            .run_single(Algorithm::CorCfdGd, 0.0, 1, Recording::All)
            .unwrap();
        let x = &t.checkpoint(50).unwrap().iterate.x;
        assert_eq!(out.summary.rmse_solution[1], x[0].abs());
        assert_eq!(out.summary.replication_count, 1);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let exp = quartic_config().resolve(Profile::Full).unwrap();
        let a = exp.run_replications(Algorithm::Kw, 1.0, 1).unwrap();
        let b = exp.run_replications(Algorithm::Kw, 1.0, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cell_grid_returns_that_cell() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            function = "sphere"
            dimension = 4
            x0 = [1.0]
            noise_levels = [0.1]
            checkpoints = [200]
            replications = 2
            algorithms = ["spsa"]
            "#,
        )
        .unwrap();
        let exp = cfg.resolve(Profile::Full).unwrap();
        let grid = GridSpec {
            a_values: vec![0.01],
            c_values: vec![0.1],
        };
        let res = exp.grid_search_spsa(&grid, 0.1, 2).unwrap();
        assert_eq!(res.cells.len(), 1);
        assert_eq!((res.best.a, res.best.c), (0.01, 0.1));
    }

    #[test]
    fn grid_ties_prefer_smaller_a_then_c() {
        // a sigma of 0 on a flat function gives every cell the same metric
        let cfg = ExperimentConfig::from_toml(
            r#"
            function = "sphere"
            dimension = 2
            x0 = [0.0]
            noise_levels = [0.0]
            checkpoints = [20]
            replications = 1
            algorithms = ["spsa"]
            "#,
        )
        .unwrap();
        let exp = cfg.resolve(Profile::Full).unwrap();
        let grid = GridSpec {
            a_values: vec![1e-3, 1e-4],
            c_values: vec![0.5, 0.25],
        };
        let res = exp.grid_search_spsa(&grid, 0.0, 1).unwrap();
        assert!(res.cells.iter().all(|c| c.rmse_opt_gap == 0.0));
        assert_eq!((res.best.a, res.best.c), (1e-4, 0.25));
    }
}
