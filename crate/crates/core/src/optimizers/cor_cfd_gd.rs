//! Gradient descent on Cor-CFD gradient estimates with a noise-relaxed Armijo line search.

use rand::Rng;

use super::{all_finite, BudgetLedger, Recorder, Recording, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::estimators::{cor_cfd_gradient, CorCfdConfig};
use crate::oracle::{BoxDomain, NoisyOracle};

/// Backtracking parameters for `Y(x - a g) <= Y(x) - l1 a |g|^2 + 2 sigma2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoParams {
    pub l1: f64,
    /// Shrink factor applied to the trial step after each rejection.
    pub l2: f64,
    pub a0: f64,
    /// Maximum number of trial steps per search.
    pub max_backtracks: u32,
    /// Noise variance in the relaxation term.
    pub sigma2: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            l1: 1e-4,
            l2: 0.5,
            a0: 1.0,
            max_backtracks: 30,
            sigma2: 0.0,
        }
    }
}

impl ArmijoParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.l1) || !unit(self.l2) {
            return invalid(format!(
                "need l1, l2 in (0, 1), got {} and {}",
                self.l1, self.l2
            ));
        }
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return invalid(format!("a0 must be finite and > 0, got {}", self.a0));
        }
        if self.max_backtracks == 0 {
            return invalid("max_backtracks must be >= 1");
        }
        if !(self.sigma2 >= 0.0) {
            return invalid(format!("sigma2 must be >= 0, got {}", self.sigma2));
        }
        Ok(())
    }
}

/// Result of one line search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub step: f64,
    /// Evaluations spent, including the baseline `Y(x)`.
    pub evaluations: u64,
    /// `false` when every trial was rejected and `step` is the smallest one tried.
    pub accepted: bool,
}

/// Stochastic Armijo backtracking from `a0`.
///
/// Draws one baseline `Y(x)` and reuses it across trials; each trial costs one
/// evaluation at `x - a g`. Never fails on non-acceptance.
pub fn armijo_search(
    oracle: &mut NoisyOracle,
    x: &[f64],
    g: &[f64],
    params: &ArmijoParams,
) -> Result<LineSearch> {
    params.validate()?;
    if x.len() != g.len() {
        return invalid(format!(
            "point has dimension {} but gradient has {}",
            x.len(),
            g.len()
        ));
    }
    let g_sq: f64 = g.iter().map(|v| v * v).sum();
    let baseline = oracle.evaluate(x)?;
    let mut evaluations = 1;
    let mut candidate = x.to_vec();
    let mut step = params.a0;
    for trial in 1..=params.max_backtracks {
        for ((ci, xi), gi) in candidate.iter_mut().zip(x).zip(g) {
            *ci = xi - step * gi;
        }
        let y = oracle.evaluate(&candidate)?;
        evaluations += 1;
        if y <= baseline - params.l1 * step * g_sq + 2.0 * params.sigma2 {
            return Ok(LineSearch {
                step,
                evaluations,
                accepted: true,
            });
        }
        if trial < params.max_backtracks {
            step *= params.l2;
        }
    }
    Ok(LineSearch {
        step,
        evaluations,
        accepted: false,
    })
}

/// Batch size at iteration `k`: `floor((n0 + k) / R) * R`.
pub fn batch_schedule(n0: usize, pilot_count: usize, k: usize) -> Result<usize> {
    if pilot_count == 0 || n0 % pilot_count != 0 {
        return invalid(format!("pilot count {pilot_count} must divide n0 = {n0}"));
    }
    Ok((n0 + k) / pilot_count * pilot_count)
}

/// Cor-CFD gradient descent.
///
/// `estimator.batch_pairs` is the initial batch `n0` and `estimator.pilot_count`
/// the pilot count `R`. The relaxation variance of each line search is the
/// coordinate-averaged noise estimate of the current gradient, so
/// `armijo.sigma2` is ignored. The loop stops once the evaluation count
/// reaches twice the pair budget, or earlier when the remaining budget cannot
/// pay for the next gradient.
pub fn cor_cfd_gd_run<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    domain: &BoxDomain,
    x0: &[f64],
    estimator: &CorCfdConfig,
    armijo: &ArmijoParams,
    budget_pairs: u64,
    rng: &mut R,
    checkpoints: &[u64],
    recording: Recording,
) -> Result<Trajectory> {
    estimator.validate()?;
    armijo.validate()?;
    let d = oracle.dimension();
    if x0.len() != d || domain.dimension() != d {
        return invalid(format!(
            "dimension mismatch: oracle {d}, start {}, domain {}",
            x0.len(),
            domain.dimension()
        ));
    }
    if !domain.contains(x0) {
        return invalid("starting point lies outside the domain");
    }
    let n0 = estimator.batch_pairs;
    let pilots = estimator.pilot_count;
    let mut ledger = BudgetLedger::from_pairs(budget_pairs)?;
    let first_cost = 2 * (d * n0) as u64;
    if first_cost > ledger.cap {
        return Err(Error::Config(format!(
            "budget of {budget_pairs} pairs cannot fund the initial gradient ({} pairs)",
            d * n0
        )));
    }

    let mut recorder = Recorder::new(x0.to_vec(), checkpoints, recording);
    let mut x = x0.to_vec();
    let mut g = cor_cfd_gradient(oracle, &x, estimator, rng)?;
    ledger.charge(first_cost);

    let mut exhausted = 0;
    let mut diverged = false;
    let mut k = 0usize;
    while !ledger.exhausted() {
        let params = ArmijoParams {
            sigma2: g.mean_sigma2(),
            ..*armijo
        };
        let ls = armijo_search(oracle, &x, &g.g, &params)?;
        ledger.charge(ls.evaluations);
        if !ls.accepted {
            exhausted += 1;
        }
        for (xi, gi) in x.iter_mut().zip(&g.g) {
            *xi -= ls.step * gi;
        }
        domain.project_in_place(&mut x)?;
        if !all_finite(&x) {
            diverged = true;
            break;
        }
        recorder.push(k as u64 + 1, &x, ledger.n_count);

        let n_next = batch_schedule(n0, pilots, k + 1)?;
        let cost = 2 * (d * n_next) as u64;
        if ledger.n_count + cost > ledger.cap {
            break;
        }
        g = cor_cfd_gradient(oracle, &x, &estimator.with_batch_pairs(n_next), rng)?;
        ledger.charge(cost);
        k += 1;
    }
    Ok(recorder.finish(ledger, exhausted, diverged))
}
