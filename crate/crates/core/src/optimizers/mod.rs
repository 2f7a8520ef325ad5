//! Optimization loops driving a [`NoisyOracle`](crate::oracle::NoisyOracle).
//!
//! Budgets are given in sample pairs; a run with budget `B` may spend `2B`
//! single evaluations. Every loop stamps each iterate with the evaluation count
//! at the moment the iterate was produced.

mod cor_cfd_gd;
mod kw;
mod spsa;

pub use cor_cfd_gd::{armijo_search, batch_schedule, cor_cfd_gd_run, ArmijoParams, LineSearch};
pub use kw::kw_run;
pub use spsa::{spsa_gradient, spsa_run};

use crate::error::{invalid, Result};

/// Deterministic gains `a_k = a / (A + k + shift)^alpha`, `c_k = c / (k + shift)^gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainSchedule {
    pub a: f64,
    pub c: f64,
    /// Stability offset `A` in the step-size denominator.
    pub stability: f64,
    pub a_exponent: f64,
    pub c_exponent: f64,
    /// Added to the iteration index in both denominators.
    pub index_shift: f64,
}

impl GainSchedule {
    /// `a_k = a / k`, `c_k = c / k^(1/4)`.
    pub fn kw(a: f64, c: f64) -> Self {
        Self {
            a,
            c,
            stability: 0.0,
            a_exponent: 1.0,
            c_exponent: 0.25,
            index_shift: 0.0,
        }
    }

    /// `a_k = a / (A + k + 1)^0.602`, `c_k = c / (k + 1)^0.101`.
    pub fn spsa(a: f64, c: f64, stability: f64) -> Self {
        Self {
            a,
            c,
            stability,
            a_exponent: 0.602,
            c_exponent: 0.101,
            index_shift: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.a) || !positive(self.c) {
            return invalid(format!(
                "gains need a > 0 and c > 0, got a = {}, c = {}",
                self.a, self.c
            ));
        }
        if !(self.stability >= 0.0) || !(self.index_shift >= 0.0) {
            return invalid("stability offset and index shift must be >= 0");
        }
        if !(self.a_exponent >= 0.0) || !(self.c_exponent >= 0.0) {
            return invalid("gain exponents must be >= 0");
        }
        Ok(())
    }

    /// Step size at iteration `k >= 1`.
    pub fn step(&self, k: u64) -> f64 {
        self.a / (self.stability + k as f64 + self.index_shift).powf(self.a_exponent)
    }

    /// Perturbation at iteration `k >= 1`.
    pub fn perturbation(&self, k: u64) -> f64 {
        self.c / (k as f64 + self.index_shift).powf(self.c_exponent)
    }
}

/// Evaluation accounting: `n_count` single evaluations against a cap of twice the pair budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetLedger {
    pub n_count: u64,
    pub cap: u64,
}

impl BudgetLedger {
    pub fn from_pairs(pairs: u64) -> Result<Self> {
        if pairs == 0 {
            return invalid("budget must be at least one sample pair");
        }
        Ok(Self {
            n_count: 0,
            cap: 2 * pairs,
        })
    }

    pub fn charge(&mut self, evaluations: u64) {
        self.n_count += evaluations;
    }

    pub fn remaining(&self) -> u64 {
        self.cap.saturating_sub(self.n_count)
    }

    pub fn exhausted(&self) -> bool {
        self.n_count >= self.cap
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub k: u64,
    pub x: Vec<f64>,
    /// Single evaluations consumed when this iterate was produced.
    pub n_count: u64,
}

impl Iterate {
    pub fn pairs_used(&self) -> f64 {
        self.n_count as f64 / 2.0
    }
}

/// The iterate in force at a pair budget: the last one with `n_count <= 2 * pairs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub pairs: u64,
    pub iterate: Iterate,
}

/// What a run keeps besides its checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recording {
    /// Every iterate, starting with `x_0`.
    All,
    /// Only checkpoint snapshots (and the final iterate).
    Checkpoints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// All iterates with `k = 0` first, when recorded with [`Recording::All`].
    pub iterates: Vec<Iterate>,
    pub checkpoints: Vec<Checkpoint>,
    pub last: Iterate,
    pub ledger: BudgetLedger,
    /// Line searches that ran out of backtracks and took the smallest trial step.
    pub exhausted_line_searches: u64,
    /// Set when an update produced a non-finite coordinate; the run stopped there.
    pub diverged: bool,
}

impl Trajectory {
    pub fn checkpoint(&self, pairs: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.pairs == pairs)
    }

    /// Scalar iterates of a one-dimensional run.
    pub fn scalar_path(&self) -> Option<Vec<f64>> {
        if self.last.x.len() != 1 {
            return None;
        }
        Some(self.iterates.iter().map(|it| it.x[0]).collect())
    }
}

/// Streams iterates into a [`Trajectory`], resolving checkpoints as budgets are passed.
pub(crate) struct Recorder {
    mode: Recording,
    iterates: Vec<Iterate>,
    pending: Vec<u64>,
    resolved: Vec<Checkpoint>,
    last: Iterate,
}

impl Recorder {
    pub(crate) fn new(x0: Vec<f64>, checkpoints: &[u64], mode: Recording) -> Self {
        let mut pending = checkpoints.to_vec();
        pending.sort_unstable();
        pending.dedup();
        pending.reverse();
        let first = Iterate {
            k: 0,
            x: x0,
            n_count: 0,
        };
        let iterates = match mode {
            Recording::All => vec![first.clone()],
            Recording::Checkpoints => Vec::new(),
        };
        Self {
            mode,
            iterates,
            pending,
            resolved: Vec::new(),
            last: first,
        }
    }

    pub(crate) fn push(&mut self, k: u64, x: &[f64], n_count: u64) {
        while let Some(&pairs) = self.pending.last() {
            if 2 * pairs >= n_count {
                break;
            }
            self.pending.pop();
            self.resolved.push(Checkpoint {
                pairs,
                iterate: self.last.clone(),
            });
        }
        let it = Iterate {
            k,
            x: x.to_vec(),
            n_count,
        };
        if self.mode == Recording::All {
            self.iterates.push(it.clone());
        }
        self.last = it;
    }

    pub(crate) fn finish(
        mut self,
        ledger: BudgetLedger,
        exhausted: u64,
        diverged: bool,
    ) -> Trajectory {
        while let Some(pairs) = self.pending.pop() {
            self.resolved.push(Checkpoint {
                pairs,
                iterate: self.last.clone(),
            });
        }
        Trajectory {
            iterates: self.iterates,
            checkpoints: self.resolved,
            last: self.last,
            ledger,
            exhausted_line_searches: exhausted,
            diverged,
        }
    }
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kw_gains() {
        let s = GainSchedule::kw(1.0, 1.0);
        assert_eq!(s.step(1), 1.0);
        assert_eq!(s.step(4), 0.25);
        assert_eq!(s.perturbation(16), 0.5);
    }

    #[test]
    fn spsa_gains_are_positive_and_nonincreasing() {
        let s = GainSchedule::spsa(1e-3, 2.0, 100.0);
        assert!((s.step(1) - 1e-3 / 102f64.powf(0.602)).abs() < 1e-18);
        assert!((s.perturbation(1) - 2.0 / 2f64.powf(0.101)).abs() < 1e-15);
        for k in 1..1000 {
            assert!(s.step(k + 1) <= s.step(k) && s.step(k) > 0.0);
            assert!(s.perturbation(k + 1) <= s.perturbation(k) && s.perturbation(k) > 0.0);
        }
        assert!(GainSchedule::spsa(0.0, 1.0, 0.0).validate().is_err());
        assert!(GainSchedule::kw(1.0, -1.0).validate().is_err());
    }

    #[test]
    fn recorder_resolves_checkpoints() {
        let mut r = Recorder::new(vec![0.0], &[3, 1, 10], Recording::Checkpoints);
        r.push(1, &[1.0], 2);
        r.push(2, &[2.0], 5);
        r.push(3, &[3.0], 6);
        r.push(4, &[4.0], 8);
        let t = r.finish(
            BudgetLedger {
                n_count: 8,
                cap: 20,
            },
            0,
            false,
        );
        assert_eq!(t.checkpoint(1).unwrap().iterate.k, 1);
        assert_eq!(t.checkpoint(3).unwrap().iterate.k, 3);
        assert_eq!(t.checkpoint(10).unwrap().iterate.k, 4);
        assert!(t.iterates.is_empty());
    }
}
