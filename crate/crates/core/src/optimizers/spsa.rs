use rand::Rng;

use super::{all_finite, BudgetLedger, GainSchedule, Recorder, Recording, Trajectory};
use crate::error::{invalid, Result};
use crate::oracle::{BoxDomain, NoisyOracle};

/// Fills `delta` with independent symmetric Bernoulli signs, 64 coordinates per draw.
pub(crate) fn rademacher<R: Rng + ?Sized>(delta: &mut [f64], rng: &mut R) {
    for chunk in delta.chunks_mut(64) {
        let bits: u64 = rng.gen();
        for (i, d) in chunk.iter_mut().enumerate() {
            *d = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

/// One simultaneous-perturbation gradient estimate (two evaluations).
///
/// `g = [Y(x + c D) - Y(x - c D)] / (2c) * D^{-1}`; with `D` in `{-1, +1}^d` the
/// elementwise reciprocal is `D` itself.
pub fn spsa_gradient<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    x: &[f64],
    c: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = x.len();
    let mut delta = vec![0.0; d];
    let mut probe = vec![0.0; d];
    let mut g = vec![0.0; d];
    spsa_gradient_into(oracle, x, c, rng, &mut delta, &mut probe, &mut g)?;
    Ok(g)
}

fn spsa_gradient_into<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    x: &[f64],
    c: f64,
    rng: &mut R,
    delta: &mut [f64],
    probe: &mut [f64],
    g: &mut [f64],
) -> Result<()> {
    rademacher(delta, rng);
    for ((p, xi), di) in probe.iter_mut().zip(x).zip(delta.iter()) {
        *p = xi + c * di;
    }
    let plus = oracle.evaluate(probe)?;
    for ((p, xi), di) in probe.iter_mut().zip(x).zip(delta.iter()) {
        *p = xi - c * di;
    }
    let minus = oracle.evaluate(probe)?;
    let scale = (plus - minus) / (2.0 * c);
    for (gi, di) in g.iter_mut().zip(delta.iter()) {
        *gi = scale * di;
    }
    Ok(())
}

/// SPSA with projected updates, one iteration per sample pair.
pub fn spsa_run<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    domain: &BoxDomain,
    x0: &[f64],
    schedule: &GainSchedule,
    budget_pairs: u64,
    rng: &mut R,
    checkpoints: &[u64],
    recording: Recording,
) -> Result<Trajectory> {
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
    schedule.validate()?;
    let mut ledger = BudgetLedger::from_pairs(budget_pairs)?;
    let mut recorder = Recorder::new(x0.to_vec(), checkpoints, recording);

    let mut x = x0.to_vec();
    let mut delta = vec![0.0; d];
    let mut probe = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut diverged = false;
    let mut k = 1u64;
    while ledger.remaining() >= 2 {
        let c = schedule.perturbation(k);
        spsa_gradient_into(oracle, &x, c, rng, &mut delta, &mut probe, &mut g)?;
        ledger.charge(2);
        let a = schedule.step(k);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= a * gi;
        }
        domain.project_in_place(&mut x)?;
        if !all_finite(&x) {
            diverged = true;
            break;
        }
        recorder.push(k, &x, ledger.n_count);
        k += 1;
    }
    Ok(recorder.finish(ledger, 0, diverged))
}
