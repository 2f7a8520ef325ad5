use super::{all_finite, BudgetLedger, GainSchedule, Recorder, Recording, Trajectory};
use crate::error::{invalid, Result};
use crate::oracle::{BoxDomain, NoisyOracle};

/// Kiefer-Wolfowitz stochastic approximation on a one-dimensional oracle.
///
/// One CFD pair per iteration, `x_{k+1} = proj(x_k - a_k g_k)`, until the pair
/// budget is spent.
pub fn kw_run(
    oracle: &mut NoisyOracle,
    domain: &BoxDomain,
    x0: f64,
    schedule: &GainSchedule,
    budget_pairs: u64,
    checkpoints: &[u64],
    recording: Recording,
) -> Result<Trajectory> {
    if oracle.dimension() != 1 || domain.dimension() != 1 {
        return invalid(format!(
            "KW is one-dimensional, got oracle dimension {} and domain dimension {}",
            oracle.dimension(),
            domain.dimension()
        ));
    }
    if !domain.contains(&[x0]) {
        return invalid(format!("starting point {x0} lies outside the domain"));
    }
    schedule.validate()?;
    let mut ledger = BudgetLedger::from_pairs(budget_pairs)?;
    let mut recorder = Recorder::new(vec![x0], checkpoints, recording);

    let mut x = [x0];
    let mut diverged = false;
    let mut k = 1u64;
    while ledger.remaining() >= 2 {
        let c = schedule.perturbation(k);
        let center = x[0];
        x[0] = center + c;
        let plus = oracle.evaluate(&x)?;
        x[0] = center - c;
        let minus = oracle.evaluate(&x)?;
        ledger.charge(2);
        let g = (plus - minus) / (2.0 * c);

        x[0] = center - schedule.step(k) * g;
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
