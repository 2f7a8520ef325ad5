//! Replication statistics: RMSE of gaps, oscillatory period, nearest-rank percentiles.

use crate::error::{invalid, Result};

pub fn rmse(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return invalid("rmse of an empty list");
    }
    Ok((values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt())
}

/// Euclidean distance `|x - x*|`.
pub fn solution_gap(x: &[f64], x_star: &[f64]) -> Result<f64> {
    if x.len() != x_star.len() {
        return invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            x_star.len()
        ));
    }
    Ok(x.iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// `|mu(x) - mu*|` on noiseless values.
pub fn optimality_gap(true_value: f64, optimum_value: f64) -> f64 {
    (true_value - optimum_value).abs()
}

/// Number of `k >= 2` where the path jumps between opposite bounds:
/// `(x_k = upper and x_{k-1} = lower)` or `(x_k = lower and x_{k-1} = upper)`.
///
/// `path[k]` is `x_k`, starting with the initial point. Bounds are compared
/// exactly since projection emits them verbatim.
pub fn oscillatory_period(path: &[f64], lower: f64, upper: f64) -> usize {
    path.windows(2)
        .enumerate()
        .filter(|(i, w)| {
            i + 1 >= 2 && ((w[1] == upper && w[0] == lower) || (w[1] == lower && w[0] == upper))
        })
        .count()
}

/// Oscillatory period of a trajectory's recorded iterates; errors unless one-dimensional.
pub fn trajectory_oscillation(
    trajectory: &crate::optimizers::Trajectory,
    lower: f64,
    upper: f64,
) -> Result<usize> {
    match trajectory.scalar_path() {
        Some(path) => Ok(oscillatory_period(&path, lower, upper)),
        None => invalid("oscillatory period is defined for one-dimensional trajectories only"),
    }
}

/// Nearest-rank percentile: the `ceil(p N)`-th smallest value.
pub fn percentile(values: &[u64], p: f64) -> Result<u64> {
    if values.is_empty() {
        return invalid("percentile of an empty list");
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("percentile level must lie in [0, 1], got {p}"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    Ok(sorted[nearest_rank(p, sorted.len()) - 1])
}

fn nearest_rank(p: f64, n: usize) -> usize {
    // guard against p * n landing a hair above an integer
    let rank = (p * n as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, n)
}

/// `(p5, median, p95)` by nearest rank.
pub fn percentiles(values: &[u64]) -> Result<(u64, u64, u64)> {
    Ok((
        percentile(values, 0.05)?,
        percentile(values, 0.5)?,
        percentile(values, 0.95)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[-2.5; 7]).unwrap(), 2.5);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn gaps() {
        assert_eq!(solution_gap(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(solution_gap(&[30.0], &[0.0]).unwrap(), 30.0);
        let x0: Vec<f64> = (0..64)
            .map(|i| if i % 2 == 0 { 3.0 } else { 1.0 })
            .collect();
        assert!((solution_gap(&x0, &[1.0; 64]).unwrap() - 128f64.sqrt()).abs() < 1e-12);
        assert!(solution_gap(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(optimality_gap(0.0, 0.0), 0.0);
        assert_eq!(optimality_gap(16.0, 0.0), 16.0);
        assert_eq!(optimality_gap(32.0 * 44f64.powi(4), 0.0), 119_939_072.0);
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillatory_period(&[30.0, 12.0, 3.0, 0.5], -50.0, 50.0), 0);
        assert_eq!(
            oscillatory_period(&[30.0, -50.0, 50.0, -50.0, 50.0, 20.0], -50.0, 50.0),
            3
        );
        assert_eq!(oscillatory_period(&[50.0, 50.0, 50.0], -50.0, 50.0), 0);
        // k = 1 is excluded even if x_0 sits on a bound
        assert_eq!(oscillatory_period(&[50.0, -50.0], -50.0, 50.0), 0);
        assert_eq!(oscillatory_period(&[], -50.0, 50.0), 0);
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentiles(&[5000; 200]).unwrap(), (5000, 5000, 5000));
        let seq: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&seq, 0.5).unwrap(), 50);
        assert_eq!(percentiles(&seq).unwrap(), (5, 50, 95));
        assert_eq!(percentiles(&[7]).unwrap(), (7, 7, 7));
        assert!(percentiles(&[]).is_err());
        // 50 values: ranks 3, 25, 48
        let v: Vec<u64> = (1..=50).collect();
        assert_eq!(percentiles(&v).unwrap(), (3, 25, 48));
    }

    proptest! {
        #[test]
        fn rmse_dominates_mean(v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!(rmse(&v).unwrap() + 1e-9 >= mean.abs());
        }

        #[test]
        fn rmse_is_permutation_invariant(mut v in prop::collection::vec(0f64..1e3, 1..50), seed in any::<u64>()) {
            let before = rmse(&v).unwrap();
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            v.reverse();
            prop_assert!((rmse(&v).unwrap() - before).abs() <= 1e-9 * before.max(1.0));
        }

        #[test]
        fn percentiles_are_ordered_order_statistics(v in prop::collection::vec(0u64..10_000, 1..300)) {
            let (p5, p50, p95) = percentiles(&v).unwrap();
            prop_assert!(p5 <= p50 && p50 <= p95);
            prop_assert!(v.contains(&p5) && v.contains(&p50) && v.contains(&p95));
        }

        #[test]
        fn interior_tail_does_not_change_oscillation(
            flips in prop::collection::vec(any::<bool>(), 0..40),
            tail in prop::collection::vec(-49.9f64..49.9, 0..40),
        ) {
            let mut path = vec![30.0];
            path.extend(flips.iter().map(|b| if *b { 50.0 } else { -50.0 }));
            let base = oscillatory_period(&path, -50.0, 50.0);
            path.extend(tail);
            prop_assert_eq!(oscillatory_period(&path, -50.0, 50.0), base);
        }
    }
}
