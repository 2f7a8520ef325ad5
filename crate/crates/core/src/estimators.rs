//! Central finite-difference gradient estimators.
//!
//! Everything here spends oracle evaluations in sample pairs: one pair is the two
//! evaluations `Y(x + c e_i)` and `Y(x - c e_i)` behind one difference quotient.
//!
//! The correlation-induced estimator ([`cor_cfd_coordinate`]) spends its whole
//! batch on a handful of pilot perturbations, fits the bias curve
//! `E[D(c)] = mu'(x) + mu'''(x) c^2 / 6` across pilots, picks the MSE-optimal
//! perturbation from the fitted constants, and then recycles every stored quotient
//! onto that perturbation instead of sampling again.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::oracle::NoisyOracle;

/// Plain batch CFD: `batch_pairs` quotients at a fixed perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfdConfig {
    pub batch_pairs: usize,
    pub perturbation: f64,
}

impl CfdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_pairs == 0 {
            return invalid("batch_pairs must be >= 1");
        }
        check_perturbation(self.perturbation)
    }
}

fn check_perturbation(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        invalid(format!("perturbation must be finite and > 0, got {c}"))
    }
}

fn check_coord(oracle: &NoisyOracle, x: &[f64], coord: usize) -> Result<()> {
    if x.len() != oracle.dimension() {
        return invalid(format!(
            "point has dimension {} but the oracle expects {}",
            x.len(),
            oracle.dimension()
        ));
    }
    if coord >= x.len() {
        return invalid(format!(
            "coordinate {coord} out of range for dimension {}",
            x.len()
        ));
    }
    Ok(())
}

/// One quotient at `scratch` perturbed along `coord`. `scratch[coord]` is restored
/// to `center` on return.
#[inline]
fn quotient(
    oracle: &mut NoisyOracle,
    scratch: &mut [f64],
    center: f64,
    coord: usize,
    c: f64,
) -> Result<f64> {
    scratch[coord] = center + c;
    let plus = oracle.evaluate(scratch)?;
    scratch[coord] = center - c;
    let minus = oracle.evaluate(scratch)?;
    scratch[coord] = center;
    Ok((plus - minus) / (2.0 * c))
}

/// `[Y(x + c e_coord) - Y(x - c e_coord)] / (2c)` from two fresh evaluations.
pub fn cfd_pair(oracle: &mut NoisyOracle, x: &[f64], coord: usize, c: f64) -> Result<f64> {
    check_perturbation(c)?;
    check_coord(oracle, x, coord)?;
    let mut scratch = x.to_vec();
    quotient(oracle, &mut scratch, x[coord], coord, c)
}

/// Mean of `batch_pairs` independent quotients at a fixed perturbation.
pub fn cfd_batch(
    oracle: &mut NoisyOracle,
    x: &[f64],
    coord: usize,
    cfg: &CfdConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_coord(oracle, x, coord)?;
    let mut scratch = x.to_vec();
    let mut sum = 0.0;
    for _ in 0..cfg.batch_pairs {
        sum += quotient(oracle, &mut scratch, x[coord], coord, cfg.perturbation)?;
    }
    Ok(sum / cfg.batch_pairs as f64)
}

/// Mean squared error of an `n`-pair CFD estimator at perturbation `c`:
/// squared bias `mu3^2 c^4 / 36` plus variance `sigma2 / (2 n c^2)`.
pub fn cfd_mse(c: f64, sigma2: f64, mu3: f64, n: usize) -> f64 {
    let c2 = c * c;
    mu3 * mu3 * c2 * c2 / 36.0 + sigma2 / (2.0 * n as f64 * c2)
}

/// Minimizer of [`cfd_mse`]: `c* = (9 sigma2 / (n mu3^2))^(1/6)`.
pub fn optimal_c(sigma2: f64, mu3: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be >= 1");
    }
    if !sigma2.is_finite() || !mu3.is_finite() || sigma2 < 0.0 {
        return invalid(format!(
            "need finite sigma2 >= 0 and finite mu3, got ({sigma2}, {mu3})"
        ));
    }
    if sigma2 == 0.0 || mu3 == 0.0 {
        return Err(Error::Degenerate(format!(
            "optimal perturbation undefined for sigma2 = {sigma2}, mu3 = {mu3}"
        )));
    }
    Ok((9.0 * sigma2 / (n as f64 * mu3 * mu3)).powf(1.0 / 6.0))
}

/// Settings of the correlation-induced CFD estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorCfdConfig {
    /// Number of pilot perturbations `R`.
    pub pilot_count: usize,
    /// Sample pairs per coordinate `n`; must be a multiple of `pilot_count`.
    pub batch_pairs: usize,
    pub base_perturbation: f64,
    /// Half-width of the pilot multiplier `U ~ Uniform(1 - s, 1 + s)`.
    pub pilot_spread: f64,
    pub bootstrap_reps: usize,
}

impl Default for CorCfdConfig {
    fn default() -> Self {
        Self {
            pilot_count: 10,
            batch_pairs: 20,
            base_perturbation: 1.0,
            pilot_spread: 0.5,
            bootstrap_reps: 200,
        }
    }
}

impl CorCfdConfig {
    pub fn with_batch_pairs(mut self, n: usize) -> Self {
        self.batch_pairs = n;
        self
    }

    /// Pairs per pilot, `n / R`.
    pub fn pairs_per_pilot(&self) -> usize {
        self.batch_pairs / self.pilot_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilot_count < 2 {
            return invalid(format!(
                "pilot_count must be >= 2, got {}",
                self.pilot_count
            ));
        }
        if self.batch_pairs % self.pilot_count != 0 {
            return invalid(format!(
                "batch_pairs {} is not a multiple of pilot_count {}",
                self.batch_pairs, self.pilot_count
            ));
        }
        if self.pairs_per_pilot() < 2 {
            return invalid(format!(
                "need at least 2 pairs per pilot, got batch_pairs {} for {} pilots",
                self.batch_pairs, self.pilot_count
            ));
        }
        check_perturbation(self.base_perturbation)?;
        if !(0.0..1.0).contains(&self.pilot_spread) {
            return invalid(format!(
                "pilot_spread must lie in [0, 1), got {}",
                self.pilot_spread
            ));
        }
        if self.bootstrap_reps == 0 {
            return invalid("bootstrap_reps must be >= 1");
        }
        Ok(())
    }
}

/// Draws `R` pilot perturbations `c_base * n^(-1/10) * U_r`, `U_r ~ Uniform(1 - s, 1 + s)`.
///
/// The spread shrinks like `n^(-1/10)`, so the pilot variance is `O(n^(-1/5))`.
pub fn sample_pilot_perturbations<R: Rng + ?Sized>(
    cfg: &CorCfdConfig,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    let scale = cfg.base_perturbation * (n.max(1) as f64).powf(-0.1);
    let s = cfg.pilot_spread;
    (0..cfg.pilot_count)
        .map(|_| {
            let u: f64 = rng.gen();
            scale * (1.0 - s + 2.0 * s * u)
        })
        .collect()
}

/// Per-coordinate internals of one Cor-CFD estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoordDiagnostics {
    /// Perturbation the stored quotients were recycled onto.
    pub c_hat: f64,
    pub sigma2_hat: f64,
    pub mu3_hat: f64,
    /// Regression intercept, the zero-perturbation extrapolation of `mu'(x)`.
    pub intercept: f64,
    /// Bootstrap inter-quartile range of the regression slope.
    pub slope_iqr: f64,
    /// `c_hat` came from the geometric-mean fallback rather than the closed form.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    pub per_coord: Vec<CoordDiagnostics>,
    pub pairs_used: u64,
}

impl GradientEstimate {
    /// Noise variance estimate averaged over coordinates.
    pub fn mean_sigma2(&self) -> f64 {
        if self.per_coord.is_empty() {
            return 0.0;
        }
        self.per_coord.iter().map(|d| d.sigma2_hat).sum::<f64>() / self.per_coord.len() as f64
    }

    pub fn norm_squared(&self) -> f64 {
        self.g.iter().map(|v| v * v).sum()
    }
}

const MU3_FLOOR: f64 = 1e-12;
const BOOTSTRAP_IQR_RATIO: f64 = 10.0;
const CLAMP_FACTOR: f64 = 10.0;

/// Least-squares line `y = a + b z`. `None` when the regressors carry no spread.
fn least_squares(z: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let m = z.len() as f64;
    let z_bar = z.iter().sum::<f64>() / m;
    let y_bar = y.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (zi, yi) in z.iter().zip(y) {
        sxx += (zi - z_bar) * (zi - z_bar);
        sxy += (zi - z_bar) * (yi - y_bar);
    }
    if sxx <= (1e-12 * z_bar).powi(2) * m {
        return None;
    }
    let slope = sxy / sxx;
    Some((y_bar - slope * z_bar, slope))
}

/// Quantile of sorted data with linear interpolation between order statistics.
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn bootstrap_slope_iqr<R: Rng + ?Sized>(
    z: &[f64],
    quotients: &[Vec<f64>],
    reps: usize,
    rng: &mut R,
) -> f64 {
    let mut slopes = Vec::with_capacity(reps);
    let mut means = vec![0.0; quotients.len()];
    for _ in 0..reps {
        for (m, q) in means.iter_mut().zip(quotients) {
            let b = q.len();
            let mut s = 0.0;
            for _ in 0..b {
                s += q[rng.gen_range(0..b)];
            }
            *m = s / b as f64;
        }
        if let Some((_, slope)) = least_squares(z, &means) {
            slopes.push(slope);
        }
    }
    if slopes.is_empty() {
        return 0.0;
    }
    slopes.sort_by(f64::total_cmp);
    sorted_quantile(&slopes, 0.75) - sorted_quantile(&slopes, 0.25)
}

fn geometric_mean(values: &[f64]) -> f64 {
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Cor-CFD estimate of `d mu / d x_coord` using exactly `2 * cfg.batch_pairs` evaluations.
///
/// Pipeline: pilot perturbations, `n / R` quotients per pilot, noise variance from
/// within-pilot spread, least squares of pilot means on `c^2` for `mu'''`, a
/// bootstrap stability check on the slope, then the recycled average
/// `m(c_hat) + (c_r / c_hat) (D_i^r - m(c_r))` over all stored quotients.
pub fn cor_cfd_coordinate<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    x: &[f64],
    coord: usize,
    cfg: &CorCfdConfig,
    rng: &mut R,
) -> Result<(f64, CoordDiagnostics)> {
    cfg.validate()?;
    check_coord(oracle, x, coord)?;
    let mut scratch = x.to_vec();
    cor_cfd_coordinate_inner(oracle, &mut scratch, coord, cfg, rng)
}

fn cor_cfd_coordinate_inner<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    scratch: &mut [f64],
    coord: usize,
    cfg: &CorCfdConfig,
    rng: &mut R,
) -> Result<(f64, CoordDiagnostics)> {
    let n = cfg.batch_pairs;
    let b = cfg.pairs_per_pilot();
    let center = scratch[coord];

    let pilots = sample_pilot_perturbations(cfg, n, rng);
    let mut quotients = Vec::with_capacity(pilots.len());
    for &c in &pilots {
        let mut q = Vec::with_capacity(b);
        for _ in 0..b {
            q.push(quotient(oracle, scratch, center, coord, c)?);
        }
        quotients.push(q);
    }

    let pilot_means: Vec<f64> = quotients
        .iter()
        .map(|q| q[0] + q.iter().map(|d| d - q[0]).sum::<f64>() / b as f64)
        .collect();

    // Var[D(c)] = sigma^2 / (2 c^2), so 2 c^2 s^2 estimates sigma^2 on every pilot.
    let sigma2_hat = pilots
        .iter()
        .zip(quotients.iter().zip(&pilot_means))
        .map(|(c, (q, m))| {
            let s2 = q.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (b - 1) as f64;
            2.0 * c * c * s2
        })
        .sum::<f64>()
        / pilots.len() as f64;

    let z: Vec<f64> = pilots.iter().map(|c| c * c).collect();
    let fit = least_squares(&z, &pilot_means);
    let (intercept, slope) = fit.unwrap_or_else(|| {
        let mean = pilot_means.iter().sum::<f64>() / pilot_means.len() as f64;
        (mean, 0.0)
    });
    let mu3_hat = 6.0 * slope;

    let slope_iqr = if fit.is_some() {
        bootstrap_slope_iqr(&z, &quotients, cfg.bootstrap_reps, rng)
    } else {
        0.0
    };

    let unstable = fit.is_none()
        || !mu3_hat.is_finite()
        || mu3_hat.abs() < MU3_FLOOR
        || !(sigma2_hat > 0.0)
        || slope_iqr > BOOTSTRAP_IQR_RATIO * slope.abs();
    let closed_form = if unstable {
        None
    } else {
        optimal_c(sigma2_hat, mu3_hat, n).ok()
    };
    let fallback = closed_form.is_none();
    let c_min = pilots.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = pilots.iter().copied().fold(0.0, f64::max);
    let c_hat = closed_form
        .unwrap_or_else(|| geometric_mean(&pilots))
        .clamp(c_min / CLAMP_FACTOR, CLAMP_FACTOR * c_max);

    let fitted = |c: f64| intercept + slope * c * c;
    let target = fitted(c_hat);
    let mut total = 0.0;
    for (&c, q) in pilots.iter().zip(&quotients) {
        let location = fitted(c);
        let scale = c / c_hat;
        for d in q {
            total += target + scale * (d - location);
        }
    }
    let estimate = total / n as f64;

    Ok((
        estimate,
        CoordDiagnostics {
            c_hat,
            sigma2_hat,
            mu3_hat,
            intercept,
            slope_iqr,
            fallback,
        },
    ))
}

/// Cor-CFD applied independently along every coordinate; `2 * d * n` evaluations.
pub fn cor_cfd_gradient<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    x: &[f64],
    cfg: &CorCfdConfig,
    rng: &mut R,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    if x.len() != oracle.dimension() {
        return invalid(format!(
            "point has dimension {} but the oracle expects {}",
            x.len(),
            oracle.dimension()
        ));
    }
    let mut scratch = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    let mut per_coord = Vec::with_capacity(x.len());
    for coord in 0..x.len() {
        let (gi, diag) = cor_cfd_coordinate_inner(oracle, &mut scratch, coord, cfg, rng)?;
        g.push(gi);
        per_coord.push(diag);
    }
    Ok(GradientEstimate {
        g,
        per_coord,
        pairs_used: (x.len() * cfg.batch_pairs) as u64,
    })
}
