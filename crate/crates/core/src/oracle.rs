//! Noisy black-box objectives.
//!
//! A [`NoisyOracle`] answers `Y(x) = mu(x) + sigma * Z` with `Z` standard normal,
//! drawing a fresh `Z` on every call and counting every call. The noiseless mean
//! is reachable through [`NoisyOracle::true_mean`], which is meant for metrics only
//! and never touches the evaluation counter.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// A decision vector of fixed dimension with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a point needs at least one coordinate");
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return invalid(format!("coordinate {i} is not finite"));
        }
        Ok(Self(coords))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned box `[lower, upper]`. Infinite bounds are allowed and mean the
/// coordinate is unconstrained.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return invalid(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            ));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return invalid(format!("bound {i}: need lower < upper, got [{lo}, {hi}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` on every coordinate.
    pub fn cube(dimension: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn unbounded(dimension: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dimension],
            upper: vec![f64::INFINITY; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Componentwise clamp into the box. Bounds are emitted verbatim, so a
    /// projected coordinate can be compared to a bound with `==`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub fn project_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return invalid(format!(
                "point has dimension {} but the domain has dimension {}",
                x.len(),
                self.dimension()
            ));
        }
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            if *v < *lo {
                *v = *lo;
            } else if *v > *hi {
                *v = *hi;
            }
        }
        Ok(())
    }
}

/// Multi-dimensional "function 213":
/// `sum_i [10 (x_{2i} - x_{2i-1})^2 + (1 - x_{2i-1})^2]^4` over consecutive pairs.
pub fn fn213_mean(x: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() % 2 != 0 {
        return invalid(format!("fn213 needs an even dimension, got {}", x.len()));
    }
    Ok(fn213_unchecked(x))
}

fn fn213_unchecked(x: &[f64]) -> f64 {
    x.chunks_exact(2)
        .map(|pair| {
            let (odd, even) = (pair[0], pair[1]);
            let t = 10.0 * (even - odd).powi(2) + (1.0 - odd).powi(2);
            let t2 = t * t;
            t2 * t2
        })
        .sum()
}

type MeanClosure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum MeanFn {
    Quartic,
    Cos100,
    Fn213,
    Sphere,
    Custom(MeanClosure),
}

impl MeanFn {
    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MeanFn::Quartic => x.iter().map(|v| v.powi(4)).sum(),
            MeanFn::Cos100 => x
                .iter()
                .map(|v| -100.0 * (std::f64::consts::PI * v / 100.0).cos())
                .sum(),
            MeanFn::Fn213 => fn213_unchecked(x),
            MeanFn::Sphere => x.iter().map(|v| v * v).sum(),
            MeanFn::Custom(f) => f(x),
        }
    }
}

/// A deterministic mean response together with its known minimizer.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    dimension: usize,
    mean: MeanFn,
    optimum_point: Vec<f64>,
    optimum_value: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("optimum_value", &self.optimum_value)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    /// Ids accepted by [`TestFunction::from_id`].
    pub const IDS: [&'static str; 4] = ["quartic", "cos100", "fn213", "sphere"];

    /// `mu(x) = x^4` (summed over coordinates when `dimension > 1`).
    pub fn quartic(dimension: usize) -> Self {
        Self::builtin("quartic", dimension, MeanFn::Quartic, 0.0, 0.0)
    }

    /// `mu(x) = -100 cos(pi x / 100)`, minimum -100 at the origin.
    pub fn cos100(dimension: usize) -> Self {
        Self::builtin(
            "cos100",
            dimension,
            MeanFn::Cos100,
            0.0,
            -100.0 * dimension as f64,
        )
    }

    pub fn fn213(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension % 2 != 0 {
            return invalid(format!("fn213 needs an even dimension, got {dimension}"));
        }
        Ok(Self::builtin("fn213", dimension, MeanFn::Fn213, 1.0, 0.0))
    }

    pub fn sphere(dimension: usize) -> Self {
        Self::builtin("sphere", dimension, MeanFn::Sphere, 0.0, 0.0)
    }

    pub fn from_id(id: &str, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return invalid("dimension must be at least 1");
        }
        match id {
            "quartic" => Ok(Self::quartic(dimension)),
            "cos100" => Ok(Self::cos100(dimension)),
            "fn213" => Self::fn213(dimension),
            "sphere" => Ok(Self::sphere(dimension)),
            other => Err(Error::InvalidArgument(format!(
                "unknown test function '{other}' (expected one of {:?})",
                Self::IDS
            ))),
        }
    }

    /// Wraps an arbitrary mean response. `optimum_value` must equal `f(optimum_point)`.
    pub fn custom<F>(
        name: impl Into<String>,
        optimum_point: Vec<f64>,
        optimum_value: f64,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if optimum_point.is_empty() {
            return invalid("custom function needs a non-empty optimum point");
        }
        Ok(Self {
            name: name.into(),
            dimension: optimum_point.len(),
            mean: MeanFn::Custom(Arc::new(f)),
            optimum_point,
            optimum_value,
        })
    }

    fn builtin(name: &str, dimension: usize, mean: MeanFn, opt: f64, optimum_value: f64) -> Self {
        Self {
            name: name.to_string(),
            dimension,
            mean,
            optimum_point: vec![opt; dimension],
            optimum_value,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn optimum_point(&self) -> &[f64] {
        &self.optimum_point
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// Noiseless mean response. Panics in debug builds on a dimension mismatch.
    pub fn mean(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        self.mean.eval(x)
    }
}

/// Mixes a list of words into one 64-bit seed (SplitMix64 finalizer chained over the parts).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        state = splitmix(state ^ splitmix(p));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded ChaCha stream; `stream` separates independent consumers sharing a seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Y(x) = mu(x) + sigma * Z` with homoscedastic Gaussian noise and an exact call counter.
///
/// Single-threaded: the counter and noise stream are mutable state. Build one
/// oracle per replication.
#[derive(Clone, Debug)]
pub struct NoisyOracle {
    function: TestFunction,
    sigma: f64,
    evaluations: u64,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn new(function: TestFunction, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid(format!("noise sigma must be finite and >= 0, got {sigma}"));
        }
        Ok(Self {
            function,
            sigma,
            evaluations: 0,
            rng: seeded_rng(seed, 0),
        })
    }

    /// One noisy evaluation. Increments the evaluation counter by exactly one.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.function.dimension {
            return invalid(format!(
                "oracle '{}' has dimension {} but got a point of dimension {}",
                self.function.name,
                self.function.dimension,
                x.len()
            ));
        }
        self.evaluations += 1;
        let mu = self.function.mean.eval(x);
        if self.sigma == 0.0 {
            return Ok(mu);
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Ok(mu + self.sigma * z)
    }

    /// Noiseless mean for metrics only. Does not consume budget or randomness.
    pub fn true_mean(&self, x: &[f64]) -> f64 {
        self.function.mean.eval(x)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn dimension(&self) -> usize {
        self.function.dimension
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn function(&self) -> &TestFunction {
        &self.function
    }
}
