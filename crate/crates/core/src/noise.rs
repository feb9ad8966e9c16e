//! Seeded disturbance processes and the exploratory input generator.
//!
//! All randomness comes from `ChaCha8Rng`. A run draws from independent
//! ChaCha streams keyed by `(master_seed, run_id, purpose)`, so a stream's
//! contents never depend on how many runs exist or in which order they
//! execute. Every controller in a run sees the same disturbance sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Truncation point, in standard deviations, for the truncated Gaussian
/// presets and the bound proxy of unbounded kinds.
pub const TRUNCATION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    BoundedUniform,
    TruncatedGaussian,
    Gaussian,
    RandomWalkGaussian,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] =
        [NoiseKind::BoundedUniform, NoiseKind::TruncatedGaussian, NoiseKind::Gaussian, NoiseKind::RandomWalkGaussian];
}

/// Disturbance law. `bound` is the almost-sure bound for the bounded kinds and
/// the design bound `B_w` handed to the hyper-parameter solver otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub bound: f64,
}

impl NoiseModel {
    /// Uniform on `[-bound, bound]`.
    pub fn bounded_uniform(bound: f64) -> Self {
        Self { kind: NoiseKind::BoundedUniform, sigma: bound / 3f64.sqrt(), bound }
    }

    pub fn truncated_gaussian(sigma: f64, bound: f64) -> Self {
        Self { kind: NoiseKind::TruncatedGaussian, sigma, bound }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self { kind: NoiseKind::Gaussian, sigma, bound: TRUNCATION_SIGMAS * sigma }
    }

    pub fn random_walk(sigma: f64) -> Self {
        Self { kind: NoiseKind::RandomWalkGaussian, sigma, bound: TRUNCATION_SIGMAS * sigma }
    }

    /// Builds a model with the default bound rule for the kind (`3 sigma`
    /// except for the uniform law, whose bound is `sqrt(3) sigma`).
    pub fn with_default_bound(kind: NoiseKind, sigma: f64) -> Self {
        match kind {
            NoiseKind::BoundedUniform => Self::bounded_uniform(3f64.sqrt() * sigma),
            NoiseKind::TruncatedGaussian => Self::truncated_gaussian(sigma, TRUNCATION_SIGMAS * sigma),
            NoiseKind::Gaussian => Self::gaussian(sigma),
            NoiseKind::RandomWalkGaussian => Self::random_walk(sigma),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, NoiseKind::BoundedUniform | NoiseKind::TruncatedGaussian)
    }

    /// Horizon-dependent high-probability bound `sigma sqrt(log(T / delta))`.
    pub fn sub_gaussian_bound(&self, horizon: usize, delta_conf: f64) -> f64 {
        self.sigma * (horizon as f64 / delta_conf).ln().max(0.0).sqrt()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(format!("noise sigma must be positive, got {}", self.sigma));
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(format!("noise bound must be positive, got {}", self.bound));
        }
        Ok(())
    }

    pub fn stream(&self, rng: ChaCha8Rng) -> NoiseStream {
        NoiseStream { model: *self, rng, level: 0.0 }
    }
}

/// Sequential sampler for one run.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    model: NoiseModel,
    rng: ChaCha8Rng,
    level: f64,
}

impl NoiseStream {
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn sample(&mut self) -> f64 {
        let m = self.model;
        match m.kind {
            NoiseKind::BoundedUniform => self.rng.gen_range(-m.bound..=m.bound),
            NoiseKind::TruncatedGaussian => {
                let normal = Normal::new(0.0, m.sigma).expect("sigma validated");
                loop {
                    let w: f64 = normal.sample(&mut self.rng);
                    if w.abs() <= m.bound {
                        break w;
                    }
                }
            }
            NoiseKind::Gaussian => Normal::new(0.0, m.sigma).expect("sigma validated").sample(&mut self.rng),
            NoiseKind::RandomWalkGaussian => {
                let step: f64 = Normal::new(0.0, m.sigma).expect("sigma validated").sample(&mut self.rng);
                self.level += step;
                self.level
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationDistribution {
    /// `Uniform(-bound, bound)`, variance `bound^2 / 3`.
    #[default]
    Uniform,
    /// `+-bound` with equal probability, variance `bound^2`.
    Rademacher,
}

impl ExplorationDistribution {
    /// Variance `sigma_e^2` of one probing input drawn with `bound`.
    pub fn variance(self, bound: f64) -> f64 {
        match self {
            ExplorationDistribution::Uniform => bound * bound / 3.0,
            ExplorationDistribution::Rademacher => bound * bound,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, bound: f64, rng: &mut R) -> f64 {
        match self {
            ExplorationDistribution::Uniform => rng.gen_range(-bound..=bound),
            ExplorationDistribution::Rademacher => {
                if rng.gen::<bool>() {
                    bound
                } else {
                    -bound
                }
            }
        }
    }
}

/// White-noise probing input source with its own random stream.
#[derive(Debug, Clone)]
pub struct ExplorationInput {
    distribution: ExplorationDistribution,
    rng: ChaCha8Rng,
}

impl ExplorationInput {
    pub fn new(distribution: ExplorationDistribution, rng: ChaCha8Rng) -> Self {
        Self { distribution, rng }
    }

    pub fn distribution(&self) -> ExplorationDistribution {
        self.distribution
    }

    pub fn sample(&mut self, bound: f64) -> f64 {
        self.distribution.sample(bound, &mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Disturbance = 0,
    Exploration = 1,
}

/// Derives independent per-run streams from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn rng(&self, run_id: u64, purpose: StreamPurpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(run_id.wrapping_mul(2).wrapping_add(purpose as u64));
        rng
    }
}
