//! Seeded corruption of normalized capacity sequences with four noise
//! families, plus the matching density/mass functions.
//!
//! Sampling uses ChaCha8 so the same spec replays bit-identically on every
//! platform. The noise `level` maps to distribution parameters as follows:
//! Gaussian σ = level (μ = 0), speckle exponential scale = level, Poisson
//! additive amplitude = level (mean-centered counts), uniform bounds
//! ±level. This mapping is echoed into every run config the CLI writes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFamily {
    Gaussian,
    Speckle,
    Poisson,
    Uniform,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] =
        [NoiseFamily::Gaussian, NoiseFamily::Speckle, NoiseFamily::Poisson, NoiseFamily::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Speckle => "speckle",
            NoiseFamily::Poisson => "poisson",
            NoiseFamily::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "speckle" => Ok(NoiseFamily::Speckle),
            "poisson" => Ok(NoiseFamily::Poisson),
            "uniform" => Ok(NoiseFamily::Uniform),
            other => Err(Error::config(format!("unknown noise family `{other}`"))),
        }
    }
}

/// One noise family with its distribution parameters, intensity level, and
/// RNG seed. Only the fields of the active family are consulted.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Gaussian mean (pdf only; corruption always uses μ = 0).
    #[serde(default)]
    pub mu: f64,
    /// Gaussian standard deviation.
    #[serde(default)]
    pub sigma: f64,
    /// Speckle intensity (exponential scale).
    #[serde(default = "one")]
    pub gamma: f64,
    /// Poisson mean.
    #[serde(default = "one")]
    pub lambda_: f64,
    /// Uniform lower bound.
    #[serde(default)]
    pub a: f64,
    /// Uniform upper bound.
    #[serde(default)]
    pub b: f64,
    pub level: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

pub const PAPER_NOISE_LEVELS: [f64; 3] = [0.001, 0.01, 0.05];

impl NoiseSpec {
    /// Spec with distribution parameters derived from the intensity level.
    pub fn from_level(family: NoiseFamily, level: f64, seed: u64) -> Self {
        NoiseSpec {
            family,
            mu: 0.0,
            sigma: level,
            gamma: if level > 0.0 { level } else { 1.0 },
            lambda_: 1.0,
            a: -level,
            b: level,
            level,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 {
            return Err(Error::config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.lambda_ < 0.0 {
            return Err(Error::config(format!("lambda must be >= 0, got {}", self.lambda_)));
        }
        if self.a > self.b {
            return Err(Error::config(format!("uniform bounds need a <= b, got {} > {}", self.a, self.b)));
        }
        if self.level < 0.0 || !self.level.is_finite() {
            return Err(Error::config(format!("level must be finite and >= 0, got {}", self.level)));
        }
        if !PAPER_NOISE_LEVELS.contains(&self.level) && self.level != 0.0 {
            log::warn!("noise level {} outside the standard set {:?}", self.level, PAPER_NOISE_LEVELS);
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Corrupt `x` elementwise. Pure in `(x, spec)` including the seed.
pub fn corrupt(x: &[f64], spec: &NoiseSpec) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::contract("corrupt: empty input"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("corrupt: non-finite input"));
    }
    spec.validate()?;
    let level = spec.level;
    let mut rng = spec.rng();
    let out = match spec.family {
        NoiseFamily::Gaussian => {
            if level == 0.0 {
                x.to_vec()
            } else {
                let dist = Normal::new(0.0, level).expect("level validated");
                x.iter().map(|v| v + dist.sample(&mut rng)).collect()
            }
        }
        NoiseFamily::Speckle => {
            if level == 0.0 {
                x.to_vec()
            } else {
                // multiplicative: x * (1 + s), s ~ Exp with scale `level`
                let dist = Exp::new(1.0 / level).expect("level validated");
                x.iter().map(|v| v * (1.0 + dist.sample(&mut rng))).collect()
            }
        }
        NoiseFamily::Poisson => {
            if level == 0.0 || spec.lambda_ == 0.0 {
                x.to_vec()
            } else {
                // mean-centered counts so `level` governs the amplitude
                let dist = Poisson::new(spec.lambda_).expect("lambda validated");
                let denom = spec.lambda_.max(1.0);
                x.iter()
                    .map(|v| v + level * (dist.sample(&mut rng) - spec.lambda_) / denom)
                    .collect()
            }
        }
        NoiseFamily::Uniform => {
            if spec.a == spec.b {
                x.iter().map(|v| v + spec.a).collect()
            } else {
                let dist = Uniform::new_inclusive(spec.a, spec.b);
                x.iter().map(|v| v + dist.sample(&mut rng)).collect()
            }
        }
    };
    Ok(out)
}

/// Density (Gaussian/speckle/uniform) or mass (Poisson) at `x`.
pub fn pdf(spec: &NoiseSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    match spec.family {
        NoiseFamily::Gaussian => {
            if spec.sigma <= 0.0 {
                return Err(Error::config("gaussian pdf needs sigma > 0"));
            }
            let z = (x - spec.mu) / spec.sigma;
            Ok((-0.5 * z * z).exp() / (spec.sigma * (2.0 * std::f64::consts::PI).sqrt()))
        }
        NoiseFamily::Speckle => {
            // f(x; γ) = γ⁻² e^{-x/γ} on x >= 0
            if x < 0.0 {
                Ok(0.0)
            } else {
                Ok((-x / spec.gamma).exp() / (spec.gamma * spec.gamma))
            }
        }
        NoiseFamily::Poisson => {
            if x < 0.0 || x.fract() != 0.0 {
                return Err(Error::contract(format!("poisson pmf needs a nonnegative integer, got {x}")));
            }
            let k = x as u64;
            // e^{-λ} λ^k / k!, accumulated in log space for large k
            let mut log_p = -spec.lambda_;
            for i in 1..=k {
                log_p += spec.lambda_.ln() - (i as f64).ln();
            }
            Ok(if spec.lambda_ == 0.0 {
                if k == 0 { 1.0 } else { 0.0 }
            } else {
                log_p.exp()
            })
        }
        NoiseFamily::Uniform => {
            if spec.a == spec.b {
                return Err(Error::config("uniform pdf undefined for a == b"));
            }
            Ok(if x >= spec.a && x <= spec.b { 1.0 / (spec.b - spec.a) } else { 0.0 })
        }
    }
}
