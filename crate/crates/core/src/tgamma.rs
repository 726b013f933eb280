//! Gamma distribution truncated to `[lower, ∞)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use statrs::function::gamma::checked_gamma_ur;

use crate::error::{Error, Result};

/// Below this untruncated tail mass the shifted-exponential sampler is used.
const NAIVE_MASS_THRESHOLD: f64 = 0.1;

/// Gamma(shape, rate) conditioned on `x ≥ lower`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGamma {
    shape: f64,
    rate: f64,
    lower: f64,
    tail_mass: f64,
}

impl TruncatedGamma {
    pub fn new(shape: f64, rate: f64, lower: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::validation(format!("gamma shape must be positive, got {shape}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::validation(format!("gamma rate must be positive, got {rate}")));
        }
        if !(lower > 0.0 && lower.is_finite()) {
            return Err(Error::validation(format!("truncation point must be positive, got {lower}")));
        }
        let tail_mass = checked_gamma_ur(shape, rate * lower)
            .map_err(|e| Error::numeric(format!("incomplete gamma failed: {e}")))?;
        Ok(Self {
            shape,
            rate,
            lower,
            tail_mass,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// P(X ≥ lower) for the untruncated Gamma.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn uses_tail_sampler(&self) -> bool {
        self.tail_mass < NAIVE_MASS_THRESHOLD
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.uses_tail_sampler() {
            self.sample_tail(rng) / self.rate
        } else {
            let g = Gamma::new(self.shape, 1.0 / self.rate).expect("validated parameters");
            loop {
                let x = g.sample(rng);
                if x >= self.lower {
                    return x;
                }
            }
        }
    }

    /// Rejection from `s + Exp(λ)` on the standardized scale `y = rate·x ≥ s`,
    /// target density ∝ `y^(α−1) e^(−y)`.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let alpha = self.shape;
        let s = self.rate * self.lower;
        let lambda = if alpha <= 1.0 {
            1.0
        } else {
            (s - alpha + ((s - alpha).powi(2) + 4.0 * s).sqrt()) / (2.0 * s)
        };
        let log_ratio = |y: f64| (alpha - 1.0) * y.ln() - (1.0 - lambda) * y;
        let mode = if alpha > 1.0 {
            ((alpha - 1.0) / (1.0 - lambda)).max(s)
        } else {
            s
        };
        let peak = log_ratio(mode);
        loop {
            let e: f64 = Exp1.sample(rng);
            let y = s + e / lambda;
            let u: f64 = rng.random();
            if u.ln() <= log_ratio(y) - peak {
                return y;
            }
        }
    }
}
