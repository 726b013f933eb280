//! Pólya-Gamma distributions PG(b, c) with integer shape `b`.
//!
//! Exact sampling uses the alternating-series rejection method for the
//! Jacobi-type variable J*(1, z): a truncated inverse-Gaussian proposal on
//! `(0, 0.64]` mixed with an exponential tail on `(0.64, ∞)`. PG(1, c) is
//! J*(1, c/2)/4 and PG(b, c) is the sum of `b` independent PG(1, c) draws, so
//! the cost of one draw is O(b).

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Number of series terms used when the caller does not choose.
pub const DEFAULT_TERMS: usize = 200;

/// Cutover between the inverse-Gaussian and exponential proposal pieces.
const CUTOVER: f64 = 0.64;

/// Parameters of PG(b, c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgParams {
    b: u32,
    c: f64,
}

impl PgParams {
    /// `b ≥ 1`, `c ≥ 0` and finite.
    pub fn new(b: u32, c: f64) -> Result<Self> {
        if b == 0 {
            return Err(Error::validation("PG shape b must be at least 1"));
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::validation(format!(
                "PG tilt c must be finite and nonnegative, got {c}"
            )));
        }
        Ok(Self { b, c })
    }

    /// Accepts any finite real tilt and folds it by absolute value.
    pub fn folded(b: u32, c: f64) -> Result<Self> {
        Self::new(b, c.abs())
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// E[ω] = b/(2c) · tanh(c/2), or b/4 at c = 0.
    pub fn mean(&self) -> f64 {
        let b = self.b as f64;
        if self.c < 1e-8 {
            // tanh(c/2)/(2c) = 1/4 - c²/48 + O(c⁴)
            b * (0.25 - self.c * self.c / 48.0)
        } else {
            b * (0.5 * self.c).tanh() / (2.0 * self.c)
        }
    }
}

/// A truncated series value with a rigorous bound on |value − exact|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
}

/// ln cosh(x), stable for large |x|.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Density of PG(b, 0) at `x`, truncated after `terms` series terms.
///
/// The series alternates and its terms are eventually decreasing, so once the
/// ratio of consecutive terms drops below one the first omitted term bounds
/// the remainder. If that has not happened by `terms`, the bound is unusable
/// and an error is returned instead of a value.
pub fn pg0_density(x: f64, b: u32, terms: usize) -> Result<SeriesValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::validation(format!(
            "PG density requires x > 0, got {x}"
        )));
    }
    if b == 0 {
        return Err(Error::validation("PG shape b must be at least 1"));
    }
    if terms < 2 {
        return Err(Error::validation("PG density needs at least 2 series terms"));
    }
    let bf = b as f64;
    let prefix = (bf - 1.0) * LN_2 - ln_gamma(bf) - 0.5 * (2.0 * PI).ln() - 1.5 * x.ln();
    let term = |n: usize| -> f64 {
        let nf = n as f64;
        let k = 2.0 * nf + bf;
        let log_coef = ln_gamma(nf + bf) - ln_gamma(nf + 1.0) + k.ln();
        (prefix + log_coef - k * k / (8.0 * x)).exp()
    };
    // Ratio term(n+1)/term(n); nonincreasing in n for b ≥ 1.
    let ratio = |n: usize| -> f64 {
        let nf = n as f64;
        (nf + bf) / (nf + 1.0) * (2.0 * nf + 2.0 + bf) / (2.0 * nf + bf)
            * (-(2.0 * nf + bf + 1.0) / (2.0 * x)).exp()
    };

    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut used = terms;
    for n in 0..terms {
        let t = term(n);
        if t == 0.0 && n > 0 && ratio(n - 1) <= 1.0 {
            // Everything from here on underflows.
            used = n;
            break;
        }
        abs_sum += t;
        if n % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    let truncation = if used < terms {
        f64::MIN_POSITIVE
    } else if ratio(terms) <= 1.0 {
        term(terms)
    } else {
        return Err(Error::numeric(format!(
            "PG({b},0) density at x = {x}: {terms} terms are not enough for a usable error bound"
        )));
    };
    let rounding = 2.0 * used as f64 * f64::EPSILON * abs_sum;
    Ok(SeriesValue {
        value: sum.max(0.0),
        error_bound: truncation + rounding,
    })
}

/// Density of PG(b, c) by exponential tilting of PG(b, 0):
/// `cosh^b(c/2) · exp(−c²x/2) · f(x | b, 0)`.
pub fn pg_density(x: f64, p: PgParams, terms: usize) -> Result<SeriesValue> {
    let base = pg0_density(x, p.b, terms)?;
    let scale = (p.b as f64 * ln_cosh(0.5 * p.c) - 0.5 * p.c * p.c * x).exp();
    Ok(SeriesValue {
        value: base.value * scale,
        error_bound: base.error_bound * scale,
    })
}

/// Laplace transform of PG(b, 0) in the form E[exp(−ω z²/2)] = cosh^{−b}(z/2).
pub fn pg_laplace(b: u32, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::validation(format!(
            "PG Laplace transform requires finite z >= 0, got {z}"
        )));
    }
    Ok((-(b as f64) * ln_cosh(0.5 * z)).exp())
}

/// One exact draw from PG(b, c).
pub fn pg_sample<R: Rng + ?Sized>(p: PgParams, rng: &mut R) -> f64 {
    let z = 0.5 * p.c;
    (0..p.b).map(|_| 0.25 * sample_jstar(z, rng)).sum()
}

/// One exact draw from PG(1, c) for any real `c` (folded by absolute value).
pub fn pg1_sample<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    0.25 * sample_jstar(0.5 * c.abs(), rng)
}

fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Probability that the proposal comes from the exponential tail piece.
fn exponential_piece_mass(z: f64) -> f64 {
    let t = CUTOVER;
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let root = (1.0 / t).sqrt();
    let lo = root * (t * z - 1.0);
    let hi = -root * (t * z + 1.0);
    let x0 = k.ln() + k * t;
    let xb = x0 - z + ln_norm_cdf(lo);
    let xa = x0 + z + ln_norm_cdf(hi);
    let q_over_p = 2.0 * FRAC_2_PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// n-th coefficient of the piecewise alternating series for J*(1, 0).
fn series_coef(n: u32, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > CUTOVER {
        k * (-0.5 * k * k * x).exp()
    } else {
        let h = n as f64 + 0.5;
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    }
}

/// Inverse Gaussian IG(1/z, 1) restricted to `(0, CUTOVER)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = CUTOVER;
    if z < 1.0 / t {
        // Mean above the cutover: truncated Lévy proposal, tilted by exp(−z²x/2).
        loop {
            let (mut e1, mut e2): (f64, f64) = (Exp1.sample(rng), Exp1.sample(rng));
            while e1 * e1 > 2.0 * e2 / t {
                e1 = Exp1.sample(rng);
                e2 = Exp1.sample(rng);
            }
            let s = 1.0 + e1 * t;
            let x = t / (s * s);
            let accept = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= accept {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let n: f64 = StandardNormal.sample(rng);
            let mu_y = mu * n * n;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// Exact draw from J*(1, z), z ≥ 0.
fn sample_jstar<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let tail_mass = exponential_piece_mass(z);
    loop {
        let x = if rng.random::<f64>() < tail_mass {
            let e: f64 = Exp1.sample(rng);
            CUTOVER + e / k
        } else {
            truncated_inverse_gaussian(z, rng)
        };
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0u32;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return x;
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}
