//! Correctness battery for the Pólya-Gamma sampler, shared by the
//! `pg-selftest` command and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::stats::{ks_from_sorted_cdf, mean_se};
use crate::pg::{pg0_density, pg_laplace, pg_sample, PgParams, DEFAULT_TERMS};
use crate::quad::integrate;
use crate::rng::mix64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub seed: u64,
    pub checks: Vec<SelfTestCheck>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn rng_for(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(k)))
}

fn draws(p: PgParams, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..count).map(|_| pg_sample(p, rng)).collect()
}

/// CDF of PG(1, 0) at each sorted point, by integrating the series density
/// between consecutive points.
fn pg1_cdf_at_sorted(sorted: &[f64]) -> Vec<f64> {
    let dens = |x: f64| pg0_density(x, 1, DEFAULT_TERMS).map(|s| s.value).unwrap_or(0.0);
    let mut acc = 0.0;
    let mut prev = 1e-4;
    sorted
        .iter()
        .map(|&x| {
            if x > prev {
                acc += integrate(dens, prev, x, 1e-12).value;
                prev = x;
            }
            acc
        })
        .collect()
}

/// Runs the battery with `count` draws per Monte Carlo check and
/// `ks_count` draws for the distributional check.
pub fn pg_selftest(seed: u64, count: usize, ks_count: usize) -> SelfTestReport {
    let mut checks = Vec::new();
    let pg10 = PgParams::new(1, 0.0).expect("valid");

    let x = draws(pg10, count, &mut rng_for(seed, 0));
    let (m, se) = mean_se(&x);
    checks.push(SelfTestCheck {
        name: "PG(1,0) mean".into(),
        passed: (m - 0.25).abs() <= 3.0 * se,
        detail: format!("mean {m:.6} vs 0.25 (se {se:.2e}, {count} draws)"),
    });

    let mut params = rng_for(seed, 1);
    for k in 0..5 {
        let b = params.random_range(1..=5u32);
        let z = params.random_range(0.05..=3.0f64);
        let x = draws(PgParams::new(b, 0.0).expect("valid"), count, &mut rng_for(seed, 10 + k));
        let t: Vec<f64> = x.iter().map(|w| (-w * z * z / 2.0).exp()).collect();
        let (m, se) = mean_se(&t);
        let exact = pg_laplace(b, z).expect("finite");
        checks.push(SelfTestCheck {
            name: format!("Laplace transform b={b} z={z:.3}"),
            passed: (m - exact).abs() <= 3.0 * se,
            detail: format!("E exp(-w z^2/2) = {m:.6} vs cosh^-b(z/2) = {exact:.6} (se {se:.2e})"),
        });
    }

    let tilted = PgParams::new(2, 1.5).expect("valid");
    let x = draws(tilted, count, &mut rng_for(seed, 2));
    let (m, se) = mean_se(&x);
    checks.push(SelfTestCheck {
        name: "PG(2,1.5) mean".into(),
        passed: (m - tilted.mean()).abs() <= 3.0 * se,
        detail: format!("mean {m:.6} vs {:.6} (se {se:.2e})", tilted.mean()),
    });

    let mut x = draws(pg10, ks_count, &mut rng_for(seed, 3));
    x.sort_by(f64::total_cmp);
    let ks = ks_from_sorted_cdf(&pg1_cdf_at_sorted(&x));
    checks.push(SelfTestCheck {
        name: "PG(1,0) KS vs series density".into(),
        passed: ks.passed,
        detail: format!("D = {:.5}, 1% critical {:.5} ({ks_count} draws)", ks.statistic, ks.critical),
    });

    SelfTestReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reaches_one() {
        let last = pg1_cdf_at_sorted(&[0.1, 0.25, 0.5, 8.0]);
        assert!((last[3] - 1.0).abs() < 1e-9, "{last:?}");
        assert!(last.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_battery_passes() {
        let r = pg_selftest(7, 20_000, 2000);
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.checks.len(), 8);
    }
}
