//! Goodness-of-fit tests at the 1% level and Monte Carlo helpers.

use serde::Serialize;

/// Asymptotic Kolmogorov distribution quantile at the 1% level.
pub const KS_ONE_PERCENT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

/// One-sample KS test of `sample` against `cdf`, with Stephens' small-sample
/// correction of the critical value.
pub fn ks_one_sample(sample: &[f64], mut cdf: impl FnMut(f64) -> f64) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    let critical = KS_ONE_PERCENT / (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    KsResult {
        statistic,
        critical,
        passed: statistic <= critical,
    }
}

/// One-sample KS where the CDF is supplied at the sorted sample points.
pub fn ks_from_sorted_cdf(cdf_at_sorted: &[f64]) -> KsResult {
    let n = cdf_at_sorted.len() as f64;
    let statistic = cdf_at_sorted.iter().enumerate().fold(0.0f64, |d, (i, &f)| {
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    let critical = KS_ONE_PERCENT / (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    KsResult {
        statistic,
        critical,
        passed: statistic <= critical,
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (n, m) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut statistic = 0.0f64;
    while i < n && j < m {
        let x = xa[i].min(xb[j]);
        while i < n && xa[i] <= x {
            i += 1;
        }
        while j < m && xb[j] <= x {
            j += 1;
        }
        statistic = statistic.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical = KS_ONE_PERCENT * ((nf + mf) / (nf * mf)).sqrt();
    KsResult {
        statistic,
        critical,
        passed: statistic <= critical,
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_passes_and_shifted_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).passed);
        assert!(!ks_one_sample(&u, |x| (x - 0.1).clamp(0.0, 1.0)).passed);
        let v: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(ks_two_sample(&u, &v).passed);
        let w: Vec<f64> = v.iter().map(|x| x * 1.2).collect();
        assert!(!ks_two_sample(&u, &w).passed);
    }

    #[test]
    fn two_sample_statistic_of_disjoint_samples_is_one() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).statistic, 1.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).statistic, 0.0);
    }
}
