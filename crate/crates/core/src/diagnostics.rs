//! Output analysis: batch-means Monte Carlo standard errors, effective sample
//! size and posterior summaries.
//!
//! Batch means use `⌊√T⌋` batches of equal size. When `T` is not a multiple
//! of the batch size the remainder is dropped from the front of the chain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::DrawMatrix;

/// Reported with every summary; the CLT behind the standard errors also needs
/// finite posterior second moments, which is not checked.
pub const MOMENT_CAVEAT: &str =
    "Monte Carlo standard errors assume a CLT, which additionally requires finite posterior second moments; this is not verified";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    /// The chain (or its batch means) has zero variance.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchMeans {
    pub se: f64,
    pub batches: usize,
    pub batch_size: usize,
    /// `batch_size · var(batch means)`, the asymptotic-variance estimate.
    pub asymptotic_variance: f64,
    pub warning: Option<Warning>,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn default_batches(len: usize) -> usize {
    ((len as f64).sqrt().floor() as usize).max(1)
}

/// Batch-means standard error of the chain mean.
pub fn batch_means_se(chain: &[f64], batches: usize) -> Result<BatchMeans> {
    if batches < 2 {
        return Err(Error::validation("batch means needs at least 2 batches"));
    }
    if chain.len() < 2 * batches {
        return Err(Error::validation(format!(
            "batch means with {batches} batches needs at least {} draws, got {}",
            2 * batches,
            chain.len()
        )));
    }
    let batch_size = chain.len() / batches;
    let used = &chain[chain.len() - batch_size * batches..];
    let means: Vec<f64> = used
        .chunks_exact(batch_size)
        .map(|b| b.iter().sum::<f64>() / batch_size as f64)
        .collect();
    let var = sample_variance(&means);
    let warning = (var == 0.0).then_some(Warning::Flat);
    Ok(BatchMeans {
        se: (var / batches as f64).sqrt(),
        batches,
        batch_size,
        asymptotic_variance: batch_size as f64 * var,
        warning,
    })
}

/// [`batch_means_se`] with `⌊√T⌋` batches.
pub fn batch_means_se_default(chain: &[f64]) -> Result<BatchMeans> {
    batch_means_se(chain, default_batches(chain.len()))
}

/// `T · var / σ²_BM`, clamped to `(0, T]`.
pub fn effective_sample_size(chain: &[f64]) -> Result<f64> {
    let t = chain.len();
    if t < 10 {
        return Err(Error::validation(format!(
            "effective sample size needs at least 10 draws, got {t}"
        )));
    }
    let var = sample_variance(chain);
    let bm = batch_means_se_default(chain)?;
    if var == 0.0 || bm.asymptotic_variance == 0.0 {
        return Ok(t as f64);
    }
    Ok((t as f64 * var / bm.asymptotic_variance).clamp(f64::MIN_POSITIVE, t as f64))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub mcse: f64,
    pub ess: f64,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub draws: usize,
    pub parameters: Vec<ParameterSummary>,
    pub caveat: String,
}

impl SummaryTable {
    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Posterior summary of every column.
///
/// Means and standard deviations are accumulated over sorted values, so they
/// do not depend on row order; the MCSE and ESS do.
pub fn summarize(draws: &DrawMatrix) -> Result<SummaryTable> {
    let t = draws.nrows();
    if t < 10 {
        return Err(Error::validation(format!("summary needs at least 10 draws, got {t}")));
    }
    let parameters = draws
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let chain = draws.column(j);
            let mut sorted = chain.clone();
            sorted.sort_by(f64::total_cmp);
            let mean = sorted.iter().sum::<f64>() / t as f64;
            let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64).sqrt();
            let bm = batch_means_se_default(&chain)?;
            let mut warnings = Vec::new();
            if sd == 0.0 || bm.warning.is_some() {
                warnings.push(Warning::Flat);
            }
            Ok(ParameterSummary {
                name: name.clone(),
                mean,
                sd,
                mcse: bm.se,
                ess: effective_sample_size(&chain)?,
                q025: quantile(&sorted, 0.025),
                q500: quantile(&sorted, 0.5),
                q975: quantile(&sorted, 0.975),
                warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SummaryTable {
        draws: t,
        parameters,
        caveat: MOMENT_CAVEAT.to_string(),
    })
}
