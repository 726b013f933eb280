//! Browser bindings: Pólya-Gamma density and sampler, the ergodicity
//! planner, and a short Gibbs trace on a tiny model.
//!
//! Every export has a plain-Rust twin in [`native`] so the logic is testable
//! off the browser.

use wasm_bindgen::prelude::*;

pub mod native {
    use nalgebra::{DMatrix, DVector};
    use pgglmm::ergodicity::{delta_lower_bound, iterations_for_log, log_tv_bound};
    use pgglmm::gibbs::{initial_state, sample_chain, SamplerConfig};
    use pgglmm::model::{assemble_workspace, Dataset, GroupStructure, Priors};
    use pgglmm::pg::{pg_density, pg_sample, PgParams, DEFAULT_TERMS};
    use pgglmm::Result;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Density of PG(b, c) at `points` evenly spaced x in (0, xmax].
    pub fn pg_curve(b: u32, c: f64, xmax: f64, points: usize) -> Result<Vec<f64>> {
        let p = PgParams::folded(b, c)?;
        (1..=points)
            .map(|k| pg_density(xmax * k as f64 / points as f64, p, DEFAULT_TERMS).map(|v| v.value))
            .collect()
    }

    /// Histogram of `draws` samples on `bins` equal cells of (0, xmax],
    /// scaled to a density.
    pub fn pg_histogram(b: u32, c: f64, draws: usize, bins: usize, xmax: f64, seed: u64) -> Result<Vec<f64>> {
        let p = PgParams::folded(b, c)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0.0; bins];
        let width = xmax / bins as f64;
        for _ in 0..draws {
            let k = (pg_sample(p, &mut rng) / width) as usize;
            if k < bins {
                counts[k] += 1.0;
            }
        }
        Ok(counts.into_iter().map(|c| c / (draws as f64 * width)).collect())
    }

    /// Toy data for the planner: `rows` observations of `trials` each, an
    /// evenly spread covariate and a single random intercept.
    fn planner_model(rows: usize, trials: u32, precision: f64, a: f64, b: f64, tau0: f64) -> Result<(Dataset, GroupStructure, Priors)> {
        let x = DMatrix::from_fn(rows, 1, |i, _| (i as f64 + 0.5) / rows as f64 - 0.5);
        let y: Vec<u32> = (0..rows).map(|i| ((i as u32 * 7) % (trials + 1)).min(trials)).collect();
        let d = Dataset::new(y, vec![trials; rows], x, DMatrix::from_element(rows, 1, 1.0))?;
        let g = GroupStructure::new(vec![1])?;
        let pr = Priors::new(DMatrix::from_element(1, 1, precision), DVector::zeros(1), vec![a], vec![b], tau0)?;
        Ok((d, g, pr))
    }

    /// `[log δ, log10 m*(0.1), log10 m*(0.01), log10 m*(0.001), log TV(0), …,
    /// log TV(curve)]`.
    #[allow(clippy::too_many_arguments)]
    pub fn plan(rows: usize, trials: u32, precision: f64, a: f64, b: f64, tau0: f64, curve: u64) -> Result<Vec<f64>> {
        let (d, g, pr) = planner_model(rows, trials, precision, a, b, tau0)?;
        let ws = assemble_workspace(&d, &g, &pr)?;
        let report = delta_lower_bound(&ws, &pr)?;
        let ld = report.log_delta();
        let mut out = vec![ld];
        for eps in [0.1, 0.01, 0.001] {
            out.push(iterations_for_log(ld, eps)?.log10());
        }
        for m in 0..=curve {
            out.push(log_tv_bound(ld, m)?);
        }
        Ok(out)
    }

    /// Row-major `(β, u, τ)` draws from the two-observation model
    /// `y = (1, 0)`, `n = (2, 1)`.
    pub fn tiny_trace(iterations: usize, seed: u64, tau0: f64) -> Result<Vec<f64>> {
        let d = Dataset::new(
            vec![1, 0],
            vec![2, 1],
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )?;
        let g = GroupStructure::new(vec![1])?;
        let pr = Priors::new(DMatrix::identity(1, 1), DVector::zeros(1), vec![1.0], vec![1.0], tau0)?;
        let ws = assemble_workspace(&d, &g, &pr)?;
        let cfg = SamplerConfig::new(iterations, 0, 1, seed);
        let start = initial_state(&cfg, &ws, &pr)?;
        let (draws, _, _) = sample_chain(&cfg, &ws, &pr, start)?;
        Ok(draws.rows().flatten().copied().collect())
    }
}

fn js(e: pgglmm::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub fn pg_curve(b: u32, c: f64, xmax: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    native::pg_curve(b, c, xmax, points).map_err(js)
}

#[wasm_bindgen]
pub fn pg_histogram(b: u32, c: f64, draws: usize, bins: usize, xmax: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    native::pg_histogram(b, c, draws, bins, xmax, seed).map_err(js)
}

#[wasm_bindgen]
pub fn plan(rows: usize, trials: u32, precision: f64, a: f64, b: f64, tau0: f64, curve: u64) -> Result<Vec<f64>, JsValue> {
    native::plan(rows, trials, precision, a, b, tau0, curve).map_err(js)
}

#[wasm_bindgen]
pub fn tiny_trace(iterations: usize, seed: u64, tau0: f64) -> Result<Vec<f64>, JsValue> {
    native::tiny_trace(iterations, seed, tau0).map_err(js)
}
