//! Two-block Gibbs sampler.
//!
//! One iteration draws `(ω, τ) | η` and then `η | (ω, τ)`:
//!
//! 1. `τ_j ~ TruncGamma(a_j + q_j/2, b_j + u_jᵀu_j/2, τ₀)` and, independently,
//!    `ω_i ~ PG(n_i, |m_iᵀη|)`;
//! 2. `η ~ N(Σ⁻¹μ, Σ⁻¹)` with `Σ = MᵀΩM + A(τ)`.
//!
//! Every coordinate draws from its own addressed random stream, so the order
//! in which the ω and τ draws execute (including in parallel) does not change
//! the result.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{assemble_workspace, build_a, ChainState, Dataset, GroupStructure, ModelWorkspace, Priors};
use crate::pg::{pg_sample, PgParams};
use crate::rng::{Block, StreamRoot};
use crate::tgamma::TruncatedGamma;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Defaults to zero.
    pub init_eta: Option<Vec<f64>>,
    /// Defaults to `τ₀` in every group.
    pub init_tau: Option<Vec<f64>>,
    pub retain_omega: bool,
    /// Worker threads for the within-iteration draws; 1 runs sequentially.
    pub threads: usize,
}

impl SamplerConfig {
    pub fn new(iterations: usize, burnin: usize, thin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burnin,
            thin,
            seed,
            init_eta: None,
            init_tau: None,
            retain_omega: false,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::validation("iterations must be positive"));
        }
        if self.burnin >= self.iterations {
            return Err(Error::validation(format!(
                "burnin ({}) must be smaller than iterations ({})",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::validation("thin must be at least 1"));
        }
        if self.iterations > u32::MAX as usize {
            return Err(Error::validation("iterations must fit in 32 bits"));
        }
        if self.threads == 0 {
            return Err(Error::validation("threads must be at least 1"));
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }
}

/// Random streams for one iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationRng<'a> {
    pub root: &'a StreamRoot,
    pub iteration: u64,
}

impl<'a> IterationRng<'a> {
    pub fn new(root: &'a StreamRoot, iteration: u64) -> Self {
        Self { root, iteration }
    }

    pub fn stream(&self, block: Block, index: usize) -> rand_chacha::ChaCha8Rng {
        self.root.stream(self.iteration, block, index as u64)
    }
}

/// Draws `τ | u`, one independent truncated-Gamma variate per group.
pub fn draw_tau(u: &[f64], pr: &Priors, g: &GroupStructure, rng: IterationRng<'_>) -> Result<Vec<f64>> {
    if u.len() != g.total() {
        return Err(Error::validation(format!(
            "u has length {} but groups total {}",
            u.len(),
            g.total()
        )));
    }
    g.ranges()
        .enumerate()
        .map(|(j, range)| {
            let ss: f64 = u[range.clone()].iter().map(|v| v * v).sum();
            let shape = pr.a()[j] + range.len() as f64 / 2.0;
            let rate = pr.b()[j] + ss / 2.0;
            let tg = TruncatedGamma::new(shape, rate, pr.tau0())?;
            Ok(tg.sample(&mut rng.stream(Block::Tau, j)))
        })
        .collect()
}

/// Draws `ω | η` with `ω_i ~ PG(n_i, |m_iᵀη|)`.
pub fn draw_omega(eta: &DVector<f64>, ws: &ModelWorkspace, rng: IterationRng<'_>) -> DVector<f64> {
    let linear = &ws.m * eta;
    let draw = |i: usize| {
        let p = PgParams::folded(ws.trials[i], linear[i]).expect("finite linear predictor");
        pg_sample(p, &mut rng.stream(Block::Omega, i))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if rayon::current_num_threads() > 1 && ws.observations() > 1 {
            let v: Vec<f64> = (0..ws.observations()).into_par_iter().map(draw).collect();
            return DVector::from_vec(v);
        }
    }
    DVector::from_iterator(ws.observations(), (0..ws.observations()).map(draw))
}

/// Precision, factor and mean of the Gaussian full conditional of η.
#[derive(Debug, Clone)]
pub struct EtaConditional {
    /// `Σ = MᵀΩM + A(τ)`.
    pub precision: DMatrix<f64>,
    pub factor: Cholesky<f64, Dyn>,
    /// `Σ⁻¹μ`.
    pub mean: DVector<f64>,
}

pub fn eta_conditional(
    omega: &DVector<f64>,
    tau: &[f64],
    ws: &ModelWorkspace,
    pr: &Priors,
) -> Result<EtaConditional> {
    if omega.len() != ws.observations() {
        return Err(Error::validation("omega length does not match the number of observations"));
    }
    if let Some(i) = omega.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::validation(format!("omega[{i}] = {} is not positive", omega[i])));
    }
    let mut weighted = ws.m.clone();
    for (mut row, w) in weighted.row_iter_mut().zip(omega.iter()) {
        row *= w.sqrt();
    }
    let precision = weighted.tr_mul(&weighted) + build_a(tau, pr, &ws.groups)?;
    let factor = Cholesky::new(precision.clone())
        .ok_or_else(|| Error::numeric("conditional precision of eta is not numerically positive definite"))?;
    let mean = factor.solve(&ws.mu);
    Ok(EtaConditional {
        precision,
        factor,
        mean,
    })
}

/// Draws `η | ω, τ ~ N(Σ⁻¹μ, Σ⁻¹)`: with `Σ = LLᵀ`, `η = Σ⁻¹μ + L⁻ᵀz`.
pub fn draw_eta(
    omega: &DVector<f64>,
    tau: &[f64],
    ws: &ModelWorkspace,
    pr: &Priors,
    rng: IterationRng<'_>,
) -> Result<DVector<f64>> {
    let cond = eta_conditional(omega, tau, ws, pr)?;
    let mut stream = rng.stream(Block::Eta, 0);
    let z = DVector::from_fn(ws.dim(), |_, _| StandardNormal.sample(&mut stream));
    let offset = cond
        .factor
        .l_dirty()
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    Ok(cond.mean + offset)
}

/// One full iteration of the two-block sampler.
pub fn gibbs_step(
    s: &ChainState,
    ws: &ModelWorkspace,
    pr: &Priors,
    rng: IterationRng<'_>,
) -> Result<ChainState> {
    let u: Vec<f64> = s.u(ws).iter().copied().collect();
    let tau = draw_tau(&u, pr, &ws.groups, rng)?;
    let omega = draw_omega(&s.eta, ws, rng);
    let eta = draw_eta(&omega, &tau, ws, pr, rng).map_err(|e| match e {
        Error::Numeric(msg) => Error::numeric(format!("iteration {}: {msg}", rng.iteration)),
        other => other,
    })?;
    Ok(ChainState {
        eta,
        omega,
        tau: DVector::from_vec(tau),
    })
}

/// Row-major matrix of retained draws with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    names: Vec<String>,
    data: Vec<f64>,
}

impl DrawMatrix {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, data: Vec::new() }
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::new(names);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::validation(format!(
                "row has {} values for {} columns",
                row.len(),
                self.names.len()
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn nrows(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.data.len() / self.names.len()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.ncols();
        &self.data[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.ncols().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Same draws with rows in a different order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut m = Self::new(self.names.clone());
        for &i in order {
            m.data.extend_from_slice(self.row(i));
        }
        m
    }
}

/// Column names `beta.1..p, u.1..q, tau.1..r`.
pub fn draw_column_names(p: usize, q: usize, r: usize) -> Vec<String> {
    (1..=p)
        .map(|k| format!("beta.{k}"))
        .chain((1..=q).map(|k| format!("u.{k}")))
        .chain((1..=r).map(|k| format!("tau.{k}")))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Retained `(η, τ)` states.
    pub draws: DrawMatrix,
    /// Retained ω, when requested.
    pub omega: Option<DrawMatrix>,
    pub final_state: ChainState,
    pub elapsed: Duration,
}

/// Default starting state: `η = 0`, `τ = τ₀·1` unless overridden.
pub fn initial_state(cfg: &SamplerConfig, ws: &ModelWorkspace, pr: &Priors) -> Result<ChainState> {
    let eta = match &cfg.init_eta {
        Some(v) if v.len() != ws.dim() => {
            return Err(Error::validation(format!(
                "init_eta has length {} but the model has {} coefficients",
                v.len(),
                ws.dim()
            )))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(ws.dim()),
    };
    let tau = match &cfg.init_tau {
        Some(v) if v.len() != ws.groups.len() => {
            return Err(Error::validation(format!(
                "init_tau has length {} for {} groups",
                v.len(),
                ws.groups.len()
            )))
        }
        Some(v) if v.iter().any(|&t| t < pr.tau0()) => {
            return Err(Error::validation("init_tau entries must be at least tau0"))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_element(ws.groups.len(), pr.tau0()),
    };
    let omega = DVector::from_iterator(ws.observations(), ws.trials.iter().map(|&n| n as f64 / 4.0));
    Ok(ChainState { eta, omega, tau })
}

/// Runs the chain from `start` without timing; the loop behind [`run_chain`].
pub fn sample_chain(
    cfg: &SamplerConfig,
    ws: &ModelWorkspace,
    pr: &Priors,
    start: ChainState,
) -> Result<(DrawMatrix, Option<DrawMatrix>, ChainState)> {
    cfg.validate()?;
    let root = StreamRoot::new(cfg.seed);
    let r = ws.groups.len();
    let mut draws = DrawMatrix::new(draw_column_names(ws.p, ws.q, r));
    let mut omega = cfg
        .retain_omega
        .then(|| DrawMatrix::new((1..=ws.observations()).map(|i| format!("omega.{i}")).collect()));
    let mut state = start;
    let mut row = Vec::with_capacity(ws.dim() + r);
    for m in 0..cfg.iterations {
        state = gibbs_step(&state, ws, pr, IterationRng::new(&root, m as u64))?;
        let done = m + 1;
        if done > cfg.burnin && (done - cfg.burnin).is_multiple_of(cfg.thin) {
            row.clear();
            row.extend(state.eta.iter());
            row.extend(state.tau.iter());
            draws.push_row(&row)?;
            if let Some(o) = omega.as_mut() {
                o.push_row(state.omega.as_slice())?;
            }
        }
    }
    Ok((draws, omega, state))
}

/// Assembles the model and runs one chain.
pub fn run_chain(cfg: &SamplerConfig, d: &Dataset, g: &GroupStructure, pr: &Priors) -> Result<ChainOutput> {
    cfg.validate()?;
    let ws = assemble_workspace(d, g, pr)?;
    let start = initial_state(cfg, &ws, pr)?;
    let t0 = Instant::now();
    let (draws, omega, final_state) = with_threads(cfg.threads, || sample_chain(cfg, &ws, pr, start))?;
    Ok(ChainOutput {
        draws,
        omega,
        final_state,
        elapsed: t0.elapsed(),
    })
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::numeric(format!("thread pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}
