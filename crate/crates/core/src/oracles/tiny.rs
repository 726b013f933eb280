//! Ground truth for very small models: tensor-grid quadrature of the marginal
//! posterior of `(β, τ)` and exact rejection sampling of `(β, u, τ)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;

use super::linalg::{self, Dense};
use crate::error::{Error, Result};
use crate::gibbs::{draw_column_names, DrawMatrix};
use crate::model::{Dataset, GroupStructure, Priors};
use crate::pg::pg_laplace;
use crate::quad::{composite_grid, integrate};

/// Random effects are integrated over `±U_HALF_WIDTH` prior standard deviations.
const U_HALF_WIDTH: f64 = 10.0;
/// Fixed effects live in a box of `±BETA_HALF_WIDTH` prior standard deviations.
const BETA_HALF_WIDTH: f64 = 8.0;
/// Truncated-prior mass allowed above the τ cap.
const TAU_TAIL: f64 = 1e-14;
const ORDER: usize = 16;
const FINE_PANELS: usize = 8;
const COARSE_PANELS: usize = 4;
/// Certification threshold on the relative change of the normalizer.
const NORMALIZER_TOL: f64 = 1e-6;
const MIN_ACCEPTANCE: f64 = 1e-4;

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// A model small enough for tensor-grid quadrature.
#[derive(Debug, Clone)]
pub struct TinyModel {
    pub data: Dataset,
    pub groups: GroupStructure,
    pub priors: Priors,
    x: Dense,
    z: Dense,
    q_mat: Dense,
    prior_mean: Vec<f64>,
    prior_sd: Vec<f64>,
    log_det_q: f64,
    /// `log ∫_{τ₀}^∞ τ^{a−1} e^{−bτ} dτ` per group.
    log_tau_norm: Vec<f64>,
    tau_cap: Vec<f64>,
}

impl TinyModel {
    pub fn new(data: Dataset, groups: GroupStructure, priors: Priors) -> Result<Self> {
        let (p, q, r) = (data.p(), data.q(), groups.len());
        if data.len() > 4 || p + q + r > 4 {
            return Err(Error::validation(format!(
                "tiny model needs N <= 4 and p+q+r <= 4, got N={} p={p} q={q} r={r}",
                data.len()
            )));
        }
        if groups.total() != q {
            return Err(Error::validation("group sizes do not match the columns of Z"));
        }
        if priors.q().nrows() != p || priors.a().len() != r {
            return Err(Error::validation("prior dimensions do not match the data"));
        }
        let q_mat = linalg::from_nalgebra(priors.q());
        let cov = linalg::inverse(&q_mat).ok_or_else(|| Error::validation("Q is singular"))?;
        let mu0: Vec<f64> = priors.mu0().iter().copied().collect();
        let prior_mean = linalg::mat_vec(&cov, &mu0);
        let prior_sd = (0..p).map(|k| cov[k][k].sqrt()).collect();
        let log_det_q = linalg::log_det_spd(&q_mat).ok_or_else(|| Error::validation("Q is not positive definite"))?;
        let tau0 = priors.tau0();
        let mut log_tau_norm = Vec::with_capacity(r);
        let mut tau_cap = Vec::with_capacity(r);
        for j in 0..r {
            let (a, b) = (priors.a()[j], priors.b()[j]);
            // Integrate in the shifted variable t = τ − τ₀, scaled by e^{−bτ₀}.
            let kernel = |t: f64| ((a - 1.0) * (tau0 + t).ln() - b * t).exp();
            let span = (60.0 + 4.0 * a) / b;
            let total = integrate(kernel, 0.0, span, 1e-15).value;
            let mut cap = (a.max(1.0)) / b;
            while integrate(kernel, cap, cap + span, 1e-18).value > TAU_TAIL * total {
                cap *= 1.5;
            }
            log_tau_norm.push(total.ln() - b * tau0);
            tau_cap.push(tau0 + cap);
        }
        Ok(Self {
            x: linalg::from_nalgebra(data.x()),
            z: linalg::from_nalgebra(data.z()),
            data,
            groups,
            priors,
            q_mat,
            prior_mean,
            prior_sd,
            log_det_q,
            log_tau_norm,
            tau_cap,
        })
    }

    /// y = (1, 0), n = (2, 1), X = (1, 1)ᵀ, Z = (1, 0)ᵀ, Q = 1, μ₀ = 0, a = b = 1, τ₀ = 0.1.
    pub fn reference() -> Self {
        use nalgebra::{DMatrix, DVector};
        let data = Dataset::new(
            vec![1, 0],
            vec![2, 1],
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .expect("valid data");
        let groups = GroupStructure::new(vec![1]).expect("valid groups");
        let priors = Priors::new(DMatrix::identity(1, 1), DVector::zeros(1), vec![1.0], vec![1.0], 0.1)
            .expect("valid priors");
        Self::new(data, groups, priors).expect("tiny")
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn q(&self) -> usize {
        self.data.q()
    }

    pub fn r(&self) -> usize {
        self.groups.len()
    }

    fn group_of(&self) -> Vec<usize> {
        self.groups
            .ranges()
            .enumerate()
            .flat_map(|(j, range)| range.map(move |_| j))
            .collect()
    }

    /// `Σ_i y_i ψ_i − n_i log(1 + e^{ψ_i})`, at most 0.
    fn log_lik(&self, beta: &[f64], u: &[f64]) -> f64 {
        (0..self.data.len())
            .map(|i| {
                let psi = linalg::dot(&self.x[i], beta) + linalg::dot(&self.z[i], u);
                let (y, n) = (self.data.y()[i] as f64, self.data.n()[i] as f64);
                y * psi - n * log1p_exp(psi)
            })
            .sum()
    }

    /// Largest attainable value of [`Self::log_lik`].
    fn log_lik_max(&self) -> f64 {
        let xlogx = |k: f64, n: f64| if k == 0.0 { 0.0 } else { k * (k / n).ln() };
        self.data
            .y()
            .iter()
            .zip(self.data.n())
            .map(|(&y, &n)| xlogx(y as f64, n as f64) + xlogx((n - y) as f64, n as f64))
            .sum()
    }

    fn log_prior_beta(&self, beta: &[f64]) -> f64 {
        let d: Vec<f64> = beta.iter().zip(&self.prior_mean).map(|(b, m)| b - m).collect();
        let quad = linalg::dot(&d, &linalg::mat_vec(&self.q_mat, &d));
        -0.5 * self.p() as f64 * (2.0 * PI).ln() + 0.5 * self.log_det_q - 0.5 * quad
    }

    fn log_prior_tau(&self, tau: &[f64]) -> f64 {
        tau.iter()
            .enumerate()
            .map(|(j, &t)| {
                let (a, b) = (self.priors.a()[j], self.priors.b()[j]);
                (a - 1.0) * t.ln() - b * t - self.log_tau_norm[j]
            })
            .sum()
    }

    /// `log ∫ L(β, u) N(u; 0, A_u(τ)⁻¹) du` on a tensor grid in standardized units.
    fn log_marginal_lik(&self, beta: &[f64], tau: &[f64], panels: usize, aug: bool) -> f64 {
        let lik = |u: &[f64]| if aug { self.log_lik_augmented(beta, u) } else { self.log_lik(beta, u) };
        let q = self.q();
        if q == 0 {
            return lik(&[]);
        }
        let (v, w) = composite_grid(-U_HALF_WIDTH, U_HALF_WIDTH, panels, ORDER);
        let log_w: Vec<f64> = v.iter().zip(&w).map(|(vi, wi)| wi.ln() - 0.5 * vi * vi - 0.5 * (2.0 * PI).ln()).collect();
        let scale: Vec<f64> = self.group_of().iter().map(|&j| tau[j].sqrt().recip()).collect();
        let n = v.len();
        let mut idx = vec![0usize; q];
        let mut u = vec![0.0; q];
        let mut acc = f64::NEG_INFINITY;
        loop {
            let mut lw = 0.0;
            for k in 0..q {
                u[k] = v[idx[k]] * scale[k];
                lw += log_w[idx[k]];
            }
            acc = log_add(acc, lw + lik(&u));
            let mut k = 0;
            loop {
                if k == q {
                    return acc;
                }
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// The likelihood through the Pólya-Gamma identity
    /// `e^{yψ}/(1+e^ψ)^n = 2^{−n} e^{κψ} E[e^{−ωψ²/2}]`, ω ~ PG(n, 0).
    fn log_lik_augmented(&self, beta: &[f64], u: &[f64]) -> f64 {
        (0..self.data.len())
            .map(|i| {
                let psi = linalg::dot(&self.x[i], beta) + linalg::dot(&self.z[i], u);
                let (y, n) = (self.data.y()[i], self.data.n()[i]);
                let kappa = y as f64 - n as f64 / 2.0;
                let laplace = pg_laplace(n, psi.abs()).expect("finite argument");
                -(n as f64) * std::f64::consts::LN_2 + kappa * psi + laplace.ln()
            })
            .sum()
    }

    fn log_posterior_with(&self, beta: &[f64], tau: &[f64], panels: usize, aug: bool) -> f64 {
        if tau.iter().any(|&t| !(t >= self.priors.tau0())) {
            return f64::NEG_INFINITY;
        }
        self.log_marginal_lik(beta, tau, panels, aug) + self.log_prior_beta(beta) + self.log_prior_tau(tau)
    }
}

/// `log L(β, τ | y) π(β) π(τ)`, with normalized priors and the binomial
/// coefficients dropped. The random effects are integrated out on a
/// 128-point-per-axis Gauss-Legendre grid over ±10 prior sd; since the
/// likelihood is at most 1 the neglected mass is below `2q Φ(−10)`.
///
/// Returns −∞ when some `τ_j < τ₀`.
pub fn log_unnormalized_posterior(beta: &[f64], tau: &[f64], tiny: &TinyModel) -> f64 {
    tiny.log_posterior_with(beta, tau, FINE_PANELS, false)
}

/// The same density, evaluated through the augmented representation with the
/// ω-integral done by the PG Laplace transform.
pub fn log_unnormalized_posterior_augmented(beta: &[f64], tau: &[f64], tiny: &TinyModel) -> f64 {
    tiny.log_posterior_with(beta, tau, FINE_PANELS, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureMoments {
    /// `beta.1..p` then `tau.1..r`.
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Estimated absolute error of each mean.
    pub error: Vec<f64>,
    /// log of `∫ L π`, i.e. the prior expectation of the likelihood.
    pub log_normalizer: f64,
    /// Upper bound on posterior mass outside the integration box.
    pub truncation_bound: f64,
    pub points_per_axis: usize,
}

struct GridMoments {
    log_z: f64,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

fn outer_axes(tiny: &TinyModel, panels: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut axes = Vec::new();
    for k in 0..tiny.p() {
        let (m, s) = (tiny.prior_mean[k], tiny.prior_sd[k]);
        axes.push(composite_grid(m - BETA_HALF_WIDTH * s, m + BETA_HALF_WIDTH * s, panels, ORDER));
    }
    // The marginal likelihood behaves like a power of τ near τ = 0, just left
    // of the domain; a grid uniform in log τ keeps the rule spectrally accurate.
    for j in 0..tiny.r() {
        let (s, w) = composite_grid(tiny.priors.tau0().ln(), tiny.tau_cap[j].ln(), panels, ORDER);
        let tau: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        let w = w.iter().zip(&tau).map(|(wi, t)| wi * t).collect();
        axes.push((tau, w));
    }
    axes
}

fn grid_moments(tiny: &TinyModel, panels: usize) -> GridMoments {
    let axes = outer_axes(tiny, panels);
    let dims = axes.len();
    let n = panels * ORDER;
    let total = n.pow(dims as u32);
    let p = tiny.p();
    let point = |flat: usize| -> (Vec<f64>, f64) {
        let mut rem = flat;
        let mut coords = Vec::with_capacity(dims);
        let mut lw = 0.0;
        for (pts, wts) in &axes {
            let i = rem % n;
            rem /= n;
            coords.push(pts[i]);
            lw += wts[i].ln();
        }
        let lp = tiny.log_posterior_with(&coords[..p], &coords[p..], panels, false);
        (coords, lw + lp)
    };
    #[cfg(feature = "parallel")]
    let evaluated: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let evaluated: Vec<(Vec<f64>, f64)> = (0..total).map(point).collect();
    let peak = evaluated.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut m1 = vec![0.0; dims];
    let mut m2 = vec![0.0; dims];
    for (coords, lv) in &evaluated {
        let w = (lv - peak).exp();
        z += w;
        for k in 0..dims {
            m1[k] += w * coords[k];
            m2[k] += w * coords[k] * coords[k];
        }
    }
    for k in 0..dims {
        m1[k] /= z;
        m2[k] /= z;
    }
    GridMoments {
        log_z: peak + z.ln(),
        m1,
        m2,
    }
}

/// Posterior means of `(β, τ)` by tensor-grid quadrature.
///
/// The grid has 128 points per axis: β over prior mean ± 8 prior sd and log τ
/// over `[log τ₀, log cap]` where the truncated prior puts less than 1e-14 above the cap.
/// The 64-point grid is evaluated as well; the result is certified only if the
/// normalizers agree to 1e-6 relative, and the error estimate of each mean is
/// the difference between the two grids plus the truncation bound.
pub fn quadrature_posterior_mean(tiny: &TinyModel) -> Result<QuadratureMoments> {
    let fine = grid_moments(tiny, FINE_PANELS);
    let coarse = grid_moments(tiny, COARSE_PANELS);
    let change = (fine.log_z - coarse.log_z).exp_m1().abs();
    if !(change < NORMALIZER_TOL) {
        return Err(Error::numeric(format!(
            "quadrature not certified: normalizer changed by {change:.3e} between 64 and 128 points per axis"
        )));
    }
    let p = tiny.p();
    // Prior mass outside the box, divided by the normalizer (the likelihood is at most 1).
    let normal_tail = statrs::function::erf::erfc(BETA_HALF_WIDTH / std::f64::consts::SQRT_2);
    let u_tail = statrs::function::erf::erfc(U_HALF_WIDTH / std::f64::consts::SQRT_2);
    let outside = p as f64 * normal_tail + tiny.r() as f64 * TAU_TAIL + tiny.q() as f64 * u_tail;
    let truncation_bound = outside / fine.log_z.exp();
    let axes = outer_axes(tiny, 1);
    let error = (0..fine.m1.len())
        .map(|k| {
            let reach = axes[k].0.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) * 2.0;
            (fine.m1[k] - coarse.m1[k]).abs() + truncation_bound * reach.max(1.0)
        })
        .collect();
    let sd = fine.m1.iter().zip(&fine.m2).map(|(m, s)| (s - m * m).max(0.0).sqrt()).collect();
    let names = (1..=p)
        .map(|k| format!("beta.{k}"))
        .chain((1..=tiny.r()).map(|j| format!("tau.{j}")))
        .collect();
    Ok(QuadratureMoments {
        names,
        mean: fine.m1,
        sd,
        error,
        log_normalizer: fine.log_z,
        truncation_bound,
        points_per_axis: FINE_PANELS * ORDER,
    })
}

#[derive(Debug, Clone)]
pub struct ExactDraws {
    /// Columns `beta.1..p, u.1..q, tau.1..r`.
    pub draws: DrawMatrix,
    pub proposals: u64,
    pub acceptance_rate: f64,
}

/// Independent draws from the joint posterior of `(β, u, τ)`.
///
/// Proposals come from the prior (each `τ_j` by rejection from its untruncated
/// Gamma) and are accepted with probability `L(β, u) / max L`.
pub fn exact_posterior_draws<R: Rng + ?Sized>(tiny: &TinyModel, count: usize, rng: &mut R) -> Result<ExactDraws> {
    let (p, q, r) = (tiny.p(), tiny.q(), tiny.r());
    let tau0 = tiny.priors.tau0();
    let l_q = linalg::cholesky(&tiny.q_mat).ok_or_else(|| Error::validation("Q is not positive definite"))?;
    let mut gammas = Vec::with_capacity(r);
    for j in 0..r {
        let (a, b) = (tiny.priors.a()[j], tiny.priors.b()[j]);
        let tail = (tiny.log_tau_norm[j] + a * b.ln() - statrs::function::gamma::ln_gamma(a)).exp();
        if tail < MIN_ACCEPTANCE {
            return Err(Error::numeric(format!(
                "prior envelope for tau.{} keeps only {tail:.2e} of its Gamma proposals",
                j + 1
            )));
        }
        gammas.push(Gamma::new(a, 1.0 / b).map_err(|e| Error::validation(e.to_string()))?);
    }
    let group_of = tiny.group_of();
    let log_max = tiny.log_lik_max();
    let mut draws = DrawMatrix::new(draw_column_names(p, q, r));
    let mut proposals = 0u64;
    let mut row = vec![0.0; p + q + r];
    while draws.nrows() < count {
        proposals += 1;
        if proposals >= 10_000 && (draws.nrows() as f64) < MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::numeric(format!(
                "rejection envelope accepted {} of {proposals} proposals",
                draws.nrows()
            )));
        }
        let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let offset = linalg::solve_upper_transposed(&l_q, &z);
        let beta: Vec<f64> = tiny.prior_mean.iter().zip(&offset).map(|(m, o)| m + o).collect();
        let tau: Vec<f64> = gammas
            .iter()
            .map(|g| loop {
                let t = g.sample(rng);
                if t >= tau0 {
                    break t;
                }
            })
            .collect();
        let u: Vec<f64> = group_of
            .iter()
            .map(|&j| {
                let e: f64 = StandardNormal.sample(rng);
                e / tau[j].sqrt()
            })
            .collect();
        let accept: f64 = rng.random();
        if accept.ln() <= tiny.log_lik(&beta, &u) - log_max {
            row[..p].copy_from_slice(&beta);
            row[p..p + q].copy_from_slice(&u);
            row[p + q..].copy_from_slice(&tau);
            draws.push_row(&row)?;
        }
    }
    Ok(ExactDraws {
        acceptance_rate: count as f64 / proposals as f64,
        draws,
        proposals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// y_i = n_i/2 with rows x = ±1: the posterior is symmetric in β.
    fn symmetric(precision: f64) -> TinyModel {
        let data = Dataset::new(
            vec![1, 1],
            vec![2, 2],
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let groups = GroupStructure::new(vec![1]).unwrap();
        let priors = Priors::new(
            DMatrix::from_element(1, 1, precision),
            DVector::zeros(1),
            vec![1.0],
            vec![1.0],
            0.1,
        )
        .unwrap();
        TinyModel::new(data, groups, priors).unwrap()
    }

    #[test]
    fn symmetric_density_and_mean() {
        let t = symmetric(1.0);
        for (b, tau) in [(0.7, 0.5), (2.0, 1.3), (0.1, 0.1)] {
            let l = log_unnormalized_posterior(&[b], &[tau], &t);
            let r = log_unnormalized_posterior(&[-b], &[tau], &t);
            assert!((l - r).abs() < 1e-12);
        }
        let m = quadrature_posterior_mean(&t).unwrap();
        assert!(m.mean[0].abs() <= m.error[0] + 1e-12, "{m:?}");
    }

    #[test]
    fn truncation_zeroes_density() {
        let t = TinyModel::reference();
        assert_eq!(log_unnormalized_posterior(&[0.0], &[0.05], &t), f64::NEG_INFINITY);
        assert!(log_unnormalized_posterior(&[0.0], &[0.1], &t).is_finite());
    }

    #[test]
    fn augmented_route_agrees() {
        let t = TinyModel::reference();
        let points = [([0.3], [0.4]), ([-1.2], [2.0]), ([2.5], [0.15])];
        let direct: Vec<f64> = points.iter().map(|(b, s)| log_unnormalized_posterior(b, s, &t)).collect();
        let aug: Vec<f64> = points.iter().map(|(b, s)| log_unnormalized_posterior_augmented(b, s, &t)).collect();
        for i in 1..points.len() {
            let ratio_direct = (direct[i] - direct[0]).exp();
            let ratio_aug = (aug[i] - aug[0]).exp();
            assert!((ratio_direct - ratio_aug).abs() < 1e-6 * ratio_direct.max(1.0));
        }
    }

    #[test]
    fn strong_prior_pins_mean() {
        let m = quadrature_posterior_mean(&symmetric(1e6)).unwrap();
        assert!(m.mean[0].abs() < 1e-2);
    }

    #[test]
    fn tau_normalizer_matches_incomplete_gamma() {
        let t = TinyModel::reference();
        // a = b = 1: ∫_{0.1}^∞ e^{−τ} dτ = e^{−0.1}.
        assert!((t.log_tau_norm[0] + 0.1).abs() < 1e-12);
    }

    #[test]
    fn exact_draws_are_deterministic_and_supported() {
        let t = TinyModel::reference();
        let a = exact_posterior_draws(&t, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = exact_posterior_draws(&t, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.acceptance_rate, b.acceptance_rate);
        assert_eq!(a.draws, b.draws);
        assert!(a.draws.column(2).iter().all(|&x| x >= 0.1));
    }

    #[test]
    fn oracles_agree_on_reference_model() {
        let t = TinyModel::reference();
        let quad = quadrature_posterior_mean(&t).unwrap();
        let ex = exact_posterior_draws(&t, 40_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        for (k, col) in [(0usize, 0usize), (1, 2)] {
            let (mean, se) = super::super::stats::mean_se(&ex.draws.column(col));
            assert!(
                (mean - quad.mean[k]).abs() < 3.0 * se + quad.error[k],
                "{}: {mean} ± {se} vs {}",
                quad.names[k],
                quad.mean[k]
            );
        }
    }

    #[test]
    fn rejects_oversized_models() {
        let data = Dataset::new(
            vec![0; 5],
            vec![1; 5],
            DMatrix::from_element(5, 1, 1.0),
            DMatrix::zeros(5, 0),
        )
        .unwrap();
        let priors = Priors::new(DMatrix::identity(1, 1), DVector::zeros(1), vec![], vec![], 0.1).unwrap();
        assert!(TinyModel::new(data, GroupStructure::new(vec![]).unwrap(), priors).is_err());
    }
}
