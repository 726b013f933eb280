//! Model description for the binomial logistic linear mixed model.
//!
//! Observation `i` has `y_i` successes out of `n_i` trials with log-odds
//! `x_iᵀβ + z_iᵀu`. The random effects split into `r` groups of sizes
//! `q_1..q_r`, group `j` having precision `τ_j`. The prior is
//! `β ~ N(Q⁻¹μ₀, Q⁻¹)` and `τ_j ~ Gamma(a_j, rate b_j)` truncated to `[τ₀, ∞)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<u32>,
    n: Vec<u32>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: Vec<u32>, n: Vec<u32>, x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        let rows = y.len();
        if rows == 0 {
            return Err(Error::validation("dataset has no observations"));
        }
        if n.len() != rows {
            return Err(Error::validation(format!(
                "y has {rows} entries but n has {}",
                n.len()
            )));
        }
        if x.nrows() != rows || z.nrows() != rows {
            return Err(Error::validation(format!(
                "design row counts (X: {}, Z: {}) must equal the number of observations {rows}",
                x.nrows(),
                z.nrows()
            )));
        }
        for (i, (&yi, &ni)) in y.iter().zip(&n).enumerate() {
            if ni == 0 {
                return Err(Error::validation(format!("observation {i}: n must be at least 1")));
            }
            if yi > ni {
                return Err(Error::validation(format!(
                    "observation {i}: y = {yi} exceeds n = {ni}"
                )));
            }
        }
        if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::validation("design matrices contain non-finite values"));
        }
        Ok(Self { y, n, x, z })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Number of fixed effects.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Number of random effects.
    pub fn q(&self) -> usize {
        self.z.ncols()
    }
}

/// Sizes of the random-effect groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    sizes: Vec<usize>,
}

impl GroupStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::validation(format!("random-effect group {j} is empty")));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of groups `r`.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Total random-effect dimension `q`.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Column ranges of each group within `u`.
    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.sizes.iter().scan(0, |start, &s| {
            let r = *start..*start + s;
            *start += s;
            Some(r)
        })
    }
}

/// Per-group outcome of the theorem hypotheses `a_j + q_j/2 ≥ 1`, `b_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCondition {
    pub group: usize,
    pub shape_ok: bool,
    pub rate_ok: bool,
    pub a: f64,
    pub b: f64,
    pub size: usize,
}

impl GroupCondition {
    pub fn holds(&self) -> bool {
        self.shape_ok && self.rate_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    q: DMatrix<f64>,
    mu0: DVector<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    tau0: f64,
}

impl Priors {
    /// Priors in the natural parameterization: precision `Q` and linear term `μ₀`
    /// (the prior mean is `Q⁻¹μ₀`).
    pub fn new(q: DMatrix<f64>, mu0: DVector<f64>, a: Vec<f64>, b: Vec<f64>, tau0: f64) -> Result<Self> {
        let p = q.nrows();
        if q.ncols() != p {
            return Err(Error::validation("prior precision Q must be square"));
        }
        if mu0.len() != p {
            return Err(Error::validation(format!(
                "mu0 has length {} but Q is {p}x{p}",
                mu0.len()
            )));
        }
        for i in 0..p {
            for k in 0..i {
                let (u, v) = (q[(i, k)], q[(k, i)]);
                if (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs())) {
                    return Err(Error::validation(format!(
                        "prior precision Q is not symmetric at ({i},{k})"
                    )));
                }
            }
        }
        if p > 0 && Cholesky::new(q.clone()).is_none() {
            return Err(Error::validation("prior precision Q is not positive definite"));
        }
        if a.len() != b.len() {
            return Err(Error::validation(format!(
                "a has {} entries but b has {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(j) = b.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::validation(format!("group {j}: b must be positive, got {}", b[j])));
        }
        if let Some(j) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("group {j}: a must be finite")));
        }
        if !(tau0 > 0.0) || !tau0.is_finite() {
            return Err(Error::validation(format!("tau0 must be positive, got {tau0}")));
        }
        Ok(Self { q, mu0, a, b, tau0 })
    }

    /// Priors parameterized by the prior mean; converts via `μ₀ = Q·mean`.
    pub fn from_mean(q: DMatrix<f64>, mean: DVector<f64>, a: Vec<f64>, b: Vec<f64>, tau0: f64) -> Result<Self> {
        if mean.len() != q.ncols() {
            return Err(Error::validation(format!(
                "prior mean has length {} but Q is {}x{}",
                mean.len(),
                q.nrows(),
                q.ncols()
            )));
        }
        let mu0 = &q * &mean;
        Self::new(q, mu0, a, b, tau0)
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn with_tau0(&self, tau0: f64) -> Result<Self> {
        Self::new(self.q.clone(), self.mu0.clone(), self.a.clone(), self.b.clone(), tau0)
    }

    /// Prior mean `Q⁻¹μ₀` of β.
    pub fn prior_mean(&self) -> DVector<f64> {
        if self.q.nrows() == 0 {
            return DVector::zeros(0);
        }
        Cholesky::new(self.q.clone())
            .expect("validated positive definite")
            .solve(&self.mu0)
    }

    /// Per-group check of `a_j + q_j/2 ≥ 1` and `b_j > 0`.
    pub fn group_conditions(&self, g: &GroupStructure) -> Vec<GroupCondition> {
        self.a
            .iter()
            .zip(&self.b)
            .zip(g.sizes())
            .enumerate()
            .map(|(group, ((&a, &b), &size))| GroupCondition {
                group,
                shape_ok: a + size as f64 / 2.0 >= 1.0,
                rate_ok: b > 0.0,
                a,
                b,
                size,
            })
            .collect()
    }

    pub fn theorem_conditions_hold(&self, g: &GroupStructure) -> bool {
        self.group_conditions(g).iter().all(GroupCondition::holds)
    }

    fn check_against(&self, p: usize, g: &GroupStructure) -> Result<()> {
        if self.q.nrows() != p {
            return Err(Error::validation(format!(
                "Q is {0}x{0} but the design has {p} fixed effects",
                self.q.nrows()
            )));
        }
        if self.a.len() != g.len() {
            return Err(Error::validation(format!(
                "{} prior shapes given for {} random-effect groups",
                self.a.len(),
                g.len()
            )));
        }
        Ok(())
    }
}

/// `A(τ) = Q ⊕ τ_1 I_{q_1} ⊕ ... ⊕ τ_r I_{q_r}`.
pub fn build_a(tau: &[f64], pr: &Priors, g: &GroupStructure) -> Result<DMatrix<f64>> {
    if tau.len() != g.len() {
        return Err(Error::validation(format!(
            "tau has {} entries for {} groups",
            tau.len(),
            g.len()
        )));
    }
    if let Some(j) = tau.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::validation(format!("tau[{j}] = {} must be positive", tau[j])));
    }
    let p = pr.q.nrows();
    let d = p + g.total();
    let mut a = DMatrix::zeros(d, d);
    a.view_mut((0, 0), (p, p)).copy_from(&pr.q);
    for (range, &t) in g.ranges().zip(tau) {
        for k in range {
            a[(p + k, p + k)] = t;
        }
    }
    Ok(a)
}

/// Precomputed quantities shared by every iteration of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWorkspace {
    /// `M = (X, Z)`, N × (p+q).
    pub m: DMatrix<f64>,
    /// `κ_i = y_i − n_i/2`.
    pub kappa: DVector<f64>,
    /// `l = (μ₀ᵀ, 0)ᵀ`.
    pub l: DVector<f64>,
    /// `μ = Mᵀκ + l`.
    pub mu: DVector<f64>,
    /// Diagonal of Λ: the trial counts as reals.
    pub lambda: DVector<f64>,
    pub trials: Vec<u32>,
    pub n_total: u64,
    pub p: usize,
    pub q: usize,
    pub groups: GroupStructure,
}

impl ModelWorkspace {
    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn observations(&self) -> usize {
        self.trials.len()
    }
}

pub fn assemble_workspace(d: &Dataset, g: &GroupStructure, pr: &Priors) -> Result<ModelWorkspace> {
    let (p, q) = (d.p(), d.q());
    if g.total() != q {
        return Err(Error::validation(format!(
            "group sizes sum to {} but Z has {q} columns",
            g.total()
        )));
    }
    pr.check_against(p, g)?;
    let rows = d.len();
    let mut m = DMatrix::zeros(rows, p + q);
    m.view_mut((0, 0), (rows, p)).copy_from(&d.x);
    m.view_mut((0, p), (rows, q)).copy_from(&d.z);
    let kappa = DVector::from_iterator(
        rows,
        d.y.iter().zip(&d.n).map(|(&y, &n)| y as f64 - n as f64 / 2.0),
    );
    let mut l = DVector::zeros(p + q);
    l.rows_mut(0, p).copy_from(&pr.mu0);
    let mu = m.tr_mul(&kappa) + &l;
    let lambda = DVector::from_iterator(rows, d.n.iter().map(|&n| n as f64));
    Ok(ModelWorkspace {
        m,
        kappa,
        l,
        mu,
        lambda,
        trials: d.n.clone(),
        n_total: d.n.iter().map(|&n| n as u64).sum(),
        p,
        q,
        groups: g.clone(),
    })
}

/// State `(η, ω, τ)` of the augmented chain, `η = (β, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub eta: DVector<f64>,
    pub omega: DVector<f64>,
    pub tau: DVector<f64>,
}

impl ChainState {
    pub fn beta<'a>(&'a self, ws: &ModelWorkspace) -> nalgebra::DVectorView<'a, f64> {
        self.eta.rows(0, ws.p)
    }

    pub fn u<'a>(&'a self, ws: &ModelWorkspace) -> nalgebra::DVectorView<'a, f64> {
        self.eta.rows(ws.p, ws.q)
    }

    /// `τ_j ≥ τ₀` for all j and `ω_i > 0` for all i.
    pub fn is_valid(&self, tau0: f64) -> bool {
        self.tau.iter().all(|&t| t >= tau0) && self.omega.iter().all(|&w| w > 0.0)
    }
}
