//! Explicit minorization constant and total-variation iteration planner.
//!
//! Under `a_j + q_j/2 ≥ 1` and `b_j > 0` the η-marginal chain satisfies
//! `k(η | η′) ≥ δ h(η)` for all `η′`, so the distance to stationarity after
//! `m` iterations is at most `(1 − δ)^m` from any starting point. The
//! closed-form lower bound used here is
//!
//! ```text
//! δ ≥ 2^{−n} e^{−n/4} |A(τ₀)|^{1/2} |Σ₁|^{−1/2} exp(−½ μᵀA(τ₀)⁻¹μ + ½ μᵀΣ₁⁻¹μ)
//! Σ₁ = ½ MᵀΛM + Q ⊕ [⊕_j c_j I_{q_j}]
//! ```
//!
//! with `c_j = τ₀ + (a_j + q_j)/(2b_j)` ([`Sigma1Variant::AsPrinted`], the
//! default) or `c_j = τ₀ + (2a_j + q_j)/(2b_j)` ([`Sigma1Variant::Rederived`]).
//! Everything is evaluated in log space; `δ` itself underflows quickly in `n`.

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_a, GroupCondition, GroupStructure, ModelWorkspace, Priors};

/// Which per-group coefficient enters Σ₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sigma1Variant {
    /// `τ₀ + (a_j + q_j)/(2b_j)`.
    #[default]
    AsPrinted,
    /// `τ₀ + (2a_j + q_j)/(2b_j)`, obtained by carrying the exponent
    /// `a_j + q_j/2` through `b/(b + x) ≥ e^{−x/b}`.
    Rederived,
}

impl Sigma1Variant {
    fn coefficient(self, a: f64, size: usize, b: f64, tau0: f64) -> f64 {
        let q = size as f64;
        match self {
            Sigma1Variant::AsPrinted => tau0 + (a + q) / (2.0 * b),
            Sigma1Variant::Rederived => tau0 + (2.0 * a + q) / (2.0 * b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCheck {
    pub group: usize,
    pub a: f64,
    pub b: f64,
    pub size: usize,
    pub shape_plus_half_size: f64,
    pub ok: bool,
}

impl From<&GroupCondition> for GroupCheck {
    fn from(c: &GroupCondition) -> Self {
        Self {
            group: c.group,
            a: c.a,
            b: c.b,
            size: c.size,
            shape_plus_half_size: c.a + c.size as f64 / 2.0,
            ok: c.holds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub ok: bool,
    pub groups: Vec<GroupCheck>,
}

impl TheoremCheck {
    pub fn violations(&self) -> impl Iterator<Item = &GroupCheck> {
        self.groups.iter().filter(|g| !g.ok)
    }

    fn describe_violations(&self) -> String {
        self.violations()
            .map(|g| {
                if g.b > 0.0 {
                    format!(
                        "group {}: a + q/2 = {} + {}/2 = {} < 1",
                        g.group + 1,
                        g.a,
                        g.size,
                        g.shape_plus_half_size
                    )
                } else {
                    format!("group {}: b = {} is not positive", g.group + 1, g.b)
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// True iff every group has `a_j + q_j/2 ≥ 1` and `b_j > 0`.
pub fn check_theorem_conditions(pr: &Priors, g: &GroupStructure) -> TheoremCheck {
    let groups: Vec<GroupCheck> = pr.group_conditions(g).iter().map(GroupCheck::from).collect();
    TheoremCheck {
        ok: groups.iter().all(|c| c.ok),
        groups,
    }
}

/// Σ₁ for the given coefficient variant.
pub fn sigma1(ws: &ModelWorkspace, pr: &Priors, variant: Sigma1Variant) -> DMatrix<f64> {
    let mut weighted = ws.m.clone();
    for (mut row, n) in weighted.row_iter_mut().zip(ws.lambda.iter()) {
        row *= n.sqrt();
    }
    let mut s = weighted.tr_mul(&weighted) * 0.5;
    let p = ws.p;
    for i in 0..p {
        for k in 0..p {
            s[(i, k)] += pr.q()[(i, k)];
        }
    }
    for (j, range) in ws.groups.ranges().enumerate() {
        let c = variant.coefficient(pr.a()[j], range.len(), pr.b()[j], pr.tau0());
        for k in range {
            s[(p + k, p + k)] += c;
        }
    }
    s
}

/// `log|S|` and `vᵀS⁻¹v` from one Cholesky factorization.
fn log_det_and_quad(s: &DMatrix<f64>, v: &DVector<f64>, what: &str) -> Result<(f64, f64)> {
    if s.nrows() == 0 {
        return Ok((0.0, 0.0));
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(s.clone())
        .ok_or_else(|| Error::numeric(format!("{what} is not numerically positive definite")))?;
    let l = chol.l_dirty();
    let log_det = 2.0 * (0..s.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    let w = l
        .solve_lower_triangular(v)
        .ok_or_else(|| Error::numeric(format!("{what}: singular factor")))?;
    Ok((log_det, w.norm_squared()))
}

/// `δ` bound for one Σ₁ variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaBound {
    pub variant: Sigma1Variant,
    pub log_delta: f64,
    pub delta: f64,
    /// `−n log 2 − n/4`.
    pub log_prefactor: f64,
    pub log_det_a0: f64,
    pub log_det_sigma1: f64,
    pub quad_a0: f64,
    pub quad_sigma1: f64,
    pub sigma1: Vec<Vec<f64>>,
}

pub fn delta_bound(ws: &ModelWorkspace, pr: &Priors, variant: Sigma1Variant) -> Result<DeltaBound> {
    let check = check_theorem_conditions(pr, &ws.groups);
    if !check.ok {
        return Err(Error::TheoremConditions(check.describe_violations()));
    }
    let a0 = build_a(&vec![pr.tau0(); ws.groups.len()], pr, &ws.groups)?;
    let s1 = sigma1(ws, pr, variant);
    let (log_det_a0, quad_a0) = log_det_and_quad(&a0, &ws.mu, "A(tau0)")?;
    let (log_det_sigma1, quad_sigma1) = log_det_and_quad(&s1, &ws.mu, "Sigma1")?;
    let n = ws.n_total as f64;
    let log_prefactor = -n * LN_2 - n / 4.0;
    let log_delta = log_prefactor + 0.5 * log_det_a0 - 0.5 * log_det_sigma1 - 0.5 * quad_a0 + 0.5 * quad_sigma1;
    Ok(DeltaBound {
        variant,
        log_delta,
        delta: log_delta.exp(),
        log_prefactor,
        log_det_a0,
        log_det_sigma1,
        quad_a0,
        quad_sigma1,
        sigma1: s1.row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

/// `(1 − δ)^m = exp(m·log1p(−δ))`.
pub fn tv_bound(delta: f64, m: u64) -> Result<f64> {
    check_delta(delta)?;
    Ok((m as f64 * (-delta).ln_1p()).exp())
}

/// `log (1 − δ)^m` from `log δ`; usable when δ underflows.
pub fn log_tv_bound(log_delta: f64, m: u64) -> Result<f64> {
    check_log_delta(log_delta)?;
    Ok(m as f64 * log1m_exp(log_delta))
}

/// `log(1 − e^x)` for `x < 0`.
fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_log_delta(log_delta: f64) -> Result<()> {
    if !(log_delta < 0.0) || log_delta == f64::NEG_INFINITY {
        return Err(Error::validation(format!("log delta must be finite and negative, got {log_delta}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::validation(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Smallest `m` with `(1 − δ)^m ≤ ε`, consistent with [`tv_bound`].
pub fn iterations_for(delta: f64, epsilon: f64) -> Result<u64> {
    check_delta(delta)?;
    check_epsilon(epsilon)?;
    match budget(delta.ln(), (-delta).ln_1p(), epsilon) {
        IterationBudget::Exact(m) => Ok(m),
        IterationBudget::Astronomical { log10_iterations } => Err(Error::numeric(format!(
            "iteration budget ~1e{log10_iterations:.1} does not fit in 64 bits"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterationBudget {
    Exact(u64),
    Astronomical { log10_iterations: f64 },
}

impl IterationBudget {
    pub fn exact(&self) -> Option<u64> {
        match *self {
            IterationBudget::Exact(m) => Some(m),
            IterationBudget::Astronomical { .. } => None,
        }
    }

    /// Budget as a base-10 exponent, comparable across both forms.
    pub fn log10(&self) -> f64 {
        match *self {
            IterationBudget::Exact(m) => (m.max(1) as f64).log10(),
            IterationBudget::Astronomical { log10_iterations } => log10_iterations,
        }
    }
}

/// Smallest `m` with `(1 − δ)^m ≤ ε`, given `log δ`.
pub fn iterations_for_log(log_delta: f64, epsilon: f64) -> Result<IterationBudget> {
    check_log_delta(log_delta)?;
    check_epsilon(epsilon)?;
    Ok(budget(log_delta, log1m_exp(log_delta), epsilon))
}

/// `step` is `log(1 − δ)`.
fn budget(log_delta: f64, step: f64, epsilon: f64) -> IterationBudget {
    let target = epsilon.ln();
    let estimate = target / step;
    if !(estimate < 1e18) {
        // −log ε / −log(1 − δ) in log space; −log(1 − δ) ≈ δ once δ is tiny.
        let log_neg_step = if log_delta < -30.0 { log_delta } else { (-step).ln() };
        let log_m = (-target).ln() - log_neg_step;
        return IterationBudget::Astronomical {
            log10_iterations: log_m / std::f64::consts::LN_10,
        };
    }
    let mut m = estimate.ceil().max(1.0) as u64;
    let bound = |m: u64| (m as f64 * step).exp();
    while m > 1 && bound(m - 1) <= epsilon {
        m -= 1;
    }
    while bound(m) > epsilon {
        m += 1;
    }
    IterationBudget::Exact(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvPoint {
    pub m: u64,
    pub log_bound: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budget {
    pub epsilon: f64,
    pub m_star: IterationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub theorem_ok: bool,
    pub conditions: TheoremCheck,
    pub n_total: u64,
    /// Bound with the selected Σ₁ variant.
    pub bound: DeltaBound,
    /// Bound with the other variant, reported for comparison.
    pub alternative: DeltaBound,
    pub tv_curve: Vec<TvPoint>,
    pub budgets: Vec<Budget>,
}

impl ErgodicityReport {
    pub fn log_delta(&self) -> f64 {
        self.bound.log_delta
    }

    pub fn delta(&self) -> f64 {
        self.bound.delta
    }

    pub fn m_star(&self, epsilon: f64) -> Result<IterationBudget> {
        iterations_for_log(self.bound.log_delta, epsilon)
    }

    pub fn tv(&self, m: u64) -> f64 {
        log_tv_bound(self.bound.log_delta, m).map(f64::exp).unwrap_or(1.0)
    }
}

/// Default planner tolerances.
pub const DEFAULT_EPSILONS: [f64; 3] = [0.1, 0.01, 0.001];

/// Full report with the default Σ₁ and the default tolerances.
pub fn delta_lower_bound(ws: &ModelWorkspace, pr: &Priors) -> Result<ErgodicityReport> {
    ergodicity_report(ws, pr, Sigma1Variant::AsPrinted, &DEFAULT_EPSILONS)
}

pub fn ergodicity_report(
    ws: &ModelWorkspace,
    pr: &Priors,
    variant: Sigma1Variant,
    epsilons: &[f64],
) -> Result<ErgodicityReport> {
    let conditions = check_theorem_conditions(pr, &ws.groups);
    let bound = delta_bound(ws, pr, variant)?;
    let other = match variant {
        Sigma1Variant::AsPrinted => Sigma1Variant::Rederived,
        Sigma1Variant::Rederived => Sigma1Variant::AsPrinted,
    };
    let alternative = delta_bound(ws, pr, other)?;
    let budgets = epsilons
        .iter()
        .map(|&epsilon| {
            Ok(Budget {
                epsilon,
                m_star: iterations_for_log(bound.log_delta, epsilon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tv_curve = tv_curve(bound.log_delta, 21)?;
    Ok(ErgodicityReport {
        theorem_ok: conditions.ok,
        conditions,
        n_total: ws.n_total,
        bound,
        alternative,
        tv_curve,
        budgets,
    })
}

/// Sample points of the TV bound: evenly spaced up to `m*(10⁻³)` when that is
/// representable, otherwise at powers of ten.
pub fn tv_curve(log_delta: f64, points: usize) -> Result<Vec<TvPoint>> {
    let span = iterations_for_log(log_delta, 1e-3)?;
    let ms: Vec<u64> = match span.exact() {
        Some(top) if top >= points as u64 => (0..points)
            .map(|k| (top as f64 * k as f64 / (points - 1) as f64).round() as u64)
            .collect(),
        Some(top) => (0..=top).collect(),
        None => (0..points.min(19)).map(|k| 10u64.pow(k as u32)).collect(),
    };
    let mut out: Vec<TvPoint> = Vec::with_capacity(ms.len());
    for m in ms {
        if out.last().is_some_and(|p| p.m == m) {
            continue;
        }
        let log_bound = log_tv_bound(log_delta, m)?;
        out.push(TvPoint {
            m,
            log_bound,
            bound: log_bound.exp(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_workspace, Dataset};
    use nalgebra::DMatrix;

    fn hand_model(a: f64) -> (ModelWorkspace, Priors) {
        let d = Dataset::new(vec![0], vec![1], DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).unwrap();
        let g = GroupStructure::new(vec![1]).unwrap();
        let pr = Priors::new(DMatrix::identity(1, 1), DVector::zeros(1), vec![a], vec![1.0], 0.1).unwrap();
        (assemble_workspace(&d, &g, &pr).unwrap(), pr)
    }

    #[test]
    fn theorem_condition_examples() {
        let g2 = GroupStructure::new(vec![2]).unwrap();
        let g1 = GroupStructure::new(vec![1]).unwrap();
        let pr = |a: f64| Priors::new(DMatrix::zeros(0, 0), DVector::zeros(0), vec![a], vec![1.0], 0.1).unwrap();
        assert!(check_theorem_conditions(&pr(1.0), &g2).ok);
        let bad = check_theorem_conditions(&pr(0.2), &g1);
        assert!(!bad.ok);
        assert_eq!(bad.violations().map(|v| v.group).collect::<Vec<_>>(), vec![0]);
        assert!(check_theorem_conditions(&pr(0.5), &g1).ok);
    }

    #[test]
    fn hand_computed_delta() {
        let (ws, pr) = hand_model(1.0);
        let r = delta_lower_bound(&ws, &pr).unwrap();
        let expected = 0.5 * (-0.25f64).exp() * (0.1f64 / 1.1).sqrt();
        assert!((r.delta() - expected).abs() < 1e-14, "{} vs {expected}", r.delta());
        assert!((r.delta() - 0.1174).abs() < 1e-3);
        assert_eq!(r.bound.sigma1, vec![vec![1.0, 0.0], vec![0.0, 1.1]]);
        assert_eq!(r.m_star(0.01).unwrap(), IterationBudget::Exact(37));
        let rederived = 0.5 * (-0.25f64).exp() * (0.1f64 / 1.6).sqrt();
        assert!((r.alternative.delta - rederived).abs() < 1e-14);
    }

    #[test]
    fn violation_is_an_error() {
        let (ws, pr) = hand_model(0.2);
        let err = delta_lower_bound(&ws, &pr).unwrap_err();
        assert!(matches!(err, Error::TheoremConditions(_)));
        assert!(err.to_string().contains("group 1"), "{err}");
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_bound(0.3, 0).unwrap(), 1.0);
        assert!((tv_bound(0.5, 3).unwrap() - 0.125).abs() < 1e-15);
        assert!(tv_bound(1.0, 3).is_err());
        assert!(tv_bound(0.0, 3).is_err());
        assert_eq!(iterations_for(0.5, 0.25).unwrap(), 2);
        assert!(iterations_for(0.5, 1.0).is_err());
    }

    #[test]
    fn budget_from_tiny_log_delta() {
        let b = iterations_for_log(-2000.0, 0.01).unwrap();
        match b {
            IterationBudget::Astronomical { log10_iterations } => {
                let expected = ((0.01f64.ln().abs()).ln() + 2000.0) / std::f64::consts::LN_10;
                assert!((log10_iterations - expected).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert!(log_tv_bound(-2000.0, 10).unwrap() <= 0.0);
    }

    #[test]
    fn curve_is_decreasing() {
        let (ws, pr) = hand_model(1.0);
        let r = delta_lower_bound(&ws, &pr).unwrap();
        assert_eq!(r.tv_curve[0].m, 0);
        for w in r.tv_curve.windows(2) {
            assert!(w[1].m > w[0].m && w[1].bound < w[0].bound);
        }
        let ms: Vec<u64> = r.budgets.iter().map(|b| b.m_star.exact().unwrap()).collect();
        assert!(ms.windows(2).all(|w| w[1] > w[0]));
    }
}
