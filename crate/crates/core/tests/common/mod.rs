#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pgglmm::model::{Dataset, GroupStructure, Priors};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Model {
    pub data: Dataset,
    pub groups: GroupStructure,
    pub priors: Priors,
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// A random model whose priors satisfy the theorem conditions.
pub fn random_model<R: Rng>(rng: &mut R) -> Model {
    let rows = rng.random_range(1..=6usize);
    let p = rng.random_range(1..=2usize);
    let sizes: Vec<usize> = (0..rng.random_range(1..=2usize)).map(|_| rng.random_range(1..=2usize)).collect();
    let q: usize = sizes.iter().sum();
    let n: Vec<u32> = (0..rows).map(|_| rng.random_range(1..=5u32)).collect();
    let y: Vec<u32> = n.iter().map(|&ni| rng.random_range(0..=ni)).collect();
    let x = DMatrix::from_fn(rows, p, |_, _| normal(rng));
    let z = DMatrix::from_fn(rows, q, |_, _| normal(rng));
    let b = DMatrix::from_fn(p, p, |_, _| normal(rng));
    let qm = &b * b.transpose() + DMatrix::identity(p, p) * 0.5;
    let mu0 = DVector::from_fn(p, |_, _| normal(rng));
    let a: Vec<f64> = sizes
        .iter()
        .map(|&s| (1.0 - s as f64 / 2.0).max(0.05) + rng.random_range(0.0..2.0))
        .collect();
    let bv: Vec<f64> = sizes.iter().map(|_| rng.random_range(0.2..3.0)).collect();
    let tau0 = rng.random_range(0.01..1.0);
    Model {
        data: Dataset::new(y, n, x, z).unwrap(),
        groups: GroupStructure::new(sizes).unwrap(),
        priors: Priors::new(qm, mu0, a, bv, tau0).unwrap(),
    }
}

/// N = 1, n = 1, X = Z = 0, Q = 1, μ₀ = 0, a = b = 1, τ₀ = 0.1.
pub fn hand_model() -> Model {
    Model {
        data: Dataset::new(vec![1], vec![1], DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).unwrap(),
        groups: GroupStructure::new(vec![1]).unwrap(),
        priors: Priors::new(DMatrix::identity(1, 1), DVector::zeros(1), vec![1.0], vec![1.0], 0.1).unwrap(),
    }
}

/// Frozen output of `quadrature_posterior_mean` on the reference tiny model
/// (regenerate with the `bootstrap_goldens` example).
pub const GOLDEN_MEAN: [f64; 2] = [-0.3383151832741954, 1.201735936285649];
/// Reported quadrature error, rounded up.
pub const GOLDEN_ERROR: [f64; 2] = [1e-9, 1e-9];

/// Stationary Gaussian AR(1) with unit marginal variance.
pub fn ar1<R: Rng>(rho: f64, len: usize, rng: &mut R) -> Vec<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = normal(rng);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(x);
        x = rho * x + innov * normal(rng);
    }
    out
}

/// sd of the sample mean of `ar1(rho, len)`, asymptotically.
pub fn ar1_mean_sd(rho: f64, len: usize) -> f64 {
    ((1.0 + rho) / (1.0 - rho)).sqrt() / (len as f64).sqrt()
}

/// `A(τ)` written out entry by entry, as a dense oracle matrix.
pub fn naive_a(priors: &Priors, groups: &GroupStructure, tau: &[f64]) -> Vec<Vec<f64>> {
    let p = priors.q().nrows();
    let d = p + groups.total();
    let mut a = vec![vec![0.0; d]; d];
    for (i, row) in a.iter_mut().enumerate().take(p) {
        for (j, v) in row.iter_mut().enumerate().take(p) {
            *v = priors.q()[(i, j)];
        }
    }
    let mut k = p;
    for (j, &s) in groups.sizes().iter().enumerate() {
        for _ in 0..s {
            a[k][k] = tau[j];
            k += 1;
        }
    }
    a
}
