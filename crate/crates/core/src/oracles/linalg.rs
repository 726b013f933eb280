//! Deliberately naive dense linear algebra on row-major `Vec<Vec<f64>>`.
//!
//! Kept separate from nalgebra so that oracle results do not share code paths
//! with the sampler.

#![allow(clippy::needless_range_loop)]

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(rows: usize, cols: usize) -> Dense {
    vec![vec![0.0; cols]; rows]
}

pub fn identity(n: usize) -> Dense {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Dense {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn mat_vec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `MᵀWM + A` for diagonal `W`, by explicit triple loops.
pub fn weighted_gram(m: &Dense, w: &[f64], a: &Dense) -> Dense {
    let d = a.len();
    let mut out = a.clone();
    for (row, &wi) in m.iter().zip(w) {
        for j in 0..d {
            for k in 0..d {
                out[j][k] += row[j] * wi * row[k];
            }
        }
    }
    out
}

/// Lower Cholesky factor, or `None` if a pivot is not positive.
pub fn cholesky(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut l = zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

pub fn log_det_spd(a: &Dense) -> Option<f64> {
    let l = cholesky(a)?;
    Some(2.0 * (0..a.len()).map(|i| l[i][i].ln()).sum::<f64>())
}

/// Solve `Ax = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Dense, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut aug: Dense = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))?;
        if aug[pivot][col] == 0.0 {
            return None;
        }
        aug.swap(col, pivot);
        for r in col + 1..n {
            let f = aug[r][col] / aug[col][col];
            for c in col..=n {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| aug[i][j] * x[j]).sum();
        x[i] = (aug[i][n] - s) / aug[i][i];
    }
    Some(x)
}

pub fn inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let cols: Option<Vec<Vec<f64>>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            solve(a, &e)
        })
        .collect();
    let cols = cols?;
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Solve `Lᵀx = z` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &Dense, z: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    x
}
