//! Reference computations for tests, written on plain `Vec`s so they share
//! no code with the library's solvers.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use targetridge::Dataset;

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(a: &Array2<f64>) -> Mat {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let bt = transpose(b);
    a.iter()
        .map(|r| bt.iter().map(|c| r.iter().zip(c).map(|(x, y)| x * y).sum()).collect())
        .collect()
}

pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Gauss–Jordan elimination with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `true` when every Cholesky pivot is positive.
pub fn is_positive_definite(a: &Mat) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if !(d > 0.0) {
            return false;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            l[i][j] = (a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    true
}

pub fn gram(x: &Mat) -> Mat {
    matmul(&transpose(x), x)
}

pub fn shifted(a: &Mat, k: f64) -> Mat {
    let mut out = a.clone();
    for (i, r) in out.iter_mut().enumerate() {
        r[i] += k;
    }
    out
}

/// `(XᵀX + kI)⁻¹(Xᵀy + k·h·α)`.
pub fn penalized(x: &Mat, y: &[f64], alpha: &[f64], k: f64, h: f64) -> Vec<f64> {
    let xt = transpose(x);
    let rhs: Vec<f64> = matvec(&xt, y)
        .iter()
        .zip(alpha)
        .map(|(a, b)| a + k * h * b)
        .collect();
    matvec(&inverse(&shifted(&gram(x), k)), &rhs)
}

/// `σ²·Z·XᵀX·Z`.
pub fn variance(x: &Mat, k: f64, sigma2: f64) -> Mat {
    let g = gram(x);
    let z = inverse(&shifted(&g, k));
    matmul(&matmul(&z, &g), &z)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * sigma2).collect())
        .collect()
}

/// Slope of the simple regression of `y` on `x` with intercept.
pub fn simple_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn alpha(data: &Dataset) -> Vec<f64> {
    let y = data.y().to_vec();
    let mut a = vec![y.iter().sum::<f64>() / y.len() as f64];
    for j in 1..data.p() {
        a.push(simple_slope(&data.x().column(j).to_vec(), &y));
    }
    a
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    dist(a, b) <= tol * norm(b).max(1e-300)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random regression with 1–5 regressors, mild collinearity and `n` in 12..40.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Dataset {
    let q = rng.random_range(1..=5);
    let n = rng.random_range(12..40);
    let common: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let mut cols = Vec::new();
    for j in 0..q {
        let loc = rng.random_range(-3.0..3.0);
        let mix = rng.random_range(0.0..0.8);
        let col: Vec<f64> = common
            .iter()
            .map(|c| loc + mix * c + (1.0 - mix) * normal(rng))
            .collect();
        cols.push((format!("x{}", j + 1), col));
    }
    let beta: Vec<f64> = (0..=q).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y = (0..n)
        .map(|i| beta[0] + (0..q).map(|j| beta[j + 1] * cols[j].1[i]).sum::<f64>() + normal(rng))
        .collect();
    Dataset::from_columns("y", y, cols).unwrap()
}

/// Regressors with zero mean, orthogonal to each other and to the intercept.
pub fn orthogonal_instance(rng: &mut ChaCha8Rng) -> Dataset {
    let q = rng.random_range(1..=4);
    let n = rng.random_range(10..30);
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut cols = Vec::new();
    for j in 0..q {
        let mut v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nv = norm(&v);
        let unit: Vec<f64> = v.iter().map(|x| x / nv).collect();
        let scale = rng.random_range(0.5..5.0);
        cols.push((format!("x{}", j + 1), unit.iter().map(|x| x * scale).collect()));
        basis.push(unit);
    }
    let y = (0..n).map(|_| 2.0 + normal(rng)).collect();
    Dataset::from_columns("y", y, cols).unwrap()
}

pub fn to_vec(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}
