//! Dense symmetric linear algebra for small `p`.
//!
//! Everything here works on `ndarray` storage but the factorizations are
//! written out by hand: a cyclic Jacobi eigensolver, a Cholesky solver for
//! symmetric positive definite systems and a partial-pivoting determinant.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;
/// Pivots below this fraction of the largest diagonal entry count as zero.
const PIVOT_TOL: f64 = 64.0 * f64::EPSILON;

/// `A = Γ · diag(λ) · Γᵀ` with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    /// Eigenvectors stored as columns, matching `eigenvalues` order.
    pub eigenvectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Coordinates of `v` in the eigenbasis, `Γᵀ v`.
    pub fn rotate(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.eigenvectors.t().dot(&v)
    }

    /// `Γ · diag(f(λᵢ)) · Γᵀ · v`.
    pub fn apply_spectral<F>(&self, v: ArrayView1<f64>, f: F) -> Array1<f64>
    where
        F: Fn(f64) -> f64,
    {
        let mut coords = self.rotate(v);
        for (c, &l) in coords.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= f(l);
        }
        self.eigenvectors.dot(&coords)
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }
}

fn check_square(a: &ArrayView2<f64>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::Dimension(format!("expected a square matrix, got {r}x{c}")));
    }
    if r == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix".into()));
    }
    Ok(r)
}

fn max_asymmetry(a: &ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// An off-diagonal entry is annihilated whenever it is large relative to the
/// geometric mean of its two diagonal entries, which keeps small eigenvalues
/// of positive definite inputs accurate to working relative precision.
pub fn eig_sym(a: ArrayView2<f64>) -> Result<EigenDecomposition> {
    let n = check_square(&a)?;
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let asym = max_asymmetry(&a);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let mut m = a.to_owned();
    // symmetrize exactly so rotations act on a truly symmetric matrix
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let mut converged = n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                if apq.abs() <= JACOBI_TOL * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let n = check_square(&a)?;
        let max_diag = a.diag().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let floor = PIVOT_TOL * max_diag;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[[j, j]] = d;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn solve(&self, b: ArrayView1<f64>) -> Result<Array1<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!("rhs has length {}, expected {n}", b.len())));
        }
        let l = &self.lower;
        let mut x = b.to_owned();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[[i, k]] * x[k];
            }
            x[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[k];
            }
            x[i] = s / l[[i, i]];
        }
        Ok(x)
    }

    pub fn solve_many(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "rhs has {} rows, expected {}",
                b.nrows(),
                self.dim()
            )));
        }
        let mut out = Array2::<f64>::zeros(b.raw_dim());
        for (j, col) in b.axis_iter(Axis(1)).enumerate() {
            out.column_mut(j).assign(&self.solve(col)?);
        }
        Ok(out)
    }

    /// Full inverse, assembled column by column.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        self.solve_many(Array2::<f64>::eye(n).view())
            .expect("identity has matching shape")
    }

    pub fn determinant(&self) -> f64 {
        self.lower.diag().iter().map(|d| d * d).product()
    }
}

pub fn solve_spd(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    Cholesky::factor(a)?.solve(b)
}

pub fn solve_spd_many(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    Cholesky::factor(a)?.solve_many(b)
}

/// `A + k·I`.
pub fn shifted(a: ArrayView2<f64>, k: f64) -> Array2<f64> {
    let mut out = a.to_owned();
    out.diag_mut().mapv_inplace(|d| d + k);
    out
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: ArrayView2<f64>) -> Result<f64> {
    let n = check_square(&a)?;
    let mut m = a.to_owned();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
            .expect("non-empty range");
        if m[[pivot, col]] == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            for k in 0..n {
                m.swap([pivot, k], [col, k]);
            }
            det = -det;
        }
        let d = m[[col, col]];
        det *= d;
        for i in (col + 1)..n {
            let f = m[[i, col]] / d;
            if f != 0.0 {
                for k in col..n {
                    m[[i, k]] -= f * m[[col, k]];
                }
            }
        }
    }
    Ok(det)
}

/// Least-squares solution of `x·b ≈ y` by Householder QR, without forming `xᵀx`.
pub fn least_squares(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Dimension(format!("y has length {}, expected {n}", y.len())));
    }
    if n < p || p == 0 {
        return Err(Error::TooFewRows { n, p });
    }
    let mut a = x.to_owned();
    let mut b = y.to_owned();
    let col_scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 0..p {
        let norm = a.slice(ndarray::s![j.., j]).dot(&a.slice(ndarray::s![j.., j])).sqrt();
        if norm <= PIVOT_TOL * col_scale {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = if a[[j, j]] > 0.0 { -norm } else { norm };
        let mut v = a.slice(ndarray::s![j.., j]).to_owned();
        v[0] -= alpha;
        let vv = v.dot(&v);
        if vv > 0.0 {
            for c in j..p {
                let f = 2.0 * v.dot(&a.slice(ndarray::s![j.., c])) / vv;
                for (i, vi) in v.iter().enumerate() {
                    a[[j + i, c]] -= f * vi;
                }
            }
            let f = 2.0 * v.dot(&b.slice(ndarray::s![j..])) / vv;
            for (i, vi) in v.iter().enumerate() {
                b[j + i] -= f * vi;
            }
        }
    }
    let mut beta = Array1::<f64>::zeros(p);
    for i in (0..p).rev() {
        let mut s = b[i];
        for c in (i + 1)..p {
            s -= a[[i, c]] * beta[c];
        }
        beta[i] = s / a[[i, i]];
    }
    Ok(beta)
}

pub fn mean(v: ArrayView1<f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// Variance with divisor `n`.
pub fn population_variance(v: ArrayView1<f64>) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Covariance with divisor `n`.
pub fn population_covariance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64
}

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// `Xᵀ X`, symmetrized.
pub fn gram(x: ArrayView2<f64>) -> Array2<f64> {
    let g = x.t().dot(&x);
    (&g + &g.t()) * 0.5
}

/// Correlation matrix of the columns of `x` and its determinant.
///
/// `x` must not contain the intercept column.
pub fn correlation_det(x: ArrayView2<f64>) -> Result<(Array2<f64>, f64)> {
    let (n, p) = x.dim();
    if p < 2 {
        return Err(Error::Dimension(format!("need at least 2 columns, got {p}")));
    }
    if n < 2 {
        return Err(Error::TooFewRows { n, p });
    }
    let mut centered = x.to_owned();
    for (j, mut col) in centered.axis_iter_mut(Axis(1)).enumerate() {
        let m = mean(col.view());
        col.mapv_inplace(|v| v - m);
        let ss = col.dot(&col);
        let scale = x.column(j).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if ss <= (f64::EPSILON * scale).powi(2) * n as f64 {
            return Err(Error::DegenerateColumn(format!("column {j}")));
        }
        col.mapv_inplace(|v| v / ss.sqrt());
    }
    let mut r = gram(centered.view());
    r.diag_mut().fill(1.0);
    let det = determinant(r.view())?.clamp(0.0, 1.0);
    Ok((r, det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let b = Array2::from_shape_fn((n + 3, n), |_| rng.random_range(-1.0..1.0));
        let mut a = b.t().dot(&b);
        a.diag_mut().mapv_inplace(|d| d + 0.1);
        a
    }

    // Cofactor expansion inverse, independent of the Cholesky route.
    fn cofactor_inverse(a: &Array2<f64>) -> Array2<f64> {
        fn det(m: &Array2<f64>) -> f64 {
            let n = m.nrows();
            if n == 0 {
                return 1.0;
            }
            (0..n)
                .map(|j| {
                    let minor = Array2::from_shape_fn((n - 1, n - 1), |(r, c)| {
                        m[[r + 1, if c < j { c } else { c + 1 }]]
                    });
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * m[[0, j]] * det(&minor)
                })
                .sum()
        }
        let n = a.nrows();
        let d = det(a);
        Array2::from_shape_fn((n, n), |(i, j)| {
            let minor = Array2::from_shape_fn((n - 1, n - 1), |(r, c)| {
                a[[if r < j { r } else { r + 1 }, if c < i { c } else { c + 1 }]]
            });
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(&minor) / d
        })
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eig_sym(Array2::<f64>::eye(3).view()).unwrap();
        assert_eq!(e.eigenvalues.to_vec(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenpairs() {
        let e = eig_sym(array![[1.0, 0.0], [0.0, 4.0]].view()).unwrap();
        assert_eq!(e.eigenvalues.to_vec(), vec![4.0, 1.0]);
        assert!((e.eigenvectors[[1, 0]].abs() - 1.0).abs() < 1e-15);
        assert!((e.eigenvectors[[0, 1]].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let err = eig_sym(array![[1.0, 2.0], [0.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric(_)));
    }

    #[test]
    fn random_reconstruction_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..7 {
            let a = random_spd(&mut rng, n);
            let e = eig_sym(a.view()).unwrap();
            let g = &e.eigenvectors;
            let orth = g.t().dot(g) - Array2::<f64>::eye(n);
            assert!(orth.iter().all(|v| v.abs() < 1e-10));
            let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let diff = e.reconstruct() - &a;
            assert!(diff.iter().all(|v| v.abs() < 1e-8 * scale));
            let tr: f64 = a.diag().sum();
            assert!((e.eigenvalues.sum() - tr).abs() < 1e-8 * tr.abs());
            assert!(e.eigenvalues.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn indefinite_input_has_negative_eigenvalue() {
        let e = eig_sym(array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap();
        assert!((e.max() - 1.0).abs() < 1e-15);
        assert!((e.min() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = array![3.0, -1.5, 2.0];
        let x = solve_spd(Array2::<f64>::eye(3).view(), b.view()).unwrap();
        assert_eq!(x, b);
        let x = solve_spd(array![[2.0, 0.0], [0.0, 5.0]].view(), array![2.0, 10.0].view()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spd(&mut rng, 5);
        let b = Array1::from_shape_fn(5, |_| rng.random_range(-3.0..3.0));
        let x = solve_spd(a.view(), b.view()).unwrap();
        let r = a.dot(&x) - &b;
        assert!(norm(r.view()) / norm(b.view()) < 1e-10);
    }

    #[test]
    fn solve_matches_cofactor_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4 {
            let a = random_spd(&mut rng, n);
            let b = Array1::from_shape_fn(n, |_| rng.random_range(-3.0..3.0));
            let x = solve_spd(a.view(), b.view()).unwrap();
            let oracle = cofactor_inverse(&a).dot(&b);
            for (u, v) in x.iter().zip(oracle.iter()) {
                assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn cholesky_rejects_non_pd() {
        let err = Cholesky::factor(array![[1.0, 2.0], [2.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite));
        let err = Cholesky::factor(array![[1.0, 1.0], [1.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite));
    }

    #[test]
    fn many_rhs_and_inverse() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let inv = Cholesky::factor(a.view()).unwrap().inverse();
        let id = a.dot(&inv);
        assert!((id - Array2::<f64>::eye(2)).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn correlation_of_orthogonal_columns() {
        let x = array![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]];
        let (r, det) = correlation_det(x.view()).unwrap();
        assert!((det - 1.0).abs() < 1e-12);
        assert!((r[[0, 1]]).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_duplicated_column_is_singular() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [4.0, 4.0], [3.0, 3.0]];
        let (_, det) = correlation_det(x.view()).unwrap();
        assert!(det.abs() < 1e-10);
    }

    #[test]
    fn correlation_rejects_constant_column() {
        let x = array![[1.0, 2.0], [2.0, 2.0], [4.0, 2.0]];
        assert!(matches!(
            correlation_det(x.view()).unwrap_err(),
            Error::DegenerateColumn(_)
        ));
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((12, 4), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(12, |_| rng.random_range(-2.0..2.0));
        let qr = least_squares(x.view(), y.view()).unwrap();
        let ne = solve_spd(gram(x.view()).view(), x.t().dot(&y).view()).unwrap();
        assert!((qr - ne).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn least_squares_rank_deficient() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        assert!(least_squares(x.view(), array![1.0, 2.0, 3.0].view()).is_err());
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap(), -1.0);
        assert!((determinant(array![[2.0, 1.0], [1.0, 3.0]].view()).unwrap() - 5.0).abs() < 1e-14);
    }
}
