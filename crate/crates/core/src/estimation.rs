//! The shrinkage target, the penalized estimator and its companions.
//!
//! `β̂(k,h)` solves `(XᵀX + kI)·β = Xᵀy + k·h·α`. Several algebraically
//! equivalent routes are exposed so they can be checked against each other:
//! the direct Cholesky solve, the ridge-plus-offset form, the two-weight
//! form, the centered `V` form, OLS on the augmented model and the spectral
//! form used for grids.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::data::{transform_columns, Dataset, TransformMode};
use crate::error::{Error, Result};
use crate::numerics::{
    self, eig_sym, gram, least_squares, population_covariance, population_variance, shifted,
    Cholesky, EigenDecomposition,
};

/// Shrinkage target: `ȳ` followed by the simple-regression slope of `y` on
/// each regressor (divisor-`n` covariance over divisor-`n` variance).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector(Array1<f64>);

impl AlphaVector {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty alpha".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("alpha".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        numerics::norm(self.0.view())
    }
}

impl Serialize for AlphaVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

pub fn compute_alpha(data: &Dataset) -> Result<AlphaVector> {
    compute_alpha_xy(data.x().view(), data.y().view())
}

/// [`compute_alpha`] on raw arrays; column 0 of `x` is taken as the intercept.
pub fn compute_alpha_xy(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<AlphaVector> {
    let p = x.ncols();
    let mut alpha = Array1::<f64>::zeros(p);
    alpha[0] = numerics::mean(y);
    for j in 1..p {
        let col = x.column(j);
        let var = population_variance(col);
        if !(var > 0.0) {
            return Err(Error::DegenerateColumn(format!("column {j}")));
        }
        alpha[j] = population_covariance(y, col) / var;
    }
    AlphaVector::new(alpha)
}

/// Equal-entry target `d·(dᵀXᵀXd)⁻¹·dᵀXᵀX·β̂` with `d` the all-ones vector.
pub fn alpha_alpr(data: &Dataset, beta_ols: ArrayView1<f64>) -> Result<AlphaVector> {
    alpha_alpr_gram(gram(data.x().view()).view(), beta_ols)
}

pub fn alpha_alpr_gram(xtx: ArrayView2<f64>, beta_ols: ArrayView1<f64>) -> Result<AlphaVector> {
    if xtx.nrows() != beta_ols.len() || xtx.ncols() != beta_ols.len() {
        return Err(Error::Dimension("gram matrix and beta disagree in size".into()));
    }
    let denom = xtx.sum();
    if denom == 0.0 {
        return Err(Error::ZeroNorm("dᵀXᵀXd"));
    }
    let scalar = xtx.dot(&beta_ols).sum() / denom;
    AlphaVector::new(Array1::from_elem(beta_ols.len(), scalar))
}

/// The shrinkage pair `(k, h)`, optionally carried as weights `(k₁, k₂)` with
/// `k = k₂/k₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    k: f64,
    h: f64,
    weights: Option<(f64, f64)>,
}

impl PenaltyConfig {
    pub fn new(k: f64, h: f64) -> Result<Self> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::InvalidParameter(format!("k must be finite and >= 0, got {k}")));
        }
        check_h(h)?;
        Ok(Self { k, h, weights: None })
    }

    pub fn two_k(k1: f64, k2: f64, h: f64) -> Result<Self> {
        if !k1.is_finite() || k1 <= 0.0 {
            return Err(Error::InvalidParameter(format!("k1 must be > 0, got {k1}")));
        }
        if !k2.is_finite() || k2 < 0.0 {
            return Err(Error::InvalidParameter(format!("k2 must be >= 0, got {k2}")));
        }
        check_h(h)?;
        Ok(Self {
            k: k2 / k1,
            h,
            weights: Some((k1, k2)),
        })
    }

    pub fn ols() -> Self {
        Self { k: 0.0, h: 0.0, weights: None }
    }

    pub fn ridge(k: f64) -> Result<Self> {
        Self::new(k, 0.0)
    }

    pub fn penalized(k: f64) -> Result<Self> {
        Self::new(k, 1.0)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn weights(&self) -> Option<(f64, f64)> {
        self.weights
    }
}

fn check_h(h: f64) -> Result<()> {
    if h == 0.0 || h == 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("h must be 0 or 1, got {h}")))
    }
}

impl Serialize for PenaltyConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("PenaltyConfig", 4)?;
        s.serialize_field("k", &self.k)?;
        s.serialize_field("h", &self.h)?;
        s.serialize_field("k1", &self.weights.map(|w| w.0))?;
        s.serialize_field("k2", &self.weights.map(|w| w.1))?;
        s.end()
    }
}

/// Divisor for the residual variance estimate `σ̂² = eᵀe / divisor`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaConvention {
    /// `n − p`
    #[default]
    ResidualDf,
    /// `n`
    Observations,
}

impl SigmaConvention {
    pub fn divisor(self, n: usize, p: usize) -> f64 {
        match self {
            SigmaConvention::ResidualDf => (n - p) as f64,
            SigmaConvention::Observations => n as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub config: PenaltyConfig,
    pub beta: Array1<f64>,
    /// Exactly `y − X·beta`.
    pub residuals: Array1<f64>,
    pub gof: f64,
    /// From the OLS fit of the same data.
    pub sigma2_hat: f64,
    pub se: Array1<f64>,
}

impl FitResult {
    pub fn residual_sum(&self) -> f64 {
        self.residuals.sum()
    }
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FitResult", 9)?;
        s.serialize_field("k", &self.config.k)?;
        s.serialize_field("h", &self.config.h)?;
        s.serialize_field("k1", &self.config.weights.map(|w| w.0))?;
        s.serialize_field("k2", &self.config.weights.map(|w| w.1))?;
        s.serialize_field("beta", &self.beta.to_vec())?;
        s.serialize_field("se", &self.se.to_vec())?;
        s.serialize_field("gof", &self.gof)?;
        s.serialize_field("residual_sum", &self.residual_sum())?;
        s.serialize_field("sigma2_hat", &self.sigma2_hat)?;
        s.end()
    }
}

fn check_alpha(alpha: &AlphaVector, p: usize) -> Result<()> {
    if alpha.len() != p {
        return Err(Error::Dimension(format!("alpha has length {}, expected {p}", alpha.len())));
    }
    Ok(())
}

/// `β̂(k,h)` on raw arrays, without standard errors.
pub fn penalized_beta(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    alpha: &AlphaVector,
    k: f64,
    h: f64,
) -> Result<Array1<f64>> {
    check_alpha(alpha, x.ncols())?;
    let xtx = gram(x);
    let rhs = x.t().dot(&y) + &(alpha.values() * (k * h));
    Cholesky::factor(shifted(xtx.view(), k).view())?.solve(rhs.view())
}

/// OLS coefficients through the normal equations.
pub fn ols_beta(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    let xtx = gram(x);
    Cholesky::factor(xtx.view())?.solve(x.t().dot(&y).view())
}

/// `σ̂²` of the OLS fit.
pub fn sigma2_hat(data: &Dataset, convention: SigmaConvention) -> Result<f64> {
    let beta = ols_beta(data.x().view(), data.y().view())?;
    let e = data.y() - &data.x().dot(&beta);
    Ok(e.dot(&e) / convention.divisor(data.n(), data.p()))
}

pub fn fit_penalized(data: &Dataset, alpha: &AlphaVector, config: PenaltyConfig) -> Result<FitResult> {
    fit_penalized_with(data, alpha, config, SigmaConvention::default())
}

pub fn fit_penalized_with(
    data: &Dataset,
    alpha: &AlphaVector,
    config: PenaltyConfig,
    sigma: SigmaConvention,
) -> Result<FitResult> {
    let beta = penalized_beta(data.x().view(), data.y().view(), alpha, config.k, config.h)?;
    finish_fit(data, config, beta, sigma)
}

/// Solves `(k₁XᵀX + k₂I)·β = k₁Xᵀy + k₂·h·α` directly.
pub fn fit_penalized_two_k(
    data: &Dataset,
    alpha: &AlphaVector,
    k1: f64,
    k2: f64,
    h: f64,
) -> Result<FitResult> {
    let config = PenaltyConfig::two_k(k1, k2, h)?;
    check_alpha(alpha, data.p())?;
    let mut lhs = gram(data.x().view()) * k1;
    lhs.diag_mut().mapv_inplace(|d| d + k2);
    let rhs = data.x().t().dot(data.y()) * k1 + &(alpha.values() * (k2 * h));
    let beta = Cholesky::factor(lhs.view())?.solve(rhs.view())?;
    finish_fit(data, config, beta, SigmaConvention::default())
}

fn finish_fit(
    data: &Dataset,
    config: PenaltyConfig,
    beta: Array1<f64>,
    sigma: SigmaConvention,
) -> Result<FitResult> {
    let residuals = data.y() - &data.x().dot(&beta);
    let gof = gof_from_residuals(data, residuals.view())?;
    let sigma2_hat = sigma2_hat(data, sigma)?;
    let var = variance_covariance(data, config.k, sigma2_hat)?;
    let se = var.diag().mapv(|v| v.max(0.0).sqrt());
    Ok(FitResult {
        config,
        beta,
        residuals,
        gof,
        sigma2_hat,
        se,
    })
}

/// Ridge solution plus the target offset: `β̂(k) + k·h·Z(k)·α`.
pub fn fit_via_ridge_offset(data: &Dataset, alpha: &AlphaVector, k: f64, h: f64) -> Result<Array1<f64>> {
    check_alpha(alpha, data.p())?;
    let xtx = gram(data.x().view());
    let chol = Cholesky::factor(shifted(xtx.view(), k).view())?;
    let ridge = chol.solve(data.x().t().dot(data.y()).view())?;
    let offset = chol.solve(alpha.view())?;
    Ok(ridge + &(offset * (k * h)))
}

/// `(k₁XᵀX + k₂I)⁻¹·(k₁I + (k₂h/n)·V)·Xᵀy` with `V = diag(1, n/ΣX₂², …)`.
///
/// Valid only when every regressor column has zero mean.
pub fn fit_v_form(data: &Dataset, k1: f64, k2: f64, h: f64) -> Result<Array1<f64>> {
    PenaltyConfig::two_k(k1, k2, h)?;
    let n = data.n() as f64;
    let mut v = Array1::<f64>::ones(data.p());
    for (j, col) in data.x().axis_iter(Axis(1)).enumerate().skip(1) {
        let scale = col.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if numerics::mean(col).abs() > 1e-10 * scale {
            return Err(Error::InvalidParameter(format!("regressor {j} is not centered")));
        }
        v[j] = n / col.dot(&col);
    }
    let xty = data.x().t().dot(data.y());
    let rhs = &xty * k1 + &(&v * &xty * (k2 * h / n));
    let mut lhs = gram(data.x().view()) * k1;
    lhs.diag_mut().mapv_inplace(|d| d + k2);
    Cholesky::factor(lhs.view())?.solve(rhs.view())
}

/// `σ²·Z(k)·XᵀX·Z(k)` with `Z(k) = (XᵀX + kI)⁻¹`; independent of `h`.
pub fn variance_covariance(data: &Dataset, k: f64, sigma2: f64) -> Result<Array2<f64>> {
    variance_covariance_gram(gram(data.x().view()).view(), k, sigma2)
}

pub fn variance_covariance_gram(xtx: ArrayView2<f64>, k: f64, sigma2: f64) -> Result<Array2<f64>> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    let z = Cholesky::factor(shifted(xtx, k).view())?.inverse();
    let v = z.dot(&xtx).dot(&z) * sigma2;
    Ok((&v + &v.t()) * 0.5)
}

fn gof_from_residuals(data: &Dataset, e: ArrayView1<f64>) -> Result<f64> {
    let yty = data.y().dot(data.y());
    if yty == 0.0 {
        return Err(Error::ZeroNorm("y"));
    }
    Ok(1.0 - e.dot(&e) / yty)
}

/// `1 − eᵀe / yᵀy`.
pub fn gof(data: &Dataset, fit: &FitResult) -> Result<f64> {
    gof_from_residuals(data, fit.residuals.view())
}

/// `(β̂ᵀ(XᵀX + 2kI)β̂ − 2kh·β̂ᵀα) / yᵀy`, equal to [`gof`] for the exact solution.
pub fn gof_closed_form(data: &Dataset, alpha: &AlphaVector, fit: &FitResult) -> Result<f64> {
    let yty = data.y().dot(data.y());
    if yty == 0.0 {
        return Err(Error::ZeroNorm("y"));
    }
    let (k, h) = (fit.config.k, fit.config.h);
    let b = &fit.beta;
    let quad = b.dot(&gram(data.x().view()).dot(b)) + 2.0 * k * b.dot(b);
    Ok((quad - 2.0 * k * h * b.dot(alpha.values())) / yty)
}

/// Stacked model `[X; √k·I]`, `[y; √k·h·α]` whose OLS solution is `β̂(k,h)`.
#[derive(Debug, Clone)]
pub struct AugmentedModel {
    pub x_a: Array2<f64>,
    pub y_a: Array1<f64>,
}

impl AugmentedModel {
    /// OLS by Householder QR on the stacked matrix.
    pub fn ols(&self) -> Result<Array1<f64>> {
        least_squares(self.x_a.view(), self.y_a.view())
    }
}

/// Builds the augmented model; `transform` (if any) is applied to the
/// regressors with the intercept left intact.
pub fn augment(
    data: &Dataset,
    alpha: &AlphaVector,
    config: PenaltyConfig,
    transform: Option<TransformMode>,
) -> Result<AugmentedModel> {
    check_alpha(alpha, data.p())?;
    let (n, p) = (data.n(), data.p());
    let top = match transform {
        Some(mode) => transform_columns(data.x().view(), mode, true)?,
        None => data.x().clone(),
    };
    let root = config.k.sqrt();
    let mut x_a = Array2::<f64>::zeros((n + p, p));
    x_a.slice_mut(ndarray::s![..n, ..]).assign(&top);
    for j in 0..p {
        x_a[[n + j, j]] = root;
    }
    let mut y_a = Array1::<f64>::zeros(n + p);
    y_a.slice_mut(ndarray::s![..n]).assign(data.y());
    y_a.slice_mut(ndarray::s![n..])
        .assign(&(alpha.values() * (root * config.h)));
    Ok(AugmentedModel { x_a, y_a })
}

/// Eigendecomposition of `XᵀX` reused across many `k` values.
///
/// In the eigenbasis every quantity is diagonal: `β̂(k,h)` has coordinates
/// `(Γᵀ Xᵀy + k·h·Γᵀα)ᵢ / (λᵢ + k)`.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    eig: EigenDecomposition,
    xty_coords: Array1<f64>,
    xtx: Array2<f64>,
    yty: f64,
}

impl SpectralCache {
    pub fn new(data: &Dataset) -> Result<Self> {
        Self::from_xy(data.x().view(), data.y().view())
    }

    pub fn from_xy(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Self> {
        let xtx = gram(x);
        let eig = eig_sym(xtx.view())?;
        let xty_coords = eig.rotate(x.t().dot(&y).view());
        Ok(Self {
            eig,
            xty_coords,
            xtx,
            yty: y.dot(&y),
        })
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eig.eigenvalues
    }

    /// `Γᵀ v`.
    pub fn coords(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.eig.rotate(v)
    }

    fn check_shift(&self, k: f64) -> Result<()> {
        let floor = 64.0 * f64::EPSILON * self.eig.max().abs();
        if !(self.eig.min() + k > floor) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(())
    }

    pub fn beta(&self, k: f64, h: f64, alpha: &AlphaVector) -> Result<Array1<f64>> {
        check_alpha(alpha, self.xty_coords.len())?;
        self.check_shift(k)?;
        let b = self.coords(alpha.view());
        let c = Array1::from_iter(
            self.xty_coords
                .iter()
                .zip(b.iter())
                .zip(self.eig.eigenvalues.iter())
                .map(|((xy, bi), l)| (xy + k * h * bi) / (l + k)),
        );
        Ok(self.eig.eigenvectors.dot(&c))
    }

    /// `(β̂ᵀ(XᵀX + 2kI)β̂ − 2kh·β̂ᵀα) / yᵀy` for `β̂ = beta`.
    pub fn gof(&self, beta: ArrayView1<f64>, k: f64, h: f64, alpha: &AlphaVector) -> f64 {
        let quad = beta.dot(&self.xtx.dot(&beta)) + 2.0 * k * beta.dot(&beta);
        (quad - 2.0 * k * h * beta.dot(alpha.values())) / self.yty
    }

    /// Variance and squared-bias parts of the MSE given eigen-coordinates
    /// `b = Γᵀα` and `e = Γᵀβ`.
    pub fn mse_parts(&self, k: f64, h: f64, b: ArrayView1<f64>, e: ArrayView1<f64>, sigma2: f64) -> Result<(f64, f64)> {
        self.check_shift(k)?;
        let mut var = 0.0;
        let mut bias = 0.0;
        for ((l, bi), ei) in self.eig.eigenvalues.iter().zip(b.iter()).zip(e.iter()) {
            let d = l + k;
            var += l / (d * d);
            let r = k * (h * bi - ei) / d;
            bias += r * r;
        }
        Ok((sigma2 * var, bias))
    }
}
