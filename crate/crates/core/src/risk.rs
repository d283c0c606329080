//! Mean squared error of `β̂(k,h)` and grid minimization over `k`.
//!
//! `MSE = σ²·tr(Z·XᵀX·Z) + ‖(Z·XᵀX − I)β + k·h·Z·α‖²` with `Z = (XᵀX + kI)⁻¹`.
//! In the eigenbasis of `XᵀX` this splits into the ridge MSE plus
//! `S(k,h) = −2h·Σ eᵢbᵢk²/(λᵢ+k)² + h²·Σ bᵢ²k²/(λᵢ+k)²` where `e = Γᵀβ` and
//! `b = Γᵀα`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{ols_beta, sigma2_hat, AlphaVector, PenaltyConfig, SigmaConvention, SpectralCache};
use crate::grid::KGrid;
use crate::numerics::{gram, shifted, Cholesky};

/// Stand-ins for the unknown `β` and `σ²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlugIn {
    #[serde(serialize_with = "crate::ser::array1")]
    pub beta: Array1<f64>,
    pub sigma2: f64,
}

impl PlugIn {
    /// `β̂_OLS` and the OLS residual variance.
    pub fn ols(data: &Dataset, convention: SigmaConvention) -> Result<Self> {
        Ok(Self {
            beta: ols_beta(data.x().view(), data.y().view())?,
            sigma2: sigma2_hat(data, convention)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseBreakdown {
    pub k: f64,
    pub h: f64,
    /// `σ²·tr(var)`.
    pub variance_term: f64,
    /// Squared bias norm.
    pub bias_term: f64,
    pub total: f64,
    /// MSE of ridge at the same `k`.
    pub ridge_mse: f64,
    pub s_term: f64,
}

/// MSE by explicit matrix products, with the ridge part and `S(k,h)` from
/// their spectral closed forms.
pub fn mse(
    data: &Dataset,
    alpha: &AlphaVector,
    config: PenaltyConfig,
    beta_plug: ArrayView1<f64>,
    sigma2: f64,
) -> Result<MseBreakdown> {
    let p = data.p();
    if beta_plug.len() != p || alpha.len() != p {
        return Err(Error::Dimension("beta and alpha must have length p".into()));
    }
    let (k, h) = (config.k(), config.h());
    let xtx = gram(data.x().view());
    let z = Cholesky::factor(shifted(xtx.view(), k).view())?.inverse();
    let zx = z.dot(&xtx);
    let variance_term = sigma2 * zx.dot(&z).diag().sum();
    let bias = (&zx - &Array2::<f64>::eye(p)).dot(&beta_plug) + &(z.dot(alpha.values()) * (k * h));
    let bias_term = bias.dot(&bias);

    let cache = SpectralCache::new(data)?;
    let lambda = cache.eigenvalues();
    let b = cache.coords(alpha.view());
    let e = cache.coords(beta_plug);
    Ok(MseBreakdown {
        k,
        h,
        variance_term,
        bias_term,
        total: variance_term + bias_term,
        ridge_mse: ridge_mse_spectral(lambda, e.view(), k, sigma2),
        s_term: s_term(lambda, b.view(), e.view(), k, h),
    })
}

/// `σ²·Σ λᵢ/(λᵢ+k)² + Σ k²eᵢ²/(λᵢ+k)²`.
pub fn ridge_mse_spectral(lambda: &Array1<f64>, e: ArrayView1<f64>, k: f64, sigma2: f64) -> f64 {
    lambda
        .iter()
        .zip(e.iter())
        .map(|(l, ei)| {
            let d = (l + k) * (l + k);
            sigma2 * l / d + k * k * ei * ei / d
        })
        .sum()
}

/// `S(k,h)`, the gap between the penalized and ridge MSE at the same `k`.
pub fn s_term(lambda: &Array1<f64>, b: ArrayView1<f64>, e: ArrayView1<f64>, k: f64, h: f64) -> f64 {
    let (cross, square) = s_term_parts(lambda, b, e, k);
    -2.0 * h * cross + h * h * square
}

/// `(Σ eᵢbᵢk²/(λᵢ+k)², Σ bᵢ²k²/(λᵢ+k)²)`.
pub fn s_term_parts(lambda: &Array1<f64>, b: ArrayView1<f64>, e: ArrayView1<f64>, k: f64) -> (f64, f64) {
    let mut cross = 0.0;
    let mut square = 0.0;
    for ((l, bi), ei) in lambda.iter().zip(b.iter()).zip(e.iter()) {
        let w = k * k / ((l + k) * (l + k));
        cross += ei * bi * w;
        square += bi * bi * w;
    }
    (cross, square)
}

/// Limit of the MSE as `k → ∞`: `βᵀβ − 2h·βᵀα + h²·αᵀα`.
pub fn mse_asymptote(alpha: &AlphaVector, beta_plug: ArrayView1<f64>, h: f64) -> f64 {
    let a = alpha.values();
    beta_plug.dot(&beta_plug) - 2.0 * h * beta_plug.dot(a) + h * h * a.dot(a)
}

/// MSE totals along `ks`, reusing one eigendecomposition.
pub fn mse_curve(
    cache: &SpectralCache,
    alpha: &AlphaVector,
    h: f64,
    ks: &[f64],
    beta_plug: ArrayView1<f64>,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let b = cache.coords(alpha.view());
    let e = cache.coords(beta_plug);
    ks.iter()
        .map(|&k| {
            let (v, s) = cache.mse_parts(k, h, b.view(), e.view(), sigma2)?;
            Ok(v + s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Uniqueness {
    None,
    Unique,
    Multiple,
}

/// First strict interior local minimum of a sampled curve, plus how many
/// such minima exist.
pub fn first_local_minimum(values: &[f64]) -> (Option<usize>, Uniqueness) {
    let mut first = None;
    let mut count = 0usize;
    for j in 1..values.len().saturating_sub(1) {
        if values[j] < values[j - 1] && values[j] < values[j + 1] {
            count += 1;
            first.get_or_insert(j);
        }
    }
    let uniqueness = match count {
        0 => Uniqueness::None,
        1 => Uniqueness::Unique,
        _ => Uniqueness::Multiple,
    };
    (first, uniqueness)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub k_star: Option<f64>,
    pub mse_star: Option<f64>,
    pub index: Option<usize>,
    pub uniqueness: Uniqueness,
    pub grid: KGrid,
}

impl GridMinimum {
    pub fn from_curve(grid: &KGrid, curve: &[f64]) -> Self {
        let (index, uniqueness) = first_local_minimum(curve);
        Self {
            k_star: index.map(|i| grid.values()[i]),
            mse_star: index.map(|i| curve[i]),
            index,
            uniqueness,
            grid: grid.clone(),
        }
    }
}

impl Serialize for GridMinimum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("GridMinimum", 4)?;
        s.serialize_field("k_star", &self.k_star)?;
        s.serialize_field("mse_star", &self.mse_star)?;
        s.serialize_field("uniqueness", &self.uniqueness)?;
        s.serialize_field("grid_spec", self.grid.spec())?;
        s.end()
    }
}

/// Scans `grid` for the first strict local minimum of `MSE(β̂(k,h))`.
pub fn minimize_mse_grid(
    data: &Dataset,
    alpha: &AlphaVector,
    h: f64,
    grid: &KGrid,
    beta_plug: ArrayView1<f64>,
    sigma2: f64,
) -> Result<GridMinimum> {
    PenaltyConfig::new(0.0, h)?;
    grid.require_scan_shape()?;
    let cache = SpectralCache::new(data)?;
    let curve = mse_curve(&cache, alpha, h, grid.values(), beta_plug, sigma2)?;
    Ok(GridMinimum::from_curve(grid, &curve))
}
