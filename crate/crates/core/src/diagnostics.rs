//! Multicollinearity measures and their extensions to the penalized fit.
//!
//! `VIF(i,k)` comes from auxiliary regressions on the standardized design
//! stacked over `√k·I`; `CN(k)` from the eigenvalues of the unit-length
//! cross-product shifted by `k`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::data::{transform_columns, Dataset, TransformMode};
use crate::error::Result;
use crate::numerics::{correlation_det, eig_sym, gram, mean, population_variance, Cholesky};

/// CV below this signals troubling non-essential collinearity.
pub const CV_THRESHOLD: f64 = 0.1002506;
pub const VIF_THRESHOLD: f64 = 10.0;
pub const CN_THRESHOLD_MODERATE: f64 = 20.0;
pub const CN_THRESHOLD: f64 = 30.0;
pub const DET_THRESHOLD: f64 = 0.1013;

/// `sd(Xᵢ)/|mean(Xᵢ)|` (divisor-`n` sd) for every column after the first.
///
/// A zero-mean column yields `+∞`.
pub fn coefficient_of_variation(x: ArrayView2<f64>) -> Vec<f64> {
    x.axis_iter(Axis(1))
        .skip(1)
        .map(|col| {
            let sd = population_variance(col).sqrt();
            let m = mean(col).abs();
            if sd == 0.0 {
                0.0
            } else if m == 0.0 {
                f64::INFINITY
            } else {
                sd / m
            }
        })
        .collect()
}

/// Standardized regressors, ready for VIF evaluation at any `k`.
#[derive(Debug, Clone)]
pub struct VifContext {
    standardized: Array2<f64>,
}

impl VifContext {
    pub fn new(data: &Dataset) -> Result<Self> {
        Self::from_regressors(data.regressors())
    }

    /// `regressors` excludes the intercept.
    pub fn from_regressors(regressors: ArrayView2<f64>) -> Result<Self> {
        Ok(Self {
            standardized: transform_columns(regressors, TransformMode::Standardize, false)?,
        })
    }

    /// `VIF(i,k) = aᵢᵀaᵢ / RSSᵢ` where `aᵢ` is column `i` of the augmented
    /// matrix and `RSSᵢ` the residual sum of squares of its regression on the
    /// other augmented columns.
    pub fn vif(&self, k: f64) -> Result<Vec<f64>> {
        let (n, q) = self.standardized.dim();
        let mut aug = Array2::<f64>::zeros((n + q, q));
        aug.slice_mut(ndarray::s![..n, ..]).assign(&self.standardized);
        let root = k.sqrt();
        for j in 0..q {
            aug[[n + j, j]] = root;
        }
        let cross = gram(aug.view());
        (0..q)
            .map(|i| {
                let total = cross[[i, i]];
                if q == 1 {
                    return Ok(1.0);
                }
                let others: Vec<usize> = (0..q).filter(|&j| j != i).collect();
                let g = Array2::from_shape_fn((q - 1, q - 1), |(r, c)| cross[[others[r], others[c]]]);
                let rhs = Array1::from_iter(others.iter().map(|&j| cross[[j, i]]));
                let coef = Cholesky::factor(g.view())?.solve(rhs.view())?;
                let rss = total - rhs.dot(&coef);
                Ok(total / rss)
            })
            .collect()
    }
}

pub fn vif_extended(data: &Dataset, k: f64) -> Result<Vec<f64>> {
    VifContext::new(data)?.vif(k)
}

/// Extreme eigenvalues of the unit-length cross-product, intercept included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionSpectrum {
    pub xi_max: f64,
    pub xi_min: f64,
}

impl ConditionSpectrum {
    pub fn new(data: &Dataset) -> Result<Self> {
        Self::from_design(data.x().view())
    }

    pub fn from_design(x: ArrayView2<f64>) -> Result<Self> {
        let unit = transform_columns(x, TransformMode::UnitLength, false)?;
        let eig = eig_sym(gram(unit.view()).view())?;
        Ok(Self {
            xi_max: eig.max(),
            xi_min: eig.min(),
        })
    }

    /// `√((ξ_max + k)/(ξ_min + k))`; `+∞` if the shifted minimum is not positive.
    pub fn cn(&self, k: f64) -> f64 {
        let lo = self.xi_min + k;
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            ((self.xi_max + k) / lo).sqrt()
        }
    }
}

pub fn condition_number_extended(data: &Dataset, k: f64) -> Result<f64> {
    Ok(ConditionSpectrum::new(data)?.cn(k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    /// Per regressor: CV below [`CV_THRESHOLD`].
    pub low_cv: Vec<bool>,
    /// Per regressor: VIF above [`VIF_THRESHOLD`].
    pub high_vif: Vec<bool>,
    pub cn_above_20: bool,
    pub cn_above_30: bool,
    pub det_below: bool,
    pub non_essential: bool,
    pub essential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub k: f64,
    pub regressors: Vec<String>,
    pub cv: Vec<f64>,
    /// Smallest finite CV.
    pub min_cv: Option<f64>,
    pub vif: Vec<f64>,
    pub max_vif: f64,
    pub cn: f64,
    /// Determinant of the regressor correlation matrix; independent of `k`.
    pub corr_det: f64,
    pub verdicts: Verdicts,
    pub warnings: Vec<String>,
}

pub fn full_report(data: &Dataset, k: f64) -> Result<DiagnosticsReport> {
    let regressors: Vec<String> = data.names()[1..].to_vec();
    let cv = coefficient_of_variation(data.x().view());
    let vif = vif_extended(data, k)?;
    let cn = condition_number_extended(data, k)?;
    let corr_det = if data.p() > 2 {
        correlation_det(data.regressors())?.1
    } else {
        1.0
    };

    let mut warnings = Vec::new();
    for (name, c) in regressors.iter().zip(&cv) {
        if c.is_infinite() {
            warnings.push(format!("{name} has zero mean; its CV is infinite and left out of min_cv"));
        }
    }
    let min_cv = cv.iter().copied().filter(|c| c.is_finite()).reduce(f64::min);
    let max_vif = vif.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let low_cv: Vec<bool> = cv.iter().map(|c| *c < CV_THRESHOLD).collect();
    let high_vif: Vec<bool> = vif.iter().map(|v| *v > VIF_THRESHOLD).collect();
    let det_below = corr_det < DET_THRESHOLD;
    let verdicts = Verdicts {
        non_essential: low_cv.iter().any(|b| *b),
        essential: high_vif.iter().any(|b| *b) || det_below,
        low_cv,
        high_vif,
        cn_above_20: cn > CN_THRESHOLD_MODERATE,
        cn_above_30: cn > CN_THRESHOLD,
        det_below,
    };
    Ok(DiagnosticsReport {
        k,
        regressors,
        cv,
        min_cv,
        vif,
        max_vif,
        cn,
        corr_det,
        verdicts,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn orthogonal() -> Dataset {
        Dataset::from_columns(
            "y",
            vec![3.0, 1.0, 4.0, 1.5, 5.0, 9.0],
            vec![
                ("a".into(), vec![1.0, -1.0, 1.0, -1.0, 0.0, 0.0]),
                ("b".into(), vec![1.0, 1.0, -1.0, -1.0, 0.0, 0.0]),
            ],
        )
        .unwrap()
    }

    // (1 + k)·[(R + kI)⁻¹]ᵢᵢ from the correlation matrix
    fn vif_oracle(data: &Dataset, k: f64) -> Vec<f64> {
        let (r, _) = correlation_det(data.regressors()).unwrap();
        let mut shifted = r.clone();
        shifted.diag_mut().mapv_inplace(|d| d + k);
        let inv = Cholesky::factor(shifted.view()).unwrap().inverse();
        inv.diag().iter().map(|d| (1.0 + k) * d).collect()
    }

    #[test]
    fn credit_cv() {
        let cv = coefficient_of_variation(Dataset::us_credit().x().view());
        for (got, want) in cv.iter().zip([0.1718940, 0.2482804, 0.3607848]) {
            assert!((got - want).abs() < 1e-5);
        }
    }

    #[test]
    fn cv_edge_cases() {
        let x = array![[1.0, 3.0, 1.0], [1.0, 3.0, -1.0]];
        let cv = coefficient_of_variation(x.view());
        assert_eq!(cv[0], 0.0);
        assert!(cv[1].is_infinite());
    }

    #[test]
    fn credit_vif() {
        let d = Dataset::us_credit();
        let v0 = vif_extended(&d, 0.0).unwrap();
        for (got, want) in v0.iter().zip([589.7540, 281.8862, 189.4874]) {
            assert!((got / want - 1.0).abs() < 1e-3, "{got}");
        }
        let v8 = vif_extended(&d, 0.08).unwrap();
        for (got, want) in v8.iter().zip([8.98, 8.6686, 8.5752]) {
            assert!((got / want - 1.0).abs() < 1e-3, "{got}");
        }
    }

    #[test]
    fn vif_matches_closed_form() {
        let d = Dataset::us_credit();
        for k in [0.0, 0.01, 0.08, 1.0, 50.0] {
            let got = vif_extended(&d, k).unwrap();
            for (g, w) in got.iter().zip(vif_oracle(&d, k)) {
                assert!((g / w - 1.0).abs() < 1e-8, "k={k}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn credit_cn() {
        let d = Dataset::us_credit();
        assert!((condition_number_extended(&d, 0.0).unwrap() / 332.3 - 1.0).abs() < 5e-3);
        assert!((condition_number_extended(&d, 0.01).unwrap() / 19.8305 - 1.0).abs() < 5e-3);
        assert!((condition_number_extended(&d, 0.04).unwrap() / 9.9662 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn orthogonal_design_is_clean() {
        let d = orthogonal();
        let r = full_report(&d, 0.0).unwrap();
        assert!(r.vif.iter().all(|v| (v - 1.0).abs() < 1e-12));
        for k in [0.0, 0.5, 10.0] {
            assert!((condition_number_extended(&d, k).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(!r.verdicts.essential && !r.verdicts.non_essential);
        assert!(!r.verdicts.cn_above_20 && !r.verdicts.cn_above_30);
        assert_eq!(r.warnings.len(), 2);
        assert_eq!(r.min_cv, None);
    }

    #[test]
    fn credit_report_verdicts() {
        let d = Dataset::us_credit();
        let r = full_report(&d, 0.0).unwrap();
        assert!(r.verdicts.essential && r.verdicts.cn_above_30 && r.verdicts.det_below);
        assert!(!r.verdicts.non_essential);
        assert!((r.corr_det / 2.007699e-05 - 1.0).abs() < 1e-3);
        let r = full_report(&d, 0.08).unwrap();
        assert!(r.verdicts.high_vif.iter().all(|b| !b));
        assert!((r.max_vif / 8.980033 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn single_regressor_vif_is_one() {
        let d = Dataset::from_columns("y", vec![1.0, 2.0, 4.0], vec![("a".into(), vec![1.0, 3.0, 2.0])]).unwrap();
        assert_eq!(vif_extended(&d, 0.3).unwrap(), vec![1.0]);
        assert_eq!(full_report(&d, 0.0).unwrap().corr_det, 1.0);
    }
}
