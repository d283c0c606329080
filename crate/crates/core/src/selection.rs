//! Choosing `k`.
//!
//! Threshold rules pick the smallest grid value at which a measure drops
//! strictly below its threshold; the MSE rule takes the first grid minimum.
//! A rule that is never met yields no selection rather than the grid end.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::data::Dataset;
use crate::diagnostics::{ConditionSpectrum, VifContext};
use crate::error::{Error, Result};
use crate::estimation::{penalized_beta, AlphaVector, PenaltyConfig, SigmaConvention, SpectralCache};
use crate::grid::KGrid;
use crate::numerics::norm;
use crate::risk::{mse_curve, GridMinimum, PlugIn};

/// Weights of the least-squares term (`k1`) and the target term (`k2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyWeights {
    pub k1: f64,
    pub k2: f64,
}

/// `k1 = 1/(1+k)`, `k2 = k/(1+k)`.
pub fn weights_from_k(k: f64) -> Result<PenaltyWeights> {
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidParameter(format!("k must be finite and >= 0, got {k}")));
    }
    Ok(PenaltyWeights {
        k1: 1.0 / (1.0 + k),
        k2: k / (1.0 + k),
    })
}

/// `‖α − β̂(k,h)‖ / ‖α‖`.
pub fn alpha_distance(data: &Dataset, alpha: &AlphaVector, k: f64, h: f64) -> Result<f64> {
    PenaltyConfig::new(k, h)?;
    let an = alpha.norm();
    if an == 0.0 {
        return Err(Error::ZeroNorm("alpha"));
    }
    let beta = penalized_beta(data.x().view(), data.y().view(), alpha, k, h)?;
    Ok(norm((alpha.values() - &beta).view()) / an)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Largest `VIF(i,k)` below the threshold.
    VifThreshold,
    /// `CN(k)` below the threshold.
    CnThreshold,
    /// First grid minimum of the plug-in MSE.
    MinMse,
    /// `‖α − β̂‖/‖α‖` below the threshold.
    AlphaDistance,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "vif" | "vif_threshold" => Ok(Criterion::VifThreshold),
            "cn" | "cn_threshold" => Ok(Criterion::CnThreshold),
            "mse" | "min_mse" => Ok(Criterion::MinMse),
            "distance" | "alpha_distance" => Ok(Criterion::AlphaDistance),
            other => Err(Error::InvalidParameter(format!("unknown criterion {other:?}"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::VifThreshold => "vif_threshold",
            Criterion::CnThreshold => "cn_threshold",
            Criterion::MinMse => "min_mse",
            Criterion::AlphaDistance => "alpha_distance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub criterion: Criterion,
    pub h: f64,
    pub k_selected: Option<f64>,
    /// Value of the criterion's measure at `k_selected`.
    pub attained_value: Option<f64>,
    pub threshold: Option<f64>,
    pub grid_spec: String,
}

pub fn select_k(
    data: &Dataset,
    alpha: &AlphaVector,
    h: f64,
    grid: &KGrid,
    criterion: Criterion,
    threshold: Option<f64>,
) -> Result<SelectionResult> {
    PenaltyConfig::new(0.0, h)?;
    let ks = grid.values();
    let result = |hit: Option<(f64, f64)>, threshold| SelectionResult {
        criterion,
        h,
        k_selected: hit.map(|(k, _)| k),
        attained_value: hit.map(|(_, v)| v),
        threshold,
        grid_spec: grid.spec().to_string(),
    };

    if criterion == Criterion::MinMse {
        let plug = PlugIn::ols(data, SigmaConvention::default())?;
        grid.require_scan_shape()?;
        let cache = SpectralCache::new(data)?;
        let curve = mse_curve(&cache, alpha, h, ks, plug.beta.view(), plug.sigma2)?;
        let min = GridMinimum::from_curve(grid, &curve);
        let hit = min.k_star.zip(min.mse_star);
        return Ok(result(hit, None));
    }

    let t = threshold.ok_or_else(|| {
        Error::InvalidParameter(format!("criterion {criterion} needs a threshold"))
    })?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite, got {t}")));
    }
    let hit = match criterion {
        Criterion::VifThreshold => {
            let ctx = VifContext::new(data)?;
            first_below(ks, t, |k| {
                Ok(ctx.vif(k)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
            })?
        }
        Criterion::CnThreshold => {
            let spectrum = ConditionSpectrum::new(data)?;
            first_below(ks, t, |k| Ok(spectrum.cn(k)))?
        }
        Criterion::AlphaDistance => {
            let an = alpha.norm();
            if an == 0.0 {
                return Err(Error::ZeroNorm("alpha"));
            }
            let cache = SpectralCache::new(data)?;
            first_below(ks, t, |k| {
                let beta = cache.beta(k, h, alpha)?;
                Ok(norm((alpha.values() - &beta).view()) / an)
            })?
        }
        Criterion::MinMse => unreachable!("handled above"),
    };
    Ok(result(hit, Some(t)))
}

fn first_below<F>(ks: &[f64], threshold: f64, mut measure: F) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    for &k in ks {
        let v = measure(k)?;
        if v < threshold {
            return Ok(Some((k, v)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::compute_alpha;

    fn credit() -> (Dataset, AlphaVector, KGrid) {
        let d = Dataset::us_credit();
        let a = compute_alpha(&d).unwrap();
        (d, a, "0:1:0.01".parse().unwrap())
    }

    #[test]
    fn weights() {
        assert_eq!(weights_from_k(1.0).unwrap(), PenaltyWeights { k1: 0.5, k2: 0.5 });
        let w = weights_from_k(2.0).unwrap();
        assert!((w.k1 - 1.0 / 3.0).abs() < 1e-15 && (w.k2 - 2.0 / 3.0).abs() < 1e-15);
        let w = weights_from_k(0.01).unwrap();
        assert!((w.k1 - 0.990099).abs() < 1e-6 && (w.k2 - 0.00990099).abs() < 1e-8);
        assert!(w.k2 < w.k1);
        assert!(weights_from_k(-1.0).is_err());
    }

    #[test]
    fn credit_selections() {
        let (d, a, g) = credit();
        let vif = select_k(&d, &a, 1.0, &g, Criterion::VifThreshold, Some(10.0)).unwrap();
        assert!((vif.k_selected.unwrap() - 0.08).abs() < 1e-12);
        assert!((vif.attained_value.unwrap() / 8.980033 - 1.0).abs() < 5e-3);
        let cn = select_k(&d, &a, 1.0, &g, Criterion::CnThreshold, Some(10.0)).unwrap();
        assert!((cn.k_selected.unwrap() - 0.04).abs() < 1e-12);
        let mse = select_k(&d, &a, 1.0, &g, Criterion::MinMse, None).unwrap();
        assert!((mse.k_selected.unwrap() - 0.07).abs() < 1e-12);
    }

    #[test]
    fn unmet_threshold_is_absent() {
        let (d, a, g) = credit();
        let r = select_k(&d, &a, 1.0, &g, Criterion::AlphaDistance, Some(1e-9)).unwrap();
        assert_eq!(r.k_selected, None);
        assert_eq!(r.attained_value, None);
    }

    #[test]
    fn distance_shrinks_with_k() {
        let (d, a, _) = credit();
        let d0 = alpha_distance(&d, &a, 0.0, 1.0).unwrap();
        let ols = penalized_beta(d.x().view(), d.y().view(), &a, 0.0, 1.0).unwrap();
        assert!((d0 - norm((a.values() - &ols).view()) / a.norm()).abs() < 1e-12);
        assert!(alpha_distance(&d, &a, 50.0, 1.0).unwrap() < alpha_distance(&d, &a, 1.0, 1.0).unwrap());
    }

    #[test]
    fn threshold_required() {
        let (d, a, g) = credit();
        assert!(select_k(&d, &a, 1.0, &g, Criterion::CnThreshold, None).is_err());
        assert!("bogus".parse::<Criterion>().is_err());
        assert_eq!("min-mse".parse::<Criterion>().unwrap(), Criterion::MinMse);
    }
}
