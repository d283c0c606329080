//! Per-`k` tables of estimates and diagnostics, for plotting and selection.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::diagnostics::{ConditionSpectrum, VifContext};
use crate::error::Result;
use crate::estimation::{AlphaVector, PenaltyConfig, SigmaConvention, SpectralCache};
use crate::grid::KGrid;
use crate::numerics::norm;
use crate::risk::PlugIn;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: f64,
    pub beta: Vec<f64>,
    /// `‖β̂(k,h)‖²`.
    pub norm2: f64,
    pub gof: f64,
    /// Plug-in MSE (`β̂_OLS`, `σ̂²` with divisor `n − p`).
    pub mse: f64,
    pub max_vif: f64,
    pub cn: f64,
    /// `‖α − β̂‖/‖α‖`, absent when `α = 0`.
    pub alpha_dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceGrid {
    pub dependent: String,
    pub names: Vec<String>,
    pub h: f64,
    pub grid_spec: String,
    /// Ordered by `k`.
    pub rows: Vec<TraceRow>,
}

pub fn compute_trace(data: &Dataset, alpha: &AlphaVector, h: f64, grid: &KGrid) -> Result<TraceGrid> {
    PenaltyConfig::new(0.0, h)?;
    let cache = SpectralCache::new(data)?;
    let vif = VifContext::new(data)?;
    let spectrum = ConditionSpectrum::new(data)?;
    let plug = PlugIn::ols(data, SigmaConvention::default())?;
    let b = cache.coords(alpha.view());
    let e = cache.coords(plug.beta.view());
    let an = alpha.norm();

    let rows = grid
        .values()
        .par_iter()
        .map(|&k| {
            let beta = cache.beta(k, h, alpha)?;
            let (var, bias) = cache.mse_parts(k, h, b.view(), e.view(), plug.sigma2)?;
            let max_vif = vif.vif(k)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            Ok(TraceRow {
                k,
                norm2: beta.dot(&beta),
                gof: cache.gof(beta.view(), k, h, alpha),
                mse: var + bias,
                max_vif,
                cn: spectrum.cn(k),
                alpha_dist: (an > 0.0).then(|| norm((alpha.values() - &beta).view()) / an),
                beta: beta.to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TraceGrid {
        dependent: data.dependent().to_string(),
        names: data.names().to_vec(),
        h,
        grid_spec: grid.spec().to_string(),
        rows,
    })
}

impl TraceGrid {
    /// Long-form CSV: `k, beta_1..beta_p, norm2, gof, mse, max_vif, cn, alpha_dist`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = self.names.len();
        let mut header = vec!["k".to_string()];
        header.extend((1..=p).map(|j| format!("beta_{j}")));
        header.extend(["norm2", "gof", "mse", "max_vif", "cn", "alpha_dist"].map(String::from));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.k.to_string()];
            rec.extend(row.beta.iter().map(f64::to_string));
            rec.extend([row.norm2, row.gof, row.mse, row.max_vif, row.cn].map(|v| v.to_string()));
            rec.push(row.alpha_dist.map_or_else(String::new, |v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{compute_alpha, fit_penalized};

    fn trace(h: f64, spec: &str) -> (Dataset, AlphaVector, TraceGrid) {
        let d = Dataset::us_credit();
        let a = compute_alpha(&d).unwrap();
        let t = compute_trace(&d, &a, h, &spec.parse().unwrap()).unwrap();
        (d, a, t)
    }

    #[test]
    fn first_row_is_ols() {
        let (d, a, t) = trace(1.0, "0:1:0.01");
        let ols = fit_penalized(&d, &a, PenaltyConfig::ols()).unwrap();
        let row = &t.rows[0];
        for (x, y) in row.beta.iter().zip(ols.beta.iter()) {
            assert!((x - y).abs() < 1e-7 * y.abs().max(1.0));
        }
        assert!((row.gof - ols.gof).abs() < 1e-9);
        assert!((row.mse / 199.9497 - 1.0).abs() < 1e-2);
        assert_eq!(t.rows.len(), 101);
        assert!(t.rows.windows(2).all(|w| w[0].k < w[1].k));
    }

    #[test]
    fn ridge_norm_and_gof_fall() {
        let (_, _, t) = trace(0.0, "0:100:0.5");
        assert!(t.rows.windows(2).all(|w| w[1].norm2 < w[0].norm2));
        assert!(t.rows.windows(2).all(|w| w[1].gof <= w[0].gof + 1e-10));
    }

    #[test]
    fn penalized_trace_heads_to_alpha() {
        let (_, a, t) = trace(1.0, "0:100:0.5");
        let last = t.rows.last().unwrap();
        assert!(last.norm2 > 0.5 * a.values().dot(a.values()));
        assert!(last.alpha_dist.unwrap() < t.rows[0].alpha_dist.unwrap());
    }

    #[test]
    fn csv_layout() {
        let (_, _, t) = trace(1.0, "0:0.02:0.01");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,beta_1,beta_2,beta_3,beta_4,norm2,gof,mse,max_vif,cn,alpha_dist"
        );
        assert_eq!(lines.count(), 3);
    }
}
