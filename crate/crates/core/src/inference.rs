//! Row-resampling bootstrap for the coefficients and the goodness of fit.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{compute_alpha, compute_alpha_xy, penalized_beta, AlphaVector, PenaltyConfig};
use crate::rng::stream;

/// Normal quantile used for the symmetric interval.
pub const Z_975: f64 = 1.96;

/// Where the target `α` comes from when the data change.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaPolicy {
    /// `α` of the original sample.
    #[default]
    Fixed,
    /// `α` recomputed from each modified sample.
    Recompute,
}

impl FromStr for AlphaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(AlphaPolicy::Fixed),
            "recompute" => Ok(AlphaPolicy::Recompute),
            other => Err(Error::InvalidParameter(format!("unknown alpha policy {other:?}"))),
        }
    }
}

impl fmt::Display for AlphaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaPolicy::Fixed => "fixed",
            AlphaPolicy::Recompute => "recompute",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    /// `beta_1` … `beta_p` or `gof`.
    pub statistic: String,
    pub m: usize,
    /// Value on the original sample.
    pub estimate: f64,
    pub theta_bar: f64,
    /// Divisor `m − 1`.
    pub sigma_theta: f64,
    pub interval_normal: [f64; 2],
    pub interval_percentile: [f64; 2],
    pub seed: u64,
    #[serde(skip)]
    pub draws: Vec<f64>,
}

impl BootstrapSummary {
    fn from_draws(statistic: String, estimate: f64, draws: Vec<f64>, seed: u64) -> Self {
        let m = draws.len();
        let theta_bar = draws.iter().sum::<f64>() / m as f64;
        let ss: f64 = draws.iter().map(|t| (t - theta_bar) * (t - theta_bar)).sum();
        let sigma_theta = (ss / (m - 1) as f64).sqrt();
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            statistic,
            m,
            estimate,
            theta_bar,
            sigma_theta,
            interval_normal: [theta_bar - Z_975 * sigma_theta, theta_bar + Z_975 * sigma_theta],
            interval_percentile: [quantile_type7(&sorted, 0.025), quantile_type7(&sorted, 0.975)],
            seed,
            draws,
        }
    }

    pub fn normal_excludes_zero(&self) -> bool {
        excludes_zero(self.interval_normal)
    }

    pub fn percentile_excludes_zero(&self) -> bool {
        excludes_zero(self.interval_percentile)
    }
}

fn excludes_zero(iv: [f64; 2]) -> bool {
    iv[0] > 0.0 || iv[1] < 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub config: PenaltyConfig,
    pub m: usize,
    pub seed: u64,
    pub alpha_policy: AlphaPolicy,
    /// Resamples discarded because the fit was singular.
    pub redraws: usize,
    /// One entry per coefficient, then `gof`.
    pub summaries: Vec<BootstrapSummary>,
}

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap(
    data: &Dataset,
    policy: AlphaPolicy,
    config: PenaltyConfig,
    m: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    let alpha = compute_alpha(data)?;
    bootstrap_design(data.x().view(), data.y().view(), &alpha, policy, config, m, seed)
}

/// [`bootstrap`] on raw arrays; `alpha` is the original-sample target.
pub fn bootstrap_design(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    alpha: &AlphaVector,
    policy: AlphaPolicy,
    config: PenaltyConfig,
    m: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Dimension(format!("y has length {}, expected {n}", y.len())));
    }
    let (k, h) = (config.k(), config.h());
    let (full_beta, full_gof) = fit_stats(x, y, alpha, k, h)?;
    let cap = 10 * m;

    let draws: Vec<(Array1<f64>, f64, usize)> = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let mut redraws = 0usize;
            loop {
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let xb = Array2::from_shape_fn((n, p), |(i, j)| x[[idx[i], j]]);
                let yb = Array1::from_shape_fn(n, |i| y[idx[i]]);
                let attempt = match policy {
                    AlphaPolicy::Fixed => fit_stats(xb.view(), yb.view(), alpha, k, h),
                    AlphaPolicy::Recompute => compute_alpha_xy(xb.view(), yb.view())
                        .and_then(|a| fit_stats(xb.view(), yb.view(), &a, k, h)),
                };
                match attempt {
                    Ok((beta, gof)) => return Ok((beta, gof, redraws)),
                    Err(e) if is_singular(&e) => {
                        redraws += 1;
                        if redraws > cap {
                            return Err(Error::TooManyRedraws { redraws, cap });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;

    let redraws: usize = draws.iter().map(|d| d.2).sum();
    if redraws > cap {
        return Err(Error::TooManyRedraws { redraws, cap });
    }
    let mut summaries: Vec<BootstrapSummary> = (0..p)
        .map(|j| {
            let values = draws.iter().map(|d| d.0[j]).collect();
            BootstrapSummary::from_draws(format!("beta_{}", j + 1), full_beta[j], values, seed)
        })
        .collect();
    let gofs = draws.iter().map(|d| d.1).collect();
    summaries.push(BootstrapSummary::from_draws("gof".into(), full_gof, gofs, seed));
    Ok(BootstrapReport {
        config,
        m,
        seed,
        alpha_policy: policy,
        redraws,
        summaries,
    })
}

fn is_singular(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite | Error::DegenerateColumn(_) | Error::ZeroNorm(_))
}

fn fit_stats(x: ArrayView2<f64>, y: ArrayView1<f64>, alpha: &AlphaVector, k: f64, h: f64) -> Result<(Array1<f64>, f64)> {
    let beta = penalized_beta(x, y, alpha, k, h)?;
    let yty = y.dot(&y);
    if yty == 0.0 {
        return Err(Error::ZeroNorm("y"));
    }
    let e = &y - &x.dot(&beta);
    Ok((beta, 1.0 - e.dot(&e) / yty))
}
