//! Sensitivity of `β̂(k,h)` to 1% perturbations of the regressors.
//!
//! Each regressor column `x` (never the intercept) is replaced by
//! `x + 0.01·p·‖x‖/‖p‖` for a random direction `p`, the model is refitted
//! and the change is measured as `100·‖β̃ − β̃_p‖/‖β̃‖` over all
//! coefficients.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{compute_alpha, compute_alpha_xy, penalized_beta, PenaltyConfig};
use crate::grid::KGrid;
use crate::inference::{quantile_type7, AlphaPolicy};
use crate::numerics::norm;
use crate::rng::stream;

/// Relative size of each perturbation.
pub const PERTURBATION_SIZE: f64 = 0.01;

/// `x + 0.01·p·‖x‖/‖p‖`.
pub fn perturb_vector(x: ArrayView1<f64>, p: ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.len() != p.len() {
        return Err(Error::Dimension(format!("x has length {}, p has {}", x.len(), p.len())));
    }
    let pn = norm(p);
    if pn == 0.0 {
        return Err(Error::ZeroNorm("perturbation"));
    }
    let scale = PERTURBATION_SIZE * norm(x) / pn;
    Ok(&x + &(&p * scale))
}

/// Law of the entries of each random direction `p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationDistribution {
    #[default]
    Uniform01,
    StandardNormal,
}

impl PerturbationDistribution {
    fn draw<R: Rng>(self, rng: &mut R, n: usize) -> Array1<f64> {
        match self {
            PerturbationDistribution::Uniform01 => Array1::from_shape_fn(n, |_| rng.random::<f64>()),
            PerturbationDistribution::StandardNormal => {
                Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal))
            }
        }
    }
}

impl FromStr for PerturbationDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform01" => Ok(PerturbationDistribution::Uniform01),
            "normal" | "standard-normal" => Ok(PerturbationDistribution::StandardNormal),
            other => Err(Error::InvalidParameter(format!("unknown distribution {other:?}"))),
        }
    }
}

impl fmt::Display for PerturbationDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationDistribution::Uniform01 => "uniform01",
            PerturbationDistribution::StandardNormal => "standard-normal",
        })
    }
}

/// Defaults to a recomputed `α` and uniform directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StabilityOptions {
    pub alpha_policy: AlphaPolicy,
    pub distribution: PerturbationDistribution,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            alpha_policy: AlphaPolicy::Recompute,
            distribution: PerturbationDistribution::Uniform01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub k: f64,
    pub h: f64,
    pub iterations: usize,
    pub seed: u64,
    pub alpha_policy: AlphaPolicy,
    pub distribution: PerturbationDistribution,
    /// Iterations discarded because the refit was singular.
    pub redraws: usize,
    pub mean: f64,
    pub p025: f64,
    pub p975: f64,
    pub percent_changes: Vec<f64>,
}

/// Runs `iterations` independent perturb-and-refit rounds.
///
/// Iteration `i` draws from stream `(seed, i)`; `α` of the perturbed model
/// follows `options.alpha_policy`.
pub fn stability_analysis(
    data: &Dataset,
    config: PenaltyConfig,
    iterations: usize,
    seed: u64,
    options: StabilityOptions,
) -> Result<PerturbationReport> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be at least 1".into()));
    }
    let (k, h) = (config.k(), config.h());
    let alpha = compute_alpha(data)?;
    let x = data.x();
    let y = data.y();
    let base = penalized_beta(x.view(), y.view(), &alpha, k, h)?;
    let base_norm = norm(base.view());
    if base_norm == 0.0 {
        return Err(Error::ZeroNorm("fitted coefficients"));
    }
    let (n, p) = x.dim();
    let cap = 10 * iterations;

    let rounds: Vec<(f64, usize)> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = stream(seed, it as u64);
            let mut redraws = 0usize;
            loop {
                let mut xp = x.clone();
                for j in 1..p {
                    let dir = options.distribution.draw(&mut rng, n);
                    let col = perturb_vector(x.column(j), dir.view())?;
                    xp.column_mut(j).assign(&col);
                }
                let refit = match options.alpha_policy {
                    AlphaPolicy::Fixed => penalized_beta(xp.view(), y.view(), &alpha, k, h),
                    AlphaPolicy::Recompute => compute_alpha_xy(xp.view(), y.view())
                        .and_then(|a| penalized_beta(xp.view(), y.view(), &a, k, h)),
                };
                match refit {
                    Ok(bp) => return Ok((100.0 * norm((&base - &bp).view()) / base_norm, redraws)),
                    Err(Error::NotPositiveDefinite) => {
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

    let percent_changes: Vec<f64> = rounds.iter().map(|r| r.0).collect();
    let redraws = rounds.iter().map(|r| r.1).sum();
    let mut sorted = percent_changes.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(PerturbationReport {
        k,
        h,
        iterations,
        seed,
        alpha_policy: options.alpha_policy,
        distribution: options.distribution,
        redraws,
        mean: percent_changes.iter().sum::<f64>() / iterations as f64,
        p025: quantile_type7(&sorted, 0.025),
        p975: quantile_type7(&sorted, 0.975),
        percent_changes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub k: f64,
    pub mean: f64,
    pub p025: f64,
    pub p975: f64,
}

/// Mean percent change at every grid value, each with the same seed.
pub fn stability_curve(
    data: &Dataset,
    h: f64,
    grid: &KGrid,
    iterations: usize,
    seed: u64,
    options: StabilityOptions,
) -> Result<Vec<StabilityPoint>> {
    grid.values()
        .iter()
        .map(|&k| {
            let r = stability_analysis(data, PenaltyConfig::new(k, h)?, iterations, seed, options)?;
            Ok(StabilityPoint {
                k,
                mean: r.mean,
                p025: r.p025,
                p975: r.p975,
            })
        })
        .collect()
}
