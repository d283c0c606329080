//! Monte Carlo comparison of OLS, ridge and the penalized estimator.
//!
//! Each replication draws a collinear design, evaluates the exact MSE curves
//! with the true `β` and `σ² = 1`, locates the first grid minimum of the
//! ridge and penalized curves and labels the ordering of the three MSEs.

use ndarray::{Array1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::diagnostics::{coefficient_of_variation, ConditionSpectrum, VifContext};
use crate::error::{Error, Result};
use crate::estimation::{compute_alpha, SpectralCache};
use crate::grid::KGrid;
use crate::inference::quantile_type7;
use crate::risk::{mse_curve, GridMinimum, Uniqueness};
use crate::rng::stream;

pub const P_VALUES: [usize; 4] = [3, 4, 5, 6];
pub const XI_VALUES: [f64; 4] = [0.96, 0.97, 0.98, 0.99];
pub const SIGMA_VALUES: [f64; 5] = [0.01, 0.1, 5.0, 10.0, 15.0];
pub const MU_VALUES: [f64; 11] = [0.0, 2.0, -2.0, 4.0, -4.0, 6.0, -6.0, 8.0, -8.0, 10.0, -10.0];
pub const BETA_VALUES: [f64; 10] = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0, 5.0, -5.0];

/// `30, 40, …, 200`.
pub fn n_values() -> Vec<usize> {
    (30..=200).step_by(10).collect()
}

/// One combination of the design factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignCell {
    pub p: usize,
    pub xi: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Full factorial `p × ξ × σ × n`, with `n` varying fastest.
pub fn factorial() -> Vec<DesignCell> {
    let ns = n_values();
    let mut cells = Vec::with_capacity(P_VALUES.len() * XI_VALUES.len() * SIGMA_VALUES.len() * ns.len());
    for &p in &P_VALUES {
        for &xi in &XI_VALUES {
            for &sigma in &SIGMA_VALUES {
                for &n in &ns {
                    cells.push(DesignCell { p, xi, sigma, n });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub replications: usize,
    pub grid_stop: f64,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            replications: 1440,
            grid_stop: 1.0,
            grid_step: 0.01,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    /// Replication `r` uses factorial cell `r mod 1440`.
    pub fn cell(&self, replication: usize) -> DesignCell {
        let cells = factorial();
        cells[replication % cells.len()]
    }

    pub fn grid(&self) -> Result<KGrid> {
        let g = KGrid::range(0.0, self.grid_stop, self.grid_step)?;
        g.require_scan_shape()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDesign {
    pub data: Dataset,
    pub beta: Array1<f64>,
    /// Means of the `p − 1` own columns followed by the shared column.
    pub mu: Vec<f64>,
}

/// Draws `W` (`p − 1` own columns plus one shared column, each
/// `N(μ, σ²)` with its own `μ`), forms `Xᵢ = √(1−ξ²)·Wᵢ + W_shared`, and
/// sets `y = Xβ + u` with `u ~ N(0, 1)`.
pub fn generate_design(cell: DesignCell, seed: u64, index: u64) -> Result<GeneratedDesign> {
    let DesignCell { p, xi, sigma, n } = cell;
    if p < 2 || n <= p || !(0.0..1.0).contains(&xi) || !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid design cell {cell:?}")));
    }
    let mut rng = stream(seed, index);
    let mu: Vec<f64> = (0..p)
        .map(|_| MU_VALUES[rng.random_range(0..MU_VALUES.len())])
        .collect();
    let w: Vec<Vec<f64>> = mu
        .iter()
        .map(|m| {
            (0..n)
                .map(|_| m + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let beta = Array1::from_iter((0..p).map(|_| BETA_VALUES[rng.random_range(0..BETA_VALUES.len())]));
    let scale = (1.0 - xi * xi).sqrt();
    let shared = &w[p - 1];
    let regressors: Vec<(String, Vec<f64>)> = (0..p - 1)
        .map(|j| {
            let col = w[j].iter().zip(shared).map(|(a, s)| scale * a + s).collect();
            (format!("X{}", j + 2), col)
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let fitted = beta[0] + (1..p).map(|j| beta[j] * regressors[j - 1].1[i]).sum::<f64>();
            fitted + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let data = Dataset::from_columns("y", y, regressors)?;
    Ok(GeneratedDesign { data, beta, mu })
}

/// Ordering of the penalized (P), ridge (R) and OLS (O) MSEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CaseLabel {
    /// P < R < O
    A,
    /// P < O < R
    B,
    /// R < P < O
    C,
    /// R < O < P
    D,
    /// O < P < R
    E,
    /// O < R < P
    F,
    /// A grid minimum is missing.
    Unresolved,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 7] = [
        CaseLabel::A,
        CaseLabel::B,
        CaseLabel::C,
        CaseLabel::D,
        CaseLabel::E,
        CaseLabel::F,
        CaseLabel::Unresolved,
    ];

    /// Ties are broken in the order P, R, O.
    pub fn classify(ols: f64, ridge: Option<f64>, penalized: Option<f64>) -> Self {
        let (Some(r), Some(pen)) = (ridge, penalized) else {
            return CaseLabel::Unresolved;
        };
        let mut order = [('P', pen), ('R', r), ('O', ols)];
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        match [order[0].0, order[1].0, order[2].0] {
            ['P', 'R', 'O'] => CaseLabel::A,
            ['P', 'O', 'R'] => CaseLabel::B,
            ['R', 'P', 'O'] => CaseLabel::C,
            ['R', 'O', 'P'] => CaseLabel::D,
            ['O', 'P', 'R'] => CaseLabel::E,
            _ => CaseLabel::F,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::A => "A",
            CaseLabel::B => "B",
            CaseLabel::C => "C",
            CaseLabel::D => "D",
            CaseLabel::E => "E",
            CaseLabel::F => "F",
            CaseLabel::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub replication: usize,
    pub p: usize,
    pub n: usize,
    pub xi: f64,
    pub sigma: f64,
    pub mse_ols: f64,
    pub mse_ridge_min: Option<f64>,
    pub k_ridge: Option<f64>,
    pub ridge_uniqueness: Uniqueness,
    pub mse_pen_min: Option<f64>,
    pub k_pen: Option<f64>,
    pub pen_uniqueness: Uniqueness,
    /// Smallest finite coefficient of variation among the regressors.
    pub min_cv: Option<f64>,
    pub max_vif: f64,
    pub cn: f64,
    pub case: CaseLabel,
}

pub fn run_replication(config: &SimulationConfig, replication: usize) -> Result<SimulationRecord> {
    let grid = config.grid()?;
    let cell = config.cell(replication);
    let design = generate_design(cell, config.seed, replication as u64)?;
    let data = &design.data;
    let alpha = compute_alpha(data)?;
    let cache = SpectralCache::new(data)?;
    let truth = design.beta.view();
    let ridge_curve = mse_curve(&cache, &alpha, 0.0, grid.values(), truth, 1.0)?;
    let pen_curve = mse_curve(&cache, &alpha, 1.0, grid.values(), truth, 1.0)?;
    let ridge = GridMinimum::from_curve(&grid, &ridge_curve);
    let pen = GridMinimum::from_curve(&grid, &pen_curve);
    let mse_ols = ridge_curve[0];

    let min_cv = coefficient_of_variation(data.x().view())
        .into_iter()
        .filter(|c| c.is_finite())
        .reduce(f64::min);
    let max_vif = VifContext::new(data)?
        .vif(0.0)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let cn = ConditionSpectrum::new(data)?.cn(0.0);

    Ok(SimulationRecord {
        replication,
        p: cell.p,
        n: cell.n,
        xi: cell.xi,
        sigma: cell.sigma,
        mse_ols,
        mse_ridge_min: ridge.mse_star,
        k_ridge: ridge.k_star,
        ridge_uniqueness: ridge.uniqueness,
        mse_pen_min: pen.mse_star,
        k_pen: pen.k_star,
        pen_uniqueness: pen.uniqueness,
        min_cv,
        max_vif,
        cn,
        case: CaseLabel::classify(mse_ols, ridge.mse_star, pen.mse_star),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub mean: f64,
    pub q3: f64,
}

fn sorted_finite(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn spread(values: impl Iterator<Item = f64>) -> Option<Spread> {
    let v = sorted_finite(values);
    (!v.is_empty()).then(|| Spread {
        min: v[0],
        mean: mean_of(&v),
        median: quantile_type7(&v, 0.5),
        max: v[v.len() - 1],
    })
}

fn quartiles(values: impl Iterator<Item = f64>) -> Option<Quartiles> {
    let v = sorted_finite(values);
    (!v.is_empty()).then(|| Quartiles {
        q1: quantile_type7(&v, 0.25),
        mean: mean_of(&v),
        q3: quantile_type7(&v, 0.75),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case: CaseLabel,
    pub count: usize,
    /// Share of all replications.
    pub fraction: f64,
    /// Share of replications with both minima present; absent for `Unresolved`.
    pub fraction_resolved: Option<f64>,
    pub min_cv: Option<Quartiles>,
    pub max_vif: Option<Quartiles>,
    pub cn: Option<Quartiles>,
}

/// Collinearity measures over every replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearityProfile {
    pub min_cv: Option<Spread>,
    pub max_vif: Option<Spread>,
    pub cn: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub total: usize,
    pub resolved: usize,
    pub cases: Vec<CaseSummary>,
    pub profile: CollinearityProfile,
}

impl Aggregate {
    pub fn from_records(records: &[SimulationRecord]) -> Self {
        let total = records.len();
        let resolved = records.iter().filter(|r| r.case != CaseLabel::Unresolved).count();
        let cases = CaseLabel::ALL
            .iter()
            .map(|&case| {
                let members: Vec<&SimulationRecord> = records.iter().filter(|r| r.case == case).collect();
                let count = members.len();
                CaseSummary {
                    case,
                    count,
                    fraction: count as f64 / total.max(1) as f64,
                    fraction_resolved: (case != CaseLabel::Unresolved && resolved > 0)
                        .then(|| count as f64 / resolved as f64),
                    min_cv: quartiles(members.iter().filter_map(|r| r.min_cv)),
                    max_vif: quartiles(members.iter().map(|r| r.max_vif)),
                    cn: quartiles(members.iter().map(|r| r.cn)),
                }
            })
            .collect();
        Self {
            total,
            resolved,
            cases,
            profile: CollinearityProfile {
                min_cv: spread(records.iter().filter_map(|r| r.min_cv)),
                max_vif: spread(records.iter().map(|r| r.max_vif)),
                cn: spread(records.iter().map(|r| r.cn)),
            },
        }
    }

    pub fn count(&self, case: CaseLabel) -> usize {
        self.cases.iter().find(|c| c.case == case).map_or(0, |c| c.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub aggregate: Aggregate,
    pub records: Vec<SimulationRecord>,
}

pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport> {
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    config.grid()?;
    let records: Vec<SimulationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<_>>()?;
    Ok(SimulationReport {
        config: *config,
        aggregate: Aggregate::from_records(&records),
        records,
    })
}

/// Sample correlation of two columns of the regressor block.
pub fn regressor_correlation(data: &Dataset, a: usize, b: usize) -> f64 {
    let x = data.regressors();
    let ca = x.index_axis(Axis(1), a);
    let cb = x.index_axis(Axis(1), b);
    crate::numerics::population_covariance(ca, cb)
        / (crate::numerics::population_variance(ca) * crate::numerics::population_variance(cb)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_has_1440_cells() {
        let cells = factorial();
        assert_eq!(cells.len(), 1440);
        assert_eq!(cells[0], DesignCell { p: 3, xi: 0.96, sigma: 0.01, n: 30 });
        assert_eq!(cells[17].n, 200);
        let cfg = SimulationConfig::default();
        assert_eq!(cfg.cell(1440), cfg.cell(0));
    }

    #[test]
    fn design_shapes_and_draws() {
        let cell = DesignCell { p: 5, xi: 0.97, sigma: 5.0, n: 40 };
        let g = generate_design(cell, 3, 11).unwrap();
        assert_eq!((g.data.n(), g.data.p()), (40, 5));
        assert_eq!(g.beta.len(), 5);
        assert!(g.beta.iter().all(|b| BETA_VALUES.contains(b)));
        assert!(g.mu.iter().all(|m| MU_VALUES.contains(m)));
        assert_eq!(generate_design(cell, 3, 11).unwrap(), g);
        assert_ne!(generate_design(cell, 3, 12).unwrap(), g);
    }

    #[test]
    fn pairwise_correlation_follows_design_formula() {
        let cell = DesignCell { p: 3, xi: 0.99, sigma: 10.0, n: 200 };
        let target = 1.0 / (2.0 - 0.99 * 0.99);
        for index in 0..5 {
            let g = generate_design(cell, 8, index).unwrap();
            let r = regressor_correlation(&g.data, 0, 1);
            assert!((r - target).abs() < 0.03, "{r} vs {target}");
        }
    }

    #[test]
    fn classification_table() {
        assert_eq!(CaseLabel::classify(3.0, Some(2.0), Some(1.0)), CaseLabel::A);
        assert_eq!(CaseLabel::classify(2.0, Some(3.0), Some(1.0)), CaseLabel::B);
        assert_eq!(CaseLabel::classify(3.0, Some(1.0), Some(2.0)), CaseLabel::C);
        assert_eq!(CaseLabel::classify(2.0, Some(1.0), Some(3.0)), CaseLabel::D);
        assert_eq!(CaseLabel::classify(1.0, Some(3.0), Some(2.0)), CaseLabel::E);
        assert_eq!(CaseLabel::classify(1.0, Some(2.0), Some(3.0)), CaseLabel::F);
        assert_eq!(CaseLabel::classify(1.0, None, Some(3.0)), CaseLabel::Unresolved);
    }

    #[test]
    fn ols_mse_is_trace_of_inverse() {
        let cfg = SimulationConfig { replications: 20, ..Default::default() };
        for r in [0, 7, 300, 1000] {
            let rec = run_replication(&cfg, r).unwrap();
            let g = generate_design(cfg.cell(r), cfg.seed, r as u64).unwrap();
            let xtx = crate::numerics::gram(g.data.x().view());
            let inv = crate::numerics::Cholesky::factor(xtx.view()).unwrap().inverse();
            let tr = inv.diag().sum();
            assert!((rec.mse_ols / tr - 1.0).abs() < 1e-6);
            assert_eq!(rec.case, CaseLabel::classify(rec.mse_ols, rec.mse_ridge_min, rec.mse_pen_min));
        }
    }

    #[test]
    fn small_run_aggregates() {
        let cfg = SimulationConfig { replications: 40, seed: 2, ..Default::default() };
        let rep = run_simulation(&cfg).unwrap();
        assert_eq!(rep.records.len(), 40);
        let sum: usize = rep.aggregate.cases.iter().map(|c| c.count).sum();
        assert_eq!(sum, 40);
        assert_eq!(rep, run_simulation(&cfg).unwrap());
    }
}
