//! Parameter sweeps: one simulation per grid point, independent and
//! parallelizable, with per-point failures recorded rather than
//! aborting the sweep.

use crate::metrics::{summarize, SummaryRow};
use crate::model::SimulationConfig;
use crate::stepper::run_simulation;
use rayon::prelude::*;

/// Result of one lambda-sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: f64,
    pub outcome: Result<SummaryRow, String>,
}

/// Result of one (lambda1, lambda2) grid point.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub outcome: Result<(f64, f64), String>, // (peak_infected, lockdown_days)
}

fn with_lambdas(base: &SimulationConfig, l1: f64, l2: f64) -> SimulationConfig {
    let mut cfg = base.clone();
    cfg.params.lambda_1 = l1;
    cfg.params.lambda_2 = l2;
    cfg
}

fn run_summary(cfg: &SimulationConfig) -> Result<SummaryRow, String> {
    let record = run_simulation(cfg).map_err(|e| e.to_string())?;
    summarize(&record).map_err(|e| e.to_string())
}

/// Runs one simulation per lambda value with both regions' migration
/// probability set equal. Points are independent; the output order
/// follows the input order regardless of parallel scheduling.
pub fn run_lambda_sweep(base: &SimulationConfig, lambda_values: &[f64]) -> Vec<SweepPoint> {
    lambda_values
        .par_iter()
        .map(|&lambda| SweepPoint {
            lambda,
            outcome: run_summary(&with_lambdas(base, lambda, lambda)),
        })
        .collect()
}

/// Cartesian product of independent runs over (lambda1, lambda2),
/// flattened row-major: the outer loop is lambda1.
pub fn run_lambda_grid(
    base: &SimulationConfig,
    lambda1_values: &[f64],
    lambda2_values: &[f64],
) -> Vec<GridPoint> {
    let points: Vec<(f64, f64)> = lambda1_values
        .iter()
        .flat_map(|&l1| lambda2_values.iter().map(move |&l2| (l1, l2)))
        .collect();
    points
        .par_iter()
        .map(|&(l1, l2)| GridPoint {
            lambda1: l1,
            lambda2: l2,
            outcome: run_summary(&with_lambdas(base, l1, l2))
                .map(|row| (row.peak_infected, row.lockdown_days)),
        })
        .collect()
}
