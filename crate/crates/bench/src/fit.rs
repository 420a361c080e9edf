//! Ordinary least squares of overhead on model count.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::BenchRow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope_ms_per_model: f64,
    pub intercept_ms: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("need at least two rows with distinct n_models, got {0} distinct")]
    InsufficientRows(usize),
}

/// Fits `y = slope * x + intercept` and reports the coefficient of
/// determination. A perfect fit of constant data has `r2 = 1`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit, FitError> {
    let distinct: HashSet<u64> = points.iter().map(|(x, _)| x.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(FitError::InsufficientRows(distinct.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_res: f64 = points.iter().map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res <= f64::EPSILON {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope_ms_per_model: slope,
        intercept_ms: intercept,
        r2,
    })
}

pub fn fit_linear_overhead(rows: &[BenchRow]) -> Result<LinearFit, FitError> {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n_models as f64, r.overhead_ms)).collect();
    fit_line(&points)
}
