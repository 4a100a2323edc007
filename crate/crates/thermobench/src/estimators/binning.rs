//! Binning regression: equal-width bins over one driver feature, with an
//! independent ordinary least-squares model per bin.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearModel};
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedModel {
    pub feature_names: Vec<String>,
    pub driver: String,
    pub driver_index: usize,
    /// Bin edges over the training range of the driver: n_bins + 1 values.
    pub edges: Vec<f64>,
    /// One model per bin. Bins too sparse to fit fall back to the global fit.
    pub models: Vec<LinearModel>,
    pub global: LinearModel,
}

fn bin_of(edges: &[f64], value: f64) -> usize {
    let n_bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[n_bins];
    if hi <= lo {
        return 0;
    }
    let width = (hi - lo) / n_bins as f64;
    let raw = ((value - lo) / width).floor();
    (raw.max(0.0) as usize).min(n_bins - 1)
}

pub fn fit_binning(m: &FeatureMatrix, n_bins: usize, driver: &str) -> Result<BinnedModel> {
    if n_bins == 0 {
        return Err(Error::config("n_bins must be >= 1"));
    }
    let driver_index = m
        .column_index(driver)
        .ok_or_else(|| Error::config(format!("driver feature '{driver}' not found")))?;
    let global = fit_linear(m, 0.0)?;
    let n = m.n_rows();
    let d = m.n_features();

    let driver_col: Vec<f64> = (0..n).map(|i| m.values[(i, driver_index)]).collect();
    let lo = driver_col.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = driver_col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::data(format!(
            "driver feature '{driver}' has no spread; bin edges would collapse"
        )));
    }
    let edges: Vec<f64> = (0..=n_bins)
        .map(|b| lo + (hi - lo) * b as f64 / n_bins as f64)
        .collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (i, &v) in driver_col.iter().enumerate() {
        members[bin_of(&edges, v)].push(i);
    }

    // A bin needs at least as many rows as fitted coefficients (d slopes
    // plus an intercept) for a determined local fit.
    let min_rows = d + 1;
    let models = members
        .iter()
        .map(|rows| {
            if rows.len() < min_rows {
                Ok(global.clone())
            } else {
                fit_linear(&m.take_rows(rows), 0.0)
            }
        })
        .collect::<Result<Vec<LinearModel>>>()?;

    Ok(BinnedModel {
        feature_names: m.names.clone(),
        driver: driver.to_string(),
        driver_index,
        edges,
        models,
        global,
    })
}

impl BinnedModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let bin = bin_of(&self.edges, x[(i, self.driver_index)]);
                let model = &self.models[bin];
                let mut acc = model.intercept;
                for (j, w) in model.weights.iter().enumerate() {
                    acc += w * x[(i, j)];
                }
                acc
            })
            .collect()
    }
}
