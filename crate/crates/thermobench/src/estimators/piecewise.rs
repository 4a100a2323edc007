//! Piecewise-linear regression: hinge basis functions max(0, driver - knot)
//! at driver quantiles, fit jointly by ordinary least squares. The fit is
//! continuous across segments, unlike per-bin models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearModel};
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseModel {
    pub base_names: Vec<String>,
    pub driver: String,
    pub driver_index: usize,
    pub knots: Vec<f64>,
    pub inner: LinearModel,
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn hinge_basis(x: &DMatrix<f64>, driver_index: usize, knots: &[f64]) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut out = DMatrix::zeros(n, d + knots.len());
    out.view_mut((0, 0), (n, d)).copy_from(x);
    for (t, &knot) in knots.iter().enumerate() {
        for i in 0..n {
            out[(i, d + t)] = (x[(i, driver_index)] - knot).max(0.0);
        }
    }
    out
}

pub fn fit_piecewise(m: &FeatureMatrix, breakpoints: usize, driver: &str) -> Result<PiecewiseModel> {
    let driver_index = m
        .column_index(driver)
        .ok_or_else(|| Error::config(format!("driver feature '{driver}' not found")))?;
    let n = m.n_rows();
    if n == 0 {
        return Err(Error::data("cannot fit on empty matrix"));
    }

    // Knots at evenly spaced interior quantiles of the driver.
    let mut sorted: Vec<f64> = (0..n).map(|i| m.values[(i, driver_index)]).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut knots: Vec<f64> = (1..=breakpoints)
        .map(|t| quantile_sorted(&sorted, t as f64 / (breakpoints + 1) as f64))
        .collect();
    knots.dedup();

    let basis = hinge_basis(&m.values, driver_index, &knots);
    let names: Vec<String> = m
        .names
        .iter()
        .cloned()
        .chain(knots.iter().map(|k| format!("hinge({driver},{k})")))
        .collect();
    let bm = FeatureMatrix::new(basis, names, m.target.clone())?;
    let inner = fit_linear(&bm, 0.0)?;

    Ok(PiecewiseModel {
        base_names: m.names.clone(),
        driver: driver.to_string(),
        driver_index,
        knots,
        inner,
    })
}

impl PiecewiseModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let basis = hinge_basis(x, self.driver_index, &self.knots);
        self.inner.predict(&basis)
    }
}
