//! Density-weighted least squares: rows in sparse regions of the target
//! distribution get proportionally larger weight (1 / KDE density).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linear::{pinv_solve, LinearModel};
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// Where the density used for reweighting is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySpace {
    /// All weights equal; reduces to ordinary least squares.
    Uniform,
    /// Gaussian KDE over the target values.
    Target,
}

/// Silverman's rule of thumb: 0.9 * min(std, IQR / 1.34) * n^(-1/5).
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let std = var.sqrt();

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let iqr = quantile(0.75) - quantile(0.25);

    let spread = if iqr > 0.0 {
        std.min(iqr / 1.34)
    } else {
        std
    };
    0.9 * spread * nf.powf(-0.2)
}

/// Gaussian KDE evaluated at each sample point.
fn kde_at_samples(values: &[f64], bandwidth: f64) -> Vec<f64> {
    let n = values.len() as f64;
    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    values
        .iter()
        .map(|&v| {
            let sum: f64 = values
                .iter()
                .map(|&u| (-0.5 * ((v - u) / bandwidth).powi(2)).exp())
                .sum();
            norm * sum
        })
        .collect()
}

/// Weighted least squares via sqrt-weight row scaling of the augmented
/// design matrix [X | 1].
pub fn fit_weighted(m: &FeatureMatrix, space: DensitySpace) -> Result<LinearModel> {
    let y = m.target_ref()?;
    let n = m.n_rows();
    if n < 3 {
        return Err(Error::data("weighted fit needs at least 3 rows"));
    }
    let d = m.n_features();

    let mut weights: Vec<f64> = match space {
        DensitySpace::Uniform => vec![1.0; n],
        DensitySpace::Target => {
            let yv: Vec<f64> = y.iter().cloned().collect();
            let h = silverman_bandwidth(&yv);
            if h <= 0.0 {
                return Err(Error::data(
                    "target values have no spread; density weights are undefined",
                ));
            }
            kde_at_samples(&yv, h)
                .iter()
                .map(|&dens| {
                    if dens <= f64::MIN_POSITIVE {
                        return Err(Error::numerical("KDE density underflow"));
                    }
                    Ok(1.0 / dens)
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    let mean_w = weights.iter().sum::<f64>() / n as f64;
    for w in &mut weights {
        *w /= mean_w;
    }

    let mut aug = DMatrix::zeros(n, d + 1);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let s = weights[i].sqrt();
        for j in 0..d {
            aug[(i, j)] = s * m.values[(i, j)];
        }
        aug[(i, d)] = s;
        rhs[i] = s * y[i];
    }
    let sol = pinv_solve(&aug, &rhs)?;
    Ok(LinearModel {
        feature_names: m.names.clone(),
        weights: sol.iter().take(d).cloned().collect(),
        intercept: sol[d],
    })
}
