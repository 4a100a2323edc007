//! Ordinary and ridge linear regression via centered normal equations,
//! with a minimum-norm SVD path for the unregularized / singular case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// Linear model: per-feature weights plus an unpenalized intercept (°C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let w = DVector::from_column_slice(&self.weights);
        (x * w).iter().map(|v| v + self.intercept).collect()
    }
}

/// Minimum-norm least-squares solve through SVD. Singular values below
/// `sigma_max * 1e-10` are treated as zero.
pub(crate) fn pinv_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = (sigma_max * 1e-10).max(f64::MIN_POSITIVE);
    svd.solve(y, eps)
        .map_err(|e| Error::numerical(format!("SVD solve failed: {e}")))
}

/// Minimize ||y − Xw − b||² + λ||w||² with the intercept unpenalized.
/// λ = 0 yields the ordinary least-squares minimum-norm solution.
pub fn fit_linear(m: &FeatureMatrix, lambda: f64) -> Result<LinearModel> {
    if lambda < 0.0 {
        return Err(Error::config("ridge coefficient must be >= 0"));
    }
    let y = m.target_ref()?;
    let n = m.n_rows();
    if n == 0 {
        return Err(Error::data("cannot fit on empty matrix"));
    }
    let d = m.n_features();
    let nf = n as f64;

    // Centering keeps the intercept out of the penalty.
    let col_means: Vec<f64> = (0..d).map(|j| m.values.column(j).sum() / nf).collect();
    let y_mean = y.sum() / nf;
    let xc = DMatrix::from_fn(n, d, |i, j| m.values[(i, j)] - col_means[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - y_mean);

    let w = if lambda > 0.0 {
        let mut gram = xc.transpose() * &xc;
        for j in 0..d {
            gram[(j, j)] += lambda;
        }
        let rhs = xc.transpose() * &yc;
        match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            // Numerically singular despite the ridge term: fall back to the
            // pseudoinverse of the regularized system.
            None => pinv_solve(&gram, &rhs)?,
        }
    } else {
        pinv_solve(&xc, &yc)?
    };

    let intercept = y_mean - col_means.iter().zip(w.iter()).map(|(m, w)| m * w).sum::<f64>();
    Ok(LinearModel {
        feature_names: m.names.clone(),
        weights: w.iter().cloned().collect(),
        intercept,
    })
}
