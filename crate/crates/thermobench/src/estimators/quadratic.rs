//! Quadratic regression: linear fit over the full degree-2 expansion
//! (squares plus all pairwise interactions).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearModel};
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub base_names: Vec<String>,
    pub max_degree: u32,
    pub inner: LinearModel,
}

fn expanded_size(d: usize) -> usize {
    d + d + d * (d - 1) / 2
}

/// Degree-2 basis: original columns, then squares, then pairwise products
/// in index order.
fn expand(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut out = DMatrix::zeros(n, expanded_size(d));
    out.view_mut((0, 0), (n, d)).copy_from(x);
    let mut col = d;
    for j in 0..d {
        for i in 0..n {
            out[(i, col)] = x[(i, j)] * x[(i, j)];
        }
        col += 1;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            for i in 0..n {
                out[(i, col)] = x[(i, j)] * x[(i, k)];
            }
            col += 1;
        }
    }
    out
}

pub fn fit_quadratic(
    m: &FeatureMatrix,
    lambda: f64,
    max_degree: u32,
    column_cap: usize,
) -> Result<QuadraticModel> {
    match max_degree {
        1 => {
            let inner = fit_linear(m, lambda)?;
            Ok(QuadraticModel {
                base_names: m.names.clone(),
                max_degree,
                inner,
            })
        }
        2 => {
            let d = m.n_features();
            if expanded_size(d) > column_cap {
                return Err(Error::config(format!(
                    "degree-2 expansion of {d} features yields {} columns, over the cap {column_cap}",
                    expanded_size(d)
                )));
            }
            let expanded = expand(&m.values);
            let names: Vec<String> = (0..expanded.ncols()).map(|j| format!("q{j}")).collect();
            let em = FeatureMatrix::new(expanded, names, m.target.clone())?;
            let inner = fit_linear(&em, lambda)?;
            Ok(QuadraticModel {
                base_names: m.names.clone(),
                max_degree,
                inner,
            })
        }
        other => Err(Error::config(format!("unsupported max_degree {other}"))),
    }
}

impl QuadraticModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.base_names.len() {
            return Err(Error::data("feature count mismatch"));
        }
        let basis = if self.max_degree == 1 {
            x.clone()
        } else {
            expand(x)
        };
        Ok(self.inner.predict(&basis))
    }
}
