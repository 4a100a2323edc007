//! k-nearest-neighbors regression with Euclidean distance. Neighbor ties
//! at equal distance are broken by training-row index, so predictions are
//! deterministic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub feature_names: Vec<String>,
    pub k: usize,
    /// Training rows, row-major.
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
}

pub fn fit_knn(m: &FeatureMatrix, k: usize) -> Result<KnnModel> {
    let y = m.target_ref()?;
    let n = m.n_rows();
    if k == 0 || k > n {
        return Err(Error::config(format!(
            "k must be in [1, n_train]; got {k} for {n} rows"
        )));
    }
    let d = m.n_features();
    let mut train_x = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            train_x.push(m.values[(i, j)]);
        }
    }
    Ok(KnnModel {
        feature_names: m.names.clone(),
        k,
        train_x,
        train_y: y.iter().cloned().collect(),
    })
}

impl KnnModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let d = self.feature_names.len();
        let n_train = self.train_y.len();
        let mut out = Vec::with_capacity(x.nrows());
        let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n_train);
        for i in 0..x.nrows() {
            dists.clear();
            for t in 0..n_train {
                let mut sq = 0.0;
                for j in 0..d {
                    let diff = x[(i, j)] - self.train_x[t * d + j];
                    sq += diff * diff;
                }
                dists.push((sq, t));
            }
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let sum: f64 = dists[..self.k].iter().map(|&(_, t)| self.train_y[t]).sum();
            out.push(sum / self.k as f64);
        }
        out
    }
}
