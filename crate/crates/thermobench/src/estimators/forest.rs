//! Random forest regression: bootstrap-sampled CART trees with per-node
//! random feature subsets, averaged at prediction time. Fully seeded, so
//! the same configuration always yields the same forest.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub seed: u64,
    /// Features tried per split. `None` uses ceil(n_features / 3).
    pub mtry: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            seed: 0,
            mtry: None,
            min_samples_leaf: 1,
            max_depth: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

struct TreeBuilder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    mtry: usize,
    min_samples_leaf: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    /// Best variance-reducing split on one feature via a prefix-sum scan
    /// over rows sorted by that feature. Returns (sse, threshold).
    fn best_split_on(&self, rows: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| {
            self.x[(a, feature)]
                .partial_cmp(&self.x[(b, feature)])
                .unwrap()
        });
        let n = order.len();
        let total: f64 = order.iter().map(|&r| self.y[r]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sq: f64 = order.iter().map(|&r| self.y[r] * self.y[r]).sum();
        let mut best: Option<(f64, f64)> = None;
        for split in 1..n {
            let r = order[split - 1];
            left_sum += self.y[r];
            left_sq += self.y[r] * self.y[r];
            let v_prev = self.x[(r, feature)];
            let v_next = self.x[(order[split], feature)];
            if v_prev == v_next {
                continue;
            }
            if split < self.min_samples_leaf || n - split < self.min_samples_leaf {
                continue;
            }
            let nl = split as f64;
            let nr = (n - split) as f64;
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
            if best.map_or(true, |(b, _)| sse < b) {
                best = Some((sse, (v_prev + v_next) / 2.0));
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        let splittable = rows.len() >= 2 * self.min_samples_leaf
            && rows.len() >= 2
            && depth < self.max_depth
            && rows.iter().any(|&r| self.y[r] != self.y[rows[0]]);
        if !splittable {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        }

        let d = self.x.ncols();
        let mut candidates: Vec<usize> = rand::seq::index::sample(rng, d, self.mtry).into_vec();
        candidates.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in candidates {
            if let Some((sse, threshold)) = self.best_split_on(rows, feature) {
                if best.map_or(true, |(b, _, _)| sse < b) {
                    best = Some((sse, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, feature)] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });
        let left = self.build(&left_rows, depth + 1, rng);
        let right = self.build(&right_rows, depth + 1, rng);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

pub fn fit_forest(m: &FeatureMatrix, config: &ForestConfig) -> Result<ForestModel> {
    if config.n_estimators == 0 {
        return Err(Error::config("n_estimators must be >= 1"));
    }
    if config.min_samples_leaf == 0 {
        return Err(Error::config("min_samples_leaf must be >= 1"));
    }
    let y = m.target_ref()?;
    let n = m.n_rows();
    if n == 0 {
        return Err(Error::data("cannot fit on empty matrix"));
    }
    let d = m.n_features();
    let mtry = match config.mtry {
        Some(0) => return Err(Error::config("mtry must be >= 1")),
        Some(v) if v > d => return Err(Error::config("mtry exceeds feature count")),
        Some(v) => v,
        None => d.div_ceil(3),
    };
    let yv: Vec<f64> = y.iter().cloned().collect();

    let trees = (0..config.n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                config
                    .seed
                    .wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x: &m.values,
                y: &yv,
                mtry,
                min_samples_leaf: config.min_samples_leaf,
                max_depth: config.max_depth,
                nodes: Vec::new(),
            };
            builder.build(&bootstrap, 0, &mut rng);
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(ForestModel {
        feature_names: m.names.clone(),
        trees,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let d = self.feature_names.len();
        let mut row = vec![0.0f64; d];
        (0..x.nrows())
            .map(|i| {
                for j in 0..d {
                    row[j] = x[(i, j)];
                }
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(&row)).sum();
                sum / self.trees.len() as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fm(cols: &[(&str, &[f64])], target: &[f64]) -> FeatureMatrix {
        let cols: Vec<(String, Vec<f64>)> = cols
            .iter()
            .map(|(n, v)| (n.to_string(), v.to_vec()))
            .collect();
        FeatureMatrix::from_columns(&cols, Some(target.to_vec())).unwrap()
    }

    fn wave_data(n: usize) -> FeatureMatrix {
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| (8.0 * v).sin()).collect();
        fm(&[("x", &x)], &y)
    }

    #[test]
    fn constant_target_predicts_constant() {
        let m = fm(&[("x", &[0.0, 1.0, 2.0, 3.0])], &[5.0; 4]);
        let model = fit_forest(&m, &ForestConfig { n_estimators: 5, ..ForestConfig::default() }).unwrap();
        for p in model.predict(&m.values) {
            assert_abs_diff_eq!(p, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn predictions_stay_within_target_range() {
        let m = wave_data(60);
        let model = fit_forest(&m, &ForestConfig { n_estimators: 20, ..ForestConfig::default() }).unwrap();
        let probe = DMatrix::from_row_slice(3, 1, &[-1.0, 0.5, 2.0]);
        for p in model.predict(&probe) {
            assert!((-1.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = wave_data(40);
        let cfg = ForestConfig { n_estimators: 10, seed: 7, ..ForestConfig::default() };
        let a = fit_forest(&m, &cfg).unwrap();
        let b = fit_forest(&m, &cfg).unwrap();
        assert_eq!(a, b);
        let c = fit_forest(&m, &ForestConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn beats_constant_mean_on_nonlinear_signal() {
        let m = wave_data(80);
        let y = m.target_ref().unwrap();
        let mean = y.sum() / y.len() as f64;
        let model = fit_forest(&m, &ForestConfig { n_estimators: 30, ..ForestConfig::default() }).unwrap();
        let preds = model.predict(&m.values);
        let sse_forest: f64 = preds.iter().zip(y.iter()).map(|(p, t)| (p - t).powi(2)).sum();
        let sse_mean: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
        assert!(sse_forest < 0.2 * sse_mean);
    }

    #[test]
    fn config_validation() {
        let m = fm(&[("x", &[0.0, 1.0])], &[0.0, 1.0]);
        assert!(fit_forest(&m, &ForestConfig { n_estimators: 0, ..ForestConfig::default() }).is_err());
        assert!(fit_forest(&m, &ForestConfig { mtry: Some(5), ..ForestConfig::default() }).is_err());
        assert!(fit_forest(&m, &ForestConfig { min_samples_leaf: 0, ..ForestConfig::default() }).is_err());
    }
}
