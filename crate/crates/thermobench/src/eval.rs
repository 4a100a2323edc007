//! Metrics, fold planning, and nested cross-validation.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// MAE/MSE/RMSE triple over n prediction pairs (°C, °C², °C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub n: usize,
}

/// MAE = mean|y−ŷ|, MSE = mean(y−ŷ)², RMSE = √MSE.
pub fn compute_metrics(y: &[f64], y_hat: &[f64]) -> Result<Metrics> {
    if y.len() != y_hat.len() {
        return Err(Error::data(format!(
            "length mismatch: {} targets vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::data("cannot compute metrics on empty vectors"));
    }
    let n = y.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (a, b) in y.iter().zip(y_hat.iter()) {
        let e = a - b;
        abs_sum += e.abs();
        sq_sum += e * e;
    }
    let mse = sq_sum / n;
    Ok(Metrics {
        mae: abs_sum / n,
        mse,
        rmse: mse.sqrt(),
        n: y.len(),
    })
}

/// Seeded k-fold assignment: shuffle row indices, then contiguous chunks.
/// Fold sizes differ by at most one (larger folds first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

pub fn kfold_plan(n_rows: usize, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 || n_folds > n_rows {
        return Err(Error::config(format!(
            "n_folds must be in [2, n_rows]; got {n_folds} for {n_rows} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let base = n_rows / n_folds;
    let extra = n_rows % n_folds;
    let mut assignments = vec![0usize; n_rows];
    let mut pos = 0;
    for fold in 0..n_folds {
        let size = base + usize::from(fold < extra);
        for &row in &idx[pos..pos + size] {
            assignments[row] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan {
        n_folds,
        assignments,
        seed,
    })
}

impl FoldPlan {
    pub fn fold_rows(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut held = Vec::new();
        for (row, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                held.push(row);
            } else {
                train.push(row);
            }
        }
        (train, held)
    }
}

/// Outcome of nested cross-validation: the selected grid index (mode of
/// per-outer-fold winners, ties to the smallest index) and outer metrics.
#[derive(Debug, Clone)]
pub struct NestedCvResult {
    pub best_index: usize,
    pub per_fold_winner: Vec<usize>,
    pub per_fold_inner_rmse: Vec<f64>,
    pub outer_metrics: Vec<Metrics>,
    pub outer_rmse_mean: f64,
    pub outer_rmse_std: f64,
}

/// Nested cross-validation over a hyperparameter grid.
///
/// For each outer fold the inner k-fold CV (seeded from the outer plan's
/// seed and the fold index) selects the grid point with the lowest mean
/// inner RMSE; the winner is refit on the full outer-training portion and
/// scored on the held-out fold. `fit_predict(train, eval, params)` returns
/// predictions for `eval` rows.
pub fn nested_cv<G, F>(
    m: &FeatureMatrix,
    grid: &[G],
    outer: &FoldPlan,
    inner_folds: usize,
    fit_predict: F,
) -> Result<NestedCvResult>
where
    F: Fn(&FeatureMatrix, &FeatureMatrix, &G) -> Result<Vec<f64>>,
{
    if grid.is_empty() {
        return Err(Error::config("empty hyperparameter grid"));
    }
    if inner_folds < 2 {
        return Err(Error::config("inner_folds must be >= 2"));
    }
    let target = m.target_ref()?;
    let mut per_fold_winner = Vec::with_capacity(outer.n_folds);
    let mut per_fold_inner_rmse = Vec::with_capacity(outer.n_folds);
    let mut outer_metrics = Vec::with_capacity(outer.n_folds);

    for fold in 0..outer.n_folds {
        let (train_rows, held_rows) = outer.fold_rows(fold);
        debug_assert!(train_rows.iter().all(|r| !held_rows.contains(r)));
        let train = m.take_rows(&train_rows);

        let inner = kfold_plan(
            train.n_rows(),
            inner_folds,
            outer.seed.wrapping_add(1 + fold as u64),
        )?;
        let mut best: Option<(usize, f64)> = None;
        for (gi, params) in grid.iter().enumerate() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for inner_fold in 0..inner_folds {
                let (fit_rows, val_rows) = inner.fold_rows(inner_fold);
                let fit_m = train.take_rows(&fit_rows);
                let val_m = train.take_rows(&val_rows);
                let preds = fit_predict(&fit_m, &val_m, params)?;
                let truth: Vec<f64> = val_m.target_ref()?.iter().cloned().collect();
                sum += compute_metrics(&truth, &preds)?.rmse;
                count += 1;
            }
            let mean_rmse = sum / count as f64;
            // Strict less-than keeps the smallest grid index on ties.
            if best.map_or(true, |(_, b)| mean_rmse < b) {
                best = Some((gi, mean_rmse));
            }
        }
        let (winner, inner_rmse) = best.unwrap();
        per_fold_winner.push(winner);
        per_fold_inner_rmse.push(inner_rmse);

        let held = m.take_rows(&held_rows);
        let preds = fit_predict(&train, &held, &grid[winner])?;
        let truth: Vec<f64> = held_rows.iter().map(|&r| target[r]).collect();
        outer_metrics.push(compute_metrics(&truth, &preds)?);
    }

    // Final hyperparameter: mode of per-fold winners, ties to the smallest
    // grid index.
    let mut counts = vec![0usize; grid.len()];
    for &w in &per_fold_winner {
        counts[w] += 1;
    }
    let best_index = (0..grid.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();

    let rmses: Vec<f64> = outer_metrics.iter().map(|m| m.rmse).collect();
    let mean = rmses.iter().sum::<f64>() / rmses.len() as f64;
    let var = rmses.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rmses.len() as f64;
    Ok(NestedCvResult {
        best_index,
        per_fold_winner,
        per_fold_inner_rmse,
        outer_metrics,
        outer_rmse_mean: mean,
        outer_rmse_std: var.sqrt(),
    })
}

/// Plain k-fold evaluation of one configuration (the singleton-grid case).
pub fn kfold_evaluate<F>(m: &FeatureMatrix, plan: &FoldPlan, fit_predict: F) -> Result<Vec<Metrics>>
where
    F: Fn(&FeatureMatrix, &FeatureMatrix) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(plan.n_folds);
    for fold in 0..plan.n_folds {
        let (train_rows, held_rows) = plan.fold_rows(fold);
        let train = m.take_rows(&train_rows);
        let held = m.take_rows(&held_rows);
        let preds = fit_predict(&train, &held)?;
        let truth: Vec<f64> = held.target_ref()?.iter().cloned().collect();
        out.push(compute_metrics(&truth, &preds)?);
    }
    Ok(out)
}

/// Convenience: predictions as a `DVector`.
pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().cloned().collect()
}
