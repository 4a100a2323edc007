//! Feature ranking and subset-search procedures: Pearson correlation
//! ranking, per-feature regression RMSE, exhaustive subset search,
//! sequential backward selection, and PCA with likelihood-based choice
//! of the component count.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::fit_linear;
use crate::eval::{compute_metrics, FoldPlan};
use crate::transform::FeatureMatrix;

/// One feature's ranking scores. `score` is |Pearson r| against the
/// target; `rmse` is the validation RMSE of a one-feature linear model
/// (°C), when computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub feature: String,
    pub score: f64,
    pub rmse: Option<f64>,
}

/// Pearson correlation coefficient; 0 when either side has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Rank features by |Pearson r| against the target, descending. Constant
/// features score 0 (with a warning) instead of erroring. Ties keep the
/// original column order.
pub fn pearson_rank(m: &FeatureMatrix) -> Result<Vec<RankingEntry>> {
    let y = m.target_ref()?;
    if m.n_rows() < 2 {
        return Err(Error::data("pearson_rank needs at least 2 rows"));
    }
    let yv: Vec<f64> = y.iter().cloned().collect();
    let mut entries: Vec<RankingEntry> = m
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = (0..m.n_rows()).map(|i| m.values[(i, j)]).collect();
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                eprintln!("warning: feature {name:?} is constant; score set to 0");
            }
            RankingEntry {
                feature: name.clone(),
                score: pearson(&col, &yv).abs(),
                rmse: None,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    Ok(entries)
}

fn single_feature_cv_rmse(m: &FeatureMatrix, feature: &str, plan: &FoldPlan) -> Result<f64> {
    let sub = m.select_columns(std::slice::from_ref(&feature.to_string()))?;
    cv_rmse_ols(&sub, plan)
}

/// Mean k-fold validation RMSE of an ordinary least-squares fit.
pub fn cv_rmse_ols(m: &FeatureMatrix, plan: &FoldPlan) -> Result<f64> {
    let mut sum = 0.0;
    for fold in 0..plan.n_folds {
        let (train_rows, held_rows) = plan.fold_rows(fold);
        let train = m.take_rows(&train_rows);
        let held = m.take_rows(&held_rows);
        let model = fit_linear(&train, 0.0)?;
        let preds = model.predict(&held.values);
        let truth: Vec<f64> = held.target_ref()?.iter().cloned().collect();
        sum += compute_metrics(&truth, &preds)?.rmse;
    }
    Ok(sum / plan.n_folds as f64)
}

/// Validation RMSE of a one-feature linear model, per feature, sorted
/// ascending. Constant features are skipped with a warning.
pub fn single_feature_rmse(m: &FeatureMatrix, plan: &FoldPlan) -> Result<Vec<RankingEntry>> {
    let y = m.target_ref()?;
    let yv: Vec<f64> = y.iter().cloned().collect();
    let mut entries = Vec::new();
    for (j, name) in m.names.iter().enumerate() {
        let col: Vec<f64> = (0..m.n_rows()).map(|i| m.values[(i, j)]).collect();
        if col.iter().all(|&v| v == col[0]) {
            eprintln!("warning: feature {name:?} is constant; skipped");
            continue;
        }
        entries.push(RankingEntry {
            feature: name.clone(),
            score: pearson(&col, &yv).abs(),
            rmse: Some(single_feature_cv_rmse(m, name, plan)?),
        });
    }
    entries.sort_by(|a, b| a.rmse.partial_cmp(&b.rmse).unwrap());
    Ok(entries)
}

/// Exhaustive search over all subsets of `candidates`, each evaluated as
/// base ∪ subset with ordinary least squares under the fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSearchResult {
    pub candidate_features: Vec<String>,
    pub best_subset: Vec<String>,
    /// Keyed by the subset's sorted names joined with "+"; the empty
    /// subset is keyed "(none)".
    pub per_subset_rmse: BTreeMap<String, f64>,
}

pub fn subset_key(subset: &[String]) -> String {
    if subset.is_empty() {
        "(none)".to_string()
    } else {
        let mut sorted = subset.to_vec();
        sorted.sort();
        sorted.join("+")
    }
}

/// `m` must contain both the base columns and every candidate column.
/// Ties break toward the smaller subset, then lexicographically.
pub fn exhaustive_subset_search(
    m: &FeatureMatrix,
    base: &[String],
    candidates: &[String],
    plan: &FoldPlan,
) -> Result<SubsetSearchResult> {
    if candidates.len() > 20 {
        return Err(Error::config(format!(
            "subset search over {} candidates exceeds the 2^20 cost guard",
            candidates.len()
        )));
    }
    for name in base.iter().chain(candidates.iter()) {
        if m.column_index(name).is_none() {
            return Err(Error::config(format!("unknown feature {name:?}")));
        }
    }
    let mut per_subset_rmse = BTreeMap::new();
    let mut best: Option<(f64, Vec<String>)> = None;
    for mask in 0u32..(1 << candidates.len()) {
        let subset: Vec<String> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, n)| n.clone())
            .collect();
        let columns: Vec<String> = base.iter().chain(subset.iter()).cloned().collect();
        let rmse = if columns.is_empty() {
            // Intercept-only model: predict the training-fold mean.
            intercept_only_cv_rmse(m, plan)?
        } else {
            cv_rmse_ols(&m.select_columns(&columns)?, plan)?
        };
        per_subset_rmse.insert(subset_key(&subset), rmse);
        let better = match &best {
            None => true,
            Some((b_rmse, b_subset)) => {
                rmse < *b_rmse
                    || (rmse == *b_rmse
                        && (subset.len(), sorted_names(&subset))
                            < (b_subset.len(), sorted_names(b_subset)))
            }
        };
        if better {
            best = Some((rmse, subset));
        }
    }
    Ok(SubsetSearchResult {
        candidate_features: candidates.to_vec(),
        best_subset: best.unwrap().1,
        per_subset_rmse,
    })
}

fn sorted_names(v: &[String]) -> Vec<String> {
    let mut s = v.to_vec();
    s.sort();
    s
}

fn intercept_only_cv_rmse(m: &FeatureMatrix, plan: &FoldPlan) -> Result<f64> {
    let y = m.target_ref()?;
    let mut sum = 0.0;
    for fold in 0..plan.n_folds {
        let (train_rows, held_rows) = plan.fold_rows(fold);
        let mean = train_rows.iter().map(|&r| y[r]).sum::<f64>() / train_rows.len() as f64;
        let truth: Vec<f64> = held_rows.iter().map(|&r| y[r]).collect();
        let preds = vec![mean; truth.len()];
        sum += compute_metrics(&truth, &preds)?.rmse;
    }
    Ok(sum / plan.n_folds as f64)
}

/// One greedy removal step of sequential backward selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsStep {
    pub removed_feature: String,
    pub validation_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsTrace {
    pub steps: Vec<SbsStep>,
    pub final_set: Vec<String>,
}

/// Sequential backward selection: repeatedly drop the feature whose
/// removal minimizes k-fold OLS validation RMSE until `target_size`
/// features remain. Ties remove the lexicographically smallest name.
pub fn sbs(m: &FeatureMatrix, target_size: usize, plan: &FoldPlan) -> Result<SbsTrace> {
    let d = m.n_features();
    if target_size == 0 || target_size >= d {
        return Err(Error::config(format!(
            "target_size must be in [1, {}); got {target_size}",
            d
        )));
    }
    let mut remaining: Vec<String> = m.names.clone();
    let mut steps = Vec::new();
    while remaining.len() > target_size {
        let mut best: Option<(f64, String)> = None;
        for victim in &remaining {
            let kept: Vec<String> = remaining.iter().filter(|n| *n != victim).cloned().collect();
            let rmse = cv_rmse_ols(&m.select_columns(&kept)?, plan)?;
            let better = match &best {
                None => true,
                Some((b_rmse, b_victim)) => {
                    rmse < *b_rmse || (rmse == *b_rmse && victim < b_victim)
                }
            };
            if better {
                best = Some((rmse, victim.clone()));
            }
        }
        let (rmse, victim) = best.unwrap();
        remaining.retain(|n| *n != victim);
        steps.push(SbsStep {
            removed_feature: victim,
            validation_rmse: rmse,
        });
    }
    Ok(SbsTrace {
        steps,
        final_set: remaining,
    })
}

/// Principal component basis fitted on centered data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// k x d, rows orthonormal.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub k: usize,
    pub mean: Vec<f64>,
}

/// Lanczos approximation of ln Γ(x) for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Profile log-likelihood of retaining `k` components given the sample
/// covariance spectrum (descending) and sample count.
fn assess_dimension(spectrum: &[f64], k: usize, n_samples: usize) -> f64 {
    let d = spectrum.len();
    if k == 0 || k >= d {
        return f64::NEG_INFINITY;
    }
    let eps = 1e-15;
    if spectrum[k - 1] < eps {
        return f64::NEG_INFINITY;
    }
    let n = n_samples as f64;
    let pi = std::f64::consts::PI;

    let mut pu = -(k as f64) * 2.0f64.ln();
    for i in 1..=k {
        let a = (d - i + 1) as f64 / 2.0;
        pu += ln_gamma(a) - a * pi.ln();
    }
    let pl: f64 = -spectrum[..k].iter().map(|v| v.ln()).sum::<f64>() * n / 2.0;
    let v = (spectrum[k..].iter().sum::<f64>() / (d - k) as f64).max(eps);
    let pv = -v.ln() * n * (d - k) as f64 / 2.0;
    let m = (d * k) as f64 - (k * (k + 1)) as f64 / 2.0;
    let pp = (2.0 * pi).ln() * (m + k as f64) / 2.0;

    let mut filled = spectrum.to_vec();
    for e in filled.iter_mut().skip(k) {
        *e = v;
    }
    let mut pa = 0.0;
    for i in 0..k {
        for j in (i + 1)..d {
            pa += ((spectrum[i] - spectrum[j]) * (1.0 / filled[j] - 1.0 / filled[i])).ln() + n.ln();
        }
    }
    pu + pl + pv + pp - pa / 2.0 - (k as f64) * n.ln() / 2.0
}

/// Fit PCA on centered data. `k = None` chooses the component count by
/// the marginal-likelihood rule over k in [1, d-1]; exact score ties go
/// to the smaller k.
pub fn pca_fit(m: &FeatureMatrix, k: Option<usize>) -> Result<PcaModel> {
    let n = m.n_rows();
    let d = m.n_features();
    if n < 2 {
        return Err(Error::data("PCA needs at least 2 rows"));
    }
    if let Some(k) = k {
        if k == 0 || k > d {
            return Err(Error::config(format!("k must be in [1, {d}]; got {k}")));
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|j| m.values.column(j).sum() / nf).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| m.values[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (nf - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let k = match k {
        Some(k) => k,
        None => {
            let mut best = (1usize, f64::NEG_INFINITY);
            for cand in 1..d {
                let ll = assess_dimension(&spectrum, cand, n);
                if ll > best.1 {
                    best = (cand, ll);
                }
            }
            best.0
        }
    };

    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            // Deterministic sign: largest-magnitude entry positive.
            let pivot = col
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap();
            let s = if pivot < 0.0 { -1.0 } else { 1.0 };
            col.iter().map(|v| v * s).collect()
        })
        .collect();

    Ok(PcaModel {
        components,
        explained_variance: spectrum[..k].to_vec(),
        k,
        mean,
    })
}

/// Project rows onto the fitted basis: (x - mean) · componentsᵀ.
pub fn pca_transform(p: &PcaModel, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let d = p.mean.len();
    if m.n_features() != d {
        return Err(Error::data(format!(
            "PCA expects {d} features, got {}",
            m.n_features()
        )));
    }
    let n = m.n_rows();
    let mut out = DMatrix::zeros(n, p.k);
    for i in 0..n {
        for (c, comp) in p.components.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..d {
                acc += (m.values[(i, j)] - p.mean[j]) * comp[j];
            }
            out[(i, c)] = acc;
        }
    }
    let names: Vec<String> = (1..=p.k).map(|c| format!("pc{c}")).collect();
    FeatureMatrix::new(out, names, m.target.clone())
}
