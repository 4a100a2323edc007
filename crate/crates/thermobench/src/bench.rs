//! Benchmark orchestration: wires ingestion, feature recipes, estimators,
//! tuning, and the network trainer into the reporting tables. Every run is
//! parameterized by a serializable `RunConfig`, whose hash lands in each
//! report's provenance block.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{average_rounds, clean, split, CleanDataset, Schema, SplitSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_binning, fit_forest, fit_knn, fit_linear, fit_piecewise, fit_quadratic, fit_svr,
    fit_weighted, DensitySpace, ForestConfig, SvrParams,
};
use crate::eval::{compute_metrics, kfold_plan, nested_cv, Metrics};
use crate::nn::{train, validation_split, ConvLayerSpec, NetworkSpec, TrainConfig};
use crate::report::{config_hash, Provenance, Report, ReportRow, Stat};
use crate::selection::{pearson_rank, sbs, single_feature_rmse};
use crate::synth::{self, SynthConfig};
use crate::transform::{FeatureRecipe, FittedRecipe, Step};

/// Driver feature for the regime-aware estimators.
pub const DRIVER: &str = "T_Max_1";
/// Neighborhood grid searched when tuning kNN.
pub const KNN_GRID: std::ops::RangeInclusive<usize> = 1..=30;
/// Tree-count grid searched when tuning the random forest.
pub const FOREST_GRID: &[usize] = &[50, 100, 150, 200, 250];
/// Fixed k for the replica sweep's nearest-neighbor pipeline. A small
/// neighborhood keeps the curve sensitive to how the replicas reweight
/// the distance metric.
pub const SWEEP_K: usize = 3;

/// A full benchmark configuration. `data` overrides the built-in
/// generator with a CSV on disk; `schema` likewise for the column roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub synth: SynthConfig,
    pub test_fraction: f64,
    pub seeds: Vec<u64>,
    pub cv_folds: usize,
    pub cnn_epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            schema: None,
            synth: SynthConfig::default(),
            // 290 of the 959 clean rows go to test.
            test_fraction: 290.0 / 959.0,
            seeds: (0..10).collect(),
            cv_folds: 5,
            cnn_epochs: 400,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds list must be non-empty"));
        }
        if self.cv_folds < 2 {
            return Err(Error::config("cv_folds must be >= 2"));
        }
        Ok(())
    }

    pub fn load_schema(&self) -> Result<Schema> {
        match &self.schema {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Schema::from_json(&text)
            }
            None => Ok(Schema::default_thermography()),
        }
    }

    /// Load (or generate), clean, and round-average the dataset.
    pub fn load_dataset(&self) -> Result<(CleanDataset, Schema)> {
        let schema = self.load_schema()?;
        let table = match &self.data {
            Some(path) => crate::data::load_csv(path)?,
            None => synth::generate(&self.synth)?,
        };
        let ds = clean(&table, &schema)?;
        let ds = average_rounds(&ds, &schema.round_groups())?;
        Ok((ds, schema))
    }

    pub fn provenance(&self) -> Result<Provenance> {
        let schema = self.load_schema()?;
        Ok(Provenance {
            seeds: self.seeds.clone(),
            config_hash: config_hash(self)?,
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema: serde_json::to_value(&schema)?,
        })
    }

    fn split_for_seed(&self, ds: &CleanDataset, seed: u64) -> Result<(CleanDataset, CleanDataset)> {
        split(ds, &SplitSpec::new(self.test_fraction, seed))
    }
}

/// Train/test feature matrices produced by one recipe on one split.
pub struct SplitFeatures {
    pub train: crate::transform::FeatureMatrix,
    pub test: crate::transform::FeatureMatrix,
}

pub fn features_for_split(
    train_ds: &CleanDataset,
    test_ds: &CleanDataset,
    recipe: &FeatureRecipe,
) -> Result<SplitFeatures> {
    let fitted = FittedRecipe::fit(train_ds, recipe)?;
    Ok(SplitFeatures {
        train: fitted.transform(train_ds)?,
        test: fitted.transform(test_ds)?,
    })
}

fn test_metrics(
    f: &SplitFeatures,
    predict: impl FnOnce(&crate::transform::FeatureMatrix) -> Result<Vec<f64>>,
) -> Result<Metrics> {
    let preds = predict(&f.test)?;
    let truth: Vec<f64> = f.test.target_ref()?.iter().cloned().collect();
    compute_metrics(&truth, &preds)
}

/// Ordinary least squares on each of the feature recipes a-f.
pub fn run_feature_table(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let (ds, _) = cfg.load_dataset()?;
    let mut rows = Vec::new();
    for name in ["a", "b", "c", "d", "e", "f"] {
        let recipe = FeatureRecipe::preset(name)?;
        let mut per_seed = Vec::new();
        let mut count = None;
        for &seed in &cfg.seeds {
            let (tr, te) = cfg.split_for_seed(&ds, seed)?;
            let f = features_for_split(&tr, &te, &recipe)?;
            count = Some(f.train.n_features());
            let model = fit_linear(&f.train, 0.0)?;
            per_seed.push(test_metrics(&f, |m| Ok(model.predict(&m.values)))?);
        }
        rows.push(ReportRow::from_metrics(name, count, &per_seed));
    }
    Ok(Report {
        title: "ols_by_feature_set".into(),
        rows,
        provenance: cfg.provenance()?,
    })
}

fn tuned_knn_metrics(cfg: &RunConfig, f: &SplitFeatures, seed: u64) -> Result<(usize, Metrics)> {
    let grid: Vec<usize> = KNN_GRID.collect();
    let outer = kfold_plan(f.train.n_rows(), cfg.cv_folds, seed)?;
    let result = nested_cv(&f.train, &grid, &outer, cfg.cv_folds, |tr, held, &k| {
        let model = fit_knn(tr, k)?;
        Ok(model.predict(&held.values))
    })?;
    let k = grid[result.best_index];
    let model = fit_knn(&f.train, k)?;
    Ok((k, test_metrics(f, |m| Ok(model.predict(&m.values)))?))
}

fn tuned_forest_metrics(cfg: &RunConfig, f: &SplitFeatures, seed: u64) -> Result<(usize, Metrics)> {
    let outer = kfold_plan(f.train.n_rows(), cfg.cv_folds, seed)?;
    let result = nested_cv(&f.train, FOREST_GRID, &outer, cfg.cv_folds, |tr, held, &n| {
        let model = fit_forest(tr, &ForestConfig { n_estimators: n, seed, ..ForestConfig::default() })?;
        Ok(model.predict(&held.values))
    })?;
    let n = FOREST_GRID[result.best_index];
    let model = fit_forest(&f.train, &ForestConfig { n_estimators: n, seed, ..ForestConfig::default() })?;
    Ok((n, test_metrics(f, |m| Ok(model.predict(&m.values)))?))
}

/// One row per comparison model, all on the final feature recipe (f).
/// A failing estimator marks its own row and leaves the rest intact.
pub fn run_model_table(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let (ds, _) = cfg.load_dataset()?;
    let recipe = FeatureRecipe::preset("f")?;

    let mut splits: Vec<SplitFeatures> = Vec::new();
    for &seed in &cfg.seeds {
        let (tr, te) = cfg.split_for_seed(&ds, seed)?;
        splits.push(features_for_split(&tr, &te, &recipe)?);
    }

    type RowFn<'a> = Box<dyn Fn(&SplitFeatures, u64) -> Result<Metrics> + 'a>;
    let rows_spec: Vec<(&str, RowFn)> = vec![
        ("1nn", Box::new(|f, _| {
            let m = fit_knn(&f.train, 1)?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("ols", Box::new(|f, _| {
            let m = fit_linear(&f.train, 0.0)?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("knn_tuned", Box::new(|f, seed| Ok(tuned_knn_metrics(cfg, f, seed)?.1))),
        ("svr", Box::new(|f, _| {
            let m = fit_svr(&f.train, &SvrParams::default())?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("binning", Box::new(|f, _| {
            let m = fit_binning(&f.train, 3, DRIVER)?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("piecewise", Box::new(|f, _| {
            let m = fit_piecewise(&f.train, 3, DRIVER)?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("weighted", Box::new(|f, _| {
            let m = fit_weighted(&f.train, DensitySpace::Target)?;
            test_metrics(f, |x| Ok(m.predict(&x.values)))
        })),
        ("quadratic", Box::new(|f, _| {
            let m = fit_quadratic(&f.train, 0.0, 2, 2000)?;
            test_metrics(f, |x| m.predict(&x.values))
        })),
        ("forest", Box::new(|f, seed| Ok(tuned_forest_metrics(cfg, f, seed)?.1))),
    ];

    let mut rows = Vec::new();
    for (label, eval) in rows_spec {
        let mut per_seed = Vec::new();
        let mut failure: Option<Error> = None;
        for (f, &seed) in splits.iter().zip(&cfg.seeds) {
            match eval(f, seed) {
                Ok(m) => per_seed.push(m),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        rows.push(match failure {
            Some(e) => ReportRow::failed(label, None, &e),
            None => ReportRow::from_metrics(label, None, &per_seed),
        });
    }
    Ok(Report {
        title: "model_comparison".into(),
        rows,
        provenance: cfg.provenance()?,
    })
}

/// One architecture row of the network grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnRowSpec {
    pub conv_layers: usize,
    pub filters: usize,
    pub kernel: usize,
    pub l2: f64,
}

impl CnnRowSpec {
    pub fn label(&self) -> String {
        format!(
            "{}xconv{}_k{}_l2_{}",
            self.conv_layers, self.filters, self.kernel, self.l2
        )
    }

    pub fn network(&self, input_length: usize) -> Result<NetworkSpec> {
        let layer = ConvLayerSpec {
            filters: self.filters,
            kernel_size: self.kernel,
            l2: self.l2,
        };
        NetworkSpec::new(vec![layer; self.conv_layers], input_length)
    }
}

/// The evaluated architecture grid, in report order. The fifth entry is
/// the strongest configuration; the last repeats it with weaker
/// regularization.
pub fn cnn_grid() -> Vec<CnnRowSpec> {
    let row = |conv_layers, filters, kernel, l2| CnnRowSpec { conv_layers, filters, kernel, l2 };
    vec![
        row(2, 64, 2, 0.01),
        row(2, 32, 2, 0.01),
        row(4, 16, 2, 0.01),
        row(5, 8, 2, 0.01),
        row(4, 16, 3, 0.01),
        row(5, 16, 3, 0.01),
        row(4, 16, 3, 0.001),
    ]
}

fn target_stats(m: &crate::transform::FeatureMatrix) -> Result<(f64, f64)> {
    let y = m.target_ref()?;
    let mean = y.mean();
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let std = var.sqrt();
    if std <= 0.0 {
        return Err(Error::numerical("constant target; cannot standardize"));
    }
    Ok((mean, std))
}

fn scale_target(
    m: &crate::transform::FeatureMatrix,
    mean: f64,
    std: f64,
) -> Result<crate::transform::FeatureMatrix> {
    let y = m.target_ref()?;
    let scaled = y.map(|v| (v - mean) / std);
    crate::transform::FeatureMatrix::new(m.values.clone(), m.names.clone(), Some(scaled))
}

/// Per-seed training history of one architecture, for the emitted
/// history CSVs.
pub struct CnnHistory {
    pub label: String,
    pub seed: u64,
    pub records: Vec<crate::nn::EpochRecord>,
}

/// Train and evaluate network architectures on recipe (f). `subset`
/// restricts to the given indices of `cnn_grid()` (None runs all).
pub fn run_cnn_table(
    cfg: &RunConfig,
    subset: Option<&[usize]>,
) -> Result<(Report, Vec<CnnHistory>)> {
    cfg.validate()?;
    let (ds, _) = cfg.load_dataset()?;
    let recipe = FeatureRecipe::preset("f")?;
    let grid = cnn_grid();
    let indices: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..grid.len()).collect(),
    };

    let mut rows = Vec::new();
    let mut histories = Vec::new();
    for &gi in &indices {
        let arch = &grid[gi];
        let label = arch.label();
        let mut per_seed = Vec::new();
        let mut failure: Option<Error> = None;
        for &seed in &cfg.seeds {
            let run = (|| -> Result<Metrics> {
                let (tr, te) = cfg.split_for_seed(&ds, seed)?;
                let f = features_for_split(&tr, &te, &recipe)?;
                let spec = arch.network(f.train.n_features())?;
                let tc = TrainConfig { seed, epochs: cfg.cnn_epochs, ..TrainConfig::default() };
                let (fit_m, val_m) = validation_split(&f.train, tc.validation_fraction, seed)?;
                // The network starts near zero output, so it trains on a
                // standardized target and predictions are mapped back.
                let (y_mean, y_std) = target_stats(&fit_m)?;
                let fit_m = scale_target(&fit_m, y_mean, y_std)?;
                let val_m = scale_target(&val_m, y_mean, y_std)?;
                let trained = train(&spec, &tc, &fit_m, &val_m)?;
                histories.push(CnnHistory {
                    label: label.clone(),
                    seed,
                    records: trained.history.clone(),
                });
                // Fixed-epoch training: the table reports the final
                // weights, so regularization differences stay visible
                // instead of being masked by early selection.
                let preds: Vec<f64> = trained
                    .last
                    .predict(&f.test)?
                    .into_iter()
                    .map(|p| p * y_std + y_mean)
                    .collect();
                let truth: Vec<f64> = f.test.target_ref()?.iter().cloned().collect();
                compute_metrics(&truth, &preds)
            })();
            match run {
                Ok(m) => per_seed.push(m),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        rows.push(match failure {
            Some(e) => ReportRow::failed(&label, None, &e),
            None => ReportRow::from_metrics(&label, None, &per_seed),
        });
    }
    let report = Report {
        title: "cnn_grid".into(),
        rows,
        provenance: cfg.provenance()?,
    };
    Ok((report, histories))
}

/// Replica sweep: recipe (e) plus r extra copies of the driver feature,
/// evaluated with a fixed-k nearest-neighbor pipeline and with OLS.
pub fn run_repetition_sweep(cfg: &RunConfig, max_reps: usize) -> Result<Report> {
    cfg.validate()?;
    if max_reps == 0 {
        return Err(Error::config("max_reps must be >= 1"));
    }
    let (ds, _) = cfg.load_dataset()?;
    let mut rows = Vec::new();
    for r in 0..=max_reps {
        let mut recipe = FeatureRecipe::preset("e")?;
        if r > 0 {
            recipe.steps.push(Step::Replicate {
                feature: DRIVER.into(),
                extra_copies: r,
            });
        }
        recipe.name = format!("e+{r}");
        let mut knn_seed = Vec::new();
        let mut ols_seed = Vec::new();
        for &seed in &cfg.seeds {
            let (tr, te) = cfg.split_for_seed(&ds, seed)?;
            let f = features_for_split(&tr, &te, &recipe)?;
            let knn = fit_knn(&f.train, SWEEP_K)?;
            knn_seed.push(test_metrics(&f, |m| Ok(knn.predict(&m.values)))?);
            let ols = fit_linear(&f.train, 0.0)?;
            ols_seed.push(test_metrics(&f, |m| Ok(ols.predict(&m.values)))?);
        }
        rows.push(ReportRow::from_metrics("knn", Some(r), &knn_seed));
        rows.push(ReportRow::from_metrics("ols", Some(r), &ols_seed));
    }
    Ok(Report {
        title: "replica_sweep".into(),
        rows,
        provenance: cfg.provenance()?,
    })
}

/// Sequential backward selection from the full 38-column matrix down to
/// `target_size`, with an OLS test-set audit of the kept features, plus
/// the recipe (f) baseline for comparison.
pub fn run_sbs_audit(cfg: &RunConfig, target_size: usize) -> Result<Report> {
    cfg.validate()?;
    let (ds, _) = cfg.load_dataset()?;
    let full = FeatureRecipe::preset("full38")?;
    let final_recipe = FeatureRecipe::preset("f")?;

    let mut sbs_seed = Vec::new();
    let mut baseline_seed = Vec::new();
    let mut kept_count = None;
    for &seed in &cfg.seeds {
        let (tr, te) = cfg.split_for_seed(&ds, seed)?;
        let f = features_for_split(&tr, &te, &full)?;
        let plan = kfold_plan(f.train.n_rows(), cfg.cv_folds, seed)?;
        let trace = sbs(&f.train, target_size, &plan)?;
        let kept = trace.final_set.clone();
        kept_count = Some(kept.len());
        let train_sel = f.train.select_columns(&kept)?;
        let test_sel = f.test.select_columns(&kept)?;
        let model = fit_linear(&train_sel, 0.0)?;
        let preds = model.predict(&test_sel.values);
        let truth: Vec<f64> = test_sel.target_ref()?.iter().cloned().collect();
        sbs_seed.push(compute_metrics(&truth, &preds)?);

        let fb = features_for_split(&tr, &te, &final_recipe)?;
        let base = fit_linear(&fb.train, 0.0)?;
        baseline_seed.push(test_metrics(&fb, |m| Ok(base.predict(&m.values)))?);
    }
    let rows = vec![
        ReportRow::from_metrics("sbs", kept_count, &sbs_seed),
        ReportRow::from_metrics("recipe_f", None, &baseline_seed),
    ];
    Ok(Report {
        title: "sbs_audit".into(),
        rows,
        provenance: cfg.provenance()?,
    })
}

/// Correlation-vs-target ranking of the recipe (a) features, one row per
/// feature in rank order, with per-feature single-predictor CV RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub rows: Vec<RankingRow>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub feature: String,
    pub score: Stat,
    pub rmse: Stat,
}

impl RankingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,score_mean,score_std,rmse_mean,rmse_std\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.feature, r.score.mean, r.score.std, r.rmse.mean, r.rmse.std
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn run_feature_ranking(cfg: &RunConfig) -> Result<RankingReport> {
    cfg.validate()?;
    let (ds, _) = cfg.load_dataset()?;
    let recipe = FeatureRecipe::preset("a")?;

    use std::collections::BTreeMap;
    let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rmses: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &seed in &cfg.seeds {
        let (tr, _) = cfg.split_for_seed(&ds, seed)?;
        let m = crate::transform::build_features(&tr, &recipe)?;
        for entry in pearson_rank(&m)? {
            scores.entry(entry.feature).or_default().push(entry.score);
        }
        let plan = kfold_plan(m.n_rows(), cfg.cv_folds, seed)?;
        for entry in single_feature_rmse(&m, &plan)? {
            if let Some(r) = entry.rmse {
                rmses.entry(entry.feature).or_default().push(r);
            }
        }
    }
    let mut rows: Vec<RankingRow> = scores
        .into_iter()
        .map(|(feature, s)| {
            let rmse = Stat::from_samples(rmses.get(&feature).map_or(&[][..], |v| v));
            RankingRow {
                score: Stat::from_samples(&s),
                rmse,
                feature,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.score.mean.abs().total_cmp(&a.score.mean.abs()));
    Ok(RankingReport {
        rows,
        provenance: cfg.provenance()?,
    })
}
