//! Benchmark harness CLI: dataset generation and ingestion, feature
//! recipes, feature selection, single-model fit/evaluate, and the report
//! tables. All outputs are deterministic for a fixed configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thermobench::bench::{
    cnn_grid, features_for_split, run_cnn_table, run_feature_ranking, run_feature_table,
    run_model_table, run_repetition_sweep, run_sbs_audit, RunConfig,
};
use thermobench::data::write_csv;
use thermobench::error::{Error, Result};
use thermobench::estimators::{DensitySpace, EstimatorSpec, ModelArtifact};
use thermobench::eval::compute_metrics;
use thermobench::report::Format;
use thermobench::synth::{write_dataset_csv, SynthConfig};
use thermobench::transform::FeatureRecipe;

/// Directory searched for `thermography.csv` when `--data` is absent.
const DATA_DIR_ENV: &str = "THERMOBENCH_DATA_DIR";
const DEFAULT_DATA_FILE: &str = "thermography.csv";

#[derive(Parser)]
#[command(
    name = "thermobench",
    version,
    about = "Infrared-thermography temperature regression benchmark harness"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset CSV. Falls back to $THERMOBENCH_DATA_DIR/thermography.csv,
    /// then to the built-in deterministic generator.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Column-role schema JSON (defaults to the built-in thermography schema).
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// JSON run configuration; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Split seed for single-split commands.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Comma-separated seed list for the table commands.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory for reports (single-file commands treat it as a file path).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; both are written when omitted.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset CSV.
    Synth {
        #[arg(long, default_value_t = 1020)]
        rows: usize,
        #[arg(long, default_value_t = 61)]
        missing_rows: usize,
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        gen_seed: u64,
    },
    /// Load, clean, and round-average the dataset; print a summary.
    Ingest,
    /// Build a feature recipe on the training split and write the matrix.
    Features {
        #[arg(long, default_value = "f")]
        recipe: String,
    },
    /// Rank features by |Pearson| with single-feature CV RMSE.
    Select,
    /// Fit one model on the training split and save the artifact.
    Fit {
        #[arg(long, default_value = "f")]
        recipe: String,
        #[arg(long, default_value = "linear")]
        model: String,
        /// Hyperparameter overrides, repeatable: --hp key=value.
        #[arg(long = "hp", value_parser = parse_hp)]
        hp: Vec<(String, String)>,
    },
    /// Evaluate a saved model artifact on the test split.
    Evaluate {
        #[arg(long, default_value = "f")]
        recipe: String,
        /// Model artifact JSON produced by `fit`.
        #[arg(long)]
        model: PathBuf,
    },
    /// OLS over feature recipes a-f.
    TableIv,
    /// Model comparison on the final recipe.
    TableV,
    /// Network architecture grid.
    TableVi {
        /// Zero-based grid row indices; all rows when omitted.
        #[arg(long, value_delimiter = ',')]
        arch: Option<Vec<usize>>,
    },
    /// Replica sweep of the driver feature.
    Fig2 {
        #[arg(long, default_value_t = 8)]
        max_reps: usize,
    },
    /// Backward selection from the full matrix with an OLS test audit.
    SbsAudit {
        #[arg(long, default_value_t = 11)]
        target_size: usize,
    },
}

fn parse_hp(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Precedence, weakest first: environment, then flags, then config file.
fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(DEFAULT_DATA_FILE);
        if candidate.is_file() {
            cfg.data = Some(candidate);
        }
    }
    if let Some(path) = &common.data {
        cfg.data = Some(path.clone());
    }
    if let Some(schema) = &common.schema {
        cfg.schema = Some(schema.clone());
    }
    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(path) = &common.config {
        let file: RunConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let defaults = RunConfig::default();
        if file.data.is_some() {
            cfg.data = file.data;
        }
        if file.schema.is_some() {
            cfg.schema = file.schema;
        }
        if file.seeds != defaults.seeds {
            cfg.seeds = file.seeds;
        }
        cfg.synth = file.synth;
        cfg.test_fraction = file.test_fraction;
        cfg.cv_folds = file.cv_folds;
        cfg.cnn_epochs = file.cnn_epochs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("reports"))
}

fn format_of(common: &Common) -> Result<Option<Format>> {
    common.format.as_deref().map(str::parse).transpose()
}

fn build_split_features(
    cfg: &RunConfig,
    recipe_name: &str,
    seed: u64,
) -> Result<thermobench::bench::SplitFeatures> {
    let (ds, _) = cfg.load_dataset()?;
    let (tr, te) = thermobench::data::split(
        &ds,
        &thermobench::data::SplitSpec::new(cfg.test_fraction, seed),
    )?;
    let recipe = FeatureRecipe::preset(recipe_name)?;
    features_for_split(&tr, &te, &recipe)
}

fn model_spec(model: &str, hp: &[(String, String)]) -> Result<EstimatorSpec> {
    let map: BTreeMap<&str, &str> = hp.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let get_f64 = |key: &str, default: f64| -> Result<f64> {
        map.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::config(format!("--hp {key} must be a number"))))
            .unwrap_or(Ok(default))
    };
    let get_usize = |key: &str, default: usize| -> Result<usize> {
        map.get(key)
            .map(|v| v.parse::<usize>().map_err(|_| Error::config(format!("--hp {key} must be an integer"))))
            .unwrap_or(Ok(default))
    };
    let driver = map.get("driver").unwrap_or(&thermobench::bench::DRIVER).to_string();
    Ok(match model {
        "linear" | "ols" => EstimatorSpec::Linear { lambda: get_f64("lambda", 0.0)? },
        "quadratic" => EstimatorSpec::Quadratic {
            lambda: get_f64("lambda", 0.0)?,
            max_degree: get_usize("max_degree", 2)? as u32,
        },
        "weighted" => EstimatorSpec::Weighted {
            space: match map.get("space").copied().unwrap_or("target") {
                "target" => DensitySpace::Target,
                "uniform" => DensitySpace::Uniform,
                other => return Err(Error::config(format!("unknown density space {other:?}"))),
            },
        },
        "binning" => EstimatorSpec::Binning { n_bins: get_usize("n_bins", 3)?, driver },
        "piecewise" => EstimatorSpec::Piecewise {
            breakpoints: get_usize("breakpoints", 3)?,
            driver,
        },
        "knn" => EstimatorSpec::Knn { k: get_usize("k", 10)? },
        "1nn" => EstimatorSpec::Knn { k: 1 },
        "svr" => EstimatorSpec::Svr {
            c: get_f64("c", 1.0)?,
            epsilon: get_f64("epsilon", 0.1)?,
            gamma: map
                .get("gamma")
                .map(|v| v.parse::<f64>().map_err(|_| Error::config("--hp gamma must be a number")))
                .transpose()?,
        },
        "forest" => EstimatorSpec::Forest {
            n_estimators: get_usize("n_estimators", 100)?,
            seed: get_usize("seed", 0)? as u64,
        },
        other => Err(Error::config(format!("unknown model family {other:?}")))?,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Synth { rows, missing_rows, gen_seed } => {
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_FILE));
            let cfg = SynthConfig { n_rows: *rows, missing_rows: *missing_rows, seed: *gen_seed };
            write_dataset_csv(&out, &cfg)?;
            println!("wrote {} rows to {}", rows, out.display());
        }
        Command::Ingest => {
            let cfg = resolve_config(common)?;
            let (ds, schema) = cfg.load_dataset()?;
            println!(
                "clean rows: {}; numeric columns: {}; categorical columns: {}; target: {}",
                ds.n_rows(),
                ds.numeric.len(),
                ds.categorical.len(),
                schema.target
            );
            if let Some(out) = &common.out {
                let mut file = std::fs::File::create(out)?;
                write_csv(&ds, &mut file)?;
                println!("wrote cleaned dataset to {}", out.display());
            }
        }
        Command::Features { recipe } => {
            let cfg = resolve_config(common)?;
            let f = build_split_features(&cfg, recipe, common.seed)?;
            println!(
                "recipe {}: {} features, {} train rows, {} test rows",
                recipe,
                f.train.n_features(),
                f.train.n_rows(),
                f.test.n_rows()
            );
            if let Some(out) = &common.out {
                let mut file = std::fs::File::create(out)?;
                f.train.write_csv(&mut file)?;
                println!("wrote training matrix to {}", out.display());
            }
        }
        Command::Select => {
            let cfg = resolve_config(common)?;
            let report = run_feature_ranking(&cfg)?;
            let dir = out_dir(common);
            std::fs::create_dir_all(&dir)?;
            let fmt = format_of(common)?;
            if fmt.is_none() || fmt == Some(Format::Csv) {
                std::fs::write(dir.join("feature_ranking.csv"), report.to_csv())?;
            }
            if fmt.is_none() || fmt == Some(Format::Json) {
                std::fs::write(dir.join("feature_ranking.json"), report.to_json()?)?;
            }
            print!("{}", report.to_csv());
        }
        Command::Fit { recipe, model, hp } => {
            let cfg = resolve_config(common)?;
            let f = build_split_features(&cfg, recipe, common.seed)?;
            let spec = model_spec(model, hp)?;
            let trained = spec.fit(&f.train)?;
            let preds = trained.predict(&f.test)?;
            let truth: Vec<f64> = f.test.target_ref()?.iter().cloned().collect();
            let m = compute_metrics(&truth, &preds)?;
            println!(
                "{model} on recipe {recipe}: test MAE {:.6}, MSE {:.6}, RMSE {:.6}",
                m.mae, m.mse, m.rmse
            );
            if let Some(out) = &common.out {
                std::fs::write(out, ModelArtifact::wrap(trained).to_json()?)?;
                println!("wrote model artifact to {}", out.display());
            }
        }
        Command::Evaluate { recipe, model } => {
            let cfg = resolve_config(common)?;
            let f = build_split_features(&cfg, recipe, common.seed)?;
            let artifact = ModelArtifact::from_json(&std::fs::read_to_string(model)?)?;
            let preds = artifact.model.predict(&f.test)?;
            let truth: Vec<f64> = f.test.target_ref()?.iter().cloned().collect();
            let m = compute_metrics(&truth, &preds)?;
            println!("test MAE {:.6}, MSE {:.6}, RMSE {:.6} over {} rows", m.mae, m.mse, m.rmse, m.n);
        }
        Command::TableIv => {
            let cfg = resolve_config(common)?;
            let report = run_feature_table(&cfg)?;
            report.write(&out_dir(common), "table_iv", format_of(common)?)?;
            print!("{}", report.to_csv());
        }
        Command::TableV => {
            let cfg = resolve_config(common)?;
            let report = run_model_table(&cfg)?;
            report.write(&out_dir(common), "table_v", format_of(common)?)?;
            print!("{}", report.to_csv());
        }
        Command::TableVi { arch } => {
            let cfg = resolve_config(common)?;
            if let Some(list) = arch {
                let n = cnn_grid().len();
                if let Some(&bad) = list.iter().find(|&&i| i >= n) {
                    return Err(Error::config(format!("--arch index {bad} out of range (grid has {n} rows)")));
                }
            }
            let (report, histories) = run_cnn_table(&cfg, arch.as_deref())?;
            let dir = out_dir(common);
            report.write(&dir, "table_vi", format_of(common)?)?;
            for h in &histories {
                let mut csv = String::from("epoch,train_loss,val_loss\n");
                for r in &h.records {
                    csv.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_loss));
                }
                std::fs::write(dir.join(format!("history_{}_seed{}.csv", h.label, h.seed)), csv)?;
            }
            print!("{}", report.to_csv());
        }
        Command::Fig2 { max_reps } => {
            let cfg = resolve_config(common)?;
            let report = run_repetition_sweep(&cfg, *max_reps)?;
            report.write(&out_dir(common), "fig_2", format_of(common)?)?;
            print!("{}", report.to_csv());
        }
        Command::SbsAudit { target_size } => {
            let cfg = resolve_config(common)?;
            let report = run_sbs_audit(&cfg, *target_size)?;
            report.write(&out_dir(common), "sbs_audit", format_of(common)?)?;
            print!("{}", report.to_csv());
        }
    }
    Ok(())
}
