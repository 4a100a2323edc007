//! C bindings for the thermobench library. The surface is intentionally
//! small: load or generate a dataset, fit a model described by a JSON
//! estimator spec on a seeded train/test split, read the test metrics,
//! and round-trip model artifacts through JSON.
//!
//! All handles are opaque; every function that can fail returns a
//! `TbStatus` and records a message retrievable with `tb_last_error`.
//! Handles must be released with the matching `_free` function exactly
//! once. The library keeps no global state apart from the thread-local
//! error message, so handles may be used from any thread, one at a time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use thermobench::bench::{features_for_split, RunConfig};
use thermobench::data::{split, CleanDataset, SplitSpec};
use thermobench::error::Error;
use thermobench::estimators::{EstimatorSpec, ModelArtifact, TrainedModel};
use thermobench::eval::compute_metrics;
use thermobench::transform::{FeatureMatrix, FeatureRecipe};

/// Result code of a fallible call. Values match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    /// Success.
    Ok = 0,
    /// Invalid argument, spec, or serialized payload.
    Config = 2,
    /// Dataset, schema, or I/O problem.
    Data = 3,
    /// Numerical failure (non-convergence, singular system).
    Numerical = 4,
}

/// MAE/MSE/RMSE triple over the rows the model was evaluated on.
#[repr(C)]
pub struct TbMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Number of evaluated rows.
    pub n: u64,
}

/// Opaque handle to a cleaned, round-averaged dataset.
pub struct TbDataset {
    inner: CleanDataset,
}

/// Opaque handle to a fitted model together with test-split metrics.
pub struct TbModel {
    inner: TrainedModel,
    metrics: Option<TbMetricsOwned>,
}

struct TbMetricsOwned {
    mae: f64,
    mse: f64,
    rmse: f64,
    n: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(err: &Error) -> TbStatus {
    match err.exit_code() {
        2 => TbStatus::Config,
        4 => TbStatus::Numerical,
        _ => TbStatus::Data,
    }
}

fn fail(err: Error) -> TbStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs `f`, converting panics into a `Numerical` status so they never
/// unwind across the FFI boundary.
fn guarded<F: FnOnce() -> TbStatus>(f: F) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TbStatus::Numerical
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::config(format!("{what} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Error::config(format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a dataset from a CSV file, clean it, and average the measurement
/// rounds. `schema_path` may be null to use the built-in column roles.
/// On success writes a new handle to `out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn tb_dataset_load(
    path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut TbDataset,
) -> TbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(Error::config("out must not be null"));
        }
        let path = match required_str(path, "path") {
            Ok(p) => PathBuf::from(p),
            Err(e) => return fail(e),
        };
        let schema = if schema_path.is_null() {
            None
        } else {
            match required_str(schema_path, "schema_path") {
                Ok(p) => Some(PathBuf::from(p)),
                Err(e) => return fail(e),
            }
        };
        let cfg = RunConfig {
            data: Some(path),
            schema,
            ..RunConfig::default()
        };
        match cfg.load_dataset() {
            Ok((ds, _)) => {
                *out = Box::into_raw(Box::new(TbDataset { inner: ds }));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generate the built-in synthetic dataset (cleaned and round-averaged)
/// with the given generator seed. On success writes a new handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn tb_dataset_generate(seed: u64, out: *mut *mut TbDataset) -> TbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(Error::config("out must not be null"));
        }
        let mut cfg = RunConfig::default();
        cfg.synth.seed = seed;
        match cfg.load_dataset() {
            Ok((ds, _)) => {
                *out = Box::into_raw(Box::new(TbDataset { inner: ds }));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of rows in a dataset handle; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tb_dataset_rows(ds: *const TbDataset) -> u64 {
    if ds.is_null() {
        return 0;
    }
    (*ds).inner.n_rows() as u64
}

/// Release a dataset handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_dataset_free(ds: *mut TbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fit a model on the training side of a seeded split and evaluate it on
/// the held-out side. `recipe` is a preset name (a-f or full38);
/// `spec_json` is a serialized estimator spec, for example
/// `{"family":"linear","lambda":0.0}`. On success writes a model handle
/// carrying the test metrics to `out`.
///
/// # Safety
/// `ds` must be a live dataset handle; `recipe` and `spec_json` must be
/// valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_fit(
    ds: *const TbDataset,
    recipe: *const c_char,
    spec_json: *const c_char,
    seed: u64,
    out: *mut *mut TbModel,
) -> TbStatus {
    guarded(|| {
        if ds.is_null() || out.is_null() {
            return fail(Error::config("ds and out must not be null"));
        }
        let recipe_name = match required_str(recipe, "recipe") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let spec_text = match required_str(spec_json, "spec_json") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let spec: EstimatorSpec = match serde_json::from_str(spec_text) {
            Ok(s) => s,
            Err(e) => return fail(Error::config(format!("bad estimator spec: {e}"))),
        };
        let result = (|| {
            let recipe = FeatureRecipe::preset(recipe_name)?;
            let cfg = RunConfig::default();
            let (tr, te) = split(&(*ds).inner, &SplitSpec::new(cfg.test_fraction, seed))?;
            let f = features_for_split(&tr, &te, &recipe)?;
            let model = spec.fit(&f.train)?;
            let preds = model.predict(&f.test)?;
            let truth: Vec<f64> = f.test.target_ref()?.iter().cloned().collect();
            let m = compute_metrics(&truth, &preds)?;
            Ok::<_, Error>(TbModel {
                inner: model,
                metrics: Some(TbMetricsOwned {
                    mae: m.mae,
                    mse: m.mse,
                    rmse: m.rmse,
                    n: m.n as u64,
                }),
            })
        })();
        match result {
            Ok(model) => {
                *out = Box::into_raw(Box::new(model));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Copy the model's held-out metrics into `out`. Fails with `Config` if
/// the model was loaded from JSON and carries no metrics.
///
/// # Safety
/// `model` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_model_metrics(model: *const TbModel, out: *mut TbMetrics) -> TbStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(Error::config("model and out must not be null"));
        }
        match &(*model).metrics {
            Some(m) => {
                *out = TbMetrics {
                    mae: m.mae,
                    mse: m.mse,
                    rmse: m.rmse,
                    n: m.n,
                };
                TbStatus::Ok
            }
            None => fail(Error::config("model carries no evaluation metrics")),
        }
    })
}

/// Predict one row of already-engineered features. `len` must equal the
/// model's feature count.
///
/// # Safety
/// `model` must be a live handle; `features` must point to `len` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_model_predict(
    model: *const TbModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> TbStatus {
    guarded(|| {
        if model.is_null() || features.is_null() || out.is_null() {
            return fail(Error::config("model, features, and out must not be null"));
        }
        let model = &(*model).inner;
        let names: Vec<String> = model.feature_names().to_vec();
        if len != names.len() {
            return fail(Error::config(format!(
                "expected {} features, got {len}",
                names.len()
            )));
        }
        let row = std::slice::from_raw_parts(features, len);
        let values = nalgebra_matrix_from_row(row);
        let result = (|| {
            let m = FeatureMatrix::new(values, names, None)?;
            let preds = model.predict(&m)?;
            Ok::<_, Error>(preds[0])
        })();
        match result {
            Ok(v) => {
                *out = v;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn nalgebra_matrix_from_row(row: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(1, row.len(), row)
}

/// Serialize a model to a JSON artifact. The returned string must be
/// released with `tb_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_model_to_json(
    model: *const TbModel,
    out: *mut *mut c_char,
) -> TbStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(Error::config("model and out must not be null"));
        }
        let artifact = ModelArtifact::wrap((*model).inner.clone());
        match artifact.to_json() {
            Ok(json) => {
                let c = CString::new(json.replace('\0', " ")).unwrap();
                *out = c.into_raw();
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Load a model from a JSON artifact produced by `tb_model_to_json`.
/// The handle carries no evaluation metrics.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_model_from_json(
    json: *const c_char,
    out: *mut *mut TbModel,
) -> TbStatus {
    guarded(|| {
        if out.is_null() {
            return fail(Error::config("out must not be null"));
        }
        let text = match required_str(json, "json") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match ModelArtifact::from_json(text) {
            Ok(artifact) => {
                *out = Box::into_raw(Box::new(TbModel {
                    inner: artifact.model,
                    metrics: None,
                }));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tb_model_free(model: *mut TbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer returned by `tb_model_to_json`.
#[no_mangle]
pub unsafe extern "C" fn tb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
