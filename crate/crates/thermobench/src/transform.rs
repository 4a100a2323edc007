//! Standardization, categorical encoding, heuristic feature engineering
//! (polynomial terms, replication), and declarative feature recipes.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::CleanDataset;
use crate::error::{Error, Result};

/// Dense numeric feature matrix with named columns and an optional target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub names: Vec<String>,
    pub target: Option<DVector<f64>>,
}

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>, names: Vec<String>, target: Option<DVector<f64>>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::data(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("feature matrix contains non-finite values"));
        }
        Ok(FeatureMatrix { values, names, target })
    }

    pub fn from_columns(cols: &[(String, Vec<f64>)], target: Option<Vec<f64>>) -> Result<Self> {
        let n_rows = cols.first().map_or(0, |(_, v)| v.len());
        let mut values = DMatrix::zeros(n_rows, cols.len());
        for (j, (_, v)) in cols.iter().enumerate() {
            if v.len() != n_rows {
                return Err(Error::data("ragged columns"));
            }
            values.set_column(j, &DVector::from_column_slice(v));
        }
        FeatureMatrix::new(
            values,
            cols.iter().map(|(n, _)| n.clone()).collect(),
            target.map(DVector::from_vec),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<DVector<f64>> {
        self.column_index(name).map(|j| self.values.column(j).into())
    }

    pub fn append_column(&mut self, name: String, col: DVector<f64>) {
        let mut values = DMatrix::zeros(self.values.nrows(), self.values.ncols() + 1);
        values.view_mut((0, 0), self.values.shape()).copy_from(&self.values);
        values.set_column(self.values.ncols(), &col);
        self.values = values;
        self.names.push(name);
    }

    pub fn target_ref(&self) -> Result<&DVector<f64>> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::data("feature matrix has no target"))
    }

    /// Row subset, preserving order of `idx`.
    pub fn take_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let values = DMatrix::from_fn(idx.len(), self.n_features(), |i, j| {
            self.values[(idx[i], j)]
        });
        let target = self
            .target
            .as_ref()
            .map(|t| DVector::from_iterator(idx.len(), idx.iter().map(|&i| t[i])));
        FeatureMatrix {
            values,
            names: self.names.clone(),
            target,
        }
    }

    /// Column subset by name list, preserving the order of `names`.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let mut values = DMatrix::zeros(self.n_rows(), names.len());
        for (j, name) in names.iter().enumerate() {
            let idx = self
                .column_index(name)
                .ok_or_else(|| Error::data(format!("unknown feature {name:?}")))?;
            values.column_mut(j).copy_from(&self.values.column(idx));
        }
        FeatureMatrix::new(values, names.to_vec(), self.target.clone())
    }

    pub fn write_csv(&self, w: &mut dyn std::io::Write) -> Result<()> {
        let mut header = self.names.join(",");
        if self.target.is_some() {
            header.push_str(",target");
        }
        writeln!(w, "{header}")?;
        for i in 0..self.n_rows() {
            let mut fields: Vec<String> = (0..self.n_features())
                .map(|j| format!("{}", self.values[(i, j)]))
                .collect();
            if let Some(t) = &self.target {
                fields.push(format!("{}", t[i]));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Per-feature mean and population standard deviation fitted on training
/// data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Fit means and population standard deviations (divide by n).
pub fn fit_standardizer(m: &FeatureMatrix) -> Result<Standardizer> {
    let n = m.n_rows() as f64;
    if m.n_rows() == 0 {
        return Err(Error::data("cannot fit standardizer on empty matrix"));
    }
    let mut means = Vec::with_capacity(m.n_features());
    let mut stds = Vec::with_capacity(m.n_features());
    for j in 0..m.n_features() {
        let col = m.values.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= 0.0 {
            return Err(Error::numerical(format!(
                "zero variance in column {:?}",
                m.names[j]
            )));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(Standardizer {
        names: m.names.clone(),
        means,
        stds,
    })
}

/// Apply a fitted standardizer: out = (in - mean) / std, columns matched
/// by name.
pub fn apply_standardizer(s: &Standardizer, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if s.names != m.names {
        return Err(Error::data(format!(
            "standardizer fitted on {:?}, applied to {:?}",
            s.names, m.names
        )));
    }
    let mut values = m.values.clone();
    for j in 0..values.ncols() {
        let mut col = values.column_mut(j);
        for v in col.iter_mut() {
            *v = (*v - s.means[j]) / s.stds[j];
        }
    }
    FeatureMatrix::new(values, m.names.clone(), m.target.clone())
}

/// Invert a standardizer: out = in * std + mean.
pub fn invert_standardizer(s: &Standardizer, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if s.names != m.names {
        return Err(Error::data("standardizer/matrix name mismatch"));
    }
    let mut values = m.values.clone();
    for j in 0..values.ncols() {
        for v in values.column_mut(j).iter_mut() {
            *v = *v * s.stds[j] + s.means[j];
        }
    }
    FeatureMatrix::new(values, m.names.clone(), m.target.clone())
}

/// Ordered age-range encoding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrdinalMap {
    pub mapping: Vec<(String, f64)>,
}

impl OrdinalMap {
    /// The fixed age-range mapping used by the pipeline.
    pub fn age() -> OrdinalMap {
        OrdinalMap {
            mapping: vec![
                ("18-20".into(), 0.0),
                ("21-25".into(), 1.0),
                ("26-30".into(), 2.0),
                ("31-40".into(), 3.0),
                ("41-50".into(), 4.0),
                ("51-60".into(), 5.0),
                (">60".into(), 6.0),
                (">70".into(), 7.0),
            ],
        }
    }

    pub fn get(&self, category: &str) -> Option<f64> {
        self.mapping
            .iter()
            .find(|(c, _)| c == category)
            .map(|&(_, v)| v)
    }
}

/// Map a text column through an ordinal encoding. Unknown categories are
/// an error naming the value and row.
pub fn encode_ordinal(col: &[String], map: &OrdinalMap) -> Result<Vec<f64>> {
    col.iter()
        .enumerate()
        .map(|(i, c)| {
            map.get(c)
                .ok_or_else(|| Error::data(format!("unknown category {c:?} at row {i}")))
        })
        .collect()
}

/// Per-variable ordered category list defining one-hot indicator columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneHotMap {
    pub variable: String,
    pub categories: Vec<String>,
}

impl OneHotMap {
    /// Learn the category list (lexicographic) from a training column.
    pub fn fit(variable: &str, col: &[String]) -> Result<OneHotMap> {
        if col.is_empty() {
            return Err(Error::data("cannot one-hot encode an empty column"));
        }
        let categories: BTreeSet<String> = col.iter().cloned().collect();
        Ok(OneHotMap {
            variable: variable.to_string(),
            categories: categories.into_iter().collect(),
        })
    }

    /// Indicator columns named `<var>_<category>`; each row is one-hot.
    pub fn encode(&self, col: &[String]) -> Result<FeatureMatrix> {
        let mut values = DMatrix::zeros(col.len(), self.categories.len());
        for (i, c) in col.iter().enumerate() {
            let j = self
                .categories
                .iter()
                .position(|k| k == c)
                .ok_or_else(|| Error::data(format!("unknown category {c:?} at row {i}")))?;
            values[(i, j)] = 1.0;
        }
        let names = self
            .categories
            .iter()
            .map(|c| format!("{}_{}", self.variable, c))
            .collect();
        FeatureMatrix::new(values, names, None)
    }
}

/// One-shot one-hot encoding (fit + encode on the same column).
pub fn encode_onehot(variable: &str, col: &[String]) -> Result<FeatureMatrix> {
    OneHotMap::fit(variable, col)?.encode(col)
}

/// Names of the three columns appended for the pair (x, y): x², y², x·y.
pub fn polynomial_names(x: &str, y: &str) -> [String; 3] {
    [
        format!("({x})^2"),
        format!("({y})^2"),
        format!("{x}*{y}"),
    ]
}

/// Append the three degree-2 terms for a pair of features: x², y², x·y,
/// in that fixed order.
pub fn add_polynomial(m: &mut FeatureMatrix, x: &str, y: &str) -> Result<()> {
    let cx = m
        .column(x)
        .ok_or_else(|| Error::data(format!("unknown feature {x:?}")))?;
    let cy = m
        .column(y)
        .ok_or_else(|| Error::data(format!("unknown feature {y:?}")))?;
    let [nx2, ny2, nxy] = polynomial_names(x, y);
    m.append_column(nx2, cx.component_mul(&cx));
    m.append_column(ny2, cy.component_mul(&cy));
    m.append_column(nxy, cx.component_mul(&cy));
    Ok(())
}

/// Append `extra_copies` identical copies of a feature, named
/// `<feature>_rep<k>`.
pub fn replicate_feature(m: &mut FeatureMatrix, feature: &str, extra_copies: usize) -> Result<()> {
    let col = m
        .column(feature)
        .ok_or_else(|| Error::data(format!("unknown feature {feature:?}")))?;
    for k in 1..=extra_copies {
        m.append_column(format!("{feature}_rep{k}"), col.clone());
    }
    Ok(())
}

/// One declarative feature-engineering step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Step {
    /// Start the matrix from the named numeric columns.
    SelectColumns { columns: Vec<String> },
    /// Start the matrix from every numeric column in the dataset.
    SelectAllNumeric,
    /// Standardize all columns currently in the matrix (fit on train).
    Standardize,
    /// Append an ordinal-encoded categorical column.
    OrdinalEncode { column: String },
    /// Append one-hot indicators for a categorical column.
    OnehotEncode { column: String },
    /// Append x², y², x·y, each standardized with train statistics.
    Polynomial { x: String, y: String },
    /// Append exact copies of a feature.
    Replicate { feature: String, extra_copies: usize },
}

/// Ordered list of engineering steps producing a `FeatureMatrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    pub name: String,
    pub steps: Vec<Step>,
}

/// Facial-temperature features ranked by correlation (recipe a).
pub const FACIAL_FEATURES: &[&str] = &[
    "T_Max_1",
    "canthi4Max_1",
    "canthiMax_1",
    "Max1R13_1",
    "Max1L13_1",
    "aveAllL13_1",
    "aveAllR13_1",
];

impl FeatureRecipe {
    /// Resolve one of the named presets: a–f or full38.
    pub fn preset(name: &str) -> Result<FeatureRecipe> {
        let facial: Vec<String> = FACIAL_FEATURES.iter().map(|s| s.to_string()).collect();
        let env_all = ["Distance", "T_offset", "T_atm", "Humidity"];
        let env_no_distance = ["T_offset", "T_atm", "Humidity"];
        let with = |extra: &[&str]| -> Vec<String> {
            facial
                .iter()
                .cloned()
                .chain(extra.iter().map(|s| s.to_string()))
                .collect()
        };
        let gender = Step::OnehotEncode {
            column: "Gender".into(),
        };
        let poly = Step::Polynomial {
            x: "T_Max_1".into(),
            y: "canthi4Max_1".into(),
        };
        let reps = Step::Replicate {
            feature: "T_Max_1".into(),
            extra_copies: 5,
        };
        let steps = match name {
            "a" => vec![
                Step::SelectColumns { columns: facial.clone() },
                Step::Standardize,
            ],
            "b" => vec![
                Step::SelectColumns { columns: with(&env_all) },
                Step::Standardize,
                gender,
            ],
            "c" => vec![
                Step::SelectColumns { columns: with(&env_no_distance) },
                Step::Standardize,
                gender,
            ],
            "d" => vec![
                Step::SelectColumns { columns: with(&env_no_distance) },
                Step::Standardize,
                gender,
                reps,
            ],
            "e" => vec![
                Step::SelectColumns { columns: with(&env_no_distance) },
                Step::Standardize,
                gender,
                poly,
            ],
            "f" => vec![
                Step::SelectColumns { columns: with(&env_no_distance) },
                Step::Standardize,
                gender,
                poly,
                reps,
            ],
            "full38" => vec![
                Step::SelectAllNumeric,
                Step::Standardize,
                Step::OnehotEncode { column: "Gender".into() },
                Step::OnehotEncode { column: "Ethnicity".into() },
                Step::OrdinalEncode { column: "Age".into() },
            ],
            other => {
                return Err(Error::config(format!(
                    "unknown recipe preset {other:?} (expected a-f or full38)"
                )))
            }
        };
        Ok(FeatureRecipe {
            name: name.to_string(),
            steps,
        })
    }
}

/// Per-step fitted state recorded while executing a recipe on training
/// data, replayable on any compatible dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
enum FittedStep {
    SelectColumns { columns: Vec<String> },
    Standardize(Standardizer),
    OrdinalEncode { column: String, map: OrdinalMap },
    OnehotEncode(OneHotMap),
    Polynomial { x: String, y: String, scaler: Standardizer },
    Replicate { feature: String, extra_copies: usize },
}

/// A recipe fitted on a training dataset. Applying it to other data reuses
/// the training statistics (scaler means/stds, category lists).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedRecipe {
    pub name: String,
    steps: Vec<FittedStep>,
}

impl FittedRecipe {
    /// Fit a recipe's stateful steps on the training dataset.
    pub fn fit(ds: &CleanDataset, recipe: &FeatureRecipe) -> Result<FittedRecipe> {
        let mut fitted = Vec::with_capacity(recipe.steps.len());
        let mut m = FeatureMatrix::from_columns(&[], Some(ds.target.clone()))?;
        for step in &recipe.steps {
            let f = match step {
                Step::SelectColumns { columns } => FittedStep::SelectColumns {
                    columns: columns.clone(),
                },
                Step::SelectAllNumeric => FittedStep::SelectColumns {
                    columns: ds.numeric.iter().map(|(n, _)| n.clone()).collect(),
                },
                Step::Standardize => FittedStep::Standardize(fit_standardizer(&m)?),
                Step::OrdinalEncode { column } => FittedStep::OrdinalEncode {
                    column: column.clone(),
                    map: OrdinalMap::age(),
                },
                Step::OnehotEncode { column } => {
                    let col = ds.categorical_column(column).ok_or_else(|| {
                        Error::data(format!("unknown categorical column {column:?}"))
                    })?;
                    FittedStep::OnehotEncode(OneHotMap::fit(column, col)?)
                }
                Step::Polynomial { x, y } => {
                    let mut probe = m.clone();
                    add_polynomial(&mut probe, x, y)?;
                    let appended =
                        probe.select_columns(&polynomial_names(x, y).to_vec())?;
                    FittedStep::Polynomial {
                        x: x.clone(),
                        y: y.clone(),
                        scaler: fit_standardizer(&appended)?,
                    }
                }
                Step::Replicate { feature, extra_copies } => FittedStep::Replicate {
                    feature: feature.clone(),
                    extra_copies: *extra_copies,
                },
            };
            apply_step(&f, ds, &mut m)?;
            fitted.push(f);
        }
        Ok(FittedRecipe {
            name: recipe.name.clone(),
            steps: fitted,
        })
    }

    /// Replay the fitted steps on a dataset.
    pub fn transform(&self, ds: &CleanDataset) -> Result<FeatureMatrix> {
        let mut m = FeatureMatrix::from_columns(&[], Some(ds.target.clone()))?;
        for step in &self.steps {
            apply_step(step, ds, &mut m)?;
        }
        Ok(m)
    }

    /// Ordered list of produced feature names.
    pub fn feature_names(&self, ds: &CleanDataset) -> Result<Vec<String>> {
        Ok(self.transform(ds)?.names)
    }
}

fn apply_step(step: &FittedStep, ds: &CleanDataset, m: &mut FeatureMatrix) -> Result<()> {
    match step {
        FittedStep::SelectColumns { columns } => {
            let cols: Result<Vec<(String, Vec<f64>)>> = columns
                .iter()
                .map(|c| {
                    ds.numeric_column(c)
                        .map(|v| (c.clone(), v.to_vec()))
                        .ok_or_else(|| Error::data(format!("unknown numeric column {c:?}")))
                })
                .collect();
            *m = FeatureMatrix::from_columns(&cols?, Some(ds.target.clone()))?;
        }
        FittedStep::Standardize(s) => {
            *m = apply_standardizer(s, m)?;
        }
        FittedStep::OrdinalEncode { column, map } => {
            let col = ds
                .categorical_column(column)
                .ok_or_else(|| Error::data(format!("unknown categorical column {column:?}")))?;
            let encoded = encode_ordinal(col, map)?;
            m.append_column(column.clone(), DVector::from_vec(encoded));
        }
        FittedStep::OnehotEncode(map) => {
            let col = ds
                .categorical_column(&map.variable)
                .ok_or_else(|| Error::data(format!("unknown categorical column {:?}", map.variable)))?;
            let encoded = map.encode(col)?;
            for (j, name) in encoded.names.iter().enumerate() {
                m.append_column(name.clone(), encoded.values.column(j).into());
            }
        }
        FittedStep::Polynomial { x, y, scaler } => {
            add_polynomial(m, x, y)?;
            let names = polynomial_names(x, y);
            for (k, name) in names.iter().enumerate() {
                let j = m.column_index(name).unwrap();
                for v in m.values.column_mut(j).iter_mut() {
                    *v = (*v - scaler.means[k]) / scaler.stds[k];
                }
            }
        }
        FittedStep::Replicate { feature, extra_copies } => {
            replicate_feature(m, feature, *extra_copies)?;
        }
    }
    Ok(())
}

/// Fit a recipe and transform the same dataset in one call.
pub fn build_features(ds: &CleanDataset, recipe: &FeatureRecipe) -> Result<FeatureMatrix> {
    FittedRecipe::fit(ds, recipe)?.transform(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(cols: &[(&str, &[f64])]) -> FeatureMatrix {
        let cols: Vec<(String, Vec<f64>)> = cols
            .iter()
            .map(|(n, v)| (n.to_string(), v.to_vec()))
            .collect();
        FeatureMatrix::from_columns(&cols, None).unwrap()
    }

    #[test]
    fn standardizer_hand_values() {
        let m = matrix(&[("x", &[1.0, 2.0, 3.0])]);
        let s = fit_standardizer(&m).unwrap();
        assert_abs_diff_eq!(s.means[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.stds[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        // Apply to an unseen value: (4 - 2) / 0.8165 ≈ 2.449.
        let out = apply_standardizer(&s, &matrix(&[("x", &[4.0])])).unwrap();
        assert_abs_diff_eq!(out.values[(0, 0)], 2.0 / (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn standardizer_fixed_point() {
        // A column that is already standardized comes back unchanged.
        let vals = [-1.0, 0.0, 1.0];
        let scale = (2.0f64 / 3.0).sqrt();
        let m = matrix(&[("x", &vals.map(|v| v * 1.0 / scale * scale))]);
        let s = fit_standardizer(&m).unwrap();
        assert_abs_diff_eq!(s.means[0], 0.0, epsilon = 1e-12);
        let out = apply_standardizer(&s, &m).unwrap();
        let s2 = fit_standardizer(&out).unwrap();
        assert_abs_diff_eq!(s2.means[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s2.stds[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn standardizer_rejects_constant_column() {
        let m = matrix(&[("c", &[5.0, 5.0, 5.0])]);
        let err = fit_standardizer(&m).unwrap_err();
        assert!(err.to_string().contains("zero variance"));
        assert!(err.to_string().contains('c'));
    }

    #[test]
    fn standardize_roundtrip() {
        let m = matrix(&[("x", &[1.5, -2.0, 7.25, 0.0]), ("y", &[10.0, 11.0, 12.0, 9.0])]);
        let s = fit_standardizer(&m).unwrap();
        let z = apply_standardizer(&s, &m).unwrap();
        let back = invert_standardizer(&s, &z).unwrap();
        for (a, b) in m.values.iter().zip(back.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn ordinal_age_mapping() {
        let map = OrdinalMap::age();
        assert_eq!(map.get("18-20"), Some(0.0));
        assert_eq!(map.get(">70"), Some(7.0));
        let col: Vec<String> = vec!["26-30".into(); 4];
        assert_eq!(encode_ordinal(&col, &map).unwrap(), vec![2.0; 4]);
        let bad: Vec<String> = vec!["17-18".into()];
        assert!(encode_ordinal(&bad, &map).is_err());
    }

    #[test]
    fn onehot_gender() {
        let col: Vec<String> = vec!["Female".into(), "Male".into(), "Female".into()];
        let m = encode_onehot("Gender", &col).unwrap();
        assert_eq!(m.names, vec!["Gender_Female", "Gender_Male"]);
        assert_eq!(m.values.column(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
        assert_eq!(m.values.column(1).iter().cloned().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn onehot_single_category() {
        let col: Vec<String> = vec!["A".into(), "A".into()];
        let m = encode_onehot("v", &col).unwrap();
        assert_eq!(m.n_features(), 1);
        assert!(m.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn onehot_rows_sum_to_one() {
        let col: Vec<String> = vec!["b".into(), "a".into(), "c".into(), "a".into(), "b".into()];
        let m = encode_onehot("Ethnicity", &col).unwrap();
        assert_eq!(m.n_features(), 3);
        for i in 0..m.n_rows() {
            let sum: f64 = (0..m.n_features()).map(|j| m.values[(i, j)]).sum();
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn polynomial_terms() {
        let mut m = matrix(&[("x", &[0.0, 2.0]), ("y", &[0.0, 3.0])]);
        add_polynomial(&mut m, "x", "y").unwrap();
        assert_eq!(m.n_features(), 5);
        assert_eq!(m.names[2], "(x)^2");
        assert_eq!(m.names[3], "(y)^2");
        assert_eq!(m.names[4], "x*y");
        assert_eq!(m.values.row(0).iter().cloned().collect::<Vec<_>>(), vec![0.0; 5]);
        assert_eq!(
            m.values.row(1).iter().cloned().collect::<Vec<_>>(),
            vec![2.0, 3.0, 4.0, 9.0, 6.0]
        );
    }

    #[test]
    fn replicate_zero_copies_is_identity() {
        let mut m = matrix(&[("x", &[1.0, 2.0])]);
        let before = m.clone();
        replicate_feature(&mut m, "x", 0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn replicate_names_and_values() {
        let mut m = matrix(&[("x", &[1.0, 2.0])]);
        replicate_feature(&mut m, "x", 2).unwrap();
        assert_eq!(m.names, vec!["x", "x_rep1", "x_rep2"]);
        assert_eq!(m.values.column(2).iter().cloned().collect::<Vec<_>>(), vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_feature_errors() {
        let mut m = matrix(&[("x", &[1.0, 2.0])]);
        assert!(add_polynomial(&mut m, "x", "nope").is_err());
        assert!(replicate_feature(&mut m, "nope", 1).is_err());
    }

    #[test]
    fn recipe_presets_parse() {
        for name in ["a", "b", "c", "d", "e", "f", "full38"] {
            let r = FeatureRecipe::preset(name).unwrap();
            // Recipes serialize to JSON and back.
            let json = serde_json::to_string(&r).unwrap();
            let r2: FeatureRecipe = serde_json::from_str(&json).unwrap();
            assert_eq!(r, r2);
        }
        assert!(FeatureRecipe::preset("zz").is_err());
    }
}
