//! Randomized structural properties of the transforms, metrics, and
//! estimator reductions. Sizes are kept small so the suite stays fast on
//! a single core.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use thermobench::estimators::{
    fit_binning, fit_linear, fit_piecewise, fit_quadratic, fit_weighted, DensitySpace,
};
use thermobench::eval::{compute_metrics, kfold_plan};
use thermobench::nn::{ConvLayerSpec, Network, NetworkSpec};
use thermobench::selection::pearson;
use thermobench::transform::{
    apply_standardizer, encode_onehot, fit_standardizer, invert_standardizer, replicate_feature,
    FeatureMatrix,
};

fn matrix_strategy(
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> impl Strategy<Value = FeatureMatrix> {
    (rows, cols).prop_flat_map(|(n, d)| {
        (
            proptest::collection::vec(-5.0f64..5.0, n * d),
            proptest::collection::vec(-3.0f64..3.0, n),
        )
            .prop_map(move |(vals, target)| {
                let values = DMatrix::from_row_slice(n, d, &vals);
                let names = (0..d).map(|j| format!("x{j}")).collect();
                FeatureMatrix::new(values, names, Some(DVector::from_vec(target))).unwrap()
            })
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// OLS reproduces a noiseless linear target to solver precision.
    #[test]
    fn ols_recovers_noiseless_linear_targets(
        m in matrix_strategy(12..40, 1..4),
        coefs in proptest::collection::vec(-2.0f64..2.0, 4),
        intercept in -1.0f64..1.0,
    ) {
        let d = m.n_features();
        let truth: Vec<f64> = (0..m.n_rows())
            .map(|i| intercept + (0..d).map(|j| coefs[j] * m.values[(i, j)]).sum::<f64>())
            .collect();
        let exact = FeatureMatrix::new(
            m.values.clone(),
            m.names.clone(),
            Some(DVector::from_vec(truth.clone())),
        )
        .unwrap();
        let model = fit_linear(&exact, 0.0).unwrap();
        prop_assert!(max_abs_diff(&model.predict(&exact.values), &truth) <= 1e-8);
    }

    /// Each specialized estimator collapses to plain OLS in its
    /// degenerate configuration.
    #[test]
    fn degenerate_estimators_match_ols(m in matrix_strategy(20..50, 2..5)) {
        let base = fit_linear(&m, 0.0).unwrap().predict(&m.values);
        let one_bin = fit_binning(&m, 1, "x0").unwrap().predict(&m.values);
        prop_assert!(max_abs_diff(&base, &one_bin) <= 1e-9);
        let degree_one = fit_quadratic(&m, 0.0, 1, 2000).unwrap().predict(&m.values).unwrap();
        prop_assert!(max_abs_diff(&base, &degree_one) <= 1e-9);
        let uniform = fit_weighted(&m, DensitySpace::Uniform).unwrap().predict(&m.values);
        prop_assert!(max_abs_diff(&base, &uniform) <= 1e-9);
        let no_hinge = fit_piecewise(&m, 0, "x0").unwrap().predict(&m.values);
        prop_assert!(max_abs_diff(&base, &no_hinge) <= 1e-9);
    }

    /// Standardizing and inverting returns the original values.
    #[test]
    fn standardizer_roundtrips(m in matrix_strategy(5..30, 1..5)) {
        let s = fit_standardizer(&m).unwrap();
        let z = apply_standardizer(&s, &m).unwrap();
        let back = invert_standardizer(&s, &z).unwrap();
        prop_assert!((&back.values - &m.values).abs().max() <= 1e-12);
    }

    /// One-hot encoding puts exactly one 1 in every row, and decodes the
    /// category it encodes.
    #[test]
    fn onehot_rows_sum_to_one(labels in proptest::collection::vec(0usize..4, 2..40)) {
        let cats: Vec<String> = labels.iter().map(|i| format!("cat{i}")).collect();
        let oh = encode_onehot("Var", &cats).unwrap();
        for i in 0..oh.n_rows() {
            let row = oh.values.row(i);
            prop_assert!((row.sum() - 1.0).abs() < 1e-15);
            prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
            let hot = row.iter().position(|&v| v == 1.0).unwrap();
            prop_assert!(oh.names[hot].ends_with(&cats[i]));
        }
    }

    /// RMSE is the square root of MSE and never below MAE.
    #[test]
    fn metric_identities(
        pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50),
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let yh: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let m = compute_metrics(&y, &yh).unwrap();
        prop_assert!((m.rmse - m.mse.sqrt()).abs() <= 1e-12);
        prop_assert!(m.mae <= m.rmse + 1e-12);
        prop_assert_eq!(m.n, y.len());
    }

    /// Pearson correlation stays in [-1, 1] and is exactly 1 against
    /// itself for non-constant data.
    #[test]
    fn pearson_is_bounded(xs in proptest::collection::vec(-5.0f64..5.0, 3..40)) {
        let ys: Vec<f64> = xs.iter().map(|v| v * 2.0 - 1.0).collect();
        let r = pearson(&xs, &ys);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        let spread = xs.iter().fold(f64::MIN, |m, &v| m.max(v))
            - xs.iter().fold(f64::MAX, |m, &v| m.min(v));
        if spread > 1e-6 {
            prop_assert!((pearson(&xs, &xs) - 1.0).abs() <= 1e-9);
        }
    }

    /// Every k-fold plan partitions the row set: folds are disjoint and
    /// jointly cover all rows.
    #[test]
    fn kfold_partitions_rows(n in 10usize..120, k in 2usize..6, seed in 0u64..50) {
        let plan = kfold_plan(n, k, seed).unwrap();
        let mut seen = vec![false; n];
        for fold in 0..k {
            let (train, held) = plan.fold_rows(fold);
            prop_assert_eq!(train.len() + held.len(), n);
            for &i in &held {
                prop_assert!(!seen[i], "row {} held out twice", i);
                seen[i] = true;
            }
            for &i in &train {
                prop_assert!(!held.contains(&i));
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    /// Same padding keeps one prediction per row for any input length and
    /// kernel size, including kernels wider than the input.
    #[test]
    fn network_emits_one_prediction_per_row(
        input_len in 2usize..12,
        kernel in 1usize..5,
        n in 1usize..10,
    ) {
        let spec = NetworkSpec::new(
            vec![ConvLayerSpec { filters: 8, kernel_size: kernel, l2: 0.0 }],
            input_len,
        );
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let net = Network::init(&spec, &mut rng).unwrap();
        let values = DMatrix::from_fn(n, input_len, |i, j| (i * 7 + j) as f64 * 0.1 - 0.5);
        let names = (0..input_len).map(|j| format!("x{j}")).collect();
        let m = FeatureMatrix::new(values, names, None).unwrap();
        let preds = net.predict(&m).unwrap();
        prop_assert_eq!(preds.len(), n);
        prop_assert!(preds.iter().all(|p| p.is_finite()));
    }

    /// Replicating a feature appends exact copies and leaves the
    /// originals untouched.
    #[test]
    fn replication_appends_exact_copies(m in matrix_strategy(5..20, 1..4), extra in 1usize..6) {
        let mut copy = FeatureMatrix::new(m.values.clone(), m.names.clone(), m.target.clone()).unwrap();
        let before = copy.n_features();
        replicate_feature(&mut copy, "x0", extra).unwrap();
        prop_assert_eq!(copy.n_features(), before + extra);
        let original = copy.column("x0").unwrap();
        for c in 0..extra {
            let name = format!("x0_rep{}", c + 1);
            let col = copy.column(&name);
            prop_assert!(col.is_some(), "missing replica column {}", name);
            prop_assert_eq!(col.unwrap(), original.clone());
        }
    }
}
