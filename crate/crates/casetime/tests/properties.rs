//! Randomized invariants over the metric, the encoders, the fold
//! planner and the tree ensembles.

use proptest::prelude::*;

use casetime::data::{
    encode, encode_dataset, build_schema, filter_min_count, load_dataset, synth_generate,
    write_dataset, SynthConfig,
};
use casetime::ensemble::{fit_forest, weighted_median, ForestParams};
use casetime::eval::make_folds;
use casetime::metric::{accuracy, log_halfwidth, loss, tolerance, MetricParams, PredictionPair};
use casetime::tree::{fit_tree, TreeParams};

fn pair(actual: f64, predicted: f64) -> PredictionPair {
    PredictionPair {
        actual_min: actual,
        predicted_min: predicted,
        procedure_name: "P".into(),
    }
}

fn pairs_strategy(n: usize) -> impl Strategy<Value = Vec<PredictionPair>> {
    prop::collection::vec((1.0f64..600.0, 1.0f64..600.0), 1..n)
        .prop_map(|v| v.into_iter().map(|(a, p)| pair(a, p)).collect())
}

fn metric(p: f64, m: f64, cap: f64) -> MetricParams {
    MetricParams::new(p, m, cap).unwrap()
}

proptest! {
    #[test]
    fn tolerance_stays_clamped(
        p in 0.01f64..0.95,
        m in 0.5f64..120.0,
        extra in 0.001f64..400.0,
        predicted in 0.1f64..3000.0,
    ) {
        let params = metric(p, m, m + extra);
        let tol = tolerance(predicted, &params).unwrap();
        prop_assert!(tol >= params.m && tol <= params.cap);
        prop_assert_eq!(tol, (p * predicted).max(params.m).min(params.cap));
    }

    #[test]
    fn accuracy_never_drops_as_p_grows(
        pairs in pairs_strategy(40),
        p_lo in 0.05f64..0.5,
        bump in 0.0f64..0.45,
    ) {
        let lo = accuracy(&pairs, &metric(p_lo, 15.0, 60.0)).unwrap();
        let hi = accuracy(&pairs, &metric(p_lo + bump, 15.0, 60.0)).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn accuracy_never_drops_as_floor_or_cap_grow(
        pairs in pairs_strategy(40),
        m in 1.0f64..40.0,
        dm in 0.0f64..30.0,
        dcap in 0.0f64..200.0,
    ) {
        let base = accuracy(&pairs, &metric(0.2, m, 60.0)).unwrap();
        let wider_floor = accuracy(&pairs, &metric(0.2, m + dm, 60.0 + dm)).unwrap();
        let wider_cap = accuracy(&pairs, &metric(0.2, m, 60.0 + dcap)).unwrap();
        prop_assert!(wider_floor >= base);
        prop_assert!(wider_cap >= base);
    }

    #[test]
    fn accuracy_matches_a_hand_count(pairs in pairs_strategy(60)) {
        let params = MetricParams::default();
        let mut hits = 0usize;
        for q in &pairs {
            if loss(q.actual_min, q.predicted_min, &params).unwrap() == 0 {
                hits += 1;
            }
        }
        prop_assert_eq!(accuracy(&pairs, &params).unwrap(), hits as f64 / pairs.len() as f64);
    }

    #[test]
    fn log_band_inside_halfwidth_always_hits(
        p in 0.05f64..0.9,
        z in 1.0f64..6.0,
        offset_frac in -0.999f64..0.999,
    ) {
        let eps = log_halfwidth(p).unwrap();
        let zhat = z + offset_frac * eps;
        let (actual, predicted) = (z.exp(), zhat.exp());
        // keep the proportional band binding: the cap must not bite
        let params = metric(p, 0.001, f64::MAX);
        prop_assert_eq!(loss(actual, predicted, &params).unwrap(), 0);
    }

    #[test]
    fn weighted_median_matches_prefix_oracle(
        data in prop::collection::vec(((-50.0f64..50.0), (0.01f64..5.0)), 1..30)
    ) {
        let values: Vec<f64> = data.iter().map(|d| d.0).collect();
        let weights: Vec<f64> = data.iter().map(|d| d.1).collect();

        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let total: f64 = weights.iter().sum();
        let mut cum = 0.0;
        let mut expected = values[*order.last().unwrap()];
        for &i in &order {
            cum += weights[i];
            if cum >= total / 2.0 {
                expected = values[i];
                break;
            }
        }
        prop_assert_eq!(weighted_median(&values, &weights), expected);
    }

    #[test]
    fn synthetic_encoding_is_block_structured(
        n_procedures in 1usize..4,
        cases_per in 2usize..12,
        n_surgeons in 1usize..4,
        seed in 0u64..500,
        include_expert: bool,
    ) {
        let mut cfg = SynthConfig::with_counts(n_procedures, cases_per, n_surgeons);
        cfg.seed = seed;
        let ds = synth_generate(&cfg).unwrap().dataset;
        let schema = build_schema(&ds, include_expert).unwrap();
        let rows = encode_dataset(&ds, &schema);
        prop_assert_eq!(rows.len(), ds.len());
        for (case, row) in ds.cases().iter().zip(&rows) {
            prop_assert_eq!(row.len(), schema.width());
            prop_assert_eq!(row, &encode(case, &schema));
            prop_assert_eq!(row[0], case.weight_kg);
            prop_assert_eq!(row[1], case.age_years);
            // every one-hot column is a 0/1 flag and each block fires
            // at most once; training-set cases always find their level
            let flags = &row[3..row.len() - usize::from(include_expert)];
            prop_assert!(flags.iter().all(|&v| v == 0.0 || v == 1.0));
            if include_expert {
                prop_assert_eq!(
                    row[row.len() - 1],
                    case.expert_prediction_min.ln()
                );
            }
        }
    }

    #[test]
    fn procedure_filter_is_idempotent(
        n_procedures in 1usize..5,
        cases_per in 1usize..12,
        min_count in 1usize..15,
        seed in 0u64..200,
    ) {
        let mut cfg = SynthConfig::with_counts(n_procedures, cases_per, 2);
        cfg.seed = seed;
        let ds = synth_generate(&cfg).unwrap().dataset;
        let once = filter_min_count(&ds, min_count);
        prop_assert!(once.procedure_counts().values().all(|&n| n >= min_count));
        let twice = filter_min_count(&once, min_count);
        prop_assert_eq!(once.cases(), twice.cases());
    }

    #[test]
    fn csv_round_trip_preserves_every_case(seed in 0u64..300) {
        let mut cfg = SynthConfig::with_counts(2, 6, 2);
        cfg.seed = seed;
        let ds = synth_generate(&cfg).unwrap().dataset;
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = load_dataset(buf.as_slice()).unwrap();
        prop_assert_eq!(ds.cases(), back.cases());
    }

    #[test]
    fn folds_partition_each_stratum(
        repeats in 1usize..4,
        k in 2usize..5,
        per_procedure in 5usize..20,
        seed in 0u64..300,
    ) {
        prop_assume!(per_procedure >= k);
        let mut cfg = SynthConfig::with_counts(3, per_procedure, 2);
        cfg.seed = seed;
        let ds = synth_generate(&cfg).unwrap().dataset;
        let plan = make_folds(&ds, repeats, k, seed, true).unwrap();
        for repeat in 0..repeats {
            let mut seen = vec![0usize; ds.len()];
            for fold in 0..k {
                let test = plan.test_indices(repeat, fold);
                let train = plan.train_indices(repeat, fold);
                prop_assert_eq!(test.len() + train.len(), ds.len());
                for &i in &test {
                    seen[i] += 1;
                    prop_assert!(!train.contains(&i));
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}

// Smaller case counts: every proptest case below grows whole ensembles.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_predictions_stay_within_target_range(
        rows in prop::collection::vec(
            (prop::collection::vec(-10.0f64..10.0, 3), -5.0f64..5.0),
            2..25
        ),
        msp in 2usize..6,
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
        let z: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let w = vec![1.0; z.len()];
        let params = TreeParams { min_samples_split: msp, ..TreeParams::default() };
        let tree = fit_tree(&x, &z, &w, &params, None).unwrap();
        let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for row in &x {
            let y = tree.predict(row).unwrap();
            prop_assert!(y >= lo - 1e-9 && y <= hi + 1e-9);
        }
    }

    #[test]
    fn forest_training_mse_beats_a_single_leaf(
        rows in prop::collection::vec(
            (prop::collection::vec(-10.0f64..10.0, 2), -5.0f64..5.0),
            4..20
        ),
        seed in 0u64..100,
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
        let z: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let params = ForestParams {
            n_trees: 10,
            bootstrap: false,
            max_features: None,
            tree: TreeParams { min_samples_split: 2, ..TreeParams::default() },
        };
        let forest = fit_forest(&x, &z, &params, seed).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let baseline: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
        let fitted: f64 = x
            .iter()
            .zip(&z)
            .map(|(row, &v)| {
                let d = forest.predict(row).unwrap() - v;
                d * d
            })
            .sum();
        prop_assert!(fitted <= baseline + 1e-9);
    }
}

/// Overprediction is forgiven more readily than underprediction of the
/// same magnitude: the band is sized by the prediction, not the actual.
#[test]
fn asymmetry_favors_overprediction() {
    let params = MetricParams::default();
    // same 135-minute case, same 25-minute error, opposite directions
    let over = loss(135.0, 160.0, &params).unwrap();
    let under = loss(135.0, 110.0, &params).unwrap();
    assert_eq!(over, 0, "booking 160 earns a 32-minute band, 25 fits");
    assert_eq!(under, 1, "booking 110 earns only 22 minutes, 25 misses");
}
