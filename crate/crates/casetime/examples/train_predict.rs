//! Train one model, hold out some cases, and read its predictions.
//! Also shows that a fitted predictor survives a JSON round trip, which
//! is exactly what the CLI's model artifacts rely on.

use casetime::data::{synth_generate, Dataset, SynthConfig};
use casetime::metric::{loss, MetricParams};
use casetime::predictor::{fit, MethodId, Predictor, TrainParams};

fn main() -> casetime::Result<()> {
    let mut cfg = SynthConfig::with_counts(5, 40, 5);
    cfg.seed = 31;
    let ds = synth_generate(&cfg)?.dataset;

    // hold out every tenth case
    let n = ds.len();
    let test_idx: Vec<usize> = (0..n).step_by(10).collect();
    let train_idx: Vec<usize> = (0..n).filter(|i| i % 10 != 0).collect();
    let train: Dataset = ds.select(&train_idx);
    let test: Dataset = ds.select(&test_idx);

    let params = TrainParams {
        seed: 1,
        ..TrainParams::default()
    };
    let model = fit(MethodId::Rfr, &train, &params)?;

    let metric = MetricParams::default();
    let mut hits = 0;
    println!("case        actual  predicted  within band?");
    for (i, case) in test.cases().iter().enumerate() {
        let predicted = model.predict(case);
        let ok = loss(case.actual_duration_min, predicted, &metric)? == 0;
        hits += usize::from(ok);
        if i < 8 {
            println!(
                "{:<10}  {:>6.0}  {:>9.1}  {}",
                case.case_id,
                case.actual_duration_min,
                predicted,
                if ok { "yes" } else { "no" }
            );
        }
    }
    println!(
        "\n{} of {} held-out cases inside the band",
        hits,
        test.len()
    );

    let blob = serde_json::to_string(&model).expect("predictors serialize");
    let restored: Predictor = serde_json::from_str(&blob).expect("and deserialize");
    let probe = &test.cases()[0];
    assert_eq!(restored.predict(probe), model.predict(probe));
    println!("serialized model is {} bytes and predicts identically", blob.len());
    Ok(())
}
