//! Generate a synthetic caseload, inspect its shape, and write it out
//! as CSV next to a ground-truth sidecar.

use casetime::data::{synth_generate, write_dataset_path, SynthConfig};
use casetime::eval::{pearson, summarize};

fn main() -> casetime::Result<()> {
    let mut cfg = SynthConfig::with_counts(4, 30, 4);
    cfg.seed = 2024;
    let generated = synth_generate(&cfg)?;
    let ds = &generated.dataset;

    let summary = summarize(ds)?;
    println!(
        "{} cases, {:.1} min on average (sd {:.1})",
        summary.n, summary.mean_min, summary.sd_min
    );
    for p in &summary.procedures {
        println!(
            "  {:<14} n={:<3} mean {:>6.1}  sd {:>5.1}",
            p.procedure, p.n, p.mean_min, p.sd_min
        );
    }

    let weights: Vec<f64> = ds.cases().iter().map(|c| c.weight_kg).collect();
    let ages: Vec<f64> = ds.cases().iter().map(|c| c.age_years).collect();
    println!(
        "weight/age correlation: {:.3} (pediatric growth curve)",
        pearson(&weights, &ages)?
    );

    // the generator also reports the noiseless log duration per case,
    // which is handy for measuring how much error a model adds
    let first = &ds.cases()[0];
    println!(
        "first case: {} booked {} min, ran {:.1} min, noiseless {:.1} min",
        first.case_id,
        first.expert_prediction_min,
        first.actual_duration_min,
        generated.true_log_durations[0].exp()
    );

    let out = std::env::temp_dir().join("casetime_example_data.csv");
    write_dataset_path(ds, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
