//! Compare several methods under repeated stratified cross-validation,
//! the same benchmark the `evaluate` subcommand runs.

use casetime::data::{synth_generate, SynthConfig};
use casetime::eval::{cross_validate, make_folds, CvOptions};
use casetime::metric::MetricParams;
use casetime::predictor::{MethodId, TrainParams};

fn main() -> casetime::Result<()> {
    let mut cfg = SynthConfig::with_counts(6, 40, 6);
    cfg.seed = 77;
    let ds = synth_generate(&cfg)?.dataset;

    let methods = [
        MethodId::Avg,
        MethodId::Sch,
        MethodId::Rfr,
        MethodId::RfrSch,
    ];
    let plan = make_folds(&ds, 3, 3, 77, true)?;
    let train = TrainParams {
        seed: 77,
        ..TrainParams::default()
    };
    let out = cross_validate(
        &ds,
        &methods,
        &plan,
        &MetricParams::default(),
        &train,
        &CvOptions::default(),
    )?;

    println!(
        "{} cases, {} repeats x {} folds\n",
        ds.len(),
        plan.repeats(),
        plan.k()
    );
    println!("method    overall   sd      cells");
    for row in &out.report.accuracy {
        if row.procedure == "Overall" {
            println!(
                "{:<8}  {:.4}   {:.4}  {}",
                row.method, row.mean, row.sd_cells, row.cells
            );
        }
    }

    // per-procedure accuracy is a partition of the same pooled
    // predictions, useful for spotting procedures a method struggles on
    println!("\nRFR by procedure:");
    for row in &out.report.accuracy {
        if row.method == "RFR" && row.procedure != "Overall" {
            println!("  {:<14} {:.4}", row.procedure, row.mean);
        }
    }
    Ok(())
}
