//! The plot-ready statistics behind the `figures` subcommand: duration
//! histograms (raw and log scale), the weight-for-age regression line,
//! and the tolerance curve. Rendered here as quick ASCII sketches.

use casetime::data::{synth_generate, SynthConfig};
use casetime::eval::{histogram_data, ols_fit, pearson};
use casetime::metric::{tolerance, MetricParams};

fn bar(count: usize, scale: usize) -> String {
    "#".repeat(count.div_ceil(scale).max(usize::from(count > 0)))
}

fn main() -> casetime::Result<()> {
    let ds = synth_generate(&SynthConfig::default())?.dataset;
    let durations: Vec<f64> = ds.cases().iter().map(|c| c.actual_duration_min).collect();

    let raw = histogram_data(&durations, 12, false)?;
    println!("duration histogram (minutes):");
    for (i, &count) in raw.counts.iter().enumerate() {
        println!(
            "{:>6.0}-{:<6.0} {}",
            raw.edges[i],
            raw.edges[i + 1],
            bar(count, 8)
        );
    }

    // the same data on a log axis is close to symmetric
    let log = histogram_data(&durations, 12, true)?;
    println!("\nlog-scale bins:");
    for (i, &count) in log.counts.iter().enumerate() {
        println!(
            "{:>6.1}-{:<6.1} {}",
            log.edges[i],
            log.edges[i + 1],
            bar(count, 8)
        );
    }

    let weights: Vec<f64> = ds.cases().iter().map(|c| c.weight_kg).collect();
    let ages: Vec<f64> = ds.cases().iter().map(|c| c.age_years).collect();
    let line = ols_fit(&ages, &weights)?;
    println!(
        "\nweight ~ {:.2} + {:.2} * age   (r = {:.3})",
        line.intercept,
        line.slope,
        pearson(&ages, &weights)?
    );

    let params = MetricParams::default();
    println!("\ntolerance curve (flat floor, proportional middle, flat cap):");
    for booked in (0..=10).map(|k| 50.0 * k as f64).skip(1) {
        let t = tolerance(booked, &params)?;
        println!("{booked:>5} min booked -> +/- {t:>4} min {}", bar(t as usize, 4));
    }
    Ok(())
}
