//! How the tolerance-band accuracy metric behaves.
//!
//! Run with `cargo run --example accuracy_metric`.

use casetime::metric::{
    accuracy, log_halfwidth, loss, sweep_p, tolerance, MetricParams, PredictionPair,
};

fn main() -> casetime::Result<()> {
    let params = MetricParams::default();
    println!(
        "band = {:.0}% of the booked time, clamped to [{}, {}] minutes\n",
        params.p * 100.0,
        params.m,
        params.cap
    );

    println!("booked   band (min)");
    for booked in [10.0, 50.0, 150.0, 300.0, 500.0] {
        println!("{booked:>6}   +/- {}", tolerance(booked, &params)?);
    }

    // The band is sized by the booking, so overrunning a generous slot
    // is forgiven while overrunning a tight one is not.
    println!("\nactual  booked  verdict");
    for (actual, booked) in [(165.0, 150.0), (35.0, 20.0), (135.0, 160.0), (135.0, 110.0)] {
        let verdict = if loss(actual, booked, &params)? == 0 {
            "accurate"
        } else {
            "missed"
        };
        println!("{actual:>6}  {booked:>6}  {verdict}");
    }

    // Working in log space: a log-scale gap below eps(p) is always a hit
    // as long as the cap is not binding.
    let p = 0.2;
    println!(
        "\nlog half-width eps({p}) = {:.4} (safe log-scale gap)",
        log_halfwidth(p)?
    );

    // Accuracy over a batch, and how it responds to loosening p.
    let pairs: Vec<PredictionPair> = (1..=20)
        .map(|i| {
            let actual = 30.0 * i as f64;
            // book each case off by up to 25% in either direction
            let factor = 1.0 + 0.125 * ((i % 5) as f64 - 2.0);
            PredictionPair {
                actual_min: actual,
                predicted_min: actual * factor,
                procedure_name: format!("P{}", i % 3),
            }
        })
        .collect();
    println!(
        "\nbatch accuracy at defaults: {:.2}",
        accuracy(&pairs, &params)?
    );
    println!("p      accuracy");
    for (p, acc) in sweep_p(&pairs, &[0.1, 0.2, 0.3, 0.4, 0.5], params.m, params.cap)? {
        println!("{p:<5}  {acc:.2}");
    }
    Ok(())
}
