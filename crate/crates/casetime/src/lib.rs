//! Predicting how long surgical cases will run.
//!
//! Hospitals schedule operating rooms around duration estimates, and an
//! estimate is only useful if it lands inside the slack the schedule can
//! absorb. This crate treats that directly: a prediction counts as
//! accurate when it falls within a tolerance band around the actual
//! duration, where the band is a fraction of the predicted time clamped
//! between a floor and a cap (15 and 60 minutes by default). Everything
//! else is built around that yardstick.
//!
//! What's here:
//!
//! - [`metric`]: the tolerance band, binary accuracy, and a sweep of the
//!   tolerance fraction.
//! - [`data`]: the case record, CSV ingest and validation, one-hot
//!   feature encoding, and a deterministic synthetic caseload generator
//!   for experiments without patient data.
//! - [`tree`], [`ensemble`]: regression trees grown on log durations,
//!   plus bagged forests and AdaBoost.R2 boosting over them.
//! - [`predictor`]: the eight comparable methods. Historical averages
//!   (`AVG`) and the expert's own estimate (`SCH`) are the baselines;
//!   trees, forests and boosting run both from case features alone and
//!   with the expert estimate as an extra feature (`-SCH` variants).
//! - [`eval`]: repeated stratified cross-validation with per-procedure
//!   accuracy tables, feature importance summaries, and plot-ready
//!   statistics.
//! - [`cli`]: the `casetime` binary wiring all of the above to files.
//!
//! Quick start:
//!
//! ```
//! use casetime::data::{synth_generate, SynthConfig};
//! use casetime::metric::{accuracy, MetricParams};
//! use casetime::predictor::{fit, MethodId, TrainParams};
//!
//! let data = synth_generate(&SynthConfig::default()).unwrap().dataset;
//! let model = fit(MethodId::Rfr, &data, &TrainParams::default()).unwrap();
//! let pairs = model.predict_batch(&data);
//! let params = MetricParams::default();
//! assert!(accuracy(&pairs, &params).unwrap() > 0.5);
//! ```
//!
//! The `examples/` directory walks each capability end to end:
//! `accuracy_metric`, `generate_data`, `train_predict`,
//! `evaluate_methods`, `importance_table`, `sensitivity_sweep` and
//! `figure_data`.

pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod metric;
pub mod predictor;
pub mod tree;

pub use data::{Dataset, SurgicalCase, SynthConfig};
pub use error::{Error, Result};
pub use eval::{cross_validate, make_folds, EvaluationReport};
pub use metric::{accuracy, tolerance, MetricParams, PredictionPair};
pub use predictor::{fit, MethodId, Predictor, TrainParams};
