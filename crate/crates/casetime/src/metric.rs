//! Operational accuracy: a prediction counts as correct when the actual
//! duration lands strictly inside a tolerance band around it.
//!
//! The band is proportional to the prediction (`p` times the predicted
//! minutes) but never narrower than a floor of `m` minutes and never
//! wider than a cap of `cap` minutes. Tight short cases and long cases
//! are therefore judged on an operationally meaningful scale rather
//! than raw percentage error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Proportional half-width of the tolerance band.
    pub p: f64,
    /// Floor of the band in minutes.
    pub m: f64,
    /// Cap of the band in minutes.
    pub cap: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            p: 0.2,
            m: 15.0,
            cap: 60.0,
        }
    }
}

impl MetricParams {
    pub fn new(p: f64, m: f64, cap: f64) -> Result<Self> {
        let params = MetricParams { p, m, cap };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if !self.m.is_finite() || self.m < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "m must be finite and non-negative, got {}",
                self.m
            )));
        }
        if !self.cap.is_finite() || self.cap <= self.m {
            return Err(Error::InvalidConfig(format!(
                "cap must exceed m, got cap {} with m {}",
                self.cap, self.m
            )));
        }
        Ok(())
    }
}

/// One (actual, predicted) duration pair, tagged with its procedure so
/// reports can break accuracy down per procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPair {
    pub actual_min: f64,
    pub predicted_min: f64,
    pub procedure_name: String,
}

/// Half-width of the tolerance band around a prediction, in minutes:
/// `p * predicted` clamped to `[m, cap]`.
pub fn tolerance(predicted_min: f64, params: &MetricParams) -> Result<f64> {
    params.validate()?;
    if !predicted_min.is_finite() || predicted_min <= 0.0 {
        return Err(Error::domain(format!(
            "predicted duration must be positive, got {predicted_min}"
        )));
    }
    Ok((params.p * predicted_min).max(params.m).min(params.cap))
}

/// Binary loss: 1 when the absolute error reaches the tolerance
/// (landing exactly on the boundary counts as a miss), 0 otherwise.
pub fn loss(actual_min: f64, predicted_min: f64, params: &MetricParams) -> Result<u8> {
    if !actual_min.is_finite() || actual_min <= 0.0 {
        return Err(Error::domain(format!(
            "actual duration must be positive, got {actual_min}"
        )));
    }
    let tol = tolerance(predicted_min, params)?;
    Ok(u8::from((actual_min - predicted_min).abs() >= tol))
}

/// Fraction of pairs predicted accurately. Errors on an empty slice:
/// an accuracy of no cases is meaningless.
pub fn accuracy(pairs: &[PredictionPair], params: &MetricParams) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut hits = 0usize;
    for pair in pairs {
        if loss(pair.actual_min, pair.predicted_min, params)? == 0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Complement of [`accuracy`]: the average binary loss.
pub fn average_error(pairs: &[PredictionPair], params: &MetricParams) -> Result<f64> {
    Ok(1.0 - accuracy(pairs, params)?)
}

/// Half-width, in log-minutes, of the symmetric interval around a
/// prediction's log that guarantees a hit whenever the proportional
/// band is the binding one: `min(-ln(1-p), ln(1+p))`. Squared-log
/// training error below this squared bound therefore implies zero
/// operational loss wherever `p * predicted` stays under the cap.
pub fn log_halfwidth(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok((-(1.0 - p).ln()).min((1.0 + p).ln()))
}

/// Accuracy of the same pairs under a grid of `p` values with the
/// floor and cap held fixed. Output is sorted by `p`.
pub fn sweep_p(
    pairs: &[PredictionPair],
    p_grid: &[f64],
    m: f64,
    cap: f64,
) -> Result<Vec<(f64, f64)>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut grid: Vec<f64> = p_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(grid.len());
    for &p in &grid {
        let params = MetricParams::new(p, m, cap)?;
        out.push((p, accuracy(pairs, &params)?));
    }
    Ok(out)
}

/// The default sweep grid: 0.05 through 0.50 in steps of 0.05.
pub fn default_p_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 20.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(actual: f64, predicted: f64) -> PredictionPair {
        PredictionPair {
            actual_min: actual,
            predicted_min: predicted,
            procedure_name: "P".into(),
        }
    }

    #[test]
    fn tolerance_covers_all_three_regimes() {
        let params = MetricParams::default();
        // proportional band binding
        assert_eq!(tolerance(150.0, &params).unwrap(), 30.0);
        // floor binding
        assert_eq!(tolerance(20.0, &params).unwrap(), 15.0);
        // cap binding
        assert_eq!(tolerance(500.0, &params).unwrap(), 60.0);
    }

    #[test]
    fn loss_on_reference_pairs() {
        let params = MetricParams::default();
        // |165 - 150| = 15 < 30: accurate
        assert_eq!(loss(165.0, 150.0, &params).unwrap(), 0);
        // |35 - 20| = 15 >= 15: miss, boundary counts against
        assert_eq!(loss(35.0, 20.0, &params).unwrap(), 1);
    }

    #[test]
    fn loss_boundary_is_a_miss() {
        let params = MetricParams::default();
        assert_eq!(loss(180.0, 150.0, &params).unwrap(), 1);
        assert_eq!(loss(179.999, 150.0, &params).unwrap(), 0);
    }

    #[test]
    fn accuracy_of_the_reference_pairs_is_half() {
        let params = MetricParams::default();
        let pairs = vec![pair(165.0, 150.0), pair(35.0, 20.0)];
        assert_eq!(accuracy(&pairs, &params).unwrap(), 0.5);
        assert_eq!(average_error(&pairs, &params).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_extremes() {
        let params = MetricParams::default();
        assert_eq!(accuracy(&[pair(150.0, 150.0)], &params).unwrap(), 1.0);
        assert_eq!(accuracy(&[pair(300.0, 100.0)], &params).unwrap(), 0.0);
        assert!(matches!(accuracy(&[], &params), Err(Error::EmptyInput)));
    }

    #[test]
    fn tolerance_rejects_bad_inputs() {
        let params = MetricParams::default();
        assert!(tolerance(0.0, &params).is_err());
        assert!(tolerance(-10.0, &params).is_err());
        assert!(MetricParams::new(0.0, 15.0, 60.0).is_err());
        assert!(MetricParams::new(1.2, 15.0, 60.0).is_err());
        assert!(MetricParams::new(0.2, 60.0, 60.0).is_err());
        assert!(MetricParams::new(0.2, -1.0, 60.0).is_err());
    }

    #[test]
    fn log_halfwidth_frozen_values() {
        // At p = 0.2 the upper-side log width ln(1.2) is the tighter one.
        let h = log_halfwidth(0.2).unwrap();
        assert!((h - 0.182_321_556_793_954_6).abs() < 1e-15);
        let wide = log_halfwidth(0.5).unwrap();
        assert!((wide - 0.405_465_108_108_164_4).abs() < 1e-15);
        assert!(log_halfwidth(0.0).is_err());
        assert!(log_halfwidth(1.0).is_err());
    }

    #[test]
    fn log_halfwidth_takes_the_tighter_side() {
        for p in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.9] {
            let h = log_halfwidth(p).unwrap();
            assert_eq!(h, (1.0 + p).ln().min(-(1.0 - p).ln()));
            assert!(h > 0.0);
        }
    }

    #[test]
    fn sweep_orders_by_p_and_matches_pointwise_accuracy() {
        let pairs = vec![pair(165.0, 150.0), pair(35.0, 20.0)];
        // deliberately out of order on input
        let out = sweep_p(&pairs, &[0.8, 0.2], 15.0, 60.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, 0.2);
        assert_eq!(out[0].1, 0.5);
        // at p = 0.8 the short case's band is 16 minutes, so both hit
        assert_eq!(out[1].0, 0.8);
        assert_eq!(out[1].1, 1.0);
    }

    #[test]
    fn sweep_rejects_out_of_range_p() {
        let pairs = vec![pair(100.0, 100.0)];
        assert!(sweep_p(&pairs, &[0.0], 15.0, 60.0).is_err());
        assert!(sweep_p(&pairs, &[1.0], 15.0, 60.0).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_p_grid();
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], 0.05);
        assert_eq!(grid[2], 0.15);
        assert_eq!(grid[9], 0.5);
    }
}
