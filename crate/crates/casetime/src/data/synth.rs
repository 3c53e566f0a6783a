//! Seeded synthetic caseload generator.
//!
//! Each case draws a pediatric age uniformly on [0.5, 18] years and a
//! weight that is log-linear in age with lognormal scatter; the scatter
//! scale is calibrated by bisection so the realized Pearson correlation
//! between weight and age lands on `target_weight_age_corr`. The true
//! log duration is
//!
//! ```text
//! g = base[procedure] + weight_coefficient * ln(weight)
//!     + surgeon_offset + location_offset * [OR] + class_offset * [InPatient]
//! ```
//!
//! with `actual = exp(g + eta)` and `expert = exp(g + bias + eta')`,
//! where `eta` and `eta'` are independent centered gaussians. The `g`
//! values are returned alongside the dataset so tests can compare
//! fitted models against the noiseless ground truth.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::data::case::{AsaClass, Gender, Location, PatientClass, SurgicalCase};
use crate::data::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};

/// Anchors of the weight-for-age curve: about 6 kg at six months,
/// rising log-linearly to the low sixties at eighteen years.
const WEIGHT_LOG_BASE: f64 = 1.791_759_469_228_055; // ln 6
const WEIGHT_AGE_SLOPE: f64 = 0.13;

/// Relative frequency of ASA classes I through V.
const ASA_FREQUENCIES: [f64; 5] = [0.35, 0.35, 0.20, 0.08, 0.02];

const OR_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_procedures: usize,
    pub cases_per_procedure: usize,
    pub n_surgeons: usize,
    /// Standard deviation of the log-duration noise `eta`.
    pub log_noise_sigma: f64,
    /// Standard deviation of the expert's independent log-space noise.
    pub expert_noise_sigma: f64,
    /// Systematic shift of expert estimates in log-minutes; 0 keeps
    /// experts unbiased, negative values model habitual underestimation.
    pub expert_bias: f64,
    /// Expert estimates are rounded to this scheduling grid in minutes,
    /// the way booked slots are in practice; 0 keeps them continuous.
    pub expert_rounding_min: f64,
    /// One base log-duration per procedure, in log-minutes.
    pub procedure_base_logmeans: Vec<f64>,
    /// One additive log-space offset per surgeon.
    pub surgeon_offsets: Vec<f64>,
    /// Added to `g` for cases performed in an operating room.
    pub location_offset: f64,
    /// Added to `g` for inpatients.
    pub class_offset: f64,
    /// Multiplies `ln(weight_kg)` in `g`.
    pub weight_coefficient: f64,
    /// Desired Pearson correlation between weight and age, in (0, 1).
    pub target_weight_age_corr: f64,
    pub seed: u64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        let n_procedures = 12;
        let n_surgeons = 10;
        SynthConfig {
            n_procedures,
            cases_per_procedure: 80,
            n_surgeons,
            log_noise_sigma: 0.25,
            expert_noise_sigma: 0.15,
            expert_bias: 0.0,
            expert_rounding_min: 10.0,
            procedure_base_logmeans: linspace(4.0, 4.7, n_procedures),
            surgeon_offsets: (0..n_surgeons)
                .map(|i| (i as f64 / (n_surgeons - 1) as f64 - 0.5) * 0.04)
                .collect(),
            location_offset: 0.18,
            class_offset: 0.15,
            weight_coefficient: 0.08,
            target_weight_age_corr: 0.85,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Default config resized to the given entity counts, with the
    /// procedure base log-means and surgeon offsets respread over the
    /// same ranges the defaults use.
    pub fn with_counts(
        n_procedures: usize,
        cases_per_procedure: usize,
        n_surgeons: usize,
    ) -> Self {
        SynthConfig {
            n_procedures,
            cases_per_procedure,
            n_surgeons,
            procedure_base_logmeans: linspace(4.0, 4.7, n_procedures.max(1)),
            surgeon_offsets: if n_surgeons <= 1 {
                vec![0.0; n_surgeons.max(1)]
            } else {
                linspace(-0.02, 0.02, n_surgeons)
            },
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_procedures == 0 || self.cases_per_procedure == 0 || self.n_surgeons == 0 {
            return bail("procedure, case and surgeon counts must all be at least 1".into());
        }
        if self.procedure_base_logmeans.len() != self.n_procedures {
            return bail(format!(
                "expected {} procedure base log-means, got {}",
                self.n_procedures,
                self.procedure_base_logmeans.len()
            ));
        }
        if self.surgeon_offsets.len() != self.n_surgeons {
            return bail(format!(
                "expected {} surgeon offsets, got {}",
                self.n_surgeons,
                self.surgeon_offsets.len()
            ));
        }
        for (name, v) in [
            ("log_noise_sigma", self.log_noise_sigma),
            ("expert_noise_sigma", self.expert_noise_sigma),
            ("expert_rounding_min", self.expert_rounding_min),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !self.expert_bias.is_finite()
            || !self.location_offset.is_finite()
            || !self.class_offset.is_finite()
            || !self.weight_coefficient.is_finite()
        {
            return bail("offsets and coefficients must be finite".into());
        }
        if self.procedure_base_logmeans.iter().any(|v| !v.is_finite())
            || self.surgeon_offsets.iter().any(|v| !v.is_finite())
        {
            return bail("base log-means and surgeon offsets must be finite".into());
        }
        if !(self.target_weight_age_corr > 0.0 && self.target_weight_age_corr < 1.0) {
            return bail(format!(
                "target_weight_age_corr must lie in (0, 1), got {}",
                self.target_weight_age_corr
            ));
        }
        Ok(())
    }
}

/// A generated dataset plus the noiseless log durations that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// `g` for each case, aligned with `dataset.cases()`.
    pub true_log_durations: Vec<f64>,
}

struct Draw {
    age: f64,
    weight_scatter: f64,
    duration_noise: f64,
    expert_noise: f64,
    surgeon: usize,
    in_or: bool,
    inpatient: bool,
    asa: AsaClass,
    male: bool,
}

fn sample_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Finds the scatter scale whose realized weight-age correlation hits
/// the target. The correlation is monotone decreasing in the scatter,
/// so plain bisection converges; if even zero scatter falls short of
/// the target the closest achievable value (zero) is used.
fn calibrate_weight_scatter(draws: &[Draw], target: f64) -> f64 {
    if draws.len() < 3 {
        return 0.0;
    }
    let ages: Vec<f64> = draws.iter().map(|d| d.age).collect();
    let corr_at = |s: f64| -> f64 {
        let weights: Vec<f64> = draws
            .iter()
            .map(|d| (WEIGHT_LOG_BASE + WEIGHT_AGE_SLOPE * d.age + s * d.weight_scatter).exp())
            .collect();
        sample_pearson(&weights, &ages)
    };
    if corr_at(0.0) <= target {
        return 0.0;
    }
    let mut hi = 1.0;
    while corr_at(hi) > target {
        hi *= 2.0;
        if hi > 64.0 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if corr_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Generates a caseload. Deterministic: the same config always yields
/// the same dataset, case by case and byte by byte.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let asa_dist = WeightedIndex::new(ASA_FREQUENCIES).expect("asa frequencies");

    let total = cfg.n_procedures * cfg.cases_per_procedure;
    let mut draws = Vec::with_capacity(total);
    for _ in 0..total {
        draws.push(Draw {
            age: rng.gen_range(0.5..=18.0),
            weight_scatter: rng.sample(std_normal),
            duration_noise: rng.sample(std_normal),
            expert_noise: rng.sample(std_normal),
            surgeon: rng.gen_range(0..cfg.n_surgeons),
            in_or: rng.gen_bool(OR_FRACTION),
            inpatient: rng.gen_bool(0.5),
            asa: AsaClass::ALL[asa_dist.sample(&mut rng)],
            male: rng.gen_bool(0.5),
        });
    }

    let scatter = calibrate_weight_scatter(&draws, cfg.target_weight_age_corr);

    let mut cases = Vec::with_capacity(total);
    let mut true_log_durations = Vec::with_capacity(total);
    for (i, draw) in draws.iter().enumerate() {
        let procedure = i / cfg.cases_per_procedure;
        let weight_kg =
            (WEIGHT_LOG_BASE + WEIGHT_AGE_SLOPE * draw.age + scatter * draw.weight_scatter).exp();
        let mut g = cfg.procedure_base_logmeans[procedure]
            + cfg.weight_coefficient * weight_kg.ln()
            + cfg.surgeon_offsets[draw.surgeon];
        if draw.in_or {
            g += cfg.location_offset;
        }
        if draw.inpatient {
            g += cfg.class_offset;
        }
        let actual = (g + cfg.log_noise_sigma * draw.duration_noise).exp();
        let mut expert = (g + cfg.expert_bias + cfg.expert_noise_sigma * draw.expert_noise).exp();
        if cfg.expert_rounding_min > 0.0 {
            expert = ((expert / cfg.expert_rounding_min).round() * cfg.expert_rounding_min)
                .max(cfg.expert_rounding_min);
        }

        cases.push(SurgicalCase {
            case_id: format!("syn-{:05}", i + 1),
            procedure_name: format!("Procedure-{:02}", procedure + 1),
            surgeon_id: format!("S{:02}", draw.surgeon + 1),
            gender: if draw.male { Gender::Male } else { Gender::Female },
            weight_kg,
            age_years: draw.age,
            asa: draw.asa,
            location: if draw.in_or { Location::Or } else { Location::Apu },
            patient_class: if draw.inpatient {
                PatientClass::InPatient
            } else {
                PatientClass::OutPatient
            },
            expert_prediction_min: expert,
            actual_duration_min: actual,
        });
        true_log_durations.push(g);
    }

    let dataset = Dataset::from_cases(cases, Provenance::Synthetic)?;
    Ok(SyntheticData {
        dataset,
        true_log_durations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig {
            n_procedures: 3,
            cases_per_procedure: 20,
            procedure_base_logmeans: linspace(3.0, 4.0, 3),
            ..SynthConfig::default()
        };
        let a = synth_generate(&cfg).unwrap();
        let b = synth_generate(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.true_log_durations, b.true_log_durations);
    }

    #[test]
    fn seeds_change_the_draws() {
        let base = SynthConfig {
            n_procedures: 2,
            cases_per_procedure: 10,
            procedure_base_logmeans: linspace(3.0, 4.0, 2),
            ..SynthConfig::default()
        };
        let other = SynthConfig { seed: 43, ..base.clone() };
        assert_ne!(
            synth_generate(&base).unwrap().dataset,
            synth_generate(&other).unwrap().dataset
        );
    }

    #[test]
    fn counts_and_ids_line_up() {
        let out = synth_generate(&SynthConfig::default()).unwrap();
        let ds = &out.dataset;
        assert_eq!(ds.len(), 12 * 80);
        assert_eq!(out.true_log_durations.len(), ds.len());
        assert_eq!(ds.provenance(), Provenance::Synthetic);
        let counts = ds.procedure_counts();
        assert_eq!(counts.len(), 12);
        assert!(counts.values().all(|&n| n == 80));
    }

    #[test]
    fn zero_noise_reproduces_g_exactly() {
        let cfg = SynthConfig {
            n_procedures: 2,
            cases_per_procedure: 15,
            procedure_base_logmeans: linspace(3.2, 3.8, 2),
            log_noise_sigma: 0.0,
            expert_noise_sigma: 0.0,
            expert_rounding_min: 0.0,
            ..SynthConfig::default()
        };
        let out = synth_generate(&cfg).unwrap();
        for (case, &g) in out.dataset.cases().iter().zip(&out.true_log_durations) {
            assert_eq!(case.actual_duration_min, g.exp());
            assert_eq!(case.expert_prediction_min, case.actual_duration_min);
        }
    }

    #[test]
    fn expert_bias_shifts_estimates() {
        let cfg = SynthConfig {
            n_procedures: 1,
            cases_per_procedure: 30,
            procedure_base_logmeans: vec![3.5],
            log_noise_sigma: 0.0,
            expert_noise_sigma: 0.0,
            expert_bias: -0.2,
            expert_rounding_min: 0.0,
            ..SynthConfig::default()
        };
        let out = synth_generate(&cfg).unwrap();
        for case in out.dataset.cases() {
            let ratio = case.expert_prediction_min / case.actual_duration_min;
            assert!((ratio - (-0.2f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn expert_estimates_sit_on_the_scheduling_grid() {
        let out = synth_generate(&SynthConfig::default()).unwrap();
        for case in out.dataset.cases() {
            let slots = case.expert_prediction_min / 10.0;
            assert!(
                (slots - slots.round()).abs() < 1e-9 && case.expert_prediction_min >= 10.0,
                "expert estimate {} is off the grid",
                case.expert_prediction_min
            );
        }
        let continuous = SynthConfig {
            expert_rounding_min: 0.0,
            ..SynthConfig::default()
        };
        let out = synth_generate(&continuous).unwrap();
        let off_grid = out
            .dataset
            .cases()
            .iter()
            .filter(|c| (c.expert_prediction_min / 10.0).fract().abs() > 1e-9)
            .count();
        assert!(off_grid > 900, "continuous experts should rarely land on the grid");
    }

    #[test]
    fn weight_age_correlation_hits_the_target() {
        let out = synth_generate(&SynthConfig::default()).unwrap();
        let weights: Vec<f64> = out.dataset.cases().iter().map(|c| c.weight_kg).collect();
        let ages: Vec<f64> = out.dataset.cases().iter().map(|c| c.age_years).collect();
        let r = sample_pearson(&weights, &ages);
        assert!((r - 0.85).abs() < 0.02, "realized correlation {r}");
    }

    #[test]
    fn with_counts_matches_vector_lengths() {
        for (np, ns) in [(1, 1), (3, 2), (12, 10), (5, 1)] {
            let cfg = SynthConfig::with_counts(np, 4, ns);
            assert!(cfg.validate().is_ok(), "counts ({np},{ns})");
        }
        // the full-size variant reproduces the default spreads
        let cfg = SynthConfig::with_counts(12, 80, 10);
        let def = SynthConfig::default();
        assert_eq!(cfg.procedure_base_logmeans, def.procedure_base_logmeans);
        for (a, b) in cfg.surgeon_offsets.iter().zip(&def.surgeon_offsets) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn validate_rejects_mismatched_lengths() {
        let cfg = SynthConfig {
            n_procedures: 3,
            procedure_base_logmeans: vec![3.0],
            ..SynthConfig::default()
        };
        assert!(matches!(
            synth_generate(&cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn validate_rejects_negative_sigma() {
        let cfg = SynthConfig {
            log_noise_sigma: -0.1,
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validate_rejects_degenerate_correlation_target() {
        for bad in [0.0, 1.0, 1.4] {
            let cfg = SynthConfig {
                target_weight_age_corr: bad,
                ..SynthConfig::default()
            };
            assert!(cfg.validate().is_err(), "corr {bad} should be rejected");
        }
    }
}
