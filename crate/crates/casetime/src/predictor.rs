//! The eight duration predictors behind one interface: two baselines
//! (historical averages and the expert's own estimate) and three tree
//! families, each fit either on case features alone or with the
//! expert's estimate appended as one extra feature. Learned models
//! train on log minutes and predict by exponentiating back.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::data::{
    build_schema, encode, encode_dataset, log_duration, Dataset, EncodingSchema, SurgicalCase,
};
use crate::ensemble::{
    fit_adaboost_r2, fit_forest, BoostParams, BoostedEnsemble, Forest, ForestParams,
};
use crate::error::{Error, Result};
use crate::metric::PredictionPair;
use crate::tree::{fit_tree, RegressionTree, TreeParams};

/// A (procedure, surgeon) history shorter than this is considered too
/// thin to average and falls back to the procedure history.
pub const MIN_PAIR_OBS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "AVG")]
    Avg,
    #[serde(rename = "SCH")]
    Sch,
    #[serde(rename = "DTR")]
    Dtr,
    #[serde(rename = "RFR")]
    Rfr,
    #[serde(rename = "ABR")]
    Abr,
    #[serde(rename = "DTR-SCH")]
    DtrSch,
    #[serde(rename = "RFR-SCH")]
    RfrSch,
    #[serde(rename = "ABR-SCH")]
    AbrSch,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Avg,
        MethodId::Sch,
        MethodId::Dtr,
        MethodId::Rfr,
        MethodId::Abr,
        MethodId::DtrSch,
        MethodId::RfrSch,
        MethodId::AbrSch,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MethodId::Avg => "AVG",
            MethodId::Sch => "SCH",
            MethodId::Dtr => "DTR",
            MethodId::Rfr => "RFR",
            MethodId::Abr => "ABR",
            MethodId::DtrSch => "DTR-SCH",
            MethodId::RfrSch => "RFR-SCH",
            MethodId::AbrSch => "ABR-SCH",
        }
    }

    /// Whether this method trains a model on encoded features.
    pub fn is_learned(self) -> bool {
        !matches!(self, MethodId::Avg | MethodId::Sch)
    }

    /// Whether the expert's estimate joins the feature encoding.
    pub fn uses_expert_feature(self) -> bool {
        matches!(self, MethodId::DtrSch | MethodId::RfrSch | MethodId::AbrSch)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let canon = s.trim().to_ascii_uppercase().replace('_', "-");
        for m in MethodId::ALL {
            if canon == m.label() {
                return Ok(m);
            }
        }
        Err(Error::InvalidConfig(format!(
            "unknown method {s:?}; expected one of AVG, SCH, DTR, RFR, ABR, DTR-SCH, RFR-SCH, ABR-SCH"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PairStat {
    mean: f64,
    count: usize,
}

/// Historical mean durations in raw minutes, looked up by
/// (procedure, surgeon) with fallback to the procedure history and
/// then to the global mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgTable {
    pair_means: std::collections::BTreeMap<String, std::collections::BTreeMap<String, PairStat>>,
    procedure_means: std::collections::BTreeMap<String, f64>,
    global_mean: f64,
}

impl AvgTable {
    fn fit(train: &Dataset) -> Self {
        use std::collections::BTreeMap;
        let mut pair_sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
        let mut proc_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut total = 0.0;
        for case in train.cases() {
            let y = case.actual_duration_min;
            total += y;
            let p = proc_sums.entry(case.procedure_name.clone()).or_insert((0.0, 0));
            p.0 += y;
            p.1 += 1;
            let s = pair_sums
                .entry(case.procedure_name.clone())
                .or_default()
                .entry(case.surgeon_id.clone())
                .or_insert((0.0, 0));
            s.0 += y;
            s.1 += 1;
        }
        let pair_means = pair_sums
            .into_iter()
            .map(|(proc, by_surgeon)| {
                let stats = by_surgeon
                    .into_iter()
                    .map(|(surgeon, (sum, count))| {
                        (
                            surgeon,
                            PairStat {
                                mean: sum / count as f64,
                                count,
                            },
                        )
                    })
                    .collect();
                (proc, stats)
            })
            .collect();
        let procedure_means = proc_sums
            .into_iter()
            .map(|(proc, (sum, count))| (proc, sum / count as f64))
            .collect();
        AvgTable {
            pair_means,
            procedure_means,
            global_mean: total / train.len() as f64,
        }
    }

    pub fn predict(&self, procedure: &str, surgeon: &str) -> f64 {
        if let Some(stat) = self
            .pair_means
            .get(procedure)
            .and_then(|by_surgeon| by_surgeon.get(surgeon))
        {
            if stat.count >= MIN_PAIR_OBS {
                return stat.mean;
            }
        }
        self.procedure_means
            .get(procedure)
            .copied()
            .unwrap_or(self.global_mean)
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    /// Seed for the row and feature sampling inside forests.
    pub seed: u64,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub boost: BoostParams,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            seed: 0,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            boost: BoostParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum PredictorState {
    Averages(AvgTable),
    ExpertPassthrough,
    Tree {
        schema: EncodingSchema,
        model: RegressionTree,
    },
    Forest {
        schema: EncodingSchema,
        model: Forest,
    },
    Boost {
        schema: EncodingSchema,
        model: BoostedEnsemble,
    },
}

/// A fitted duration predictor for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    method: MethodId,
    state: PredictorState,
}

/// Fits `method` on the training cases. Learned methods encode the
/// cases, fit on log minutes, and keep their encoding schema for
/// prediction time.
pub fn fit(method: MethodId, train: &Dataset, params: &TrainParams) -> Result<Predictor> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let state = match method {
        MethodId::Avg => PredictorState::Averages(AvgTable::fit(train)),
        MethodId::Sch => PredictorState::ExpertPassthrough,
        _ => {
            let schema = build_schema(train, method.uses_expert_feature())?;
            let x = encode_dataset(train, &schema);
            let z: Vec<f64> = train
                .cases()
                .iter()
                .map(|c| log_duration(c.actual_duration_min))
                .collect::<Result<_>>()?;
            match method {
                MethodId::Dtr | MethodId::DtrSch => {
                    let unit = vec![1.0; x.len()];
                    let model = fit_tree(&x, &z, &unit, &params.tree, None)?;
                    PredictorState::Tree { schema, model }
                }
                MethodId::Rfr | MethodId::RfrSch => {
                    let model = fit_forest(&x, &z, &params.forest, params.seed)?;
                    PredictorState::Forest { schema, model }
                }
                MethodId::Abr | MethodId::AbrSch => {
                    let model = fit_adaboost_r2(&x, &z, &params.boost)?;
                    PredictorState::Boost { schema, model }
                }
                MethodId::Avg | MethodId::Sch => unreachable!(),
            }
        }
    };
    Ok(Predictor { method, state })
}

impl Predictor {
    pub fn method(&self) -> MethodId {
        self.method
    }

    /// Predicted duration in minutes. Unseen categorical levels encode
    /// to all-zero blocks, so prediction never fails on a valid case.
    pub fn predict(&self, case: &SurgicalCase) -> f64 {
        match &self.state {
            PredictorState::Averages(table) => {
                table.predict(&case.procedure_name, &case.surgeon_id)
            }
            PredictorState::ExpertPassthrough => case.expert_prediction_min,
            PredictorState::Tree { schema, model } => {
                let x = encode(case, schema);
                model.predict(&x).expect("encoder emits the trained width").exp()
            }
            PredictorState::Forest { schema, model } => {
                let x = encode(case, schema);
                model.predict(&x).expect("encoder emits the trained width").exp()
            }
            PredictorState::Boost { schema, model } => {
                let x = encode(case, schema);
                model.predict(&x).expect("encoder emits the trained width").exp()
            }
        }
    }

    pub fn predict_batch(&self, ds: &Dataset) -> Vec<PredictionPair> {
        ds.cases()
            .iter()
            .map(|case| PredictionPair {
                actual_min: case.actual_duration_min,
                predicted_min: self.predict(case),
                procedure_name: case.procedure_name.clone(),
            })
            .collect()
    }

    /// Feature names paired with normalized importance shares; `None`
    /// for the two baselines, which have no feature model.
    pub fn importance(&self) -> Option<(Vec<String>, Vec<f64>)> {
        match &self.state {
            PredictorState::Averages(_) | PredictorState::ExpertPassthrough => None,
            PredictorState::Tree { schema, model } => {
                Some((schema.feature_names().to_vec(), model.importance()))
            }
            PredictorState::Forest { schema, model } => {
                Some((schema.feature_names().to_vec(), model.importance()))
            }
            PredictorState::Boost { schema, model } => {
                Some((schema.feature_names().to_vec(), model.importance()))
            }
        }
    }

    pub fn schema(&self) -> Option<&EncodingSchema> {
        match &self.state {
            PredictorState::Averages(_) | PredictorState::ExpertPassthrough => None,
            PredictorState::Tree { schema, .. }
            | PredictorState::Forest { schema, .. }
            | PredictorState::Boost { schema, .. } => Some(schema),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AsaClass, Gender, Location, PatientClass, Provenance};
    use crate::metric::{accuracy, MetricParams};

    fn mk_case(
        id: &str,
        procedure: &str,
        surgeon: &str,
        weight: f64,
        expert: f64,
        actual: f64,
    ) -> SurgicalCase {
        SurgicalCase {
            case_id: id.to_string(),
            procedure_name: procedure.to_string(),
            surgeon_id: surgeon.to_string(),
            gender: Gender::Female,
            weight_kg: weight,
            age_years: weight / 4.0,
            asa: AsaClass::II,
            location: Location::Or,
            patient_class: PatientClass::OutPatient,
            expert_prediction_min: expert,
            actual_duration_min: actual,
        }
    }

    fn dataset(cases: Vec<SurgicalCase>) -> Dataset {
        Dataset::from_cases(cases, Provenance::Csv).unwrap()
    }

    #[test]
    fn method_ids_round_trip_through_text() {
        for m in MethodId::ALL {
            assert_eq!(m.label().parse::<MethodId>().unwrap(), m);
        }
        assert_eq!("rfr_sch".parse::<MethodId>().unwrap(), MethodId::RfrSch);
        assert_eq!(" abr ".parse::<MethodId>().unwrap(), MethodId::Abr);
        assert!("GBM".parse::<MethodId>().is_err());
    }

    #[test]
    fn avg_uses_the_pair_mean_when_history_is_long_enough() {
        let mut cases = Vec::new();
        for (i, y) in [30.0, 40.0, 50.0, 60.0, 70.0].iter().enumerate() {
            cases.push(mk_case(&format!("a{i}"), "Tonsillectomy", "S1", 20.0, 35.0, *y));
        }
        // a second surgeon drags the procedure mean away from 50
        cases.push(mk_case("b0", "Tonsillectomy", "S2", 20.0, 35.0, 110.0));
        let p = fit(MethodId::Avg, &dataset(cases), &TrainParams::default()).unwrap();
        let q = mk_case("q", "Tonsillectomy", "S1", 25.0, 40.0, 55.0);
        assert_eq!(p.predict(&q), 50.0);
    }

    #[test]
    fn avg_falls_back_to_procedure_then_global() {
        let mut cases = Vec::new();
        for (i, y) in [30.0, 40.0, 50.0, 60.0].iter().enumerate() {
            cases.push(mk_case(&format!("a{i}"), "Tonsillectomy", "S1", 20.0, 35.0, *y));
        }
        for (i, y) in [100.0, 120.0].iter().enumerate() {
            cases.push(mk_case(&format!("c{i}"), "Appendectomy", "S3", 30.0, 90.0, *y));
        }
        let p = fit(MethodId::Avg, &dataset(cases), &TrainParams::default()).unwrap();
        // four observations for (Tonsillectomy, S1) is below the gate
        let q1 = mk_case("q1", "Tonsillectomy", "S1", 25.0, 40.0, 55.0);
        assert_eq!(p.predict(&q1), 45.0);
        // known procedure, unknown surgeon
        let q2 = mk_case("q2", "Appendectomy", "S9", 25.0, 40.0, 55.0);
        assert_eq!(p.predict(&q2), 110.0);
        // unknown procedure lands on the global mean
        let q3 = mk_case("q3", "Craniotomy", "S9", 25.0, 40.0, 55.0);
        assert_eq!(p.predict(&q3), 400.0 / 6.0);
    }

    #[test]
    fn sch_passes_the_expert_estimate_through() {
        let cases = vec![mk_case("a", "Tonsillectomy", "S1", 20.0, 35.0, 50.0)];
        let p = fit(MethodId::Sch, &dataset(cases), &TrainParams::default()).unwrap();
        let q = mk_case("q", "Anything", "S9", 10.0, 42.5, 99.0);
        assert_eq!(p.predict(&q), 42.5);
    }

    #[test]
    fn expert_variants_widen_the_encoding_by_one() {
        let cases: Vec<SurgicalCase> = (0..6)
            .map(|i| {
                mk_case(
                    &format!("a{i}"),
                    "Tonsillectomy",
                    "S1",
                    15.0 + i as f64,
                    30.0,
                    40.0 + i as f64,
                )
            })
            .collect();
        let ds = dataset(cases);
        let plain = fit(MethodId::Dtr, &ds, &TrainParams::default()).unwrap();
        let with_expert = fit(MethodId::DtrSch, &ds, &TrainParams::default()).unwrap();
        let w0 = plain.schema().unwrap().width();
        let w1 = with_expert.schema().unwrap().width();
        assert_eq!(w1, w0 + 1);
        assert!(plain.importance().is_some());
        assert!(fit(MethodId::Avg, &ds, &TrainParams::default())
            .unwrap()
            .importance()
            .is_none());
    }

    #[test]
    fn deep_tree_memorizes_training_durations() {
        let cases: Vec<SurgicalCase> = (0..10)
            .map(|i| {
                mk_case(
                    &format!("a{i}"),
                    "Tonsillectomy",
                    "S1",
                    10.0 + i as f64,
                    30.0,
                    35.0 + 7.0 * i as f64,
                )
            })
            .collect();
        let ds = dataset(cases);
        let mut params = TrainParams::default();
        params.tree.min_samples_split = 2;
        let p = fit(MethodId::DtrSch, &ds, &params).unwrap();
        let pairs = p.predict_batch(&ds);
        for pair in &pairs {
            assert!((pair.predicted_min - pair.actual_min).abs() < 1e-9);
        }
        let acc = accuracy(&pairs, &MetricParams::default()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn rich_tree_memorizes_via_a_noise_free_expert_column() {
        // with no noise or rounding the expert column separates every
        // training case, so an unrestrained tree lands each one in its
        // own leaf and reproduces the actual duration exactly
        let mut cfg = crate::data::SynthConfig::with_counts(3, 15, 3);
        cfg.expert_noise_sigma = 0.0;
        cfg.expert_rounding_min = 0.0;
        cfg.seed = 7;
        let ds = crate::data::synth_generate(&cfg).unwrap().dataset;

        let mut params = TrainParams::default();
        params.tree.min_samples_split = 2;
        let p = fit(MethodId::DtrSch, &ds, &params).unwrap();
        let pairs = p.predict_batch(&ds);
        for metric in [
            MetricParams::default(),
            MetricParams::new(0.05, 1.0, 2.0).unwrap(),
        ] {
            assert_eq!(accuracy(&pairs, &metric).unwrap(), 1.0);
        }
    }

    #[test]
    fn forest_and_boost_predict_finite_positive_minutes() {
        let cases: Vec<SurgicalCase> = (0..20)
            .map(|i| {
                mk_case(
                    &format!("a{i}"),
                    if i % 2 == 0 { "Tonsillectomy" } else { "Myringotomy" },
                    &format!("S{}", i % 3),
                    10.0 + i as f64,
                    30.0 + i as f64,
                    40.0 + 3.0 * i as f64,
                )
            })
            .collect();
        let ds = dataset(cases);
        let mut params = TrainParams::default();
        params.forest.n_trees = 5;
        params.boost.n_estimators = 5;
        params.forest.tree.min_samples_split = 4;
        params.boost.tree.min_samples_split = 4;
        for method in [MethodId::Rfr, MethodId::AbrSch] {
            let p = fit(method, &ds, &params).unwrap();
            for case in ds.cases() {
                let y = p.predict(case);
                assert!(y.is_finite() && y > 0.0, "{method}: bad prediction {y}");
            }
            let (names, imp) = p.importance().unwrap();
            assert_eq!(names.len(), imp.len());
            assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn predictor_artifacts_round_trip_through_json() {
        let cases: Vec<SurgicalCase> = (0..8)
            .map(|i| {
                mk_case(
                    &format!("a{i}"),
                    "Tonsillectomy",
                    &format!("S{}", i % 2),
                    10.0 + i as f64,
                    30.0,
                    40.0 + 5.0 * i as f64,
                )
            })
            .collect();
        let ds = dataset(cases);
        let mut params = TrainParams::default();
        params.tree.min_samples_split = 2;
        params.forest.n_trees = 3;
        for method in [MethodId::Avg, MethodId::Sch, MethodId::Dtr, MethodId::Rfr] {
            let p = fit(method, &ds, &params).unwrap();
            let text = serde_json::to_string(&p).unwrap();
            let back: Predictor = serde_json::from_str(&text).unwrap();
            assert_eq!(back.method(), method);
            for case in ds.cases() {
                assert_eq!(back.predict(case), p.predict(case));
            }
        }
    }

    #[test]
    fn fitting_on_nothing_is_an_error() {
        let ds = Dataset::from_cases(vec![], Provenance::Csv).unwrap();
        assert!(matches!(
            fit(MethodId::Avg, &ds, &TrainParams::default()),
            Err(Error::EmptyTrainingSet)
        ));
    }
}
