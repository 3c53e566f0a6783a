//! Turns cases into fixed-width numeric feature vectors.
//!
//! Layout: `[weight_kg, age_years, asa_ordinal]`, then one-hot blocks
//! for gender, location, patient class, surgeon and procedure (levels
//! sorted, vocabularies taken from the training set only), then an
//! optional trailing `ln(expert_prediction_min)` column. A level never
//! seen in training encodes as all zeros in its block.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::data::case::SurgicalCase;
use crate::data::dataset::Dataset;
use crate::error::{Error, Result};

pub const EXPERT_FEATURE_NAME: &str = "expert_prediction_log";

/// The original case field a column belongs to. One-hot blocks map
/// many columns onto one group; reports aggregate importance by group.
/// Declaration order is the presentation order in tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureGroup {
    Gender,
    Weight,
    Age,
    Asa,
    Surgeon,
    Location,
    PatientClass,
    Procedure,
    ExpertPrediction,
}

impl FeatureGroup {
    pub const TABLE_ORDER: [FeatureGroup; 9] = [
        FeatureGroup::Gender,
        FeatureGroup::Weight,
        FeatureGroup::Age,
        FeatureGroup::Asa,
        FeatureGroup::Surgeon,
        FeatureGroup::Location,
        FeatureGroup::PatientClass,
        FeatureGroup::Procedure,
        FeatureGroup::ExpertPrediction,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroup::Gender => "gender",
            FeatureGroup::Weight => "weight",
            FeatureGroup::Age => "age",
            FeatureGroup::Asa => "asa",
            FeatureGroup::Surgeon => "surgeon",
            FeatureGroup::Location => "location",
            FeatureGroup::PatientClass => "patient_class",
            FeatureGroup::Procedure => "procedure",
            FeatureGroup::ExpertPrediction => "expert_prediction",
        }
    }

    /// Recovers the group from an encoded column name. Returns `None`
    /// for names this module never produces.
    pub fn of_column(name: &str) -> Option<FeatureGroup> {
        match name {
            "weight_kg" => return Some(FeatureGroup::Weight),
            "age_years" => return Some(FeatureGroup::Age),
            "asa" => return Some(FeatureGroup::Asa),
            EXPERT_FEATURE_NAME => return Some(FeatureGroup::ExpertPrediction),
            _ => {}
        }
        let prefix = name.split_once('=')?.0;
        match prefix {
            "gender" => Some(FeatureGroup::Gender),
            "location" => Some(FeatureGroup::Location),
            "patient_class" => Some(FeatureGroup::PatientClass),
            "surgeon" => Some(FeatureGroup::Surgeon),
            "procedure" => Some(FeatureGroup::Procedure),
            _ => None,
        }
    }
}

/// Frozen encoding decisions: vocabularies, column order and whether
/// the expert estimate rides along. Models embed their schema so
/// prediction never re-derives vocabularies from new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSchema {
    gender_levels: Vec<String>,
    location_levels: Vec<String>,
    patient_class_levels: Vec<String>,
    surgeon_levels: Vec<String>,
    procedure_levels: Vec<String>,
    include_expert: bool,
    feature_names: Vec<String>,
}

impl EncodingSchema {
    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn include_expert(&self) -> bool {
        self.include_expert
    }
}

fn sorted_levels<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: BTreeSet<&str> = it.collect();
    set.into_iter().map(str::to_string).collect()
}

/// Derives a schema from training data. Fails on an empty training set:
/// there would be no vocabularies to freeze.
pub fn build_schema(train: &Dataset, include_expert: bool) -> Result<EncodingSchema> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let cases = train.cases();
    let gender_levels = sorted_levels(cases.iter().map(|c| c.gender.code()));
    let location_levels = sorted_levels(cases.iter().map(|c| c.location.code()));
    let patient_class_levels = sorted_levels(cases.iter().map(|c| c.patient_class.code()));
    let surgeon_levels = sorted_levels(cases.iter().map(|c| c.surgeon_id.as_str()));
    let procedure_levels = sorted_levels(cases.iter().map(|c| c.procedure_name.as_str()));

    let mut feature_names = vec![
        "weight_kg".to_string(),
        "age_years".to_string(),
        "asa".to_string(),
    ];
    for level in &gender_levels {
        feature_names.push(format!("gender={level}"));
    }
    for level in &location_levels {
        feature_names.push(format!("location={level}"));
    }
    for level in &patient_class_levels {
        feature_names.push(format!("patient_class={level}"));
    }
    for level in &surgeon_levels {
        feature_names.push(format!("surgeon={level}"));
    }
    for level in &procedure_levels {
        feature_names.push(format!("procedure={level}"));
    }
    if include_expert {
        feature_names.push(EXPERT_FEATURE_NAME.to_string());
    }

    Ok(EncodingSchema {
        gender_levels,
        location_levels,
        patient_class_levels,
        surgeon_levels,
        procedure_levels,
        include_expert,
        feature_names,
    })
}

fn push_one_hot(out: &mut Vec<f64>, levels: &[String], value: &str) {
    for level in levels {
        out.push(if level == value { 1.0 } else { 0.0 });
    }
}

/// Encodes one case against a schema. Total: never fails, unknown
/// levels simply light no indicator.
pub fn encode(case: &SurgicalCase, schema: &EncodingSchema) -> Vec<f64> {
    let mut v = Vec::with_capacity(schema.width());
    v.push(case.weight_kg);
    v.push(case.age_years);
    v.push(f64::from(case.asa.ordinal()));
    push_one_hot(&mut v, &schema.gender_levels, case.gender.code());
    push_one_hot(&mut v, &schema.location_levels, case.location.code());
    push_one_hot(&mut v, &schema.patient_class_levels, case.patient_class.code());
    push_one_hot(&mut v, &schema.surgeon_levels, &case.surgeon_id);
    push_one_hot(&mut v, &schema.procedure_levels, &case.procedure_name);
    if schema.include_expert {
        v.push(case.expert_prediction_min.ln());
    }
    debug_assert_eq!(v.len(), schema.width());
    v
}

pub fn encode_dataset(ds: &Dataset, schema: &EncodingSchema) -> Vec<Vec<f64>> {
    ds.cases().iter().map(|c| encode(c, schema)).collect()
}

/// Natural log of a duration in minutes; the target space for every
/// learned model in this crate.
pub fn log_duration(minutes: f64) -> Result<f64> {
    if !minutes.is_finite() || minutes <= 0.0 {
        return Err(Error::domain(format!(
            "duration must be positive and finite, got {minutes}"
        )));
    }
    Ok(minutes.ln())
}

/// Inverse of [`log_duration`]: back from log-minutes to minutes.
pub fn inv_log_duration(log_minutes: f64) -> f64 {
    log_minutes.exp()
}
