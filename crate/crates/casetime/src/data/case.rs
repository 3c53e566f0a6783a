//! Core record type for a single surgical case and its categorical fields.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    /// Canonical single-letter code used in CSV output.
    pub fn code(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }

    /// Accepts the canonical code or the full word, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Some(Gender::Male),
            "f" | "female" => Some(Gender::Female),
            _ => None,
        }
    }
}

/// Where the case is performed: a full operating room or the
/// anesthesia procedure unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Or,
    Apu,
}

impl Location {
    pub fn code(self) -> &'static str {
        match self {
            Location::Or => "OR",
            Location::Apu => "APU",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "or" => Some(Location::Or),
            "apu" => Some(Location::Apu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatientClass {
    InPatient,
    OutPatient,
}

impl PatientClass {
    pub fn code(self) -> &'static str {
        match self {
            PatientClass::InPatient => "IN",
            PatientClass::OutPatient => "OUT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" | "inpatient" | "in-patient" => Some(PatientClass::InPatient),
            "out" | "outpatient" | "out-patient" => Some(PatientClass::OutPatient),
            _ => None,
        }
    }
}

/// Physical-status classification, an ordinal scale from I (healthy)
/// to V (moribund). Class VI (organ donation) never occurs in the
/// populations this crate models and is rejected as out of range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AsaClass {
    I,
    II,
    III,
    IV,
    V,
}

/// Why an ASA token failed to parse: recognizable but out of range,
/// or not a roman numeral at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsaParseError {
    OutOfRange,
    Unrecognized,
}

impl AsaClass {
    pub const ALL: [AsaClass; 5] = [
        AsaClass::I,
        AsaClass::II,
        AsaClass::III,
        AsaClass::IV,
        AsaClass::V,
    ];

    /// Position on the ordinal scale, 1 through 5.
    pub fn ordinal(self) -> u8 {
        match self {
            AsaClass::I => 1,
            AsaClass::II => 2,
            AsaClass::III => 3,
            AsaClass::IV => 4,
            AsaClass::V => 5,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            AsaClass::I => "I",
            AsaClass::II => "II",
            AsaClass::III => "III",
            AsaClass::IV => "IV",
            AsaClass::V => "V",
        }
    }

    pub fn parse(s: &str) -> std::result::Result<Self, AsaParseError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" => Ok(AsaClass::I),
            "ii" => Ok(AsaClass::II),
            "iii" => Ok(AsaClass::III),
            "iv" => Ok(AsaClass::IV),
            "v" => Ok(AsaClass::V),
            "vi" => Err(AsaParseError::OutOfRange),
            _ => Err(AsaParseError::Unrecognized),
        }
    }
}

/// One surgical case: identity, the features known at scheduling time,
/// the expert's booked estimate, and the realized duration.
#[derive(Debug, Clone, PartialEq)]
pub struct SurgicalCase {
    pub case_id: String,
    pub procedure_name: String,
    pub surgeon_id: String,
    pub gender: Gender,
    pub weight_kg: f64,
    pub age_years: f64,
    pub asa: AsaClass,
    pub location: Location,
    pub patient_class: PatientClass,
    pub expert_prediction_min: f64,
    pub actual_duration_min: f64,
}

impl SurgicalCase {
    /// Checks the numeric domains: positive finite weight, duration and
    /// expert estimate, non-negative finite age, non-empty identifiers.
    pub fn validate(&self) -> Result<()> {
        if self.case_id.is_empty() {
            return Err(Error::domain("empty case_id"));
        }
        if self.procedure_name.is_empty() {
            return Err(Error::domain("empty procedure_name"));
        }
        if self.surgeon_id.is_empty() {
            return Err(Error::domain("empty surgeon_id"));
        }
        for (name, v) in [
            ("weight_kg", self.weight_kg),
            ("expert_prediction_min", self.expert_prediction_min),
            ("actual_duration_min", self.actual_duration_min),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.age_years.is_finite() || self.age_years < 0.0 {
            return Err(Error::domain(format!(
                "age_years must be non-negative, got {}",
                self.age_years
            )));
        }
        Ok(())
    }
}
