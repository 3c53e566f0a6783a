//! Dataset container and CSV ingest/serialization.
//!
//! The on-disk format is RFC-4180 CSV with this exact header:
//!
//! ```text
//! case_id,procedure_name,surgeon_id,gender,weight_kg,age_years,asa,location,patient_class,expert_prediction_min,actual_duration_min
//! ```
//!
//! Enum fields are matched case-insensitively on input; output always
//! uses the canonical codes (`M`/`F`, `OR`/`APU`, `IN`/`OUT`, roman
//! numeral ASA classes). Floats are written in shortest round-trip
//! form, so `load_dataset` after `write_dataset` reproduces the cases
//! exactly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io;
use std::path::Path;

use crate::data::case::{AsaClass, AsaParseError, Gender, Location, PatientClass, SurgicalCase};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "case_id",
    "procedure_name",
    "surgeon_id",
    "gender",
    "weight_kg",
    "age_years",
    "asa",
    "location",
    "patient_class",
    "expert_prediction_min",
    "actual_duration_min",
];

/// Where a dataset came from. Loading a file always yields `Csv`; the
/// built-in generator yields `Synthetic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Csv,
    Synthetic,
}

/// An ordered collection of cases with unique `case_id`s.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    cases: Vec<SurgicalCase>,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, validating every case and rejecting duplicate ids.
    pub fn from_cases(cases: Vec<SurgicalCase>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cases.len());
        for (pos, case) in cases.iter().enumerate() {
            case.validate().map_err(|e| match e {
                Error::DomainViolation { reason, .. } => Error::domain_at(pos + 1, reason),
                other => other,
            })?;
            if !seen.insert(case.case_id.as_str()) {
                return Err(Error::DuplicateId {
                    line: pos + 1,
                    id: case.case_id.clone(),
                });
            }
        }
        Ok(Dataset { cases, provenance })
    }

    pub fn cases(&self) -> &[SurgicalCase] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Clones the cases at `indices`, preserving the given order.
    /// Panics if an index is out of bounds.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            cases: indices.iter().map(|&i| self.cases[i].clone()).collect(),
            provenance: self.provenance,
        }
    }

    /// Number of cases per procedure, ordered by name.
    pub fn procedure_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for case in &self.cases {
            *counts.entry(case.procedure_name.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

/// Parses one data row (the 11 fields, already split) into a case.
/// `line_no` is used for error messages only; the header is line 1,
/// so the first data row is line 2.
pub fn parse_case_row(fields: &[&str], line_no: usize) -> Result<SurgicalCase> {
    if fields.len() != CSV_HEADER.len() {
        return Err(Error::MalformedRow {
            line: line_no,
            reason: format!("expected {} fields, got {}", CSV_HEADER.len(), fields.len()),
        });
    }

    let parse_f64 = |name: &str, raw: &str| -> Result<f64> {
        raw.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
            line: line_no,
            reason: format!("unparsable {name} `{raw}`"),
        })
    };
    let bad_token = |name: &str, raw: &str| Error::MalformedRow {
        line: line_no,
        reason: format!("unrecognized {name} `{raw}`"),
    };

    let gender = Gender::parse(fields[3]).ok_or_else(|| bad_token("gender", fields[3]))?;
    let weight_kg = parse_f64("weight_kg", fields[4])?;
    let age_years = parse_f64("age_years", fields[5])?;
    let asa = match AsaClass::parse(fields[6]) {
        Ok(a) => a,
        Err(AsaParseError::OutOfRange) => {
            return Err(Error::domain_at(
                line_no,
                format!("ASA class `{}` is outside I-V", fields[6].trim()),
            ))
        }
        Err(AsaParseError::Unrecognized) => return Err(bad_token("asa", fields[6])),
    };
    let location = Location::parse(fields[7]).ok_or_else(|| bad_token("location", fields[7]))?;
    let patient_class =
        PatientClass::parse(fields[8]).ok_or_else(|| bad_token("patient_class", fields[8]))?;
    let expert_prediction_min = parse_f64("expert_prediction_min", fields[9])?;
    let actual_duration_min = parse_f64("actual_duration_min", fields[10])?;

    let case = SurgicalCase {
        case_id: fields[0].trim().to_string(),
        procedure_name: fields[1].trim().to_string(),
        surgeon_id: fields[2].trim().to_string(),
        gender,
        weight_kg,
        age_years,
        asa,
        location,
        patient_class,
        expert_prediction_min,
        actual_duration_min,
    };
    case.validate().map_err(|e| match e {
        Error::DomainViolation { reason, .. } => Error::domain_at(line_no, reason),
        other => other,
    })?;
    Ok(case)
}

fn check_header(record: &csv::StringRecord) -> Result<()> {
    let got: Vec<&str> = record.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        return Err(Error::HeaderMismatch {
            expected: CSV_HEADER.join(","),
            got: got.join(","),
        });
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Reads a full dataset, failing on the first malformed row, domain
/// violation, or duplicate id.
pub fn load_dataset<R: io::Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(rdr.headers()?)?;

    let mut cases = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let fields: Vec<&str> = record.iter().collect();
        let case = parse_case_row(&fields, line)?;
        if seen.insert(case.case_id.clone(), line).is_some() {
            return Err(Error::DuplicateId {
                line,
                id: case.case_id,
            });
        }
        cases.push(case);
    }
    Ok(Dataset {
        cases,
        provenance: Provenance::Csv,
    })
}

pub fn load_dataset_path(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path.display().to_string(), e))?;
    load_dataset(io::BufReader::new(file))
}

/// Outcome of a lenient scan: how many rows parsed cleanly, and every
/// error encountered (rows are checked independently).
#[derive(Debug)]
pub struct CsvScan {
    pub valid: usize,
    pub errors: Vec<Error>,
}

/// Checks a CSV without bailing at the first problem. IO failures are
/// still fatal; header mismatches and row-level problems are collected.
pub fn scan_csv<R: io::Read>(reader: R) -> Result<CsvScan> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut errors = Vec::new();
    if let Err(e) = check_header(rdr.headers()?) {
        errors.push(e);
    }

    let mut valid = 0;
    let mut seen: HashSet<String> = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        let fields: Vec<&str> = record.iter().collect();
        match parse_case_row(&fields, line) {
            Ok(case) => {
                if seen.insert(case.case_id.clone()) {
                    valid += 1;
                } else {
                    errors.push(Error::DuplicateId {
                        line,
                        id: case.case_id,
                    });
                }
            }
            Err(e) => errors.push(e),
        }
    }
    Ok(CsvScan { valid, errors })
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips through `parse::<f64>()`.
    format!("{v}")
}

/// Writes the canonical CSV form. `load_dataset` on the output yields
/// the same cases in the same order.
pub fn write_dataset<W: io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for c in ds.cases() {
        wtr.write_record([
            c.case_id.as_str(),
            c.procedure_name.as_str(),
            c.surgeon_id.as_str(),
            c.gender.code(),
            &fmt_f64(c.weight_kg),
            &fmt_f64(c.age_years),
            c.asa.code(),
            c.location.code(),
            c.patient_class.code(),
            &fmt_f64(c.expert_prediction_min),
            &fmt_f64(c.actual_duration_min),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_dataset_path(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file =
        std::fs::File::create(path).map_err(|e| Error::file(path.display().to_string(), e))?;
    write_dataset(ds, io::BufWriter::new(file))
}

/// Keeps only cases whose procedure has at least `min_count` cases in
/// `ds`, preserving order. Applying it twice changes nothing: every
/// surviving procedure keeps its full count.
pub fn filter_min_count(ds: &Dataset, min_count: usize) -> Dataset {
    debug_assert!(min_count >= 1);
    let counts = ds.procedure_counts();
    let cases: Vec<SurgicalCase> = ds
        .cases()
        .iter()
        .filter(|c| counts[c.procedure_name.as_str()] >= min_count)
        .cloned()
        .collect();
    Dataset {
        cases,
        provenance: ds.provenance(),
    }
}
