//! Case records, CSV ingest, feature encoding and synthetic data.

pub mod case;
pub mod dataset;
pub mod encode;
pub mod synth;

pub use case::{AsaClass, AsaParseError, Gender, Location, PatientClass, SurgicalCase};
pub use dataset::{
    filter_min_count, load_dataset, load_dataset_path, parse_case_row, scan_csv, write_dataset,
    write_dataset_path, CsvScan, Dataset, Provenance, CSV_HEADER,
};
pub use encode::{
    build_schema, encode, encode_dataset, inv_log_duration, log_duration, EncodingSchema,
    FeatureGroup, EXPERT_FEATURE_NAME,
};
pub use synth::{synth_generate, SynthConfig, SyntheticData};
