//! Gait trials: ingestion, labelling, standardization, windowing, CSV
//! storage and the synthetic generator.

pub mod channels;
pub mod csv_io;
pub mod resample;
pub mod stance;
pub mod standardize;
pub mod synth;
pub mod trial;
pub mod window;

use thiserror::Error;

pub use channels::{ChannelGroup, ChannelLayout, ChannelSignMap, FULL_CHANNELS, REDUCED_CHANNELS};
pub use csv_io::{load_trial_csv, load_trial_dir, save_trial_csv};
pub use resample::{resample_linear, Stream};
pub use stance::{complete_strides, label_stance, segment_strides};
pub use standardize::{apply_standardizer, fit_standardizer, unstandardize, Standardizer};
pub use synth::{synth_generate, PopulationSpec};
pub use trial::{
    filter_ground_truth, ingest, GaitTrial, IngestOptions, Population, RawTrial, SpeedCondition, TrialMeta,
    TRIAL_RATE_HZ,
};
pub use window::{extract_window, make_windows, window_ends, SensorWindow};

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error("timestamps are not uniform or not increasing at sample {index}")]
    NonUniformTimestamps { index: usize },
    #[error(transparent)]
    Dsp(#[from] crate::dsp::DspError),
    #[error("trial has {len} samples, fewer than the window length {h}")]
    TrialTooShort { len: usize, h: usize },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        DataError::Io { path: path.display().to_string(), msg: e.to_string() }
    }
}
