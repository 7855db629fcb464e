//! Training pipeline for binary malware classifiers over fixed-width
//! numeric feature vectors.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod learners;
pub mod metrics;
mod parallel;
pub mod pipeline;
pub mod preprocess;
pub mod reduce;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
