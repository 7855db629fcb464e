//! Dimensionality reduction: supervised top-k selection by boosted-tree
//! gain, or PCA projection.

mod pca;
mod selection;

use serde::{Deserialize, Serialize};

pub use pca::{fit_pca, PcaReducer};
pub use selection::{fit_selection, selector_hyperparams, SelectionReducer, SELECTOR_SEED};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    Selection,
    Pca,
}

impl std::str::FromStr for ReductionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selection" => Ok(ReductionMethod::Selection),
            "pca" => Ok(ReductionMethod::Pca),
            other => Err(Error::InvalidParameter(format!(
                "unknown reduction method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reducer {
    Selection(SelectionReducer),
    Pca(PcaReducer),
}

impl Reducer {
    pub fn fit(method: ReductionMethod, train: &Dataset, k: usize) -> Result<Reducer> {
        match method {
            ReductionMethod::Selection => fit_selection(train, k).map(Reducer::Selection),
            ReductionMethod::Pca => fit_pca(train, k).map(Reducer::Pca),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Reducer::Selection(r) => r.input_dim(),
            Reducer::Pca(r) => r.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Reducer::Selection(r) => r.k,
            Reducer::Pca(r) => r.k,
        }
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            Reducer::Selection(r) => r.transform_matrix(x),
            Reducer::Pca(r) => r.transform_matrix(x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Reducer::Selection(r) => r.validate(),
            Reducer::Pca(r) => r.validate(),
        }
    }
}

/// Applies a fitted reducer; labels and row ids pass through.
pub fn apply_reducer(reducer: &Reducer, data: &Dataset) -> Result<Dataset> {
    data.with_features(reducer.transform_matrix(data.features())?)
}
