//! Two-instance soft voting: one model per training partition, combined as
//! `p = w1·p1 + (1 − w1)·p2` with `w1` picked from an 11-point grid.

mod tuner;

use serde::{Deserialize, Serialize};

pub use tuner::{tune, FloatSpace, IntSpace, SearchSpace, Trial, TuneResult, TunerConfig};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::learners::{fit, ForestModel, HyperParams, LearnerKind};

pub const GRID_STEPS: usize = 10;

/// `w1` candidates `0.0, 0.1, ..., 1.0`.
pub fn weight_grid() -> Vec<f64> {
    (0..=GRID_STEPS)
        .map(|i| i as f64 / GRID_STEPS as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub w1: f64,
    pub correct: u64,
    pub accuracy: f64,
}

#[inline]
pub fn combine(p1: f64, p2: f64, w1: f64) -> f64 {
    w1 * p1 + (1.0 - w1) * p2
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotingEnsemble {
    pub model_1: ForestModel,
    pub model_2: ForestModel,
    w1: Option<f64>,
}

impl VotingEnsemble {
    pub fn new(model_1: ForestModel, model_2: ForestModel) -> Result<VotingEnsemble> {
        if model_1.n_features != model_2.n_features {
            return Err(Error::DimensionMismatch {
                expected: model_1.n_features,
                found: model_2.n_features,
            });
        }
        Ok(VotingEnsemble {
            model_1,
            model_2,
            w1: None,
        })
    }

    /// Fixes the weights; `w1` must be a grid member.
    pub fn with_weight(mut self, w1: f64) -> Result<VotingEnsemble> {
        if !weight_grid().contains(&w1) {
            return Err(Error::InvalidParameter(format!(
                "w1={w1} is not on the 0.1 grid"
            )));
        }
        self.w1 = Some(w1);
        Ok(self)
    }

    /// `(w1, w2)` once searched.
    pub fn weights(&self) -> Option<(f64, f64)> {
        self.w1.map(|w| (w, 1.0 - w))
    }

    pub fn n_features(&self) -> usize {
        self.model_1.n_features
    }

    pub fn member_probabilities(&self, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.model_1.predict_proba(x)?,
            self.model_2.predict_proba(x)?,
        ))
    }

    /// Combined probabilities and labels (`p ≥ 0.5` is malicious).
    pub fn predict(&self, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<u8>)> {
        let w1 = self.w1.ok_or(Error::WeightsUnset)?;
        let (p1, p2) = self.member_probabilities(x)?;
        let p: Vec<f64> = p1
            .iter()
            .zip(&p2)
            .map(|(&a, &b)| combine(a, b, w1))
            .collect();
        let labels = p.iter().map(|&v| u8::from(v >= 0.5)).collect();
        Ok((p, labels))
    }
}

/// Fits `model_1` on `partition_a` and `model_2` on `partition_b`.
pub fn train_ensemble(
    partition_a: &Dataset,
    partition_b: &Dataset,
    kind: LearnerKind,
    hp: &HyperParams,
    seeds: (u64, u64),
) -> Result<VotingEnsemble> {
    train_ensemble_with(partition_a, partition_b, kind, (hp, hp), seeds)
}

/// As [`train_ensemble`] with separate hyperparameters per instance.
pub fn train_ensemble_with(
    partition_a: &Dataset,
    partition_b: &Dataset,
    kind: LearnerKind,
    hp: (&HyperParams, &HyperParams),
    seeds: (u64, u64),
) -> Result<VotingEnsemble> {
    if partition_a.feature_count() != partition_b.feature_count() {
        return Err(Error::DimensionMismatch {
            expected: partition_a.feature_count(),
            found: partition_b.feature_count(),
        });
    }
    let model_1 = fit(kind, partition_a, hp.0, seeds.0)?;
    let model_2 = fit(kind, partition_b, hp.1, seeds.1)?;
    VotingEnsemble::new(model_1, model_2)
}

/// Scores every grid weight by accuracy on `selection` and fixes the best.
/// Ties go to the weight nearest 0.5, then to the smaller weight.
pub fn search_weights(
    ensemble: VotingEnsemble,
    selection: &Dataset,
) -> Result<(VotingEnsemble, Vec<GridPoint>)> {
    if selection.is_empty() {
        return Err(Error::EmptyDataset("weight search"));
    }
    let (p1, p2) = ensemble.member_probabilities(selection.features())?;
    let n = selection.n_rows() as u64;
    let report: Vec<GridPoint> = weight_grid()
        .into_iter()
        .map(|w1| {
            let correct = p1
                .iter()
                .zip(&p2)
                .zip(selection.labels())
                .filter(|((&a, &b), &y)| u8::from(combine(a, b, w1) >= 0.5) == y)
                .count() as u64;
            GridPoint {
                w1,
                correct,
                accuracy: correct as f64 / n as f64,
            }
        })
        .collect();
    let centre = GRID_STEPS / 2;
    let best = (0..report.len())
        .min_by_key(|&i| (std::cmp::Reverse(report[i].correct), i.abs_diff(centre), i))
        .expect("grid is nonempty");
    let w1 = report[best].w1;
    Ok((ensemble.with_weight(w1)?, report))
}
