//! Tree-ensemble learners built on a shared histogram split engine:
//! two gradient-boosting presets, Random Forest and Extra Trees.

pub mod binning;
mod forest;
mod gbdt;
pub mod loss;
pub mod split;
mod tree;

use serde::{Deserialize, Serialize};

pub use forest::{fit_extra_trees, fit_random_forest};
pub use gbdt::{fit_gbdt, fit_gbdt_with_importance, GrowthPolicy};
pub use split::{find_best_split, SplitCandidate, SplitCriterion};
pub use tree::{Node, Tree};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Boosting with level-wise growth (the XGBoost-style role).
    GbdtA,
    /// Boosting with best-first leaf-wise growth (the LightGBM-style role).
    GbdtB,
    RandomForest,
    ExtraTrees,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::GbdtA,
        LearnerKind::GbdtB,
        LearnerKind::RandomForest,
        LearnerKind::ExtraTrees,
    ];

    pub fn is_boosted(self) -> bool {
        matches!(self, LearnerKind::GbdtA | LearnerKind::GbdtB)
    }

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::GbdtA => "gbdt_a",
            LearnerKind::GbdtB => "gbdt_b",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::ExtraTrees => "extra_trees",
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown learner kind {s:?}")))
    }
}

/// Training knobs shared by all four learners. Fields a learner does not
/// use are carried along untouched:
/// `learning_rate` and `max_leaves` only affect boosting, `bootstrap`
/// only Random Forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
    pub n_bins: usize,
    /// Boosting: columns sampled per tree.
    pub feature_subsample_fraction: f64,
    /// Boosting: rows sampled per tree without replacement. Random Forest:
    /// bootstrap sample size, drawn with replacement.
    pub row_subsample_fraction: f64,
    pub min_split_gain: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_bootstrap() -> bool {
    true
}

impl HyperParams {
    pub fn default_for(kind: LearnerKind) -> HyperParams {
        let base = HyperParams {
            n_trees: 200,
            max_depth: 6,
            max_leaves: 64,
            min_samples_leaf: 20,
            learning_rate: 0.1,
            n_bins: 256,
            feature_subsample_fraction: 1.0,
            row_subsample_fraction: 1.0,
            min_split_gain: 0.0,
            bootstrap: true,
        };
        match kind {
            LearnerKind::GbdtA => base,
            LearnerKind::GbdtB => HyperParams {
                max_depth: 12,
                max_leaves: 31,
                ..base
            },
            LearnerKind::RandomForest | LearnerKind::ExtraTrees => HyperParams {
                max_depth: 32,
                max_leaves: 1 << 16,
                ..base
            },
        }
    }

    pub fn validate(&self, kind: LearnerKind) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !kind.is_boosted() && self.n_trees == 0 {
            return bad("forests need at least one tree".into());
        }
        if !(1..=64).contains(&self.max_depth) {
            return bad(format!("max_depth {} outside 1..=64", self.max_depth));
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2".into());
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if !(2..=binning::MAX_BINS).contains(&self.n_bins) {
            return bad(format!(
                "n_bins {} outside 2..={}",
                self.n_bins,
                binning::MAX_BINS
            ));
        }
        for (name, f) in [
            (
                "feature_subsample_fraction",
                self.feature_subsample_fraction,
            ),
            ("row_subsample_fraction", self.row_subsample_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("{name} {f} outside (0, 1]"));
            }
        }
        if !(self.min_split_gain >= 0.0 && self.min_split_gain.is_finite()) {
            return bad("min_split_gain must be non-negative".into());
        }
        Ok(())
    }
}

/// A fitted ensemble producing malicious-class probabilities.
///
/// Boosted: `sigmoid(base_score + learning_rate * sum(tree outputs))`.
/// Bagged: mean of per-tree leaf probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub kind: LearnerKind,
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub hyperparams: HyperParams,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Raw additive score for boosted models, mean probability otherwise.
    #[inline]
    pub fn raw_score(&self, x: &[f32]) -> f64 {
        if self.kind.is_boosted() {
            let mut s = self.base_score;
            for t in &self.trees {
                s += self.learning_rate * t.predict_row(x);
            }
            s
        } else {
            let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
            sum / self.trees.len() as f64
        }
    }

    #[inline]
    pub fn predict_row(&self, x: &[f32]) -> f64 {
        let s = self.raw_score(x);
        if self.kind.is_boosted() {
            loss::sigmoid(s)
        } else {
            s
        }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.expect_cols(self.n_features)?;
        Ok(parallel::map_indexed(x.n_rows(), |i| {
            self.predict_row(x.row(i))
        }))
    }

    /// The first `k` trees only; used to inspect boosting progress.
    pub fn truncated(&self, k: usize) -> ForestModel {
        ForestModel {
            trees: self.trees[..k.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Structural checks for models loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::InvalidParameter("model has no features".into()));
        }
        if !self.kind.is_boosted() && self.trees.is_empty() {
            return Err(Error::InvalidParameter("bagged model has no trees".into()));
        }
        if !self.base_score.is_finite() || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter("non-finite model scalar".into()));
        }
        if let Some(f) = self.trees.iter().filter_map(Tree::max_feature).max() {
            if f >= self.n_features {
                return Err(Error::InvalidParameter(format!(
                    "tree splits on feature {f} of {}",
                    self.n_features
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_training_data(train: &Dataset) -> Result<()> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training"));
    }
    train.features().ensure_finite()?;
    train.require_both_classes()
}

/// Dispatches to the learner named by `kind`.
pub fn fit(kind: LearnerKind, train: &Dataset, hp: &HyperParams, seed: u64) -> Result<ForestModel> {
    match kind {
        LearnerKind::GbdtA | LearnerKind::GbdtB => fit_gbdt(train, hp, seed, kind),
        LearnerKind::RandomForest => fit_random_forest(train, hp, seed),
        LearnerKind::ExtraTrees => fit_extra_trees(train, hp, seed),
    }
}
