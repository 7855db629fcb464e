use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::learners::{fit_gbdt_with_importance, HyperParams, LearnerKind};

/// Seed of the ranking model. It draws nothing random since subsampling is
/// off, but it is recorded with the model like any other seed.
pub const SELECTOR_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReducer {
    pub k: usize,
    /// Ascending column indices kept.
    #[serde(rename = "indices")]
    pub selected_indices: Vec<usize>,
    /// Total split gain per input column.
    pub importances: Vec<f64>,
}

/// Ranking model configuration: 100 level-wise rounds, depth 6, learning
/// rate 0.1, 256 bins, no subsampling. Unlisted fields keep the level-wise
/// preset defaults.
pub fn selector_hyperparams() -> HyperParams {
    HyperParams {
        n_trees: 100,
        max_depth: 6,
        learning_rate: 0.1,
        n_bins: 256,
        feature_subsample_fraction: 1.0,
        row_subsample_fraction: 1.0,
        ..HyperParams::default_for(LearnerKind::GbdtA)
    }
}

/// Top `k` indices by importance, ties to the lower index, returned sorted.
fn top_k(importances: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

pub fn fit_selection(train: &Dataset, k: usize) -> Result<SelectionReducer> {
    let d = train.feature_count();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "selection k={k} outside [1, {d}]"
        )));
    }
    let (_, importances) = fit_gbdt_with_importance(
        train,
        &selector_hyperparams(),
        SELECTOR_SEED,
        LearnerKind::GbdtA,
    )?;
    Ok(SelectionReducer {
        k,
        selected_indices: top_k(&importances, k),
        importances,
    })
}

impl SelectionReducer {
    /// A reducer over explicit indices with all-zero importances.
    pub fn from_indices(indices: Vec<usize>, input_dim: usize) -> Result<SelectionReducer> {
        let r = SelectionReducer {
            k: indices.len(),
            selected_indices: indices,
            importances: vec![0.0; input_dim],
        };
        r.validate()?;
        Ok(r)
    }

    pub fn input_dim(&self) -> usize {
        self.importances.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.input_dim();
        let ok = self.k == self.selected_indices.len()
            && self.k >= 1
            && self.selected_indices.windows(2).all(|w| w[0] < w[1])
            && self.selected_indices.last().is_some_and(|&i| i < d)
            && self.importances.iter().all(|&g| g >= 0.0 && g.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::CorruptBundle(
                "selection reducer is inconsistent".into(),
            ))
        }
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.expect_cols(self.input_dim())?;
        let mut values = Vec::with_capacity(x.n_rows() * self.k);
        for row in x.rows() {
            values.extend(self.selected_indices.iter().map(|&j| row[j]));
        }
        FeatureMatrix::new(values, x.n_rows(), self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_with_signal(n: usize, d: usize, signal: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f32>()).collect())
            .collect();
        let labels = rows.iter().map(|r| u8::from(r[signal] > 0.5)).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn informative_feature_ranks_first() {
        let data = noisy_with_signal(300, 11, 3, 7);
        let r = fit_selection(&data, 1).unwrap();
        assert_eq!(r.selected_indices, vec![3]);
        assert!(r.importances.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn k_equal_d_keeps_everything() {
        let data = noisy_with_signal(100, 5, 1, 1);
        assert_eq!(
            fit_selection(&data, 5).unwrap().selected_indices,
            vec![0, 1, 2, 3, 4]
        );
        assert!(fit_selection(&data, 6).is_err());
        assert!(fit_selection(&data, 0).is_err());
    }

    #[test]
    fn duplicate_columns_tie_to_lower_index() {
        let base = noisy_with_signal(200, 4, 2, 3);
        let rows: Vec<Vec<f32>> = base
            .features()
            .rows()
            .map(|r| vec![r[0], r[2], r[1], r[2]])
            .collect();
        let data = Dataset::from_rows(&rows, base.labels().to_vec()).unwrap();
        let r = fit_selection(&data, 1).unwrap();
        assert_eq!(r.selected_indices, vec![1]);
    }

    #[test]
    fn top_k_tie_rule() {
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 0.0, 3.0], 2), vec![1, 2]);
        assert_eq!(top_k(&[0.0, 0.0, 0.0], 2), vec![0, 1]);
    }
}
