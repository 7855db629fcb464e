//! Labelled feature matrices: loading, cleaning and stratified splitting.

mod clean;
mod io;
mod split;

pub use clean::{clean, CleanReport};
pub use io::{
    load_dataset, load_table, peek_feature_count, read_mfbin, write_csv, write_dataset,
    write_mfbin, DataFormat, Table,
};
pub use split::{partition_halves, stratified_split, SplitResult, SplitSpec};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f32` features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f32>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f32>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::InvalidParameter(
                "feature count must be positive".into(),
            ));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch(values.len(), n_rows * n_cols));
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), n_cols)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.n_cols + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn column(&self, col: usize) -> Vec<f32> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }

    /// Fails on the first NaN or infinite value.
    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite {
                row: p / self.n_cols,
                column: p % self.n_cols,
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn expect_cols(&self, expected: usize) -> Result<()> {
        if self.n_cols != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.n_cols,
            });
        }
        Ok(())
    }
}

/// Feature matrix with binary labels (1 = malicious) and stable row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<u8>,
    row_ids: Vec<u64>,
}

impl Dataset {
    /// Row ids default to 0-based positions.
    pub fn new(features: FeatureMatrix, labels: Vec<u8>) -> Result<Self> {
        let row_ids = (0..labels.len() as u64).collect();
        Self::with_row_ids(features, labels, row_ids)
    }

    pub fn with_row_ids(
        features: FeatureMatrix,
        labels: Vec<u8>,
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::LengthMismatch(labels.len(), features.n_rows()));
        }
        if row_ids.len() != labels.len() {
            return Err(Error::LengthMismatch(row_ids.len(), labels.len()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} is not 0 or 1"
            )));
        }
        Ok(Self {
            features,
            labels,
            row_ids,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>], labels: Vec<u8>) -> Result<Self> {
        Self::new(FeatureMatrix::from_rows(rows)?, labels)
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.n_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Same labels and ids with a new feature matrix of equal height.
    pub fn with_features(&self, features: FeatureMatrix) -> Result<Dataset> {
        Dataset::with_row_ids(features, self.labels.clone(), self.row_ids.clone())
    }

    /// Appends `other` below `self`, renumbering its row ids after ours.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        self.features.expect_cols(other.feature_count())?;
        let offset = self.row_ids.iter().max().map_or(0, |m| m + 1);
        let mut values = self.features.values().to_vec();
        values.extend_from_slice(other.features.values());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut row_ids = self.row_ids.clone();
        row_ids.extend(other.row_ids.iter().map(|id| id + offset));
        let n = labels.len();
        Dataset::with_row_ids(
            FeatureMatrix::new(values, n, self.feature_count())?,
            labels,
            row_ids,
        )
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        let pos = self.n_positive();
        if pos == 0 || pos == self.n_rows() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}
