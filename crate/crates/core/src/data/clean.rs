use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub missing_removed: usize,
    pub duplicates_removed: usize,
    pub conflicts_removed: usize,
}

fn row_key(row: &[f32]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in row {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn bitwise_eq(a: &[f32], b: &[f32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Drops rows with any non-finite feature, then collapses rows whose
/// feature vectors are bitwise identical. A group of identical vectors
/// that carries both labels is removed entirely.
pub fn clean(raw: &Dataset) -> Result<(Dataset, CleanReport)> {
    let mut report = CleanReport::default();
    let x = raw.features();
    let labels = raw.labels();

    let finite: Vec<usize> = (0..raw.n_rows())
        .filter(|&i| x.row(i).iter().all(|v| v.is_finite()))
        .collect();
    report.missing_removed = raw.n_rows() - finite.len();

    // groups of identical feature vectors, in first-occurrence order
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &finite {
        let bucket = buckets.entry(row_key(x.row(i))).or_default();
        match bucket
            .iter()
            .find(|&&g| bitwise_eq(x.row(groups[g][0]), x.row(i)))
        {
            Some(&g) => groups[g].push(i),
            None => {
                bucket.push(groups.len());
                groups.push(vec![i]);
            }
        }
    }

    let mut keep = Vec::with_capacity(groups.len());
    for group in &groups {
        let first = labels[group[0]];
        if group.iter().any(|&i| labels[i] != first) {
            report.conflicts_removed += group.len();
        } else {
            keep.push(group[0]);
            report.duplicates_removed += group.len() - 1;
        }
    }
    keep.sort_unstable();
    if keep.is_empty() {
        return Err(Error::EmptyDataset("cleaning"));
    }
    Ok((raw.select(&keep), report))
}
