//! Per-feature quantile binning of a training matrix.
//!
//! Bin `b` of feature `j` holds values in `(cuts[b-1], cuts[b]]`, so for any
//! value `x`, `bin(x) <= b` exactly when `x <= cuts[b]`. Trees trained on
//! bins therefore route raw values identically through `x <= threshold`.

use crate::data::FeatureMatrix;
use crate::parallel;

pub const MAX_BINS: usize = 256;

#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    cuts: Vec<Vec<f32>>,
    // column-major
    bins: Vec<u8>,
}

/// A cut strictly between `lo < hi` that sends `lo` left and `hi` right.
pub(crate) fn midpoint(lo: f32, hi: f32) -> f32 {
    let mid = ((f64::from(lo) + f64::from(hi)) * 0.5) as f32;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Equal-frequency cut points. With at most `max_bins` distinct values every
/// value gets its own bin.
fn compute_cuts(mut values: Vec<f32>, max_bins: usize) -> Vec<f32> {
    values.sort_unstable_by(f32::total_cmp);
    let n = values.len();
    let mut distinct: Vec<(f32, usize)> = Vec::new();
    for v in values {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= max_bins {
        return distinct
            .windows(2)
            .map(|w| midpoint(w[0].0, w[1].0))
            .collect();
    }
    let mut cuts = Vec::with_capacity(max_bins - 1);
    let mut seen = 0usize;
    let mut next = 1usize;
    for k in 0..distinct.len() - 1 {
        seen += distinct[k].1;
        if seen as f64 >= next as f64 * n as f64 / max_bins as f64 {
            cuts.push(midpoint(distinct[k].0, distinct[k + 1].0));
            if cuts.len() == max_bins - 1 {
                break;
            }
            while (next as f64) * (n as f64) / (max_bins as f64) <= seen as f64 {
                next += 1;
            }
        }
    }
    cuts
}

#[inline]
pub fn bin_of(cuts: &[f32], x: f32) -> usize {
    cuts.partition_point(|&c| c < x)
}

impl BinnedMatrix {
    pub fn from_matrix(x: &FeatureMatrix, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, MAX_BINS);
        let n = x.n_rows();
        let per_feature = parallel::map_indexed(x.n_cols(), |j| {
            let col = x.column(j);
            let cuts = compute_cuts(col.clone(), max_bins);
            let bins: Vec<u8> = col.iter().map(|&v| bin_of(&cuts, v) as u8).collect();
            (cuts, bins)
        });
        let mut cuts = Vec::with_capacity(x.n_cols());
        let mut bins = Vec::with_capacity(n * x.n_cols());
        for (c, b) in per_feature {
            cuts.push(c);
            bins.extend_from_slice(&b);
        }
        Self {
            n_rows: n,
            cuts,
            bins,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cuts.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[u8] {
        &self.bins[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn n_bins(&self, j: usize) -> usize {
        self.cuts[j].len() + 1
    }

    pub fn max_n_bins(&self) -> usize {
        (0..self.n_cols())
            .map(|j| self.n_bins(j))
            .max()
            .unwrap_or(1)
    }

    #[inline]
    pub fn threshold(&self, j: usize, bin: usize) -> f32 {
        self.cuts[j][bin]
    }

    #[inline]
    pub fn get(&self, row: usize, j: usize) -> usize {
        self.bins[j * self.n_rows + row] as usize
    }
}
