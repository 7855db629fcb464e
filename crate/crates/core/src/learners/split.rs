//! Histogram accumulation and best-split search.

use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use crate::data::FeatureMatrix;

/// Per-bin sums. For boosting `a` is the gradient and `b` the hessian; for
/// bagged classification trees `a` is the weighted positive count and `b`
/// the total weight. `n` counts distinct rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStat {
    pub a: f64,
    pub b: f64,
    pub n: u32,
}

impl BinStat {
    #[inline]
    pub fn add(&mut self, a: f64, b: f64) {
        self.a += a;
        self.b += b;
        self.n += 1;
    }

    #[inline]
    pub fn merge(&mut self, o: &BinStat) {
        self.a += o.a;
        self.b += o.b;
        self.n += o.n;
    }

    #[inline]
    pub fn minus(&self, o: &BinStat) -> BinStat {
        BinStat {
            a: self.a - o.a,
            b: self.b - o.b,
            n: self.n - o.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// Second-order boosting gain with L2 penalty `lambda` on leaf weights.
    Newton { lambda: f64 },
    /// Decrease in weight-scaled Gini impurity.
    Gini,
}

impl SplitCriterion {
    #[inline]
    fn score(&self, s: &BinStat) -> f64 {
        match *self {
            SplitCriterion::Newton { lambda } => s.a * s.a / (s.b + lambda),
            // W * gini = 2 p (W - p) / W
            SplitCriterion::Gini => {
                if s.b > 0.0 {
                    2.0 * s.a * (s.b - s.a) / s.b
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn gain(&self, left: &BinStat, right: &BinStat, parent: &BinStat) -> f64 {
        match self {
            SplitCriterion::Newton { .. } => {
                0.5 * (self.score(left) + self.score(right) - self.score(parent))
            }
            SplitCriterion::Gini => self.score(parent) - self.score(left) - self.score(right),
        }
    }

    /// Leaf output: Newton step for boosting, positive fraction for Gini.
    #[inline]
    pub fn leaf_value(&self, s: &BinStat) -> f64 {
        match *self {
            SplitCriterion::Newton { lambda } => -s.a / (s.b + lambda),
            SplitCriterion::Gini => {
                if s.b > 0.0 {
                    s.a / s.b
                } else {
                    0.5
                }
            }
        }
    }
}

#[inline]
pub(crate) fn node_total(rows: &[u32], stats: &[(f64, f64)]) -> BinStat {
    let mut t = BinStat::default();
    for &r in rows {
        let (a, b) = stats[r as usize];
        t.add(a, b);
    }
    t
}

#[inline]
pub(crate) fn feature_hist(column: &[u8], rows: &[u32], stats: &[(f64, f64)], out: &mut [BinStat]) {
    out.fill(BinStat::default());
    for &r in rows {
        let (a, b) = stats[r as usize];
        out[column[r as usize] as usize].add(a, b);
    }
}

/// Best cut of one feature histogram: returns `(bin, gain)` where rows with
/// `bin <= b` go left. Ties keep the lowest bin.
#[inline]
pub(crate) fn best_bin(
    hist: &[BinStat],
    total: &BinStat,
    criterion: SplitCriterion,
    min_samples_leaf: u32,
) -> Option<(usize, f64, BinStat)> {
    let mut left = BinStat::default();
    let mut best: Option<(usize, f64, BinStat)> = None;
    for (bin, h) in hist[..hist.len().saturating_sub(1)].iter().enumerate() {
        left.merge(h);
        if h.n == 0 || left.n < min_samples_leaf {
            continue;
        }
        if total.n - left.n < min_samples_leaf {
            break;
        }
        let right = total.minus(&left);
        let gain = criterion.gain(&left, &right, total);
        if best.is_none_or(|(_, g, _)| gain > g) {
            best = Some((bin, gain, left));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f32,
    pub gain: f64,
}

/// Best single split over all rows of `x`, searched through binned
/// histograms. `stats[i]` is the `(a, b)` pair of row `i` as described on
/// [`BinStat`]. Ties go to the lowest feature, then the lowest cut.
pub fn find_best_split(
    x: &FeatureMatrix,
    stats: &[(f64, f64)],
    criterion: SplitCriterion,
    min_samples_leaf: usize,
    n_bins: usize,
) -> Option<SplitCandidate> {
    let binned = BinnedMatrix::from_matrix(x, n_bins);
    let rows: Vec<u32> = (0..x.n_rows() as u32).collect();
    let total = node_total(&rows, stats);
    let mut hist = vec![BinStat::default(); binned.max_n_bins()];
    let mut best: Option<SplitCandidate> = None;
    for j in 0..x.n_cols() {
        let h = &mut hist[..binned.n_bins(j)];
        feature_hist(binned.column(j), &rows, stats, h);
        if let Some((bin, gain, _)) = best_bin(h, &total, criterion, min_samples_leaf as u32) {
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: j,
                    threshold: binned.threshold(j, bin),
                    gain,
                });
            }
        }
    }
    best
}
