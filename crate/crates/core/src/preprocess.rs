//! Two-stage normalization: robust centering by median / IQR, then min-max
//! rescaling to `[0, 1]` of the robust-scaled training data.
//!
//! Statistics are computed in `f64` and stored as `f32`. The min-max stage
//! is fitted on exactly the `f32` values the robust stage emits, so every
//! training value lands in `[0, 1]` without clipping.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::parallel;

const ROWS_PER_CHUNK: usize = 512;

/// Quantile by linear interpolation between order statistics at
/// position `p * (n - 1)`. `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustScalerParams {
    pub medians: Vec<f32>,
    pub iqrs: Vec<f32>,
}

impl RobustScalerParams {
    pub fn fit(x: &FeatureMatrix) -> Result<Self> {
        if x.n_rows() == 0 {
            return Err(Error::EmptyDataset("scaler fit"));
        }
        let stats = parallel::map_indexed(x.n_cols(), |j| {
            let mut col: Vec<f64> = x.rows().map(|r| f64::from(r[j])).collect();
            col.sort_unstable_by(f64::total_cmp);
            let q1 = quantile_sorted(&col, 0.25);
            let q3 = quantile_sorted(&col, 0.75);
            (
                quantile_sorted(&col, 0.5) as f32,
                ((q3 - q1).max(0.0)) as f32,
            )
        });
        let (medians, iqrs) = stats.into_iter().unzip();
        Ok(Self { medians, iqrs })
    }

    /// Zero IQR divides by one: the feature is centred but not rescaled.
    #[inline]
    pub fn apply(&self, j: usize, x: f32) -> f32 {
        let iqr = self.iqrs[j];
        let denom = if iqr == 0.0 { 1.0 } else { f64::from(iqr) };
        ((f64::from(x) - f64::from(self.medians[j])) / denom) as f32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScalerParams {
    pub mins: Vec<f32>,
    pub maxes: Vec<f32>,
}

impl MinMaxScalerParams {
    pub fn fit(x: &FeatureMatrix) -> Result<Self> {
        if x.n_rows() == 0 {
            return Err(Error::EmptyDataset("scaler fit"));
        }
        let d = x.n_cols();
        let mut mins = vec![f32::INFINITY; d];
        let mut maxes = vec![f32::NEG_INFINITY; d];
        for row in x.rows() {
            for j in 0..d {
                mins[j] = mins[j].min(row[j]);
                maxes[j] = maxes[j].max(row[j]);
            }
        }
        Ok(Self { mins, maxes })
    }

    /// A feature with `max == min` maps to 0. Out-of-range inputs are not
    /// clipped.
    #[inline]
    pub fn apply(&self, j: usize, x: f32) -> f32 {
        let (lo, hi) = (self.mins[j], self.maxes[j]);
        if hi == lo {
            return 0.0;
        }
        ((f64::from(x) - f64::from(lo)) / (f64::from(hi) - f64::from(lo))) as f32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScalerChainRepr", try_from = "ScalerChainRepr")]
pub struct ScalerChain {
    pub robust: RobustScalerParams,
    pub minmax: MinMaxScalerParams,
    pub feature_count: usize,
}

/// Fits the robust stage on `train`, then the min-max stage on the
/// robust-scaled training matrix. Reads nothing but `train`.
pub fn fit_scaler_chain(train: &Dataset) -> Result<ScalerChain> {
    let x = train.features();
    let robust = RobustScalerParams::fit(x)?;
    let d = x.n_cols();
    let mut staged = x.values().to_vec();
    for row in staged.chunks_exact_mut(d) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = robust.apply(j, *v);
        }
    }
    let staged = FeatureMatrix::new(staged, x.n_rows(), d)?;
    let minmax = MinMaxScalerParams::fit(&staged)?;
    Ok(ScalerChain {
        robust,
        minmax,
        feature_count: d,
    })
}

impl ScalerChain {
    #[inline]
    pub fn apply(&self, j: usize, x: f32) -> f32 {
        self.minmax.apply(j, self.robust.apply(j, x))
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.expect_cols(self.feature_count)?;
        let d = self.feature_count;
        let mut out = x.values().to_vec();
        parallel::for_each_chunk_mut(&mut out, d * ROWS_PER_CHUNK, |_, chunk| {
            for row in chunk.chunks_exact_mut(d) {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = self.apply(j, *v);
                }
            }
        });
        FeatureMatrix::new(out, x.n_rows(), d)
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        data.with_features(self.transform_matrix(data.features())?)
    }
}

#[derive(Serialize, Deserialize)]
struct ScalerChainRepr {
    feature_count: usize,
    medians: Vec<f64>,
    iqrs: Vec<f64>,
    mins: Vec<f64>,
    maxes: Vec<f64>,
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

fn narrow(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

impl From<ScalerChain> for ScalerChainRepr {
    fn from(c: ScalerChain) -> Self {
        ScalerChainRepr {
            feature_count: c.feature_count,
            medians: widen(&c.robust.medians),
            iqrs: widen(&c.robust.iqrs),
            mins: widen(&c.minmax.mins),
            maxes: widen(&c.minmax.maxes),
        }
    }
}

impl TryFrom<ScalerChainRepr> for ScalerChain {
    type Error = String;

    fn try_from(r: ScalerChainRepr) -> Result<Self, String> {
        let d = r.feature_count;
        if [&r.medians, &r.iqrs, &r.mins, &r.maxes]
            .iter()
            .any(|v| v.len() != d)
        {
            return Err(format!("scaler arrays must all have length {d}"));
        }
        if r.iqrs.iter().any(|&q| q < 0.0) {
            return Err("negative IQR".into());
        }
        if r.mins.iter().zip(&r.maxes).any(|(lo, hi)| lo > hi) {
            return Err("min exceeds max".into());
        }
        Ok(ScalerChain {
            robust: RobustScalerParams {
                medians: narrow(&r.medians),
                iqrs: narrow(&r.iqrs),
            },
            minmax: MinMaxScalerParams {
                mins: narrow(&r.mins),
                maxes: narrow(&r.maxes),
            },
            feature_count: d,
        })
    }
}
