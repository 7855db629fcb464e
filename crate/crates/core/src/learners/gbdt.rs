//! Gradient boosting on logistic loss with histogram-based trees.
//!
//! Each round fits a tree to the gradients `p - y` and hessians
//! `p (1 - p)` of the current scores. Split gain is
//! `0.5 * (GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ))` and leaf weights are
//! `-G / (H + λ)` with `λ = 1`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::split::{best_bin, feature_hist, node_total, BinStat, SplitCriterion};
use super::tree::{arena_to_tree, ArenaNode};
use super::{check_training_data, loss, ForestModel, HyperParams, LearnerKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::parallel;

pub const L2_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// Split every open node, one depth level at a time.
    LevelWise,
    /// Always split the open leaf with the largest gain.
    LeafWise,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    feature: usize,
    bin: usize,
    gain: f64,
}

struct OpenNode {
    id: usize,
    start: usize,
    end: usize,
    depth: usize,
    hist: Vec<BinStat>,
    best: Best,
}

pub(crate) struct Grower<'a> {
    pub binned: &'a BinnedMatrix,
    pub criterion: SplitCriterion,
    pub policy: GrowthPolicy,
    pub max_depth: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: u32,
    pub min_split_gain: f64,
}

impl Grower<'_> {
    fn stride(&self) -> usize {
        self.binned.max_n_bins()
    }

    fn build_hist(&self, rows: &[u32], stats: &[(f64, f64)], allowed: &[bool]) -> Vec<BinStat> {
        let stride = self.stride();
        let mut hist = vec![BinStat::default(); self.binned.n_cols() * stride];
        parallel::for_each_chunk_mut(&mut hist, stride, |j, chunk| {
            if allowed[j] {
                let nb = self.binned.n_bins(j);
                feature_hist(self.binned.column(j), rows, stats, &mut chunk[..nb]);
            }
        });
        hist
    }

    fn find_best(&self, hist: &[BinStat], total: &BinStat, allowed: &[bool]) -> Option<Best> {
        let stride = self.stride();
        let mut best: Option<Best> = None;
        for (j, _) in allowed.iter().enumerate().filter(|(_, a)| **a) {
            let h = &hist[j * stride..j * stride + self.binned.n_bins(j)];
            if let Some((bin, gain, _)) = best_bin(h, total, self.criterion, self.min_samples_leaf)
            {
                let accept = gain > 0.0 && gain >= self.min_split_gain;
                if accept && best.is_none_or(|b| gain > b.gain) {
                    best = Some(Best {
                        feature: j,
                        bin,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn splittable(&self, n: usize, depth: usize) -> bool {
        depth < self.max_depth && n >= 2 * self.min_samples_leaf as usize
    }

    /// Grows one tree over `rows`, reordering the slice in place. Split
    /// gains are added to `importance` per feature.
    pub fn grow(
        &self,
        rows: &mut [u32],
        stats: &[(f64, f64)],
        allowed: &[bool],
        importance: &mut [f64],
    ) -> Vec<ArenaNode> {
        let root_total = node_total(rows, stats);
        let mut arena = vec![ArenaNode::Leaf(self.criterion.leaf_value(&root_total))];
        let mut open: Vec<OpenNode> = Vec::new();
        if self.splittable(rows.len(), 0) {
            let hist = self.build_hist(rows, stats, allowed);
            if let Some(best) = self.find_best(&hist, &root_total, allowed) {
                open.push(OpenNode {
                    id: 0,
                    start: 0,
                    end: rows.len(),
                    depth: 0,
                    hist,
                    best,
                });
            }
        }
        let mut n_leaves = 1usize;
        let mut scratch: Vec<u32> = Vec::with_capacity(rows.len());
        let stride = self.stride();

        while !open.is_empty() && n_leaves < self.max_leaves {
            let pick = match self.policy {
                GrowthPolicy::LevelWise => 0,
                GrowthPolicy::LeafWise => {
                    let mut at = 0;
                    for (i, o) in open.iter().enumerate() {
                        if o.best.gain > open[at].best.gain {
                            at = i;
                        }
                    }
                    at
                }
            };
            let node = open.remove(pick);
            let Best { feature, bin, gain } = node.best;
            importance[feature] += gain;

            // stable partition keeps rows ascending inside each child
            let column = self.binned.column(feature);
            let span = &mut rows[node.start..node.end];
            scratch.clear();
            let mut n_left = 0;
            for i in 0..span.len() {
                let r = span[i];
                if column[r as usize] as usize <= bin {
                    span[n_left] = r;
                    n_left += 1;
                } else {
                    scratch.push(r);
                }
            }
            span[n_left..].copy_from_slice(&scratch);
            let mid = node.start + n_left;

            let left_total = node_total(&rows[node.start..mid], stats);
            let right_total = node_total(&rows[mid..node.end], stats);
            let left_id = arena.len();
            arena.push(ArenaNode::Leaf(self.criterion.leaf_value(&left_total)));
            arena.push(ArenaNode::Leaf(self.criterion.leaf_value(&right_total)));
            arena[node.id] = ArenaNode::Split {
                feature,
                bin,
                threshold: self.binned.threshold(feature, bin),
                left: left_id,
                right: left_id + 1,
            };
            n_leaves += 1;

            let depth = node.depth + 1;
            let children = [
                (left_id, node.start, mid, left_total),
                (left_id + 1, mid, node.end, right_total),
            ];
            let can: Vec<bool> = children
                .iter()
                .map(|c| self.splittable(c.2 - c.1, depth))
                .collect();
            if !can[0] && !can[1] {
                continue;
            }
            // histogram of the smaller child by scan, the larger by subtraction
            let small = usize::from(children[1].2 - children[1].1 < children[0].2 - children[0].1);
            let small_hist = {
                let (_, s, e, _) = children[small];
                self.build_hist(&rows[s..e], stats, allowed)
            };
            let mut large_hist = node.hist;
            for j in 0..self.binned.n_cols() {
                if allowed[j] {
                    for b in 0..self.binned.n_bins(j) {
                        large_hist[j * stride + b] =
                            large_hist[j * stride + b].minus(&small_hist[j * stride + b]);
                    }
                }
            }
            let mut hists = [None, None];
            hists[small] = Some(small_hist);
            hists[1 - small] = Some(large_hist);
            for (k, (id, s, e, total)) in children.into_iter().enumerate() {
                if !can[k] {
                    continue;
                }
                let hist = hists[k].take().unwrap();
                if let Some(best) = self.find_best(&hist, &total, allowed) {
                    open.push(OpenNode {
                        id,
                        start: s,
                        end: e,
                        depth,
                        hist,
                        best,
                    });
                }
            }
        }
        arena
    }
}

pub(crate) fn route_binned(arena: &[ArenaNode], binned: &BinnedMatrix, row: usize) -> f64 {
    let mut i = 0;
    loop {
        match arena[i] {
            ArenaNode::Leaf(v) => return v,
            ArenaNode::Split {
                feature,
                bin,
                left,
                right,
                ..
            } => {
                i = if binned.get(row, feature) <= bin {
                    left
                } else {
                    right
                };
            }
        }
    }
}

fn sample_mask(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<usize> {
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut picked = index::sample(rng, n, m).into_vec();
    picked.sort_unstable();
    picked
}

struct Boosted {
    model: ForestModel,
    importance: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    training_scores: Vec<f64>,
}

fn boost(train: &Dataset, hp: &HyperParams, seed: u64, kind: LearnerKind) -> Result<Boosted> {
    let policy = match kind {
        LearnerKind::GbdtA => GrowthPolicy::LevelWise,
        LearnerKind::GbdtB => GrowthPolicy::LeafWise,
        other => {
            return Err(Error::InvalidParameter(format!(
                "{} is not a boosting preset",
                other.name()
            )))
        }
    };
    hp.validate(kind)?;
    check_training_data(train)?;
    let x = train.features();
    let (n, d) = (x.n_rows(), x.n_cols());
    let labels = train.labels();
    let pos = train.n_positive() as f64;
    let base_score = (pos / (n as f64 - pos)).ln();

    let binned = BinnedMatrix::from_matrix(x, hp.n_bins);
    let grower = Grower {
        binned: &binned,
        criterion: SplitCriterion::Newton { lambda: L2_LAMBDA },
        policy,
        max_depth: hp.max_depth,
        max_leaves: hp.max_leaves,
        min_samples_leaf: hp.min_samples_leaf as u32,
        min_split_gain: hp.min_split_gain,
    };

    let mut scores = vec![base_score; n];
    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(hp.n_trees);
    for t in 0..hp.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let stats: Vec<(f64, f64)> =
            parallel::map_indexed(n, |i| loss::grad_hess(scores[i], f64::from(labels[i])));
        let mut rows: Vec<u32> = if hp.row_subsample_fraction < 1.0 {
            sample_mask(&mut rng, n, hp.row_subsample_fraction)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        } else {
            (0..n as u32).collect()
        };
        let allowed: Vec<bool> = if hp.feature_subsample_fraction < 1.0 {
            let mut mask = vec![false; d];
            for j in sample_mask(&mut rng, d, hp.feature_subsample_fraction) {
                mask[j] = true;
            }
            mask
        } else {
            vec![true; d]
        };

        let arena = grower.grow(&mut rows, &stats, &allowed, &mut importance);
        if arena.len() == 1 {
            log::debug!("boosting stopped after {t} trees: no split improves the loss");
            break;
        }
        for (i, s) in scores.iter_mut().enumerate() {
            *s += hp.learning_rate * route_binned(&arena, &binned, i);
        }
        trees.push(arena_to_tree(&arena));
    }

    let model = ForestModel {
        kind,
        n_features: d,
        base_score,
        learning_rate: hp.learning_rate,
        seed,
        hyperparams: hp.clone(),
        trees,
    };
    Ok(Boosted {
        model,
        importance,
        training_scores: scores,
    })
}

/// Fits a boosted model and also returns the total split gain per feature.
pub fn fit_gbdt_with_importance(
    train: &Dataset,
    hp: &HyperParams,
    seed: u64,
    kind: LearnerKind,
) -> Result<(ForestModel, Vec<f64>)> {
    boost(train, hp, seed, kind).map(|b| (b.model, b.importance))
}

pub fn fit_gbdt(
    train: &Dataset,
    hp: &HyperParams,
    seed: u64,
    kind: LearnerKind,
) -> Result<ForestModel> {
    fit_gbdt_with_importance(train, hp, seed, kind).map(|(m, _)| m)
}
