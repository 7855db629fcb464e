//! Bagged classification forests with Gini splits.
//!
//! Random Forest: bootstrap rows per tree, best histogram cut over `√d`
//! sampled features per node. Extra Trees: every row in every tree, one
//! uniformly drawn threshold per sampled feature, best of those by Gini.
//! Features that are constant inside a node are skipped and do not count
//! towards the `√d` budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::binning::{midpoint, BinnedMatrix};
use super::split::{best_bin, feature_hist, node_total, BinStat, SplitCriterion};
use super::tree::{Node, Tree};
use super::{check_training_data, ForestModel, HyperParams, LearnerKind};
use crate::data::{Dataset, FeatureMatrix};
use crate::error::Result;
use crate::parallel;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Bootstrap,
    Extra,
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    binned: Option<&'a BinnedMatrix>,
    hp: &'a HyperParams,
    mtry: usize,
    mode: Mode,
}

struct Candidate {
    feature: usize,
    threshold: f32,
    gain: f64,
}

struct TreeState {
    rng: ChaCha8Rng,
    perm: Vec<usize>,
    hist: Vec<BinStat>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn accept(&self, gain: f64, best: &Option<Candidate>) -> bool {
        gain > 0.0 && gain >= self.hp.min_split_gain && best.as_ref().is_none_or(|b| gain > b.gain)
    }

    fn histogram_split(
        &self,
        rows: &[u32],
        total: &BinStat,
        stats: &[(f64, f64)],
        st: &mut TreeState,
    ) -> Option<Candidate> {
        let binned = self.binned.expect("random forest needs bins");
        let d = self.x.n_cols();
        let mut evaluated = 0;
        let mut best = None;
        for k in 0..d {
            let pick = st.rng.random_range(k..d);
            st.perm.swap(k, pick);
            let f = st.perm[k];
            let hist = &mut st.hist[..binned.n_bins(f)];
            feature_hist(binned.column(f), rows, stats, hist);
            if hist.iter().filter(|h| h.n > 0).count() < 2 {
                continue;
            }
            evaluated += 1;
            if let Some((bin, gain, _)) = best_bin(
                hist,
                total,
                SplitCriterion::Gini,
                self.hp.min_samples_leaf as u32,
            ) {
                if self.accept(gain, &best) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: binned.threshold(f, bin),
                        gain,
                    });
                }
            }
            if evaluated >= self.mtry && best.is_some() {
                break;
            }
        }
        best.map(|c| self.centre_threshold(rows, c))
    }

    /// Moves a histogram cut to the midpoint of the gap between the node's
    /// largest left value and smallest right value.
    fn centre_threshold(&self, rows: &[u32], c: Candidate) -> Candidate {
        let (mut left_max, mut right_min) = (f32::NEG_INFINITY, f32::INFINITY);
        for &r in rows {
            let v = self.x.get(r as usize, c.feature);
            if v <= c.threshold {
                left_max = left_max.max(v);
            } else {
                right_min = right_min.min(v);
            }
        }
        Candidate {
            threshold: midpoint(left_max, right_min),
            ..c
        }
    }

    fn random_split(
        &self,
        rows: &[u32],
        total: &BinStat,
        stats: &[(f64, f64)],
        st: &mut TreeState,
    ) -> Option<Candidate> {
        let d = self.x.n_cols();
        let msl = self.hp.min_samples_leaf as u32;
        let mut evaluated = 0;
        let mut best = None;
        for k in 0..d {
            let pick = st.rng.random_range(k..d);
            st.perm.swap(k, pick);
            let f = st.perm[k];
            let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
            for &r in rows {
                let v = self.x.get(r as usize, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo == hi {
                continue;
            }
            evaluated += 1;
            let u: f64 = st.rng.random();
            let mut threshold = (f64::from(lo) + u * (f64::from(hi) - f64::from(lo))) as f32;
            if !(threshold >= lo && threshold < hi) {
                threshold = lo;
            }
            let mut left = BinStat::default();
            for &r in rows {
                if self.x.get(r as usize, f) <= threshold {
                    let (a, b) = stats[r as usize];
                    left.add(a, b);
                }
            }
            if left.n >= msl && total.n - left.n >= msl {
                let gain = SplitCriterion::Gini.gain(&left, &total.minus(&left), total);
                if self.accept(gain, &best) {
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
            if evaluated >= self.mtry && best.is_some() {
                break;
            }
        }
        best
    }

    fn grow(&self, rows: &mut [u32], depth: usize, stats: &[(f64, f64)], st: &mut TreeState) {
        let total = node_total(rows, stats);
        let leaf = Node::Leaf {
            v: SplitCriterion::Gini.leaf_value(&total),
        };
        let pure = total.a == 0.0 || total.a == total.b;
        if pure || depth >= self.hp.max_depth || rows.len() < 2 * self.hp.min_samples_leaf {
            st.nodes.push(leaf);
            return;
        }
        let found = match self.mode {
            Mode::Bootstrap => self.histogram_split(rows, &total, stats, st),
            Mode::Extra => self.random_split(rows, &total, stats, st),
        };
        let Some(c) = found else {
            st.nodes.push(leaf);
            return;
        };

        st.scratch.clear();
        let mut n_left = 0;
        for i in 0..rows.len() {
            let r = rows[i];
            if self.x.get(r as usize, c.feature) <= c.threshold {
                rows[n_left] = r;
                n_left += 1;
            } else {
                st.scratch.push(r);
            }
        }
        rows[n_left..].copy_from_slice(&st.scratch);

        let at = st.nodes.len();
        st.nodes.push(Node::Split {
            f: c.feature as u32,
            t: c.threshold,
            l: at as u32 + 1,
            r: 0,
        });
        let (left, right) = rows.split_at_mut(n_left);
        self.grow(left, depth + 1, stats, st);
        let r = st.nodes.len() as u32;
        if let Node::Split { r: slot, .. } = &mut st.nodes[at] {
            *slot = r;
        }
        self.grow(right, depth + 1, stats, st);
    }

    fn build(&self, labels: &[u8], seed: u64, index: usize) -> Tree {
        let n = self.x.n_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut weights = vec![0u32; n];
        if self.mode == Mode::Bootstrap && self.hp.bootstrap {
            let m = ((self.hp.row_subsample_fraction * n as f64).round() as usize).max(1);
            for _ in 0..m {
                weights[rng.random_range(0..n)] += 1;
            }
        } else {
            weights.fill(1);
        }
        let stats: Vec<(f64, f64)> = weights
            .iter()
            .zip(labels)
            .map(|(&w, &y)| (f64::from(w) * f64::from(y), f64::from(w)))
            .collect();
        let mut rows: Vec<u32> = (0..n as u32).filter(|&i| weights[i as usize] > 0).collect();
        let mut st = TreeState {
            rng,
            perm: (0..self.x.n_cols()).collect(),
            hist: vec![BinStat::default(); self.binned.map_or(0, BinnedMatrix::max_n_bins)],
            scratch: Vec::with_capacity(rows.len()),
            nodes: Vec::new(),
        };
        self.grow(&mut rows, 0, &stats, &mut st);
        Tree::from_nodes(st.nodes).expect("builder emits valid pre-order trees")
    }
}

fn features_per_split(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).max(1)
}

fn fit_bagged(
    train: &Dataset,
    hp: &HyperParams,
    seed: u64,
    kind: LearnerKind,
) -> Result<ForestModel> {
    hp.validate(kind)?;
    check_training_data(train)?;
    let x = train.features();
    let mode = if kind == LearnerKind::ExtraTrees {
        Mode::Extra
    } else {
        Mode::Bootstrap
    };
    let binned = (mode == Mode::Bootstrap).then(|| BinnedMatrix::from_matrix(x, hp.n_bins));
    let builder = TreeBuilder {
        x,
        binned: binned.as_ref(),
        hp,
        mtry: features_per_split(x.n_cols()),
        mode,
    };
    let trees = parallel::map_indexed(hp.n_trees, |t| builder.build(train.labels(), seed, t));
    Ok(ForestModel {
        kind,
        n_features: x.n_cols(),
        base_score: 0.0,
        learning_rate: 1.0,
        seed,
        hyperparams: hp.clone(),
        trees,
    })
}

/// Bootstrap-aggregated Gini trees; `hp.bootstrap = false` trains every
/// tree on the full sample.
pub fn fit_random_forest(train: &Dataset, hp: &HyperParams, seed: u64) -> Result<ForestModel> {
    fit_bagged(train, hp, seed, LearnerKind::RandomForest)
}

pub fn fit_extra_trees(train: &Dataset, hp: &HyperParams, seed: u64) -> Result<ForestModel> {
    fit_bagged(train, hp, seed, LearnerKind::ExtraTrees)
}
