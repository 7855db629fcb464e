use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if let Some(bad) = f.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidSplit(format!(
                "fraction {bad} is outside (0, 1)"
            )));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!(
                "fractions sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [
            self.train_fraction,
            self.validation_fraction,
            self.test_fraction,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub partition_a: Dataset,
    pub partition_b: Dataset,
}

/// Largest-remainder allocation of `n` rows over `fractions`.
///
/// Each subset gets `floor(f * n)`; leftover rows go to the largest
/// fractional parts, with equal parts ordered by a cursor that carries over
/// between classes so that one class's leftovers do not always land in the
/// same subset.
fn allocate(n: usize, fractions: &[f64], cursor: &mut usize) -> Vec<usize> {
    let m = fractions.len();
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    while counts.iter().sum::<usize>() > n {
        let j = counts.iter().rposition(|&c| c > 0).unwrap();
        counts[j] -= 1;
    }
    let remainder = n - counts.iter().sum::<usize>();
    if remainder == 0 {
        return counts;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&j| {
        let frac = quotas[j] - counts[j] as f64;
        (Reverse((frac * 1e9).round() as i64), (j + m - *cursor) % m)
    });
    for &j in &order[..remainder] {
        counts[j] += 1;
    }
    *cursor = (order[remainder - 1] + 1) % m;
    counts
}

/// Row indices per subset, each list ascending.
fn assign(data: &Dataset, fractions: &[f64], seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cursor = 0usize;
    let mut subsets = vec![Vec::new(); fractions.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..data.n_rows())
            .filter(|&i| data.labels()[i] == class)
            .collect();
        members.sort_by_key(|&i| data.row_ids()[i]);
        members.shuffle(&mut rng);
        let counts = allocate(members.len(), fractions, &mut cursor);
        let mut start = 0;
        for (subset, count) in subsets.iter_mut().zip(counts) {
            subset.extend_from_slice(&members[start..start + count]);
            start += count;
        }
    }
    for s in &mut subsets {
        s.sort_unstable();
    }
    subsets
}

/// Stratified two-way split with equal fractions; the halves used to train
/// the two ensemble members.
pub fn partition_halves(train: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let parts = assign(train, &[0.5, 0.5], seed);
    if parts.iter().any(Vec::is_empty) {
        return Err(Error::StratificationInfeasible(format!(
            "{} training rows cannot fill two partitions",
            train.n_rows()
        )));
    }
    Ok((train.select(&parts[0]), train.select(&parts[1])))
}

/// Seeded stratified train/validation/test split; the training split is
/// further halved (seed + 1) into the two partitions.
pub fn stratified_split(data: &Dataset, spec: &SplitSpec) -> Result<SplitResult> {
    spec.validate()?;
    let pos = data.n_positive();
    let neg = data.n_rows() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::StratificationInfeasible(format!(
            "need at least 2 rows per class, have {neg} benign and {pos} malicious"
        )));
    }
    let subsets = assign(data, &spec.fractions(), spec.seed);
    const NAMES: [&str; 3] = ["train", "validation", "test"];
    if let Some(j) = subsets.iter().position(Vec::is_empty) {
        return Err(Error::StratificationInfeasible(format!(
            "{} split would be empty",
            NAMES[j]
        )));
    }
    let train = data.select(&subsets[0]);
    let (partition_a, partition_b) = partition_halves(&train, spec.seed.wrapping_add(1))?;
    Ok(SplitResult {
        validation: data.select(&subsets[1]),
        test: data.select(&subsets[2]),
        train,
        partition_a,
        partition_b,
    })
}
