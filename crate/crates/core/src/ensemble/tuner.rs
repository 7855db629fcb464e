//! Seeded uniform random search over learner hyperparameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit, HyperParams, LearnerKind};
use crate::parallel;

/// Integer range `{"min": a, "max": b}` (inclusive) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntSpace {
    Range { min: usize, max: usize },
    Choices(Vec<usize>),
}

impl IntSpace {
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            IntSpace::Range { min, max } => rng.random_range(*min..=*max),
            IntSpace::Choices(c) => c[rng.random_range(0..c.len())],
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            IntSpace::Range { min, max } => min <= max,
            IntSpace::Choices(c) => !c.is_empty(),
        }
    }
}

/// Log-uniform range `{"log_min": a, "log_max": b}` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FloatSpace {
    LogUniform { log_min: f64, log_max: f64 },
    Choices(Vec<f64>),
}

impl FloatSpace {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            FloatSpace::LogUniform { log_min, log_max } => {
                let u: f64 = rng.random();
                (log_min.ln() + u * (log_max.ln() - log_min.ln()))
                    .exp()
                    .clamp(*log_min, *log_max)
            }
            FloatSpace::Choices(c) => c[rng.random_range(0..c.len())],
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            FloatSpace::LogUniform { log_min, log_max } => *log_min > 0.0 && log_min <= log_max,
            FloatSpace::Choices(c) => !c.is_empty(),
        }
    }
}

/// Dimensions left as `None` keep the base hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<IntSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<IntSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leaves: Option<IntSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<FloatSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples_leaf: Option<IntSpace>,
}

impl SearchSpace {
    /// 100..=500 trees, 5..=50 rows per leaf, depth 4..=10 (or 15..=127
    /// leaves for the leaf-wise preset), log-uniform learning rate in
    /// [0.01, 0.3] for the boosted presets.
    pub fn default_for(kind: LearnerKind) -> SearchSpace {
        let leafwise = kind == LearnerKind::GbdtB;
        SearchSpace {
            n_trees: Some(IntSpace::Range { min: 100, max: 500 }),
            max_depth: (!leafwise).then_some(IntSpace::Range { min: 4, max: 10 }),
            max_leaves: leafwise.then_some(IntSpace::Range { min: 15, max: 127 }),
            learning_rate: kind.is_boosted().then_some(FloatSpace::LogUniform {
                log_min: 0.01,
                log_max: 0.3,
            }),
            min_samples_leaf: Some(IntSpace::Range { min: 5, max: 50 }),
        }
    }

    fn validate(&self) -> Result<()> {
        let ints = [
            &self.n_trees,
            &self.max_depth,
            &self.max_leaves,
            &self.min_samples_leaf,
        ];
        if ints
            .iter()
            .any(|s| s.as_ref().is_some_and(|s| !s.is_valid()))
            || self.learning_rate.as_ref().is_some_and(|s| !s.is_valid())
        {
            return Err(Error::Config(
                "tuner search space has an empty range".into(),
            ));
        }
        Ok(())
    }

    /// Draws one vector; dimensions are sampled in declaration order.
    pub fn sample(&self, base: &HyperParams, rng: &mut ChaCha8Rng) -> HyperParams {
        let mut hp = base.clone();
        if let Some(s) = &self.n_trees {
            hp.n_trees = s.sample(rng);
        }
        if let Some(s) = &self.max_depth {
            hp.max_depth = s.sample(rng);
        }
        if let Some(s) = &self.max_leaves {
            hp.max_leaves = s.sample(rng);
        }
        if let Some(s) = &self.learning_rate {
            hp.learning_rate = s.sample(rng);
        }
        if let Some(s) = &self.min_samples_leaf {
            hp.min_samples_leaf = s.sample(rng);
        }
        hp
    }
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    pub seed: u64,
    /// Defaults to [`SearchSpace::default_for`] the learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_space: Option<SearchSpace>,
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("tuner n_trials must be at least 1".into()));
        }
        self.search_space
            .as_ref()
            .map_or(Ok(()), SearchSpace::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub hyperparams: HyperParams,
    /// Holdout accuracy; `None` when fitting failed.
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_trial: usize,
    pub best: HyperParams,
    pub trials: Vec<Trial>,
}

fn run_trial(
    kind: LearnerKind,
    partition: &Dataset,
    holdout: &Dataset,
    hp: &HyperParams,
    seed: u64,
) -> Result<f64> {
    hp.validate(kind)?;
    let model = fit(kind, partition, hp, seed)?;
    let p = model.predict_proba(holdout.features())?;
    let correct = p
        .iter()
        .zip(holdout.labels())
        .filter(|(p, &y)| u8::from(**p >= 0.5) == y)
        .count();
    Ok(correct as f64 / holdout.n_rows() as f64)
}

/// Trial `t` samples and fits with seed `cfg.seed + t`, so the outcome does
/// not depend on the order trials run in. The best holdout accuracy wins;
/// ties go to the earliest trial.
pub fn tune(
    kind: LearnerKind,
    partition: &Dataset,
    holdout: &Dataset,
    cfg: &TunerConfig,
    base: &HyperParams,
) -> Result<TuneResult> {
    cfg.validate()?;
    if holdout.is_empty() {
        return Err(Error::EmptyDataset("tuning holdout"));
    }
    let space = cfg
        .search_space
        .clone()
        .unwrap_or_else(|| SearchSpace::default_for(kind));
    let trials = parallel::map_indexed(cfg.n_trials, |t| {
        let seed = cfg.seed.wrapping_add(t as u64);
        let hyperparams = space.sample(base, &mut ChaCha8Rng::seed_from_u64(seed));
        let outcome = run_trial(kind, partition, holdout, &hyperparams, seed);
        if let Err(e) = &outcome {
            log::warn!("tuner trial {t} failed: {e}");
        }
        Trial {
            index: t,
            seed,
            hyperparams,
            score: outcome.as_ref().ok().copied(),
            error: outcome.err().map(|e| e.to_string()),
        }
    });
    let mut best: Option<&Trial> = None;
    for t in &trials {
        if let Some(s) = t.score {
            if best.is_none_or(|b| s > b.score.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(t);
            }
        }
    }
    let best = best.ok_or(Error::AllTrialsFailed(cfg.n_trials))?;
    Ok(TuneResult {
        best_trial: best.index,
        best: best.hyperparams.clone(),
        trials: trials.clone(),
    })
}
