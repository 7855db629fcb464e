//! End-to-end training: load, clean, split, scale, reduce, partition,
//! optionally tune, train two instances, search the vote weight, evaluate
//! and persist a model bundle.

mod bundle;
mod config;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use bundle::{
    Manifest, ModelBundle, PhaseMetrics, Seeds, SplitSizes, StageTelemetry, Telemetry, VoteRecord,
    CHECKSUM_FILE, FORMAT_VERSION, MANIFEST_FILE,
};
pub use config::{
    EnsembleConfig, InputSpec, LearnerConfig, LoadedConfig, PipelineConfig, ReductionConfig,
    SplitConfig, SCHEMA_VERSION,
};

use crate::data::{
    clean, load_dataset, partition_halves, peek_feature_count, stratified_split, write_dataset,
    DataFormat, Dataset,
};
use crate::ensemble::{search_weights, train_ensemble_with, tune, TunerConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::preprocess::fit_scaler_chain;
use crate::reduce::{apply_reducer, Reducer, ReductionMethod, SELECTOR_SEED};

/// Offset between the tuner seeds of the two instances.
pub const SECOND_TUNER_OFFSET: u64 = 1_000_000;

/// Stage names in execution order; `tune` appears only when configured.
pub const STAGES: [&str; 12] = [
    "load",
    "clean",
    "split",
    "fit_scalers",
    "transform",
    "fit_reducer",
    "reduce",
    "partition",
    "tune",
    "train",
    "vote",
    "evaluate",
];

struct Recorder {
    started: Instant,
    stages: Vec<StageTelemetry>,
}

impl Recorder {
    fn stage<T>(
        &mut self,
        name: &'static str,
        shape: (usize, usize),
        f: impl FnOnce() -> Result<T>,
    ) -> Result<T> {
        self.stage_sized(name, f, |_| shape)
    }

    /// Like `stage`, for stages whose input shape is only known from their output.
    fn stage_sized<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce() -> Result<T>,
        shape_of: impl FnOnce(&T) -> (usize, usize),
    ) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| e.at_stage(name))?;
        let shape = shape_of(&out);
        let wall_ms = t.elapsed().as_secs_f64() * 1e3;
        log::info!("stage {name}: {wall_ms:.1} ms over {}x{}", shape.0, shape.1);
        self.stages.push(StageTelemetry {
            stage: name.to_string(),
            wall_ms,
            rows: shape.0,
            cols: shape.1,
        });
        Ok(out)
    }
}

fn shape(d: &Dataset) -> (usize, usize) {
    (d.n_rows(), d.feature_count())
}

fn shape_sum(parts: &[&Dataset]) -> (usize, usize) {
    (
        parts.iter().map(|d| d.n_rows()).sum(),
        parts.first().map_or(0, |d| d.feature_count()),
    )
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn without_roc(mut m: MetricsReport) -> MetricsReport {
    m.roc_points.clear();
    m
}

fn load_inputs(config: &PipelineConfig) -> Result<Dataset> {
    let mut combined: Option<Dataset> = None;
    for input in &config.inputs {
        let part = load_dataset(&input.path, input.format())?;
        combined = Some(match combined {
            None => part,
            Some(acc) => acc.concat(&part)?,
        });
    }
    combined.ok_or(Error::EmptyDataset("loading"))
}

/// Runs every stage in memory and returns the bundle without writing it.
/// Only the optional test-split export touches the filesystem.
pub fn train_bundle(loaded: &LoadedConfig) -> Result<ModelBundle> {
    let config = &loaded.config;
    config.validate()?;
    let hp = config.learner.resolved_hyperparams()?;
    let kind = config.learner.kind;

    let mut dims = Vec::with_capacity(config.inputs.len());
    for input in &config.inputs {
        dims.push(peek_feature_count(&input.path, input.format()).map_err(|e| e.at_stage("load"))?);
    }
    if let Some(&d) = dims.iter().find(|&&d| d != dims[0]) {
        return Err(Error::DimensionMismatch {
            expected: dims[0],
            found: d,
        }
        .at_stage("load"));
    }
    config.validate_dims(dims[0])?;

    let mut rec = Recorder {
        started: Instant::now(),
        stages: Vec::new(),
    };
    let raw = rec.stage_sized("load", || load_inputs(config), shape)?;
    let (cleaned, clean_report) = rec.stage("clean", shape(&raw), || clean(&raw))?;
    drop(raw);
    let split = rec.stage("split", shape(&cleaned), || {
        stratified_split(&cleaned, &config.split_spec())
    })?;
    drop(cleaned);
    if let Some(path) = &config.export_test_split {
        write_dataset(path, DataFormat::from_path(path), &split.test)
            .map_err(|e| e.at_stage("split"))?;
    }

    let scalers = rec.stage("fit_scalers", shape(&split.train), || {
        fit_scaler_chain(&split.train)
    })?;
    let all = [&split.train, &split.validation, &split.test];
    let (train_s, val_s, test_s) = rec.stage("transform", shape_sum(&all), || {
        Ok((
            scalers.transform(&split.train)?,
            scalers.transform(&split.validation)?,
            scalers.transform(&split.test)?,
        ))
    })?;
    let reducer = rec.stage("fit_reducer", shape(&train_s), || {
        Reducer::fit(config.reduction.method, &train_s, config.reduction.k)
    })?;
    let (train_r, val_r, test_r) =
        rec.stage("reduce", shape_sum(&[&train_s, &val_s, &test_s]), || {
            Ok((
                apply_reducer(&reducer, &train_s)?,
                apply_reducer(&reducer, &val_s)?,
                apply_reducer(&reducer, &test_s)?,
            ))
        })?;
    drop((train_s, val_s, test_s));

    let partition_seed = config.split.seed.wrapping_add(1);
    let (part_a, part_b) = rec.stage("partition", shape(&train_r), || {
        partition_halves(&train_r, partition_seed)
    })?;

    let [seed_1, seed_2] = config.ensemble.seeds;
    let (hps, tuner_trace, tuner_seeds) = match &config.tuner {
        None => ([hp.clone(), hp.clone()], None, None),
        Some(cfg) => {
            let second = TunerConfig {
                seed: cfg.seed.wrapping_add(SECOND_TUNER_OFFSET),
                ..cfg.clone()
            };
            let (r1, r2) = rec.stage("tune", shape_sum(&[&part_a, &part_b]), || {
                Ok((
                    tune(kind, &part_a, &val_r, cfg, &hp)?,
                    tune(kind, &part_b, &val_r, &second, &hp)?,
                ))
            })?;
            (
                [r1.best.clone(), r2.best.clone()],
                Some([r1, r2]),
                Some([cfg.seed, second.seed]),
            )
        }
    };

    let unweighted = rec.stage("train", shape_sum(&[&part_a, &part_b]), || {
        train_ensemble_with(&part_a, &part_b, kind, (&hps[0], &hps[1]), (seed_1, seed_2))
    })?;
    let (ensemble, grid_report) =
        rec.stage("vote", shape(&val_r), || search_weights(unweighted, &val_r))?;
    let (w1, w2) = ensemble.weights().expect("weights were just searched");

    let metrics = rec.stage("evaluate", shape_sum(&[&val_r, &test_r]), || {
        let score = |d: &Dataset| -> Result<MetricsReport> {
            let (p, _) = ensemble.predict(d.features())?;
            evaluate(d.labels(), &p)
        };
        Ok(PhaseMetrics {
            validation: without_roc(score(&val_r)?),
            test: without_roc(score(&test_r)?),
        })
    })?;

    let peak_matrix_bytes = rec
        .stages
        .iter()
        .map(|s| (s.rows * s.cols * 4) as u64)
        .max()
        .unwrap_or(0);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config_sha256: loaded.sha256.clone(),
        learner: kind,
        reduction: config.reduction.clone(),
        input_dim: dims[0],
        seeds: Seeds {
            split: config.split.seed,
            partition: partition_seed,
            selector: (config.reduction.method == ReductionMethod::Selection)
                .then_some(SELECTOR_SEED),
            model_1: seed_1,
            model_2: seed_2,
            tuner: tuner_seeds,
        },
        clean_report,
        split_sizes: SplitSizes {
            train: split.train.n_rows(),
            validation: split.validation.n_rows(),
            test: split.test.n_rows(),
            partition_a: part_a.n_rows(),
            partition_b: part_b.n_rows(),
        },
        stage_trace: rec.stages.iter().map(|s| s.stage.clone()).collect(),
        metrics,
        telemetry: Telemetry {
            created_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            threads: threads(),
            total_wall_ms: rec.started.elapsed().as_secs_f64() * 1e3,
            peak_matrix_bytes,
            stages: rec.stages,
        },
    };
    Ok(ModelBundle {
        manifest,
        scalers,
        reducer,
        ensemble,
        vote: VoteRecord {
            w1,
            w2,
            grid_report,
            hyperparams: hps,
            tuner_trace,
        },
    })
}

/// Trains and writes the bundle to `output_dir` (or `out` when given).
/// Nothing is left behind on failure.
pub fn train(loaded: &LoadedConfig, out: Option<PathBuf>) -> Result<(ModelBundle, PathBuf)> {
    let dir = out.unwrap_or_else(|| loaded.config.output_dir.clone());
    let bundle = train_bundle(loaded)?;
    let t = Instant::now();
    bundle.save(&dir).map_err(|e| e.at_stage("persist"))?;
    log::info!(
        "stage persist: {:.1} ms to {}",
        t.elapsed().as_secs_f64() * 1e3,
        dir.display()
    );
    Ok((bundle, dir))
}
