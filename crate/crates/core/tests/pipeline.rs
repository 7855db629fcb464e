mod support;

use std::fs;

use malpipe_core::data::{load_dataset, stratified_split, DataFormat};
use malpipe_core::error::{Error, ErrorClass};
use malpipe_core::pipeline::{
    train, train_bundle, ModelBundle, PipelineConfig, CHECKSUM_FILE, MANIFEST_FILE, STAGES,
};
use malpipe_core::synth::SynthSpec;
use support::checks::{small_config, write_scenario};

fn spec() -> SynthSpec {
    SynthSpec {
        rows: 800,
        dims: 10,
        informative: 3,
        noise: 0.02,
        seed: 4,
        shift: 0.0,
    }
}

#[test]
fn stages_run_in_order_and_test_metrics_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("gbdt_a", "selection", 5, 30),
    )
    .unwrap();
    let loaded = PipelineConfig::load(&config).unwrap();
    let (bundle, out) = train(&loaded, None).unwrap();
    assert_eq!(out, dir.path().join("bundle"));

    let expected: Vec<&str> = STAGES.iter().copied().filter(|&s| s != "tune").collect();
    assert_eq!(bundle.manifest.stage_trace, expected);
    assert_eq!(bundle.manifest.telemetry.stages.len(), expected.len());
    assert!(bundle.manifest.telemetry.peak_matrix_bytes > 0);

    let test_split = load_dataset(&dir.path().join("test_split.csv"), DataFormat::Csv).unwrap();
    let loaded_bundle = ModelBundle::load(&out).unwrap();
    let mut report = loaded_bundle.evaluate(&test_split).unwrap();
    report.roc_points.clear();
    assert_eq!(report, bundle.manifest.metrics.test);
    assert!(!dir.path().join("bundle.lock").exists());
    assert!(!dir.path().join("bundle.partial").exists());
}

#[test]
fn reruns_differ_only_in_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("random_forest", "pca", 4, 15),
    )
    .unwrap();
    let loaded = PipelineConfig::load(&config).unwrap();
    let mut a = train_bundle(&loaded).unwrap();
    let mut b = train_bundle(&loaded).unwrap();
    a.manifest.telemetry = b.manifest.telemetry.clone();
    assert_eq!(a, b);
    b.manifest.telemetry.threads += 1;
    assert_ne!(a, b);
}

#[test]
fn partitions_follow_raw_split_membership() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("extra_trees", "selection", 3, 5),
    )
    .unwrap();
    let loaded = PipelineConfig::load(&config).unwrap();
    let bundle = train_bundle(&loaded).unwrap();
    let data = load_dataset(&dir.path().join("data.csv"), DataFormat::Csv).unwrap();
    let (cleaned, _) = malpipe_core::data::clean(&data).unwrap();
    let split = stratified_split(&cleaned, &loaded.config.split_spec()).unwrap();
    assert_eq!(
        bundle.manifest.split_sizes.partition_a,
        split.partition_a.n_rows()
    );
    assert_eq!(
        bundle.manifest.split_sizes.partition_b,
        split.partition_b.n_rows()
    );
    assert_eq!(
        split.partition_a.n_rows() + split.partition_b.n_rows(),
        split.train.n_rows()
    );
}

#[test]
fn k_above_width_fails_before_loading() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("gbdt_a", "selection", 11, 5),
    )
    .unwrap();
    // corrupt the body so any attempt to load rows would fail differently
    let csv = dir.path().join("data.csv");
    let header = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    fs::write(&csv, format!("{header}\nnot,a,row\n")).unwrap();
    let loaded = PipelineConfig::load(&config).unwrap();
    let err = train(&loaded, None).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    assert_eq!(err.class(), ErrorClass::Config);
    assert!(!dir.path().join("bundle").exists());
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let single_class = SynthSpec { rows: 40, ..spec() };
    let config = write_scenario(
        dir.path(),
        &single_class,
        &small_config("gbdt_a", "pca", 2, 5),
    )
    .unwrap();
    let csv = dir.path().join("data.csv");
    let text: String = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                format!("{},0\n", l.rsplit_once(',').unwrap().0)
            }
        })
        .collect();
    fs::write(&csv, text).unwrap();
    let err = train(&PipelineConfig::load(&config).unwrap(), None).unwrap_err();
    assert!(matches!(&err, Error::Stage { stage: "split", .. }), "{err}");
    assert_eq!(err.class(), ErrorClass::Data);
    assert!(!dir.path().join("bundle").exists());
}

#[test]
fn tampered_bundles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("gbdt_b", "selection", 4, 10),
    )
    .unwrap();
    let (_, out) = train(&PipelineConfig::load(&config).unwrap(), None).unwrap();

    let model = out.join("model_1.json");
    let original = fs::read_to_string(&model).unwrap();
    fs::write(
        &model,
        original.replacen("\"seed\": 101", "\"seed\": 102", 1),
    )
    .unwrap();
    assert!(matches!(
        ModelBundle::load(&out),
        Err(Error::CorruptBundle(_))
    ));
    fs::write(&model, &original).unwrap();
    assert!(ModelBundle::load(&out).is_ok());

    let manifest = out.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest).unwrap();
    fs::write(
        &manifest,
        text.replacen("\"format_version\": 1", "\"format_version\": 9", 1),
    )
    .unwrap();
    let err = ModelBundle::load(&out).unwrap_err();
    assert!(
        matches!(&err, Error::CorruptBundle(m) if m.contains("format_version")),
        "{err}"
    );
    assert_eq!(err.class(), ErrorClass::Model);

    fs::remove_file(out.join(CHECKSUM_FILE)).unwrap();
    assert!(matches!(
        ModelBundle::load(&out),
        Err(Error::CorruptBundle(_))
    ));
}

#[test]
fn locked_output_is_not_touched() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &spec(),
        &small_config("gbdt_a", "selection", 4, 5),
    )
    .unwrap();
    fs::write(dir.path().join("bundle.lock"), "").unwrap();
    let err = train(&PipelineConfig::load(&config).unwrap(), None).unwrap_err();
    assert!(
        matches!(
            &err,
            Error::Stage {
                stage: "persist",
                ..
            }
        ),
        "{err}"
    );
    assert!(!dir.path().join("bundle").exists());
}

#[test]
fn tuner_records_both_instances() {
    let dir = tempfile::tempdir().unwrap();
    let body = small_config("gbdt_a", "selection", 5, 20).replace(
        "\"output_dir\"",
        r#""tuner": {"n_trials": 3, "seed": 5, "search_space": {"n_trees": {"min": 5, "max": 15}, "max_depth": [2, 4]}},
  "output_dir""#,
    );
    let config = write_scenario(dir.path(), &spec(), &body).unwrap();
    let bundle = train_bundle(&PipelineConfig::load(&config).unwrap()).unwrap();
    let trace = bundle.vote.tuner_trace.as_ref().unwrap();
    assert_eq!(trace[0].trials.len(), 3);
    assert_eq!(trace[1].trials[0].seed, 5 + 1_000_000);
    assert_eq!(bundle.vote.hyperparams[0], trace[0].best);
    assert_eq!(bundle.ensemble.model_2.hyperparams, trace[1].best);
    assert!(bundle.manifest.stage_trace.contains(&"tune".to_string()));
}

#[test]
fn inputs_are_concatenated() {
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), &spec(), "").unwrap();
    fs::copy(dir.path().join("data.csv"), dir.path().join("more.csv")).unwrap();
    let body = small_config("gbdt_a", "selection", 4, 5).replace(
        r#"[{"path": "data.csv"}]"#,
        r#"[{"path": "data.csv"}, {"path": "more.csv", "format": "csv"}]"#,
    );
    fs::write(dir.path().join("config.json"), body).unwrap();
    let bundle =
        train_bundle(&PipelineConfig::load(&dir.path().join("config.json")).unwrap()).unwrap();
    // the second file repeats every row, so cleaning drops all of them
    assert_eq!(bundle.manifest.clean_report.duplicates_removed, 800);
}
