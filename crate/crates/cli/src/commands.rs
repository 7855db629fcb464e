use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use malpipe_core::data::{load_dataset, load_table, write_dataset, DataFormat};
use malpipe_core::metrics::MetricsReport;
use malpipe_core::pipeline::{self, ModelBundle, PipelineConfig};
use malpipe_core::synth::{generate, SynthSpec};
use malpipe_core::Error;

/// Metrics as printed on stdout; the ROC curve goes to `--roc-csv`.
fn print_metrics(report: &MetricsReport) -> Result<(), Error> {
    let mut shown = report.clone();
    shown.roc_points.clear();
    println!("{}", serde_json::to_string_pretty(&shown)?);
    Ok(())
}

pub fn train(config: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let loaded = PipelineConfig::load(config)?;
    let (bundle, dir) = pipeline::train(&loaded, out)?;
    log::info!("bundle written to {}", dir.display());
    eprint!("validation\n{}", bundle.manifest.metrics.validation.table());
    print_metrics(&bundle.manifest.metrics.validation)
}

pub fn evaluate(bundle: &Path, data: &Path, roc_csv: Option<&Path>) -> Result<(), Error> {
    let bundle = ModelBundle::load(bundle)?;
    let data = load_dataset(data, DataFormat::from_path(data))?;
    let report = bundle.evaluate(&data)?;
    if let Some(path) = roc_csv {
        if report.auc.is_none() {
            log::warn!("single-class labels: ROC curve is undefined, writing header only");
        }
        report.write_roc_csv(BufWriter::new(File::create(path)?))?;
    }
    print_metrics(&report)
}

pub fn predict(bundle: &Path, data: &Path, out: &Path) -> Result<(), Error> {
    let bundle = ModelBundle::load(bundle)?;
    let mut writer = BufWriter::new(File::create(out)?);
    writeln!(writer, "row_id,probability,label")?;
    let empty_file = std::fs::metadata(data)?.len() == 0;
    let table = if empty_file {
        None
    } else {
        Some(load_table(data, DataFormat::from_path(data))?)
    };
    match table {
        Some(t) if t.features.n_rows() > 0 => {
            let (p, labels) = bundle.predict(&t.features)?;
            for (i, (p, y)) in p.iter().zip(labels).enumerate() {
                writeln!(writer, "{i},{p},{y}")?;
            }
            log::info!("wrote {} predictions to {}", p.len(), out.display());
        }
        _ => log::warn!("{} holds no rows; wrote header only", data.display()),
    }
    writer.flush()?;
    Ok(())
}

pub fn synth(spec: SynthSpec, out: &Path) -> Result<(), Error> {
    let data = generate(&spec)?;
    write_dataset(out, DataFormat::from_path(out), &data)?;
    log::info!(
        "wrote {} rows x {} features ({} malicious) to {}",
        data.n_rows(),
        data.feature_count(),
        data.n_positive(),
        out.display()
    );
    Ok(())
}

pub fn report(bundle: &Path) -> Result<(), Error> {
    let b = ModelBundle::load(bundle)?;
    let m = &b.manifest;
    let (w1, w2) = (b.vote.w1, b.vote.w2);
    println!("bundle        {}", bundle.display());
    println!("format        {}", m.format_version);
    println!("config sha256 {}", m.config_sha256);
    println!("learner       {}", m.learner.name());
    println!(
        "reduction     {:?} k={} (from {} features)",
        m.reduction.method, m.reduction.k, m.input_dim
    );
    println!("vote          w1={w1:.1} w2={w2:.1}");
    println!(
        "seeds         split={} partition={} models={}/{}",
        m.seeds.split, m.seeds.partition, m.seeds.model_1, m.seeds.model_2
    );
    println!(
        "cleaning      missing={} duplicates={} conflicts={}",
        m.clean_report.missing_removed,
        m.clean_report.duplicates_removed,
        m.clean_report.conflicts_removed
    );
    let s = &m.split_sizes;
    println!(
        "rows          train={} (a={} b={}) validation={} test={}",
        s.train, s.partition_a, s.partition_b, s.validation, s.test
    );
    println!("\nvalidation\n{}", m.metrics.validation.table());
    println!("test\n{}", m.metrics.test.table());
    println!("stage            wall ms      rows   cols");
    for st in &m.telemetry.stages {
        println!(
            "{:<14} {:>10.1} {:>9} {:>6}",
            st.stage, st.wall_ms, st.rows, st.cols
        );
    }
    println!(
        "total {:.1} ms on {} threads, peak matrix {:.1} MiB",
        m.telemetry.total_wall_ms,
        m.telemetry.threads,
        m.telemetry.peak_matrix_bytes as f64 / (1024.0 * 1024.0)
    );
    Ok(())
}
