//! Acceptance checks shared by this crate's tests and the CLI acceptance
//! report. Each returns a one-line summary or the first violation.

#![allow(dead_code)]

use std::path::Path;

use malpipe_core::data::{write_dataset, DataFormat, Dataset, FeatureMatrix};
use malpipe_core::ensemble::{combine, search_weights, VotingEnsemble};
use malpipe_core::learners::loss::{grad_hess, logistic_loss};
use malpipe_core::learners::{
    find_best_split, ForestModel, HyperParams, LearnerKind, SplitCriterion, Tree,
};
use malpipe_core::metrics::{roc_auc, trapezoid_area};
use malpipe_core::pipeline::{train_bundle, ModelBundle, PipelineConfig};
use malpipe_core::preprocess::{fit_scaler_chain, MinMaxScalerParams};
use malpipe_core::reduce::fit_pca;
use malpipe_core::synth::{generate, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::{
    central_difference, exhaustive_gains, jacobi_eigenvalues, pairwise_auc, sample_covariance, Gain,
};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    }};
}

pub fn auc_oracle() -> Check {
    let (auc, _) = roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).map_err(|e| e.to_string())?;
    ensure!(auc == 0.75, "worked example gave {auc}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(2..=500);
        // coarse scores force ties
        let levels = if case % 2 == 0 { 7 } else { 1000 };
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..levels)) / levels as f64)
            .collect();
        let (auc, points) = roc_auc(&labels, &scores).map_err(|e| e.to_string())?;
        let oracle = pairwise_auc(&labels, &scores);
        worst = worst.max((auc - oracle).abs());
        ensure!(
            (auc - oracle).abs() <= 1e-12,
            "case {case}: sweep {auc} vs pairwise {oracle}"
        );
        ensure!(
            (trapezoid_area(&points) - auc).abs() <= 1e-12,
            "case {case}: trapezoid differs"
        );
        ensure!(
            points.first() == Some(&(0.0, 0.0)) && points.last() == Some(&(1.0, 1.0)),
            "case {case}: endpoints"
        );
        ensure!(
            points
                .windows(2)
                .all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1),
            "case {case}: not monotone"
        );

        let cubed: Vec<f64> = scores.iter().map(|s| s * s * s + 2.0 * s).collect();
        let (auc_t, points_t) = roc_auc(&labels, &cubed).map_err(|e| e.to_string())?;
        ensure!(
            auc_t == auc && points_t == points,
            "case {case}: not invariant to increasing maps"
        );
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let (auc_n, _) = roc_auc(&labels, &negated).map_err(|e| e.to_string())?;
        ensure!(
            (auc + auc_n - 1.0).abs() <= 1e-12,
            "case {case}: complement symmetry"
        );
    }
    Ok(format!(
        "200 instances, max |sweep - pairwise| = {worst:.1e}"
    ))
}

pub fn pca_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut eig_err, mut rec_err, mut orth_err) = (0f64, 0f64, 0f64);
    for case in 0..100 {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(1..=6);
        let scales: Vec<f32> = (0..d).map(|_| rng.random_range(0.1..3.0)).collect();
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| rng.random_range(-1.0f32..1.0) * s + 0.5)
                    .collect()
            })
            .collect();
        let data = Dataset::from_rows(&rows, vec![0; n]).map_err(|e| e.to_string())?;
        let k = (n - 1).min(d);
        let pca = fit_pca(&data, k).map_err(|e| format!("case {case}: {e}"))?;

        let wide: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let oracle = jacobi_eigenvalues(sample_covariance(&wide));
        for (got, want) in pca.explained_variance.iter().zip(&oracle) {
            eig_err = eig_err.max((got - want).abs());
        }
        ensure!(eig_err <= 1e-8, "case {case}: eigenvalue error {eig_err:e}");
        ensure!(
            pca.explained_variance.windows(2).all(|w| w[0] >= w[1]),
            "case {case}: variances not sorted"
        );

        for a in 0..k {
            for b in 0..k {
                let dot: f64 = pca.components[a]
                    .iter()
                    .zip(&pca.components[b])
                    .map(|(x, y)| x * y)
                    .sum();
                orth_err = orth_err.max((dot - f64::from(u8::from(a == b))).abs());
            }
        }
        ensure!(
            orth_err <= 1e-8,
            "case {case}: orthonormality error {orth_err:e}"
        );

        // full rank only when the sample spans all d directions
        if n > d {
            let (mut num, mut den) = (0.0, 0.0);
            for (row, wide_row) in rows.iter().zip(&wide) {
                let back = pca.reconstruct(&pca.project_row(row));
                num += back
                    .iter()
                    .zip(wide_row)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>();
                den += wide_row.iter().map(|b| b * b).sum::<f64>();
            }
            let rel = (num / den).sqrt();
            rec_err = rec_err.max(rel);
            ensure!(rel <= 1e-6, "case {case}: reconstruction error {rel:e}");
        }
    }
    Ok(format!(
        "100 matrices, eig {eig_err:.1e}, orth {orth_err:.1e}, recon {rec_err:.1e}"
    ))
}

pub fn split_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut ties = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=200);
        let d = rng.random_range(1..=8);
        let levels = if case % 3 == 0 { 5 } else { 10_000 };
        let columns: Vec<Vec<f32>> = (0..d)
            .map(|_| {
                (0..n)
                    .map(|_| rng.random_range(0..levels) as f32 / 7.0)
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        let x = FeatureMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let (criterion, gain, stats): (SplitCriterion, Gain, Vec<(f64, f64)>) = if case % 2 == 0 {
            let stats = (0..n)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.01..0.25)))
                .collect();
            (
                SplitCriterion::Newton { lambda: 1.0 },
                Gain::Newton { lambda: 1.0 },
                stats,
            )
        } else {
            let stats = (0..n)
                .map(|_| (f64::from(rng.random_range(0..2u8)), 1.0))
                .collect();
            (SplitCriterion::Gini, Gain::Gini, stats)
        };
        let per_feature = exhaustive_gains(&columns, &stats, gain);
        let best_oracle = per_feature
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let found = find_best_split(&x, &stats, criterion, 1, 256);
        match found {
            None => ensure!(
                best_oracle <= 1e-9,
                "case {case}: histogram found nothing, oracle gain {best_oracle}"
            ),
            Some(c) => {
                let err = (c.gain - best_oracle).abs();
                worst = worst.max(err);
                ensure!(
                    err <= 1e-9,
                    "case {case}: gain {} vs oracle {best_oracle}",
                    c.gain
                );
                // features whose best gains agree within 1e-9 are tied; rounding
                // may pick any of them
                let tied: Vec<usize> = (0..d)
                    .filter(|&j| per_feature[j] >= best_oracle - 1e-9)
                    .collect();
                ensure!(
                    tied.contains(&c.feature),
                    "case {case}: feature {} not among oracle best {tied:?}",
                    c.feature
                );
                if tied.len() > 1 {
                    ties += 1;
                }
                let left: Vec<(f64, f64)> = (0..n)
                    .filter(|&i| rows[i][c.feature] <= c.threshold)
                    .map(|i| stats[i])
                    .collect();
                let right: Vec<(f64, f64)> = (0..n)
                    .filter(|&i| rows[i][c.feature] > c.threshold)
                    .map(|i| stats[i])
                    .collect();
                let sum =
                    |v: &[(f64, f64)]| v.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1));
                let realised = gain.of(sum(&left), sum(&right));
                ensure!(
                    (realised - c.gain).abs() <= 1e-9,
                    "case {case}: threshold realises gain {realised}"
                );
            }
        }
    }
    Ok(format!(
        "50 datasets, max gain error {worst:.1e}, {ties} with tied features"
    ))
}

pub fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = 1e-4;
    let (mut g_err, mut h_err) = (0f64, 0f64);
    for i in 0..1000 {
        let s: f64 = rng.random_range(-10.0..10.0);
        let y = f64::from(rng.random_range(0..2u8));
        let (g, h) = grad_hess(s, y);
        let fd_g = central_difference(|t| logistic_loss(t, y), s, eps);
        let fd_h = central_difference(|t| grad_hess(t, y).0, s, eps);
        g_err = g_err.max((fd_g - g).abs());
        h_err = h_err.max((fd_h - h).abs());
        ensure!(
            g_err <= 1e-6 && h_err <= 1e-6,
            "pair {i} (s={s}, y={y}): g err {g_err:e}, h err {h_err:e}"
        );
    }
    Ok(format!(
        "1000 pairs, max grad err {g_err:.1e}, hess err {h_err:.1e}"
    ))
}

fn stub(left: f64, right: f64) -> ForestModel {
    ForestModel {
        kind: LearnerKind::RandomForest,
        n_features: 1,
        base_score: 0.0,
        learning_rate: 1.0,
        seed: 0,
        hyperparams: HyperParams::default_for(LearnerKind::RandomForest),
        trees: vec![Tree::stump(0, 0.5, left, right)],
    }
}

pub fn vote_grid() -> Check {
    let rows: Vec<Vec<f32>> = (0..20).map(|i| vec![(i % 2) as f32]).collect();
    let data = Dataset::from_rows(&rows, (0..20).map(|i| (i % 2) as u8).collect())
        .map_err(|e| e.to_string())?;
    // model_2 perfect, model_1 inverted
    let ens = VotingEnsemble::new(stub(1.0, 0.0), stub(0.45, 0.55)).map_err(|e| e.to_string())?;
    let (ens, report) = search_weights(ens, &data).map_err(|e| e.to_string())?;
    ensure!(
        report.len() == 11,
        "grid report has {} entries",
        report.len()
    );
    ensure!(
        ens.weights() == Some((0.0, 1.0)),
        "perfect/inverted chose {:?}",
        ens.weights()
    );
    // and the mirror image selects the other endpoint
    let ens = VotingEnsemble::new(stub(0.45, 0.55), stub(1.0, 0.0)).map_err(|e| e.to_string())?;
    let (ens, _) = search_weights(ens, &data).map_err(|e| e.to_string())?;
    ensure!(
        ens.weights().map(|w| w.0) == Some(1.0),
        "inverted/perfect chose {:?}",
        ens.weights()
    );

    let ens = VotingEnsemble::new(stub(0.3, 0.6), stub(0.3, 0.6)).map_err(|e| e.to_string())?;
    let (ens, report) = search_weights(ens, &data).map_err(|e| e.to_string())?;
    ensure!(
        report.iter().all(|p| p.correct == report[0].correct),
        "identical models disagree across grid"
    );
    ensure!(
        ens.weights() == Some((0.5, 0.5)),
        "identical models chose {:?}",
        ens.weights()
    );
    ensure!(
        (combine(0.6, 0.8, 0.5) - 0.7).abs() < 1e-15,
        "combine arithmetic"
    );
    Ok("endpoints 0.0/1.0 selected, tie -> 0.5, 11 grid entries".into())
}

/// Writes a synthetic CSV and a matching config under `dir`.
pub fn write_scenario(
    dir: &Path,
    spec: &SynthSpec,
    config_body: &str,
) -> Result<std::path::PathBuf, String> {
    let data = generate(spec).map_err(|e| e.to_string())?;
    write_dataset(&dir.join("data.csv"), DataFormat::Csv, &data).map_err(|e| e.to_string())?;
    let path = dir.join("config.json");
    std::fs::write(&path, config_body).map_err(|e| e.to_string())?;
    Ok(path)
}

pub fn small_config(kind: &str, method: &str, k: usize, n_trees: usize) -> String {
    format!(
        r#"{{
  "schema_version": 1,
  "inputs": [{{"path": "data.csv"}}],
  "split": {{"train": 0.6, "validation": 0.2, "test": 0.2, "seed": 11}},
  "reduction": {{"method": "{method}", "k": {k}}},
  "learner": {{"kind": "{kind}", "hyperparams": {{"n_trees": {n_trees}}}}},
  "ensemble": {{"seeds": [101, 202]}},
  "output_dir": "bundle",
  "export_test_split": "test_split.csv"
}}"#
    )
}

pub fn round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SynthSpec {
        rows: 1500,
        dims: 12,
        informative: 4,
        noise: 0.02,
        seed: 8,
        shift: 0.0,
    };
    let config = write_scenario(dir.path(), &spec, &small_config("gbdt_b", "pca", 6, 40))?;
    let loaded = PipelineConfig::load(&config).map_err(|e| e.to_string())?;
    let bundle = train_bundle(&loaded).map_err(|e| e.to_string())?;
    let out = dir.path().join("bundle");
    bundle.save(&out).map_err(|e| e.to_string())?;
    let back = ModelBundle::load(&out).map_err(|e| e.to_string())?;
    ensure!(back == bundle, "loaded bundle differs from the saved one");

    let probe = generate(&SynthSpec {
        rows: 1000,
        seed: 99,
        shift: 0.3,
        ..spec
    })
    .map_err(|e| e.to_string())?;
    let (p_mem, l_mem) = bundle
        .predict(probe.features())
        .map_err(|e| e.to_string())?;
    let (p_disk, l_disk) = back.predict(probe.features()).map_err(|e| e.to_string())?;
    ensure!(l_mem == l_disk, "labels differ after reload");
    let same = p_mem
        .iter()
        .zip(&p_disk)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure!(
        same && p_mem.len() == 1000,
        "probabilities differ after reload"
    );
    Ok("1000 rows bit-identical after save/load".into())
}

pub fn scalers() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 400;
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|i| {
            vec![
                rng.random_range(-50.0..50.0),
                7.0,
                // zero IQR: constant apart from a few outliers
                if i % 97 == 0 { 10.0 + i as f32 } else { 3.0 },
                rng.random::<f32>().powi(3) * 1e4,
            ]
        })
        .collect();
    let train = Dataset::from_rows(&rows, vec![0; n]).map_err(|e| e.to_string())?;
    let chain = fit_scaler_chain(&train).map_err(|e| e.to_string())?;
    let out = chain.transform(&train).map_err(|e| e.to_string())?;
    ensure!(
        out.features()
            .values()
            .iter()
            .all(|v| (0.0..=1.0).contains(v)),
        "training output leaves [0, 1]"
    );
    ensure!(
        out.features().column(1).iter().all(|&v| v == 0.0),
        "constant column not mapped to 0"
    );
    ensure!(
        chain.apply(1, -1e6) == 0.0 && chain.apply(1, 1e6) == 0.0,
        "constant column must map any input to 0"
    );

    ensure!(
        chain.robust.iqrs[2] == 0.0 && chain.robust.medians[2] == 3.0,
        "zero-IQR statistics"
    );
    // zero IQR: stage one is x - median, stage two min-max of that
    let (lo, hi) = (0.0f64, f64::from(10.0 + 388.0f32 - 3.0));
    for (&x, &y) in train
        .features()
        .column(2)
        .iter()
        .zip(&out.features().column(2))
    {
        let expected = ((f64::from(x) - 3.0) - lo) / (hi - lo);
        ensure!(
            (f64::from(y) - expected).abs() <= 1e-6,
            "zero-IQR value {x} -> {y}, expected {expected}"
        );
    }

    let refit = MinMaxScalerParams::fit(out.features()).map_err(|e| e.to_string())?;
    for j in [0, 2, 3] {
        ensure!(
            refit.mins[j].abs() <= 1e-6 && (refit.maxes[j] - 1.0).abs() <= 1e-6,
            "refit column {j}: [{}, {}]",
            refit.mins[j],
            refit.maxes[j]
        );
    }
    let example = Dataset::from_rows(
        &[vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]],
        vec![0; 5],
    )
    .map_err(|e| e.to_string())?;
    let c = fit_scaler_chain(&example).map_err(|e| e.to_string())?;
    ensure!(
        c.robust.medians[0] == 3.0 && c.robust.iqrs[0] == 2.0,
        "[1..5] statistics"
    );
    let t = c.transform(&example).map_err(|e| e.to_string())?;
    ensure!(
        t.features().values() == [0.0, 0.25, 0.5, 0.75, 1.0],
        "[1..5] transformed to {:?}",
        t.features().values()
    );
    Ok("unit range, constant -> 0, zero-IQR unscaled, refit [0, 1]".into())
}
