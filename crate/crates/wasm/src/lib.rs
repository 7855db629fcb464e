//! Browser demo over a synthetic corpus: a 2-D PCA view, the gain ranking
//! against the generator's informative columns, and the vote-weight search.
//!
//! Each export returns a JSON string. The `demo_*` functions hold the logic
//! so it can be exercised natively.

use malpipe_core::data::{partition_halves, stratified_split, Dataset, SplitSpec};
use malpipe_core::ensemble::{search_weights, train_ensemble};
use malpipe_core::learners::{HyperParams, LearnerKind};
use malpipe_core::metrics::evaluate;
use malpipe_core::preprocess::fit_scaler_chain;
use malpipe_core::reduce::{apply_reducer, fit_pca, Reducer, ReductionMethod};
use malpipe_core::synth::{generate, SynthSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 1500;

type Demo = Result<Value, String>;

fn corpus(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
) -> Result<(SynthSpec, Dataset), String> {
    let spec = SynthSpec {
        rows,
        dims,
        informative,
        noise,
        seed: u64::from(seed),
        shift: 0.0,
    };
    let data = generate(&spec).map_err(|e| e.to_string())?;
    Ok((spec, data))
}

fn scaled(data: &Dataset) -> Result<Dataset, String> {
    let chain = fit_scaler_chain(data).map_err(|e| e.to_string())?;
    chain.transform(data).map_err(|e| e.to_string())
}

pub fn demo_pca_scatter(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
) -> Demo {
    let (_, data) = corpus(rows, dims, informative, noise, seed)?;
    let data = scaled(&data)?;
    let pca = fit_pca(&data, 2.min(dims)).map_err(|e| e.to_string())?;
    let total: f64 = (0..dims)
        .map(|j| {
            let col: Vec<f64> = data
                .features()
                .column(j)
                .into_iter()
                .map(f64::from)
                .collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64
        })
        .sum();
    let step = data.n_rows().div_ceil(MAX_POINTS).max(1);
    let points: Vec<Value> = (0..data.n_rows())
        .step_by(step)
        .map(|i| {
            let z = pca.project_row(data.features().row(i));
            json!([z[0], z.get(1).copied().unwrap_or(0.0), data.labels()[i]])
        })
        .collect();
    let ratio: Vec<f64> = pca.explained_variance.iter().map(|v| v / total).collect();
    Ok(json!({ "points": points, "explained_ratio": ratio }))
}

pub fn demo_feature_ranking(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
    k: usize,
) -> Demo {
    let (spec, data) = corpus(rows, dims, informative, noise, seed)?;
    let data = scaled(&data)?;
    let Reducer::Selection(sel) =
        Reducer::fit(ReductionMethod::Selection, &data, k).map_err(|e| e.to_string())?
    else {
        unreachable!("selection fit returns a selection reducer")
    };
    let truth = spec.rule().informative;
    let recovered = sel
        .selected_indices
        .iter()
        .filter(|j| truth.contains(j))
        .count();
    Ok(json!({
        "importances": sel.importances,
        "selected": sel.selected_indices,
        "informative": truth,
        "recovered": recovered,
    }))
}

#[allow(clippy::too_many_arguments)]
pub fn demo_vote_search(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
    method: &str,
    k: usize,
    kind: &str,
    n_trees: usize,
) -> Demo {
    let fail = |e: malpipe_core::Error| e.to_string();
    let (_, data) = corpus(rows, dims, informative, noise, seed)?;
    let method: ReductionMethod = method.parse().map_err(fail)?;
    let kind: LearnerKind = kind.parse().map_err(fail)?;
    let split_seed = u64::from(seed) + 1;
    let split = stratified_split(
        &data,
        &SplitSpec::new(0.7, 0.15, 0.15, split_seed).map_err(fail)?,
    )
    .map_err(fail)?;

    let chain = fit_scaler_chain(&split.train).map_err(fail)?;
    let [train, validation, test] =
        [&split.train, &split.validation, &split.test].map(|d| chain.transform(d));
    let (train, validation, test) = (
        train.map_err(fail)?,
        validation.map_err(fail)?,
        test.map_err(fail)?,
    );
    let reducer = Reducer::fit(method, &train, k).map_err(fail)?;
    let [train, validation, test] =
        [&train, &validation, &test].map(|d| apply_reducer(&reducer, d));
    let (train, validation, test) = (
        train.map_err(fail)?,
        validation.map_err(fail)?,
        test.map_err(fail)?,
    );

    let (a, b) = partition_halves(&train, split_seed + 1).map_err(fail)?;
    let hp = HyperParams {
        n_trees,
        ..HyperParams::default_for(kind)
    };
    let ensemble = train_ensemble(&a, &b, kind, &hp, (1, 2)).map_err(fail)?;
    let (ensemble, grid) = search_weights(ensemble, &validation).map_err(fail)?;
    let (probabilities, _) = ensemble.predict(test.features()).map_err(fail)?;
    let report = evaluate(test.labels(), &probabilities).map_err(fail)?;
    let grid: Vec<Value> = grid
        .iter()
        .map(|p| json!({ "w1": p.w1, "accuracy": p.accuracy }))
        .collect();
    Ok(json!({
        "grid": grid,
        "w1": ensemble.weights().map(|w| w.0),
        "test": {
            "n": report.n,
            "accuracy": report.accuracy,
            "f1": report.f1,
            "auc": report.auc,
        },
        "roc": report.roc_points,
    }))
}

fn to_js(result: Demo) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// `{points: [[pc1, pc2, label]], explained_ratio: [r1, r2]}`
#[wasm_bindgen]
pub fn pca_scatter(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(demo_pca_scatter(rows, dims, informative, noise, seed))
}

/// `{importances, selected, informative, recovered}`
#[wasm_bindgen]
pub fn feature_ranking(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
    k: usize,
) -> Result<String, JsError> {
    to_js(demo_feature_ranking(
        rows,
        dims,
        informative,
        noise,
        seed,
        k,
    ))
}

/// `{grid: [{w1, accuracy}], w1, test: {n, accuracy, f1, auc}, roc: [[fpr, tpr]]}`
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn vote_search(
    rows: usize,
    dims: usize,
    informative: usize,
    noise: f64,
    seed: u32,
    method: &str,
    k: usize,
    kind: &str,
    n_trees: usize,
) -> Result<String, JsError> {
    to_js(demo_vote_search(
        rows,
        dims,
        informative,
        noise,
        seed,
        method,
        k,
        kind,
        n_trees,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_subsampled_and_ratios_are_fractions() {
        let v = demo_pca_scatter(3000, 8, 3, 0.0, 4).unwrap();
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 1500);
        let r: Vec<f64> = v["explained_ratio"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(
            r[0] >= r[1] && r[1] > 0.0 && r[0] + r[1] <= 1.0 + 1e-9,
            "{r:?}"
        );
    }

    #[test]
    fn ranking_recovers_informative_columns() {
        let v = demo_feature_ranking(1500, 20, 4, 0.0, 9, 4).unwrap();
        assert_eq!(v["informative"].as_array().unwrap().len(), 4);
        assert!(v["recovered"].as_u64().unwrap() >= 3, "{v}");
    }

    #[test]
    fn vote_search_reports_grid_and_roc() {
        let v = demo_vote_search(1200, 10, 3, 0.02, 5, "selection", 5, "gbdt_b", 40).unwrap();
        assert_eq!(v["grid"].as_array().unwrap().len(), 11);
        assert!(v["test"]["accuracy"].as_f64().unwrap() > 0.75, "{v}");
        assert_eq!(
            v["roc"].as_array().unwrap().first().unwrap(),
            &json!([0.0, 0.0])
        );
    }

    #[test]
    fn bad_arguments_are_reported() {
        assert!(demo_vote_search(500, 5, 2, 0.0, 1, "lda", 2, "gbdt_b", 10)
            .unwrap_err()
            .contains("lda"));
        assert!(demo_feature_ranking(100, 4, 6, 0.0, 1, 2).is_err());
    }
}
