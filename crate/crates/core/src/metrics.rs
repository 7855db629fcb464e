//! Detection metrics with label 1 (malicious) as the positive class.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(labels: &[u8], predicted: &[u8]) -> Result<Confusion> {
    if labels.len() != predicted.len() {
        return Err(Error::LengthMismatch(labels.len(), predicted.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("scoring"));
    }
    let mut c = Confusion::default();
    for (&y, &p) in labels.iter().zip(predicted) {
        match (y != 0, p != 0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when `tp + fp == 0`; precision is reported as 0.
    pub precision_undefined: bool,
    /// Set when `tp + fn == 0`; recall is reported as 0.
    pub recall_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Zero denominators give 0 with the matching flag set. The caller
/// guarantees `c.n() >= 1`.
pub fn classification_metrics(c: &Confusion) -> ClassificationMetrics {
    let accuracy = (c.tp + c.tn) as f64 / c.n() as f64;
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassificationMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
    }
}

/// Mann-Whitney AUC with half credit for ties, and the ROC curve swept over
/// distinct scores from highest to lowest. Equal scores form one step, so
/// the trapezoidal area under the returned points equals the AUC.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch(labels.len(), scores.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("score {i} is not finite")));
    }
    let n_pos = labels.iter().filter(|&&y| y != 0).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    // doubled pair credit: 2 per strict win, 1 per tie
    let mut credit: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] != 0 {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        // positives in this group beat every negative scored lower
        credit +=
            u128::from(gp) * u128::from(n_neg - fp - gn) * 2 + u128::from(gp) * u128::from(gn);
        tp += gp;
        fp += gn;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = credit as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok((auc, points))
}

pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the labels hold a single class.
    pub auc: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub roc_points: Vec<(f64, f64)>,
}

/// Scores probabilities against labels, predicting malicious at p ≥ 0.5.
pub fn evaluate(labels: &[u8], probabilities: &[f64]) -> Result<MetricsReport> {
    let predicted: Vec<u8> = probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let c = confusion(labels, &predicted)?;
    let m = classification_metrics(&c);
    let (auc, roc_points) = match roc_auc(labels, probabilities) {
        Ok((auc, points)) => (Some(auc), points),
        Err(Error::UndefinedAuc) => (None, Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        n: c.n(),
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc,
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        precision_undefined: m.precision_undefined,
        recall_undefined: m.recall_undefined,
        roc_points,
    })
}

impl MetricsReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let auc = self
            .auc
            .map_or_else(|| "undefined".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(out, "rows       {}", self.n);
        let _ = writeln!(out, "accuracy   {:.4}", self.accuracy);
        let _ = writeln!(
            out,
            "precision  {:.4}{}",
            self.precision,
            if self.precision_undefined {
                " (undefined)"
            } else {
                ""
            }
        );
        let _ = writeln!(
            out,
            "recall     {:.4}{}",
            self.recall,
            if self.recall_undefined {
                " (undefined)"
            } else {
                ""
            }
        );
        let _ = writeln!(out, "f1         {:.4}", self.f1);
        let _ = writeln!(out, "auc        {auc}");
        let _ = writeln!(
            out,
            "tp={} fp={} tn={} fn={}",
            self.tp, self.fp, self.tn, self.fn_
        );
        out
    }

    pub fn write_roc_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "fpr,tpr")?;
        for (fpr, tpr) in &self.roc_points {
            writeln!(out, "{fpr},{tpr}")?;
        }
        Ok(())
    }
}
