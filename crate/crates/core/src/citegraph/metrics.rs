//! Binary classification metrics.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 5] = ["auc", "accuracy", "precision", "recall", "f1"];

    pub fn values(&self) -> [f64; 5] {
        [
            self.auc,
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
        ]
    }

    fn from_values(v: [f64; 5]) -> Self {
        Metrics {
            auc: v[0],
            accuracy: v[1],
            precision: v[2],
            recall: v[3],
            f1: v[4],
        }
    }

    /// Per-metric mean and population standard deviation.
    pub fn mean_std(all: &[Metrics]) -> (Metrics, Metrics) {
        let n = all.len().max(1) as f64;
        let mut mean = [0.0; 5];
        for m in all {
            for (a, v) in mean.iter_mut().zip(m.values()) {
                *a += v / n;
            }
        }
        let mut var = [0.0; 5];
        for m in all {
            for ((a, v), mu) in var.iter_mut().zip(m.values()).zip(mean) {
                *a += (v - mu) * (v - mu) / n;
            }
        }
        (
            Metrics::from_values(mean),
            Metrics::from_values(var.map(f64::sqrt)),
        )
    }
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    Ok((pos, neg))
}

/// AUC by the rank statistic with midranks for ties.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += r * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    Ok((rank_sum - (pos * (pos + 1)) as f64 / 2.0) / (pos * neg) as f64)
}

/// AUC by trapezoidal integration of the ROC curve; tied scores form one
/// diagonal segment.
pub fn auc_trapezoid(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut px, mut py) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if labels[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let (x, y) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        area += (x - px) * (y + py) / 2.0;
        px = x;
        py = y;
        i = j + 1;
    }
    Ok(area)
}

/// All five metrics; labels are predicted positive when `prob >= threshold`.
pub fn evaluate(probs: &[f64], labels: &[bool], threshold: f64) -> Result<Metrics> {
    let auc = auc_roc(probs, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for (&p, &l) in probs.iter().zip(labels) {
        match (p >= threshold, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fn_ += 1.0,
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = tp / (tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        auc,
        accuracy: (tp + tn) / probs.len() as f64,
        precision,
        recall,
        f1,
    })
}
