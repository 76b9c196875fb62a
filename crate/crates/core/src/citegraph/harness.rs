//! Single-feature logistic regression over topological scores, per fold.

use serde::{Deserialize, Serialize};

use super::dataset::{LinkDataset, NUM_FOLDS};
use super::graph::CitationGraph;
use super::metrics::{evaluate, Metrics};
use super::predictors::{score_pairs, PprParams, Predictor};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lr: 0.1,
            epochs: 1000,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fitted `p = σ(w·(x − mean)/sd + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreModel {
    pub mean: f64,
    pub sd: f64,
    pub w: f64,
    pub b: f64,
}

impl ScoreModel {
    /// `None` when the feature is constant on the training data.
    pub fn fit(x: &[f64], y: &[bool], p: &LogRegParams) -> Option<ScoreModel> {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd == 0.0 || !sd.is_finite() {
            return None;
        }
        let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
        let (mut w, mut b) = (0.0, 0.0);
        for _ in 0..p.epochs {
            let (mut gw, mut gb) = (0.0, 0.0);
            for (&zi, &yi) in z.iter().zip(y) {
                let e = sigmoid(w * zi + b) - if yi { 1.0 } else { 0.0 };
                gw += e * zi;
                gb += e;
            }
            w -= p.lr * gw / n;
            b -= p.lr * gb / n;
        }
        Some(ScoreModel { mean, sd, w, b })
    }

    pub fn predict(&self, x: f64) -> f64 {
        sigmoid(self.w * (x - self.mean) / self.sd + self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub metrics: Metrics,
    /// The training feature was constant; metrics use the raw score at 0.5.
    pub constant_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: String,
    pub folds: Vec<FoldResult>,
    pub mean: Metrics,
    pub std: Metrics,
}

impl CvReport {
    pub fn new(method: String, folds: Vec<FoldResult>) -> Self {
        let all: Vec<Metrics> = folds.iter().map(|f| f.metrics).collect();
        let (mean, std) = Metrics::mean_std(&all);
        CvReport {
            method,
            folds,
            mean,
            std,
        }
    }
}

/// Fits on raw feature values of the training pairs and scores the test pairs.
pub fn fit_and_score(
    train_x: &[f64],
    train_y: &[bool],
    test_x: &[f64],
    p: &LogRegParams,
) -> (Vec<f64>, bool) {
    match ScoreModel::fit(train_x, train_y, p) {
        Some(m) => (test_x.iter().map(|&x| m.predict(x)).collect(), false),
        None => (test_x.to_vec(), true),
    }
}

/// Five-fold evaluation of one predictor. Scores come from `score_graph`,
/// which should not contain the dataset's positive edges.
pub fn eval_topological(
    score_graph: &CitationGraph,
    data: &LinkDataset,
    pred: Predictor,
    ppr: &PprParams,
    lr: &LogRegParams,
) -> Result<CvReport> {
    let scores = score_pairs(score_graph, &data.pairs, pred, ppr)?;
    let mut folds = Vec::with_capacity(NUM_FOLDS);
    for fold in 0..NUM_FOLDS {
        let (train, test) = data.split(fold);
        let tx: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
        let ty: Vec<bool> = train.iter().map(|&i| data.labels[i]).collect();
        let ex: Vec<f64> = test.iter().map(|&i| scores[i]).collect();
        let ey: Vec<bool> = test.iter().map(|&i| data.labels[i]).collect();
        let (probs, constant) = fit_and_score(&tx, &ty, &ex, lr);
        if constant {
            log::warn!("{pred}: constant feature on fold {fold}; using raw scores");
        }
        folds.push(FoldResult {
            fold,
            metrics: evaluate(&probs, &ey, 0.5)?,
            constant_feature: constant,
        });
    }
    Ok(CvReport::new(pred.name().into(), folds))
}

/// The graph with every positive pair of `data` removed.
pub fn without_positives(g: &CitationGraph, data: &LinkDataset) -> CitationGraph {
    let pos: std::collections::HashSet<(usize, usize)> = data
        .positives()
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    g.with_edges(
        g.edges
            .iter()
            .copied()
            .filter(|&(u, v)| !pos.contains(&(u.min(v), u.max(v)))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separating_feature() {
        let x = [5.0, 6.0, 7.0, 1.0, 2.0, 0.5];
        let y = [true, true, true, false, false, false];
        let (p, constant) = fit_and_score(&x, &y, &x, &LogRegParams::default());
        assert!(!constant);
        let m = evaluate(&p, &y, 0.5).unwrap();
        assert_eq!(m.auc, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn constant_feature_falls_back_to_raw_score() {
        let (p, constant) = fit_and_score(
            &[1.0, 1.0],
            &[true, false],
            &[0.7, 0.2],
            &LogRegParams::default(),
        );
        assert!(constant);
        assert_eq!(p, vec![0.7, 0.2]);
    }
}
