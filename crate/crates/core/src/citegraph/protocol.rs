//! Prospective evaluation: train on the graph up to `t0`, test on citations
//! made `Δt` years later.

use std::collections::HashSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::{make_static_dataset, LinkDataset};
use super::gnn::{score_gnn, train_gnn, FeatureMatrix, GnnHp, GnnInput};
use super::graph::CitationGraph;
use super::harness::{fit_and_score, without_positives, CvReport, LogRegParams};
use super::metrics::{evaluate, Metrics};
use super::predictors::{score_pairs, PprParams, Predictor};
use crate::rng::rng_from;
use crate::{Error, Result};

/// Scoring method for the link-prediction suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Topological(Predictor),
    Gnn,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "gnn" {
            Ok(Method::Gnn)
        } else {
            s.parse().map(Method::Topological)
        }
    }
}

/// Carried into every temporal report.
pub const NEGATIVE_YEAR_NOTE: &str =
    "negatives draw v' with year < t0 while positives allow any cited year < t0+dt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRow {
    pub dt: i32,
    pub positives: usize,
    pub metrics: Metrics,
    /// The topological feature was constant on the training set.
    pub constant_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub method: String,
    pub t0: i32,
    pub train_nodes: usize,
    pub train_edges: usize,
    pub rows: Vec<TemporalRow>,
    pub skipped: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalOptions {
    pub t0: i32,
    pub dts: Vec<i32>,
    /// Positive pairs sampled from `G_{t0}` for training.
    pub sample_size: usize,
    pub seed: u64,
    pub ppr: PprParams,
    pub logreg: LogRegParams,
    pub gnn: GnnHp,
}

/// Edges whose citing paper appeared before `year`.
pub fn edges_before(g: &CitationGraph, year: i32) -> CitationGraph {
    g.with_edges(
        g.edges
            .iter()
            .copied()
            .filter(|&(u, _)| g.nodes[u].year < year),
    )
}

/// Citations from papers of `year` to earlier papers, with one negative per
/// positive whose endpoint was published before `t0`.
pub fn temporal_test_set(g: &CitationGraph, t0: i32, year: i32, seed: u64) -> Result<LinkDataset> {
    let mut pos: Vec<(usize, usize)> = g
        .edges
        .iter()
        .copied()
        .filter(|&(u, v)| g.nodes[u].year == year && g.nodes[v].year < year)
        .collect();
    pos.sort_unstable();
    let b_plus: HashSet<(usize, usize)> = pos.iter().copied().collect();
    let pool: Vec<usize> = (0..g.num_nodes())
        .filter(|&v| g.nodes[v].year < t0)
        .collect();
    if pool.len() < 2 {
        return Err(Error::Degenerate(format!(
            "fewer than 2 papers published before {t0}"
        )));
    }
    let mut rng = rng_from(seed, &[0x7465_6d70, year as u64]);
    let mut neg = Vec::with_capacity(pos.len());
    for &(u, _) in &pos {
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > 100 * pool.len().max(100) {
                return Err(Error::Degenerate(format!(
                    "no valid negative endpoint for a {year} paper"
                )));
            }
            let v = pool[rng.random_range(0..pool.len())];
            if v != u && !b_plus.contains(&(u, v)) {
                neg.push((u, v));
                break;
            }
        }
    }
    let labels = std::iter::repeat_n(true, pos.len())
        .chain(std::iter::repeat_n(false, neg.len()))
        .collect();
    Ok(LinkDataset {
        pairs: pos.into_iter().chain(neg).collect(),
        labels,
        folds: Vec::new(),
    })
}

pub fn temporal_protocol(
    g: &CitationGraph,
    method: Method,
    features: Option<&FeatureMatrix>,
    opts: &TemporalOptions,
) -> Result<TemporalReport> {
    let t0 = opts.t0;
    let train_nodes: Vec<usize> = (0..g.num_nodes())
        .filter(|&u| g.nodes[u].year <= t0)
        .collect();
    let g_t0 = edges_before(g, t0 + 1);
    let train = make_static_dataset(
        &g_t0,
        opts.sample_size.min(g_t0.undirected_edges().len()),
        opts.seed,
    )?;
    let max_year = g.nodes.iter().map(|n| n.year).max().unwrap_or(t0);
    let mut report = TemporalReport {
        method: method_name(method, features),
        t0,
        train_nodes: train_nodes.len(),
        train_edges: g_t0.edges.len(),
        rows: Vec::new(),
        skipped: Vec::new(),
        notes: vec![NEGATIVE_YEAR_NOTE.into()],
    };
    let gnn = match method {
        Method::Gnn => {
            let f = features
                .ok_or_else(|| Error::Config("GNN evaluation needs node features".into()))?;
            let message = without_positives(&g_t0, &train);
            let (w, _) = train_gnn(&GnnInput::new(&message, f), &train, &opts.gnn)?;
            Some((f, w))
        }
        Method::Topological(_) => None,
    };
    let train_scores = match method {
        Method::Topological(p) => Some(score_pairs(
            &without_positives(&g_t0, &train),
            &train.pairs,
            p,
            &opts.ppr,
        )?),
        Method::Gnn => None,
    };
    for &dt in &opts.dts {
        let year = t0 + dt;
        if dt < 1 || year > max_year {
            report.skipped.push(format!(
                "dt={dt}: year {year} outside the data (last year {max_year})"
            ));
            continue;
        }
        let test = temporal_test_set(g, t0, year, opts.seed)?;
        if test.positives().next().is_none() {
            report
                .skipped
                .push(format!("dt={dt}: no citations from {year} papers"));
            continue;
        }
        let message = edges_before(g, year);
        let (probs, constant) = match (&gnn, method) {
            (Some((f, w)), _) => (
                score_gnn(&GnnInput::new(&message, f), w, &test.pairs),
                false,
            ),
            (None, Method::Topological(p)) => {
                let test_x = score_pairs(&message, &test.pairs, p, &opts.ppr)?;
                fit_and_score(
                    train_scores.as_deref().expect("topological"),
                    &train.labels,
                    &test_x,
                    &opts.logreg,
                )
            }
            (None, Method::Gnn) => unreachable!(),
        };
        let metrics = evaluate(&probs, &test.labels, 0.5)?;
        log::info!("{} dt={dt}: auc {:.4}", report.method, metrics.auc);
        report.rows.push(TemporalRow {
            dt,
            positives: test.positives().count(),
            metrics,
            constant_feature: constant,
        });
    }
    if report.rows.iter().any(|r| r.constant_feature) {
        report
            .notes
            .push("topological score constant on training pairs; raw scores used".into());
    }
    Ok(report)
}

pub fn method_name(method: Method, features: Option<&FeatureMatrix>) -> String {
    match method {
        Method::Topological(p) => p.name().into(),
        Method::Gnn => format!("gnn-{}", features.map_or("none", |f| f.kind.as_str())),
    }
}

/// One row per method, one `mean (std)` cell per metric.
pub fn cv_table_csv(reports: &[CvReport]) -> String {
    let mut s = format!("method,{}\n", Metrics::NAMES.join(","));
    for r in reports {
        let cells: Vec<String> = r
            .mean
            .values()
            .iter()
            .zip(r.std.values())
            .map(|(m, sd)| format!("{m:.4} ({sd:.4})"))
            .collect();
        s.push_str(&format!("{},{}\n", r.method, cells.join(",")));
    }
    s
}

/// Long format: `method,dt,positives,<metric>...`.
pub fn temporal_csv(report: &TemporalReport) -> String {
    let mut s = format!("method,dt,positives,{}\n", Metrics::NAMES.join(","));
    for row in &report.rows {
        let vals: Vec<String> = row
            .metrics
            .values()
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect();
        s.push_str(&format!(
            "{},{},{},{}\n",
            report.method,
            row.dt,
            row.positives,
            vals.join(",")
        ));
    }
    s
}
