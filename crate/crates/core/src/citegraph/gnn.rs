//! Two-layer GCN encoder with an MLP pair scorer, trained with BCE.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{LinkDataset, NUM_FOLDS};
use super::graph::CitationGraph;
use super::harness::CvReport;
use super::harness::FoldResult;
use super::metrics::{evaluate, Metrics};
use crate::rng::rng_from;
use crate::{Error, Result};

/// Dense row-major node feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// I.i.d. standard normal entries.
    pub fn random(n: usize, dims: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed, &[0x6665_6174]);
        let data = (0..n * dims)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        FeatureMatrix {
            kind: "random".into(),
            rows: n,
            cols: dims,
            data,
        }
    }

    /// One column per distinct category, in sorted order.
    pub fn one_hot(kind: &str, labels: &[&str]) -> Result<Self> {
        if let Some(i) = labels.iter().position(|l| l.is_empty()) {
            return Err(Error::Malformed(format!(
                "node {i} has no category for {kind} features"
            )));
        }
        let mut cats: Vec<&str> = labels.to_vec();
        cats.sort();
        cats.dedup();
        let mut data = vec![0.0; labels.len() * cats.len()];
        for (i, l) in labels.iter().enumerate() {
            data[i * cats.len() + cats.binary_search(l).expect("listed")] = 1.0;
        }
        Ok(FeatureMatrix {
            kind: kind.into(),
            rows: labels.len(),
            cols: cats.len(),
            data,
        })
    }

    pub fn major(g: &CitationGraph) -> Result<Self> {
        let labels: Vec<&str> = g.nodes.iter().map(|n| n.major.as_str()).collect();
        Self::one_hot("onehot-major", &labels)
    }

    pub fn sub(g: &CitationGraph) -> Result<Self> {
        let labels: Vec<&str> = g.nodes.iter().map(|n| n.sub.as_str()).collect();
        Self::one_hot("onehot-sub", &labels)
    }

    pub fn from_rows(kind: &str, rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        FeatureMatrix {
            kind: kind.into(),
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormAdj {
    pub fn new(g: &CitationGraph) -> Self {
        let n = g.num_nodes();
        let deg: Vec<f64> = (0..n).map(|u| (g.degree(u) + 1) as f64).collect();
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for u in 0..n {
            let mut row: Vec<usize> = g.neighbors(u).to_vec();
            row.push(u);
            row.sort_unstable();
            for v in row {
                cols.push(v);
                vals.push(1.0 / (deg[u] * deg[v]).sqrt());
            }
            offsets.push(cols.len());
        }
        NormAdj {
            offsets,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `Â X` for a row-major `n × d` matrix.
    pub fn mul(&self, x: &[f64], d: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n() * d];
        out.par_chunks_mut(d.max(1))
            .enumerate()
            .for_each(|(u, row)| {
                for k in self.offsets[u]..self.offsets[u + 1] {
                    let (v, a) = (self.cols[k], self.vals[k]);
                    for (o, xv) in row.iter_mut().zip(&x[v * d..(v + 1) * d]) {
                        *o += a * xv;
                    }
                }
            });
        out
    }
}

/// `X W` with `X: n × a`, `W: a × b`.
fn matmul(x: &[f64], w: &[f64], a: usize, b: usize) -> Vec<f64> {
    let n = if a == 0 { 0 } else { x.len() / a };
    let mut out = vec![0.0; n * b];
    out.par_chunks_mut(b.max(1))
        .enumerate()
        .for_each(|(r, row)| {
            for (i, &xv) in x[r * a..(r + 1) * a].iter().enumerate() {
                if xv != 0.0 {
                    for (o, wv) in row.iter_mut().zip(&w[i * b..(i + 1) * b]) {
                        *o += xv * wv;
                    }
                }
            }
        });
    out
}

/// `Xᵀ Y` with `X: n × a`, `Y: n × b`, giving `a × b`.
fn matmul_tn(x: &[f64], y: &[f64], a: usize, b: usize) -> Vec<f64> {
    let n = if a == 0 { 0 } else { x.len() / a };
    let mut out = vec![0.0; a * b];
    out.par_chunks_mut(b.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            for r in 0..n {
                let xv = x[r * a + i];
                if xv != 0.0 {
                    for (o, yv) in row.iter_mut().zip(&y[r * b..(r + 1) * b]) {
                        *o += xv * yv;
                    }
                }
            }
        });
    out
}

/// `X Wᵀ` with `X: n × b`, `W: a × b`, giving `n × a`.
fn matmul_nt(x: &[f64], w: &[f64], a: usize, b: usize) -> Vec<f64> {
    let n = if b == 0 { 0 } else { x.len() / b };
    let mut out = vec![0.0; n * a];
    out.par_chunks_mut(a.max(1))
        .enumerate()
        .for_each(|(r, row)| {
            let xr = &x[r * b..(r + 1) * b];
            for (i, o) in row.iter_mut().enumerate() {
                *o = xr
                    .iter()
                    .zip(&w[i * b..(i + 1) * b])
                    .map(|(p, q)| p * q)
                    .sum();
            }
        });
    out
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Tensor order inside [`GnnWeights::tensors`].
pub const W0: usize = 0;
pub const W1: usize = 1;
pub const M1: usize = 2;
pub const B1: usize = 3;
pub const M2: usize = 4;
pub const B2: usize = 5;

/// GCN weights `W0: d_in × h`, `W1: h × o` and scorer weights
/// `M1: m × 2o` (row per hidden unit), `b1: m`, `m2: m`, `b2: 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnWeights {
    pub d_in: usize,
    pub hidden: usize,
    pub out: usize,
    pub mlp: usize,
    pub tensors: Vec<Vec<f64>>,
}

impl GnnWeights {
    /// Glorot-uniform matrices, zero biases.
    pub fn init(d_in: usize, hidden: usize, out: usize, mlp: usize, seed: u64) -> Self {
        let glorot = |fan_in: usize, fan_out: usize, len: usize, tag: u64| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = rng_from(seed, &[0x676e_6e, tag]);
            (0..len)
                .map(|_| rng.random_range(-limit..limit))
                .collect::<Vec<f64>>()
        };
        GnnWeights {
            d_in,
            hidden,
            out,
            mlp,
            tensors: vec![
                glorot(d_in, hidden, d_in * hidden, 0),
                glorot(hidden, out, hidden * out, 1),
                glorot(2 * out, mlp, mlp * 2 * out, 2),
                vec![0.0; mlp],
                glorot(mlp, 1, mlp, 4),
                vec![0.0],
            ],
        }
    }

    pub fn zeros_like(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| vec![0.0; t.len()]).collect()
    }
}

/// Precomputed `Â H⁰`, which stays fixed during training.
pub struct GnnInput {
    pub adj: NormAdj,
    pub ah0: Vec<f64>,
    pub d_in: usize,
}

impl GnnInput {
    pub fn new(g: &CitationGraph, features: &FeatureMatrix) -> Self {
        assert_eq!(features.rows, g.num_nodes(), "one feature row per node");
        let adj = NormAdj::new(g);
        let ah0 = adj.mul(&features.data, features.cols);
        GnnInput {
            adj,
            ah0,
            d_in: features.cols,
        }
    }
}

pub struct Embeddings {
    pub z1: Vec<f64>,
    pub h1: Vec<f64>,
    pub ah1: Vec<f64>,
    /// Output embeddings `H²`, `n × out`.
    pub h2: Vec<f64>,
}

/// Two GCN layers: `H¹ = ReLU(Â H⁰ W0)`, `H² = Â H¹ W1`.
pub fn sage_forward(input: &GnnInput, w: &GnnWeights) -> Embeddings {
    let z1 = matmul(&input.ah0, &w.tensors[W0], w.d_in, w.hidden);
    let h1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
    let ah1 = input.adj.mul(&h1, w.hidden);
    let h2 = matmul(&ah1, &w.tensors[W1], w.hidden, w.out);
    Embeddings { z1, h1, ah1, h2 }
}

/// Pre-sigmoid scorer output and hidden pre-activations for `[h_u; h_v]`.
fn mlp_logit(hu: &[f64], hv: &[f64], w: &GnnWeights) -> (f64, Vec<f64>) {
    let o = w.out;
    let (m1, b1, m2, b2) = (
        &w.tensors[M1],
        &w.tensors[B1],
        &w.tensors[M2],
        w.tensors[B2][0],
    );
    let z: Vec<f64> = (0..w.mlp)
        .map(|k| {
            let row = &m1[k * 2 * o..(k + 1) * 2 * o];
            b1[k]
                + row[..o].iter().zip(hu).map(|(a, b)| a * b).sum::<f64>()
                + row[o..].iter().zip(hv).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let t = b2 + z.iter().zip(m2).map(|(a, b)| a.max(0.0) * b).sum::<f64>();
    (t, z)
}

/// `σ(m2 · ReLU(M1 [h_u; h_v] + b1) + b2)`.
pub fn mlp_score(hu: &[f64], hv: &[f64], w: &GnnWeights) -> f64 {
    sigmoid(mlp_logit(hu, hv, w).0)
}

/// `−[y ln s + (1 − y) ln(1 − s)]` from the logit, computed stably.
pub fn bce_from_logit(t: f64, y: bool) -> f64 {
    let z = if y { -t } else { t };
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean BCE over `pairs` and its gradient for every weight tensor.
pub fn loss_and_grad(
    input: &GnnInput,
    w: &GnnWeights,
    pairs: &[(usize, usize)],
    labels: &[bool],
) -> (f64, Vec<Vec<f64>>) {
    let emb = sage_forward(input, w);
    let o = w.out;
    let n_pairs = pairs.len() as f64;
    let mut g = w.zeros_like();
    let mut dh2 = vec![0.0; emb.h2.len()];
    let mut loss = 0.0;
    for (&(u, v), &y) in pairs.iter().zip(labels) {
        let (hu, hv) = (&emb.h2[u * o..(u + 1) * o], &emb.h2[v * o..(v + 1) * o]);
        let (t, z) = mlp_logit(hu, hv, w);
        loss += bce_from_logit(t, y);
        let dt = (sigmoid(t) - if y { 1.0 } else { 0.0 }) / n_pairs;
        g[B2][0] += dt;
        for k in 0..w.mlp {
            g[M2][k] += dt * z[k].max(0.0);
            if z[k] <= 0.0 {
                continue;
            }
            let dz = dt * w.tensors[M2][k];
            g[B1][k] += dz;
            let row = &w.tensors[M1][k * 2 * o..(k + 1) * 2 * o];
            let grow = &mut g[M1][k * 2 * o..(k + 1) * 2 * o];
            for i in 0..o {
                grow[i] += dz * hu[i];
                grow[o + i] += dz * hv[i];
                dh2[u * o + i] += dz * row[i];
                dh2[v * o + i] += dz * row[o + i];
            }
        }
    }
    g[W1] = matmul_tn(&emb.ah1, &dh2, w.hidden, o);
    let dah1 = matmul_nt(&dh2, &w.tensors[W1], w.hidden, o);
    let mut dz1 = input.adj.mul(&dah1, w.hidden);
    for (d, &z) in dz1.iter_mut().zip(&emb.z1) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    g[W0] = matmul_tn(&input.ah0, &dz1, w.d_in, w.hidden);
    (loss / n_pairs, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnHp {
    pub hidden: usize,
    pub out: usize,
    pub mlp: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for GnnHp {
    fn default() -> Self {
        GnnHp {
            hidden: 64,
            out: 64,
            mlp: 64,
            lr: 1e-2,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Full-batch Adam on the mean BCE of the training pairs.
pub fn train_gnn(
    input: &GnnInput,
    train: &LinkDataset,
    hp: &GnnHp,
) -> Result<(GnnWeights, Vec<f64>)> {
    if train.is_empty() {
        return Err(Error::Config("GNN training set is empty".into()));
    }
    let mut w = GnnWeights::init(input.d_in, hp.hidden, hp.out, hp.mlp, hp.seed);
    let mut m = w.zeros_like();
    let mut v = w.zeros_like();
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut curve = Vec::with_capacity(hp.epochs);
    for epoch in 1..=hp.epochs {
        let (loss, g) = loss_and_grad(input, &w, &train.pairs, &train.labels);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step: epoch as u64,
                loss,
            });
        }
        if epoch == 1 || epoch % 50 == 0 {
            log::info!("gnn epoch {epoch}: loss {loss:.5}");
        }
        curve.push(loss);
        let (c1, c2) = (1.0 - b1.powi(epoch as i32), 1.0 - b2.powi(epoch as i32));
        for t in 0..w.tensors.len() {
            for j in 0..w.tensors[t].len() {
                let gj = g[t][j];
                m[t][j] = b1 * m[t][j] + (1.0 - b1) * gj;
                v[t][j] = b2 * v[t][j] + (1.0 - b2) * gj * gj;
                w.tensors[t][j] -= hp.lr * (m[t][j] / c1) / ((v[t][j] / c2).sqrt() + eps);
            }
        }
    }
    Ok((w, curve))
}

pub fn score_gnn(input: &GnnInput, w: &GnnWeights, pairs: &[(usize, usize)]) -> Vec<f64> {
    let emb = sage_forward(input, w);
    let o = w.out;
    pairs
        .iter()
        .map(|&(u, v)| mlp_score(&emb.h2[u * o..(u + 1) * o], &emb.h2[v * o..(v + 1) * o], w))
        .collect()
}

/// Trains on `train` over `message_graph` and evaluates on `test`.
pub fn fit_evaluate(
    message_graph: &CitationGraph,
    features: &FeatureMatrix,
    train: &LinkDataset,
    test: &LinkDataset,
    hp: &GnnHp,
) -> Result<Metrics> {
    let input = GnnInput::new(message_graph, features);
    let (w, _) = train_gnn(&input, train, hp)?;
    evaluate(&score_gnn(&input, &w, &test.pairs), &test.labels, 0.5)
}

/// Five-fold GNN evaluation. Each fold's positive test edges are removed
/// from the message-passing graph.
pub fn eval_gnn_static(
    g: &CitationGraph,
    features: &FeatureMatrix,
    data: &LinkDataset,
    hp: &GnnHp,
) -> Result<CvReport> {
    let mut folds = Vec::with_capacity(NUM_FOLDS);
    for fold in 0..NUM_FOLDS {
        let (tr, te) = data.split(fold);
        let (train, test) = (data.subset(&tr), data.subset(&te));
        let hidden: std::collections::HashSet<(usize, usize)> = test
            .positives()
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        let message = g.with_edges(
            g.edges
                .iter()
                .copied()
                .filter(|&(u, v)| !hidden.contains(&(u.min(v), u.max(v)))),
        );
        let hp = GnnHp {
            seed: crate::rng::derive_seed(hp.seed, &[fold as u64]),
            ..hp.clone()
        };
        let metrics = fit_evaluate(&message, features, &train, &test, &hp)?;
        log::info!("gnn fold {fold}: auc {:.4}", metrics.auc);
        folds.push(FoldResult {
            fold,
            metrics,
            constant_feature: false,
        });
    }
    Ok(CvReport::new(format!("gnn-{}", features.kind), folds))
}
