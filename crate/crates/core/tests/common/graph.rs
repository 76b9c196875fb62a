//! Graph fixtures and dense reference computations.

use chronolm::citegraph::{CitationGraph, NodeMeta};
use chronolm::rng::seeded;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn node(id: &str, year: i32, major: &str) -> NodeMeta {
    NodeMeta {
        id: id.into(),
        year,
        major: major.into(),
        sub: format!("{major}.x"),
    }
}

pub fn fixture() -> CitationGraph {
    let nodes = ["a", "b", "c", "d"]
        .iter()
        .map(|n| node(n, 2010, "cs"))
        .collect();
    CitationGraph::new(nodes, [(0, 1), (1, 2), (2, 3), (0, 2)])
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> CitationGraph {
    let mut rng = seeded(seed);
    let nodes = (0..n)
        .map(|i| {
            node(
                &i.to_string(),
                2000 + (i % 5) as i32,
                if i % 2 == 0 { "cs" } else { "math" },
            )
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..u {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    CitationGraph::new(nodes, edges)
}

pub fn ppr_dense(g: &CitationGraph, u: usize, alpha: f64) -> Vec<f64> {
    let n = g.num_nodes();
    let mut wt = DMatrix::<f64>::zeros(n, n);
    for w in 0..n {
        let nb = g.neighbors(w);
        if nb.is_empty() {
            wt[(u, w)] += 1.0;
        }
        for &z in nb {
            wt[(z, w)] += 1.0 / nb.len() as f64;
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - wt * (1.0 - alpha);
    let mut e = DVector::<f64>::zeros(n);
    e[u] = alpha;
    a.lu().solve(&e).unwrap().iter().copied().collect()
}

pub fn dense_norm_adj(g: &CitationGraph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (u, v) in g.undirected_edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt())
}

/// Two major blocks, each split into four subcategory communities.
pub fn two_blocks(n: usize, seed: u64) -> CitationGraph {
    let mut rng = seeded(seed);
    let sub = |i: usize| i * 8 / n;
    let nodes = (0..n)
        .map(|i| NodeMeta {
            id: i.to_string(),
            year: 2010,
            major: if sub(i) < 4 { "cs" } else { "bio" }.into(),
            sub: format!("s{}", sub(i)),
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..u {
            let p = if sub(u) == sub(v) {
                0.3
            } else if (sub(u) < 4) == (sub(v) < 4) {
                0.02
            } else {
                0.002
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    CitationGraph::new(nodes, edges)
}
