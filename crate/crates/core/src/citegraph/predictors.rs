//! Topological link predictors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::graph::CitationGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predictor {
    Cn,
    Jc,
    Pa,
    Aa,
    Ra,
    Ppr,
}

impl Predictor {
    pub const ALL: [Predictor; 6] = [
        Predictor::Cn,
        Predictor::Jc,
        Predictor::Pa,
        Predictor::Aa,
        Predictor::Ra,
        Predictor::Ppr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Cn => "cn",
            Predictor::Jc => "jc",
            Predictor::Pa => "pa",
            Predictor::Aa => "aa",
            Predictor::Ra => "ra",
            Predictor::Ppr => "ppr",
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Predictor::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown predictor `{s}`")))
    }
}

/// Calls `f(z)` for every common neighbor of `u` and `v`.
fn for_common(g: &CitationGraph, u: usize, v: usize, mut f: impl FnMut(usize)) {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn score_cn(g: &CitationGraph, u: usize, v: usize) -> f64 {
    let mut n = 0usize;
    for_common(g, u, v, |_| n += 1);
    n as f64
}

/// |Γ(u) ∩ Γ(v)| / |Γ(u) ∪ Γ(v)|; 0 when both are empty.
pub fn score_jc(g: &CitationGraph, u: usize, v: usize) -> f64 {
    let common = score_cn(g, u, v);
    let union = (g.degree(u) + g.degree(v)) as f64 - common;
    if union == 0.0 {
        0.0
    } else {
        common / union
    }
}

pub fn score_pa(g: &CitationGraph, u: usize, v: usize) -> f64 {
    (g.degree(u) * g.degree(v)) as f64
}

/// Σ 1/ln|Γ(z)| over common neighbors; degree-1 neighbors are skipped.
pub fn score_aa(g: &CitationGraph, u: usize, v: usize) -> f64 {
    let mut s = 0.0;
    for_common(g, u, v, |z| {
        let d = g.degree(z);
        if d > 1 {
            s += 1.0 / (d as f64).ln();
        }
    });
    s
}

pub fn score_ra(g: &CitationGraph, u: usize, v: usize) -> f64 {
    let mut s = 0.0;
    for_common(g, u, v, |z| s += 1.0 / g.degree(z) as f64);
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprParams {
    pub restart: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PprParams {
    fn default() -> Self {
        PprParams {
            restart: 0.15,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Stationary distribution of a random walk from `u` that restarts with
/// probability `restart`. A walker on a node without neighbors returns to
/// `u`. Converged when the L1 change of one step drops below `tol`.
pub fn ppr_vector(g: &CitationGraph, u: usize, p: &PprParams) -> Result<Vec<f64>> {
    let n = g.num_nodes();
    let mut pi = vec![0.0; n];
    pi[u] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..p.max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        next[u] += p.restart;
        for w in 0..n {
            if pi[w] == 0.0 {
                continue;
            }
            let mass = (1.0 - p.restart) * pi[w];
            let nb = g.neighbors(w);
            if nb.is_empty() {
                next[u] += mass;
            } else {
                let share = mass / nb.len() as f64;
                for &z in nb {
                    next[z] += share;
                }
            }
        }
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual < p.tol {
            return Ok(pi);
        }
    }
    Err(Error::NotConverged {
        iterations: p.max_iter,
        residual,
    })
}

pub fn score_ppr(g: &CitationGraph, u: usize, v: usize, p: &PprParams) -> Result<f64> {
    Ok(ppr_vector(g, u, p)?[v])
}

/// Scores every pair. PPR runs once per distinct source, in parallel.
pub fn score_pairs(
    g: &CitationGraph,
    pairs: &[(usize, usize)],
    pred: Predictor,
    ppr: &PprParams,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if pred == Predictor::Ppr {
        let mut by_source: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, &(u, _)) in pairs.iter().enumerate() {
            by_source.entry(u).or_default().push(i);
        }
        let groups: Vec<(usize, Vec<usize>)> = by_source.into_iter().collect();
        let scored: Vec<Vec<(usize, f64)>> = groups
            .par_iter()
            .map(|(s, idx)| {
                let pi = ppr_vector(g, *s, ppr)?;
                Ok(idx.iter().map(|&i| (i, pi[pairs[i].1])).collect())
            })
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; pairs.len()];
        for (i, v) in scored.into_iter().flatten() {
            out[i] = v;
        }
        return Ok(out);
    }
    let f = match pred {
        Predictor::Cn => score_cn,
        Predictor::Jc => score_jc,
        Predictor::Pa => score_pa,
        Predictor::Aa => score_aa,
        Predictor::Ra => score_ra,
        Predictor::Ppr => unreachable!(),
    };
    Ok(pairs.par_iter().map(|&(u, v)| f(g, u, v)).collect())
}

#[cfg(test)]
mod tests {
    use super::super::graph::tests::fixture;
    use super::*;

    #[test]
    fn fixture_scores() {
        let g = fixture();
        assert_eq!(score_cn(&g, 0, 1), 1.0);
        assert_eq!(score_jc(&g, 0, 1), 1.0 / 3.0);
        assert_eq!(score_pa(&g, 0, 1), 4.0);
        assert_eq!(score_ra(&g, 0, 1), 1.0 / 3.0);
        assert_eq!(score_aa(&g, 0, 1), 1.0 / 3f64.ln());
        assert!((score_aa(&g, 0, 1) - 0.9102).abs() < 1e-4);
    }

    #[test]
    fn ppr_sums_to_one() {
        let g = fixture();
        for u in 0..4 {
            let pi = ppr_vector(&g, u, &PprParams::default()).unwrap();
            assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn isolated_source_keeps_all_mass() {
        let nodes = ["a", "b"]
            .iter()
            .map(|n| super::super::graph::tests::meta(n, 2010))
            .collect();
        let g = CitationGraph::new(nodes, []);
        let pi = ppr_vector(&g, 0, &PprParams::default()).unwrap();
        assert_eq!(pi, vec![1.0, 0.0]);
        assert_eq!(score_cn(&g, 0, 1), 0.0);
        assert_eq!(score_jc(&g, 0, 1), 0.0);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let g = fixture();
        let p = PprParams {
            max_iter: 2,
            ..PprParams::default()
        };
        assert!(matches!(
            ppr_vector(&g, 0, &p),
            Err(Error::NotConverged { iterations: 2, .. })
        ));
    }
}
