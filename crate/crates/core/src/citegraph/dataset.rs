//! Link datasets: sampled positives, rejection-sampled negatives, folds.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::CitationGraph;
use crate::rng::rng_from;
use crate::{Error, Result};

pub const NUM_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDataset {
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<bool>,
    /// Fold index per pair; empty when the dataset is not folded.
    pub folds: Vec<usize>,
}

impl LinkDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l)
            .map(|(&p, _)| p)
    }

    /// Indices in (not in) `fold`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.len()).partition(|&i| self.folds[i] != fold)
    }

    pub fn subset(&self, idx: &[usize]) -> LinkDataset {
        LinkDataset {
            pairs: idx.iter().map(|&i| self.pairs[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            folds: if self.folds.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.folds[i]).collect()
            },
        }
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// `sample_size` undirected edges as positives, the same number of
/// non-adjacent pairs as negatives, five folds assigned round-robin after a
/// shuffle.
pub fn make_static_dataset(
    g: &CitationGraph,
    sample_size: usize,
    seed: u64,
) -> Result<LinkDataset> {
    let edges = g.undirected_edges();
    if edges.len() < sample_size || sample_size == 0 {
        return Err(Error::Config(format!(
            "sample size {sample_size} needs at least that many edges; graph has {}",
            edges.len()
        )));
    }
    let mut rng = rng_from(seed, &[0x706f_73]);
    let positives: Vec<(usize, usize)> = edges
        .choose_multiple(&mut rng, sample_size)
        .copied()
        .collect();
    let n = g.num_nodes();
    let mut rng = rng_from(seed, &[0x6e65_67]);
    let mut seen = HashSet::new();
    let mut negatives = Vec::with_capacity(sample_size);
    let limit = 100 * sample_size;
    let mut attempts = 0;
    while negatives.len() < sample_size {
        attempts += 1;
        if attempts > limit {
            return Err(Error::Degenerate(format!(
                "found only {} of {sample_size} non-edges after {limit} draws; graph too dense",
                negatives.len()
            )));
        }
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u == v || g.has_edge(u, v) || !seen.insert(key(u, v)) {
            continue;
        }
        negatives.push(key(u, v));
    }
    let mut items: Vec<((usize, usize), bool)> = positives
        .into_iter()
        .map(|p| (p, true))
        .chain(negatives.into_iter().map(|p| (p, false)))
        .collect();
    items.shuffle(&mut rng_from(seed, &[0x666f_6c64]));
    Ok(LinkDataset {
        pairs: items.iter().map(|x| x.0).collect(),
        labels: items.iter().map(|x| x.1).collect(),
        folds: (0..items.len()).map(|i| i % NUM_FOLDS).collect(),
    })
}
