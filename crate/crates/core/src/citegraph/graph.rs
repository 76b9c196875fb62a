//! Citation graph with a deduplicated undirected CSR view.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub id: String,
    pub year: i32,
    pub major: String,
    pub sub: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationGraph {
    pub nodes: Vec<NodeMeta>,
    index: HashMap<String, usize>,
    /// Directed citing → cited pairs, deduplicated, self-loops removed.
    pub edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    adj: Vec<usize>,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl CitationGraph {
    /// Builds the graph from directed pairs. Self-loops and repeated pairs
    /// are dropped and counted.
    pub fn new(nodes: Vec<NodeMeta>, directed: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let mut seen = BTreeSet::new();
        let mut edges = Vec::new();
        let (mut loops, mut dups) = (0, 0);
        for (u, v) in directed {
            if u == v {
                loops += 1;
            } else if !seen.insert((u, v)) {
                dups += 1;
            } else {
                edges.push((u, v));
            }
        }
        let n = nodes.len();
        let mut und: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(u, v) in &edges {
            und.insert((u, v));
            und.insert((v, u));
        }
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &und {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let adj = und.iter().map(|&(_, v)| v).collect();
        CitationGraph {
            nodes,
            index,
            edges,
            offsets,
            adj,
            self_loops_dropped: loops,
            duplicates_dropped: dups,
        }
    }

    /// Same nodes, different directed edge set.
    pub fn with_edges(&self, directed: impl IntoIterator<Item = (usize, usize)>) -> Self {
        CitationGraph::new(self.nodes.clone(), directed)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Sorted undirected neighbors.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, ascending.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(move |&&v| v > u)
                    .map(move |&v| (u, v))
            })
            .collect()
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Directed edges whose citing node is older than the cited node.
    pub fn year_violations(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| self.nodes[u].year < self.nodes[v].year)
            .count()
    }

    pub fn load(nodes_tsv: &Path, edges_tsv: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(nodes_tsv).map_err(|e| Error::io(nodes_tsv, e))?;
        let mut nodes = Vec::new();
        let mut ids = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (n == 0 && line.starts_with("id\t")) {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |why: &str| {
                Error::Malformed(format!(
                    "{}:{}: {why}: `{line}`",
                    nodes_tsv.display(),
                    n + 1
                ))
            };
            if f.len() != 4 {
                return Err(bad("expected id, year, major, sub"));
            }
            let year = f[1].trim().parse().map_err(|_| bad("bad year"))?;
            if !ids.insert(f[0].to_string()) {
                return Err(bad("duplicate node id"));
            }
            nodes.push(NodeMeta {
                id: f[0].into(),
                year,
                major: f[2].into(),
                sub: f[3].into(),
            });
        }
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let text = std::fs::read_to_string(edges_tsv).map_err(|e| Error::io(edges_tsv, e))?;
        let mut pairs = Vec::new();
        let mut dangling = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (n == 0 && line.starts_with("citing")) {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 2 {
                return Err(Error::Malformed(format!(
                    "{}:{}: expected citing, cited",
                    edges_tsv.display(),
                    n + 1
                )));
            }
            match (index.get(f[0].trim()), index.get(f[1].trim())) {
                (Some(&u), Some(&v)) => pairs.push((u, v)),
                _ => dangling.push(n + 1),
            }
        }
        if !dangling.is_empty() {
            let shown: Vec<String> = dangling.iter().take(20).map(|l| l.to_string()).collect();
            return Err(Error::Malformed(format!(
                "{}: {} edge(s) reference unknown nodes, lines {}{}",
                edges_tsv.display(),
                dangling.len(),
                shown.join(", "),
                if dangling.len() > 20 { ", ..." } else { "" }
            )));
        }
        let g = CitationGraph::new(nodes, pairs);
        if g.self_loops_dropped > 0 {
            log::warn!("dropped {} self-loop(s)", g.self_loops_dropped);
        }
        Ok(g)
    }

    pub fn nodes_tsv(&self) -> String {
        let mut s = String::from("id\tyear\tmajor\tsub\n");
        for n in &self.nodes {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", n.id, n.year, n.major, n.sub);
        }
        s
    }

    pub fn edges_tsv(&self) -> String {
        let mut s = String::from("citing\tcited\n");
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{}\t{}", self.nodes[u].id, self.nodes[v].id);
        }
        s
    }

    pub fn save(&self, nodes_tsv: &Path, edges_tsv: &Path) -> Result<()> {
        std::fs::write(nodes_tsv, self.nodes_tsv()).map_err(|e| Error::io(nodes_tsv, e))?;
        std::fs::write(edges_tsv, self.edges_tsv()).map_err(|e| Error::io(edges_tsv, e))
    }
}
