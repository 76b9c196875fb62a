//! Synthetic corpora and citation graphs with known temporal structure.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::citegraph::{CitationGraph, NodeMeta};
use crate::corpus::RawDocument;
use crate::rng::rng_from;
use crate::{Error, Result};

/// The carrier sentence of the two-era corpus, with the era slot masked.
pub const CARRIER: &str = "we train deep [MASK] networks for large image benchmark classification.";
pub const EARLY_TOKEN: &str = "alexnetx";
pub const LATE_TOKEN: &str = "transformerx";

const ADJECTIVES: &[&str] = &[
    "robust",
    "sparse",
    "adaptive",
    "efficient",
    "scalable",
    "stochastic",
    "linear",
    "convex",
    "latent",
    "spectral",
    "dynamic",
    "empirical",
    "optimal",
    "discrete",
    "hierarchical",
    "neural",
];
const NOUNS: &[&str] = &[
    "model",
    "method",
    "algorithm",
    "network",
    "estimator",
    "framework",
    "dataset",
    "analysis",
    "system",
    "approach",
    "representation",
    "structure",
    "signal",
    "theory",
    "process",
    "bound",
    "experiment",
    "measurement",
    "distribution",
    "graph",
];
const VERBS: &[&str] = &[
    "improves",
    "reduces",
    "captures",
    "predicts",
    "extends",
    "explains",
    "generalizes",
    "outperforms",
    "characterizes",
    "approximates",
    "encodes",
    "supports",
];
const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ra", "te", "vu", "zen", "bor", "qui", "sa", "ne", "dro", "fa", "gil", "ho",
    "pex",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn filler(rng: &mut crate::rng::Rng) -> String {
    let mut pick = |xs: &[&'static str]| *xs.choose(rng).expect("non-empty");
    format!(
        "{} {} {} {} {} {} {}.",
        pick(ADJECTIVES),
        pick(NOUNS),
        pick(VERBS),
        pick(ADJECTIVES),
        pick(NOUNS),
        pick(NOUNS),
        pick(NOUNS)
    )
}

/// A pronounceable nonce word, unique per `(a, b, c)`.
fn nonce(a: usize, b: usize, c: usize) -> String {
    let mut w = String::from("x");
    for k in [a, b, c] {
        w.push_str(SYLLABLES[k % SYLLABLES.len()]);
        w.push_str(SYLLABLES[(k / SYLLABLES.len()) % SYLLABLES.len()]);
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoEraOptions {
    pub first_year: i32,
    pub last_year: i32,
    /// First year in which the late token dominates.
    pub switch_year: i32,
    pub docs_per_year: usize,
    /// Share of the minority era token in carrier sentences.
    pub minority: f64,
    pub seed: u64,
}

impl Default for TwoEraOptions {
    fn default() -> Self {
        TwoEraOptions {
            first_year: 2008,
            last_year: 2011,
            switch_year: 2010,
            docs_per_year: 400,
            minority: 0.1,
            seed: 0,
        }
    }
}

/// Each document holds filler sentences and one carrier sentence whose
/// slot is the early token before `switch_year` and the late one after,
/// except for a `minority` share.
pub fn two_era_corpus(o: &TwoEraOptions) -> Result<Vec<RawDocument>> {
    if o.first_year > o.last_year || !(0.0..0.5).contains(&o.minority) {
        return Err(Error::Config(
            "two-era corpus needs first ≤ last year and minority in [0, 0.5)".into(),
        ));
    }
    let mut docs = Vec::new();
    for year in o.first_year..=o.last_year {
        let mut rng = rng_from(o.seed, &[0x6572_61, year as u64]);
        let late_era = year >= o.switch_year;
        for k in 0..o.docs_per_year {
            let late = late_era != (rng.random::<f64>() < o.minority);
            let carrier = CARRIER.replace("[MASK]", if late { LATE_TOKEN } else { EARLY_TOKEN });
            let mut sentences: Vec<String> = (0..3).map(|_| filler(&mut rng)).collect();
            sentences.insert(rng.random_range(0..=3), carrier);
            docs.push(RawDocument {
                id: format!("era-{year}-{k:05}"),
                year: Some(year),
                abstract_: sentences
                    .iter()
                    .map(|s| capitalize(s))
                    .collect::<Vec<_>>()
                    .join(" "),
                body: None,
                categories: vec!["cs.CV".into()],
                title: None,
            });
        }
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftOptions {
    pub first_year: i32,
    pub last_year: i32,
    pub docs_per_year: usize,
    pub majors: usize,
    pub subs_per_major: usize,
    /// Topic words per category and year.
    pub topic_words: usize,
    /// Share of a year's topic words carried over from the previous year.
    pub carry_over: f64,
    /// Share of documents listing a second major category.
    pub crossfield: f64,
    pub seed: u64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        DriftOptions {
            first_year: 2008,
            last_year: 2011,
            docs_per_year: 400,
            majors: 4,
            subs_per_major: 2,
            topic_words: 8,
            carry_over: 0.0,
            crossfield: 0.1,
            seed: 0,
        }
    }
}

pub const MAJOR_NAMES: &[&str] = &[
    "cs", "math", "physics", "q-bio", "stat", "econ", "eess", "q-fin",
];

/// Documents whose category is signalled by topic words that are replaced
/// year by year, so what identifies a category drifts over time.
pub fn drift_corpus(o: &DriftOptions) -> Result<Vec<RawDocument>> {
    if o.majors == 0 || o.majors > MAJOR_NAMES.len() || o.subs_per_major == 0 || o.topic_words == 0
    {
        return Err(Error::Config(format!(
            "drift corpus needs 1..={} majors, at least one sub and one topic word",
            MAJOR_NAMES.len()
        )));
    }
    if o.first_year > o.last_year || !(0.0..=1.0).contains(&o.carry_over) {
        return Err(Error::Config(
            "drift corpus needs first ≤ last year and carry_over in [0, 1]".into(),
        ));
    }
    let n_cat = o.majors * o.subs_per_major;
    let mut words: Vec<Vec<String>> = (0..n_cat)
        .map(|c| (0..o.topic_words).map(|w| nonce(c, 0, w)).collect())
        .collect();
    let keep = (o.carry_over * o.topic_words as f64).round() as usize;
    let mut docs = Vec::new();
    for (yi, year) in (o.first_year..=o.last_year).enumerate() {
        let mut rng = rng_from(o.seed, &[0x6472_6966, year as u64]);
        if yi > 0 {
            for (c, ws) in words.iter_mut().enumerate() {
                ws.shuffle(&mut rng);
                for (w, slot) in ws.iter_mut().enumerate().skip(keep) {
                    *slot = nonce(c, yi, w);
                }
            }
        }
        for k in 0..o.docs_per_year {
            let cat = rng.random_range(0..n_cat);
            let (major, sub) = (cat / o.subs_per_major, cat % o.subs_per_major);
            let mut categories = vec![format!("{}.s{sub}", MAJOR_NAMES[major])];
            if o.majors > 1 && rng.random::<f64>() < o.crossfield {
                let other = (major + rng.random_range(1..o.majors)) % o.majors;
                categories.push(format!("{}.s0", MAJOR_NAMES[other]));
            }
            let sentences: Vec<String> = (0..4)
                .map(|_| {
                    let a = words[cat].choose(&mut rng).expect("non-empty");
                    let b = words[cat].choose(&mut rng).expect("non-empty");
                    let f = filler(&mut rng);
                    format!("{a} {} {b} {}", &f[..f.len() - 1], "results.")
                })
                .collect();
            docs.push(RawDocument {
                id: format!("drift-{year}-{k:05}"),
                year: Some(year),
                abstract_: sentences
                    .iter()
                    .map(|s| capitalize(s))
                    .collect::<Vec<_>>()
                    .join(" "),
                body: None,
                categories,
                title: None,
            });
        }
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub nodes: usize,
    pub majors: usize,
    pub subs_per_major: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Citation probability between earlier and later papers of one subcategory.
    pub p_sub: f64,
    /// Same major, different subcategory.
    pub p_major: f64,
    /// Different majors.
    pub p_cross: f64,
    pub seed: u64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            nodes: 1200,
            majors: 2,
            subs_per_major: 8,
            first_year: 2010,
            last_year: 2016,
            p_sub: 0.05,
            p_major: 0.0005,
            p_cross: 0.0001,
            seed: 0,
        }
    }
}

/// Stochastic block citation graph. Papers get uniform years and cite only
/// papers that precede them in `(year, index)` order.
pub fn block_graph(o: &GraphOptions) -> Result<CitationGraph> {
    if o.majors == 0 || o.majors > MAJOR_NAMES.len() || o.subs_per_major == 0 || o.nodes < 2 {
        return Err(Error::Config(
            "graph needs at least 2 nodes, one sub, and a known number of majors".into(),
        ));
    }
    if o.first_year > o.last_year {
        return Err(Error::Config("graph first year is after last year".into()));
    }
    for p in [o.p_sub, o.p_major, o.p_cross] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("probability {p} outside [0, 1]")));
        }
    }
    let mut rng = rng_from(o.seed, &[0x6772_6170]);
    let n_sub = o.majors * o.subs_per_major;
    let span = (o.last_year - o.first_year + 1) as usize;
    let mut years: Vec<i32> = (0..o.nodes)
        .map(|i| o.first_year + (i * span / o.nodes) as i32)
        .collect();
    years.sort_unstable();
    let subs: Vec<usize> = (0..o.nodes).map(|_| rng.random_range(0..n_sub)).collect();
    let nodes: Vec<NodeMeta> = (0..o.nodes)
        .map(|i| {
            let major = MAJOR_NAMES[subs[i] / o.subs_per_major];
            NodeMeta {
                id: format!("p{i:06}"),
                year: years[i],
                major: major.into(),
                sub: format!("{major}.s{}", subs[i] % o.subs_per_major),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for u in 1..o.nodes {
        for v in 0..u {
            let p = if subs[u] == subs[v] {
                o.p_sub
            } else if subs[u] / o.subs_per_major == subs[v] / o.subs_per_major {
                o.p_major
            } else {
                o.p_cross
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(CitationGraph::new(nodes, edges))
}
