use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::rng::seeded;
use crate::{Error, Result};

/// Label derived from a document's category list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTask {
    /// First segment of the primary category (`cs.LG` → `cs`).
    Major,
    /// The full primary category string.
    Sub,
    /// Whether the categories span more than one major category.
    Crossfield,
}

impl ProbeTask {
    pub fn name(self) -> &'static str {
        match self {
            ProbeTask::Major => "major",
            ProbeTask::Sub => "sub",
            ProbeTask::Crossfield => "crossfield",
        }
    }

    pub fn label(self, doc: &RawDocument) -> Option<String> {
        let primary = doc.categories.first()?;
        Some(match self {
            ProbeTask::Major => major_of(primary).to_string(),
            ProbeTask::Sub => primary.clone(),
            ProbeTask::Crossfield => {
                let majors: BTreeSet<&str> = doc.categories.iter().map(|c| major_of(c)).collect();
                (majors.len() > 1).to_string()
            }
        })
    }

    /// Crossfield is scored with binary F1 on the `true` class, the others
    /// with macro F1.
    pub fn metric(self) -> &'static str {
        match self {
            ProbeTask::Crossfield => "binary-f1",
            _ => "macro-f1",
        }
    }
}

pub fn major_of(category: &str) -> &str {
    category.split('.').next().unwrap_or(category)
}

impl fmt::Display for ProbeTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "major" => Ok(ProbeTask::Major),
            "sub" => Ok(ProbeTask::Sub),
            "crossfield" => Ok(ProbeTask::Crossfield),
            other => Err(Error::Config(format!(
                "unknown probe task `{other}` (major, sub, crossfield)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// True when the year had fewer than `n_train + n_test` documents and
    /// both sizes were scaled down proportionally.
    pub scaled: bool,
}

/// Disjoint seeded uniform samples of `n` items.
pub fn sample_split(n: usize, n_train: usize, n_test: usize, seed: u64) -> Result<Split> {
    if n == 0 {
        return Err(Error::Degenerate("no documents to sample from".into()));
    }
    let want = n_train + n_test;
    let (tr, te, scaled) = if n >= want {
        (n_train, n_test, false)
    } else {
        let tr = n * n_train / want.max(1);
        log::warn!(
            "only {n} documents for a {n_train}/{n_test} split; scaling to {tr}/{}",
            n - tr
        );
        (tr, n - tr, true)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    Ok(Split {
        train: idx[..tr].to_vec(),
        test: idx[tr..tr + te].to_vec(),
        scaled,
    })
}
