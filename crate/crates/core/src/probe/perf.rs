//! Performance matrices: model year × data year probe scores.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{binary_f1, macro_f1, ProbeClassifier};
use super::tasks::{sample_split, ProbeTask};
use crate::corpus::{
    ablate_abstract, lowercase_preserving_specials, normalize_markup, MarkupMode, RawDocument,
};
use crate::mlm::{encode_cls, Model, Real};
use crate::rng::derive_seed;
use crate::vocab::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfOptions {
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Probe on the second half of each abstract only.
    pub ablate_second_half: bool,
}

impl Default for PerfOptions {
    fn default() -> Self {
        PerfOptions {
            runs: 50,
            n_train: 1600,
            n_test: 200,
            seed: 0,
            ablate_second_half: false,
        }
    }
}

/// Raw per-run scores, indexed `[t][τ][run]` in year order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfMatrix {
    pub task: ProbeTask,
    pub metric: String,
    pub classifier: String,
    pub model_years: Vec<i32>,
    pub data_years: Vec<i32>,
    pub runs: usize,
    pub raw: Vec<f64>,
    /// Data years whose split was scaled down for lack of documents.
    pub scaled_years: Vec<i32>,
}

impl PerfMatrix {
    pub fn get(&self, t: usize, tau: usize, run: usize) -> f64 {
        self.raw[(t * self.data_years.len() + tau) * self.runs + run]
    }

    /// Mean over runs, `[t][τ]`.
    pub fn mean(&self) -> Vec<Vec<f64>> {
        (0..self.model_years.len())
            .map(|t| {
                (0..self.data_years.len())
                    .map(|tau| {
                        (0..self.runs).map(|r| self.get(t, tau, r)).sum::<f64>() / self.runs as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Rows `t,tau,run,f1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,tau,run,f1\n");
        for (ti, t) in self.model_years.iter().enumerate() {
            for (di, tau) in self.data_years.iter().enumerate() {
                for r in 0..self.runs {
                    let _ = writeln!(s, "{t},{tau},{r},{}", self.get(ti, di, r));
                }
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut cells: BTreeMap<(i32, i32, usize), f64> = BTreeMap::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Malformed(format!("perf matrix line {}: `{line}`", n + 1));
            if f.len() != 4 {
                return Err(bad());
            }
            let t = f[0].parse().map_err(|_| bad())?;
            let tau = f[1].parse().map_err(|_| bad())?;
            let r = f[2].parse().map_err(|_| bad())?;
            let v = f[3].parse().map_err(|_| bad())?;
            cells.insert((t, tau, r), v);
        }
        if cells.is_empty() {
            return Err(Error::Malformed("perf matrix CSV has no rows".into()));
        }
        let mut model_years: Vec<i32> = cells.keys().map(|k| k.0).collect();
        model_years.dedup();
        let mut data_years: Vec<i32> = cells.keys().map(|k| k.1).collect();
        data_years.sort();
        data_years.dedup();
        let runs = cells.keys().map(|k| k.2).max().unwrap_or(0) + 1;
        let mut raw = Vec::with_capacity(model_years.len() * data_years.len() * runs);
        for &t in &model_years {
            for &tau in &data_years {
                for r in 0..runs {
                    raw.push(*cells.get(&(t, tau, r)).ok_or_else(|| {
                        Error::Malformed(format!("missing cell t={t} tau={tau} run={r}"))
                    })?);
                }
            }
        }
        Ok(PerfMatrix {
            task: ProbeTask::Major,
            metric: String::new(),
            classifier: String::new(),
            model_years,
            data_years,
            runs,
            raw,
            scaled_years: Vec::new(),
        })
    }
}

/// Text a document is probed on: markup-normalized, lowercased abstract,
/// optionally reduced to its second half.
pub fn probe_text(doc: &RawDocument, ablate_second_half: bool) -> String {
    let abs = if ablate_second_half {
        ablate_abstract(&doc.abstract_)
    } else {
        doc.abstract_.clone()
    };
    lowercase_preserving_specials(&normalize_markup(&abs, MarkupMode::LightweightLatex))
}

struct YearData {
    texts: Vec<String>,
    labels: Vec<usize>,
}

/// Fills the raw matrix. Features are `[CLS]` vectors of each model on
/// each data year; every `(t, τ, run)` cell draws its split from
/// `derive_seed(seed, [t, τ, run])`.
pub fn build_perf_matrix<T: Real>(
    models: &[(i32, Model<T>)],
    vocab: &Vocabulary,
    docs: &[RawDocument],
    data_years: &[i32],
    task: ProbeTask,
    opts: &PerfOptions,
    classifier: &dyn ProbeClassifier,
) -> Result<PerfMatrix> {
    if opts.runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    let mut classes: Vec<String> = docs.iter().filter_map(|d| task.label(d)).collect();
    classes.sort();
    classes.dedup();
    let class_of: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let positive = class_of.get("true").copied();
    let mut years = Vec::new();
    let mut scaled_years = Vec::new();
    for &tau in data_years {
        let mut texts = Vec::new();
        let mut labels = Vec::new();
        for d in docs.iter().filter(|d| d.year == Some(tau)) {
            if let Some(l) = task.label(d) {
                texts.push(probe_text(d, opts.ablate_second_half));
                labels.push(class_of[l.as_str()]);
            }
        }
        if texts.is_empty() {
            return Err(Error::Degenerate(format!(
                "no labelled documents for data year {tau}"
            )));
        }
        if texts.len() < opts.n_train + opts.n_test {
            scaled_years.push(tau);
        }
        years.push(YearData { texts, labels });
    }
    let (nt, nd, runs) = (models.len(), data_years.len(), opts.runs);
    let features: Vec<Vec<Vec<f64>>> = models
        .iter()
        .flat_map(|(_, m)| years.iter().map(move |y| (m, y)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(m, y)| {
            y.texts
                .par_iter()
                .map(|t| encode_cls(m, vocab, t))
                .collect()
        })
        .collect();
    let cells: Vec<(usize, usize, usize)> = (0..nt)
        .flat_map(|t| (0..nd).flat_map(move |d| (0..runs).map(move |r| (t, d, r))))
        .collect();
    let raw: Vec<f64> = cells
        .par_iter()
        .map(|&(t, d, r)| {
            let y = &years[d];
            let x = &features[t * nd + d];
            let seed = derive_seed(
                opts.seed,
                &[models[t].0 as u64, data_years[d] as u64, r as u64],
            );
            let split = sample_split(y.texts.len(), opts.n_train, opts.n_test, seed)?;
            let tx: Vec<Vec<f64>> = split.train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<usize> = split.train.iter().map(|&i| y.labels[i]).collect();
            let ex: Vec<Vec<f64>> = split.test.iter().map(|&i| x[i].clone()).collect();
            let ey: Vec<usize> = split.test.iter().map(|&i| y.labels[i]).collect();
            let pred = classifier.fit_predict(&tx, &ty, classes.len(), &ex)?;
            Ok(match (task, positive) {
                (ProbeTask::Crossfield, Some(p)) => binary_f1(&ey, &pred, p),
                (ProbeTask::Crossfield, None) => 0.0,
                _ => macro_f1(&ey, &pred),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PerfMatrix {
        task,
        metric: task.metric().into(),
        classifier: classifier.name().into(),
        model_years: models.iter().map(|(y, _)| *y).collect(),
        data_years: data_years.to_vec(),
        runs,
        raw,
        scaled_years,
    })
}

/// Averaged, column-normalized, diagonal-subtracted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfSummary {
    pub model_years: Vec<i32>,
    pub data_years: Vec<i32>,
    pub p_bar: Vec<Vec<f64>>,
    pub p_tilde: Vec<Vec<f64>>,
    pub p_hat: Vec<Vec<f64>>,
    /// Data years whose column was constant and normalized to 0.5.
    pub constant_columns: Vec<i32>,
}

/// Column min-max normalization of the run mean, then subtraction of each
/// column's diagonal entry. A constant column becomes 0.5 and is flagged.
pub fn summarize_mean(
    p_bar: &[Vec<f64>],
    model_years: &[i32],
    data_years: &[i32],
) -> Result<PerfSummary> {
    let nt = model_years.len();
    let mut p_tilde = vec![vec![0.0; data_years.len()]; nt];
    let mut p_hat = p_tilde.clone();
    let mut constant_columns = Vec::new();
    for (d, &tau) in data_years.iter().enumerate() {
        let diag = model_years.iter().position(|&t| t == tau).ok_or_else(|| {
            Error::Config(format!("data year {tau} has no model of the same year"))
        })?;
        let col: Vec<f64> = (0..nt).map(|t| p_bar[t][d]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for t in 0..nt {
            p_tilde[t][d] = if hi > lo {
                (col[t] - lo) / (hi - lo)
            } else {
                0.5
            };
        }
        if hi <= lo {
            log::warn!("column {tau} of the performance matrix is constant; normalized to 0.5");
            constant_columns.push(tau);
        }
        let base = p_tilde[diag][d];
        for t in 0..nt {
            p_hat[t][d] = p_tilde[t][d] - base;
        }
    }
    Ok(PerfSummary {
        model_years: model_years.to_vec(),
        data_years: data_years.to_vec(),
        p_bar: p_bar.to_vec(),
        p_tilde,
        p_hat,
        constant_columns,
    })
}

pub fn summarize_perf(m: &PerfMatrix) -> Result<PerfSummary> {
    summarize_mean(&m.mean(), &m.model_years, &m.data_years)
}

impl PerfSummary {
    /// Rows `t,tau,p_hat`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,tau,p_hat\n");
        for (ti, t) in self.model_years.iter().enumerate() {
            for (di, tau) in self.data_years.iter().enumerate() {
                let _ = writeln!(s, "{t},{tau},{}", self.p_hat[ti][di]);
            }
        }
        s
    }

    /// Mean of the entries with model year after data year.
    pub fn lower_triangle_mean(&self) -> Option<f64> {
        let mut vals = Vec::new();
        for (ti, t) in self.model_years.iter().enumerate() {
            for (di, tau) in self.data_years.iter().enumerate() {
                if t > tau {
                    vals.push(self.p_hat[ti][di]);
                }
            }
        }
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Reads one numeric column of a CSV with a header row: `column` if given,
/// else `f1` if present, else the last column.
pub fn read_csv_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Malformed(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::trim)
        .collect();
    let idx = match column {
        Some(c) => header
            .iter()
            .position(|h| *h == c)
            .ok_or_else(|| Error::Malformed(format!("{} has no column `{c}`", path.display())))?,
        None => header
            .iter()
            .position(|h| *h == "f1")
            .unwrap_or(header.len() - 1),
    };
    let vals: Vec<f64> = lines
        .enumerate()
        .map(|(n, l)| {
            l.split(',')
                .nth(idx)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Malformed(format!("{}:{}: `{l}`", path.display(), n + 2)))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Malformed(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok(vals)
}
