//! Mining a checkpoint series: token tracking, weight PCA, performance
//! matrices and significance tests.

mod classify;
mod mwu;
mod pca;
mod perf;
mod tasks;

pub use classify::{binary_f1, macro_f1, standardizer, LogisticRegression, ProbeClassifier};
pub use mwu::{mann_whitney_u, MwuResult, EXACT_MAX};
pub use pca::{flatten, pca2, pca_weights, select_tensors, Pca};
pub use perf::{
    build_perf_matrix, probe_text, read_csv_column, summarize_mean, summarize_perf, PerfMatrix,
    PerfOptions, PerfSummary,
};
pub use tasks::{major_of, sample_split, ProbeTask, Split};

use crate::mlm::{token_probability, Model, Real};
use crate::vocab::Vocabulary;
use crate::{Error, Result};

/// Probability of `token` at the carrier sentence's `[MASK]` under each model.
pub fn track_token_probability<T: Real>(
    models: &[(i32, Model<T>)],
    vocab: &Vocabulary,
    carrier: &str,
    token: &str,
) -> Result<Vec<(i32, f64)>> {
    if vocab.id(token).is_none_or(Vocabulary::is_special) {
        return Err(Error::OutOfVocabulary(format!(
            "`{token}` is not a vocabulary word; tokens are whole words, so only words kept by the \
             vocabulary builder can be tracked"
        )));
    }
    models
        .iter()
        .map(|(year, m)| Ok((*year, token_probability(m, vocab, carrier, token)?)))
        .collect()
}

/// Rows `year,token,probability`.
pub fn token_prob_csv(token: &str, curve: &[(i32, f64)]) -> String {
    let mut s = String::from("year,token,probability\n");
    for (y, p) in curve {
        s.push_str(&format!("{y},{token},{p}\n"));
    }
    s
}
