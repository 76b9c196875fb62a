//! Corpus ingestion: raw documents to cleaned, year-bucketed sentences.

mod filter;
mod markup;
mod segment;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub(crate) use filter::special_prefix;
pub use filter::{
    is_valid_sentence, nonessential_ratio, stopwords, units, word_count, Unit, UnitKind,
    MAX_NONESSENTIAL_RATIO, MIN_CHARS, MIN_WORDS,
};
pub use markup::{normalize_markup, normalize_markup_with_warnings, MarkupMode, MarkupWarning};
pub use segment::{abbreviations, segment_sentences};

use crate::{Error, Result};

/// One paper as it arrives from the JSON-lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default, rename = "abstract")]
    pub abstract_: String,
    #[serde(default)]
    pub body: Option<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub title: Option<String>,
}

impl RawDocument {
    pub fn from_json(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanSentence {
    pub doc_id: String,
    pub year: i32,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSlice {
    pub year: i32,
    pub sentences: Vec<CleanSentence>,
}

impl CorpusSlice {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fields {
    #[default]
    Abstract,
    /// Abstract followed by body.
    All,
}

impl std::str::FromStr for Fields {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "abstract" => Ok(Fields::Abstract),
            "all" | "abstract+body" => Ok(Fields::All),
            other => Err(format!("unknown field selection `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CleanOptions {
    pub mode: MarkupMode,
    pub fields: Fields,
    /// Inclusive accepted year range.
    pub year_range: Option<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub doc_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SliceBuild {
    pub slices: BTreeMap<i32, CorpusSlice>,
    pub rejects: Vec<Reject>,
    pub markup_warnings: usize,
}

/// Lowercases text while keeping bracketed special tokens uppercase.
pub fn lowercase_preserving_specials(text: &str) -> String {
    let lower = text.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    let mut i = 0;
    while i < lower.len() {
        let rest = &lower[i..];
        if let Some(n) = special_prefix(rest) {
            out.push_str(&rest[..n].to_ascii_uppercase());
            i += n;
        } else {
            let c = rest.chars().next().expect("non-empty");
            out.push(c);
            i += c.len_utf8();
        }
    }
    out
}

/// Cleans the selected fields of one document into valid sentences.
pub fn clean_document(doc: &RawDocument, opts: &CleanOptions) -> (Vec<String>, usize) {
    let mut text = doc.abstract_.clone();
    if opts.fields == Fields::All {
        if let Some(body) = &doc.body {
            text.push('\n');
            text.push_str(body);
        }
    }
    let (normalized, warnings) = normalize_markup_with_warnings(&text, opts.mode);
    let sentences = segment_sentences(&normalized)
        .into_iter()
        .filter(|s| is_valid_sentence(s))
        .map(|s| lowercase_preserving_specials(&s))
        .collect();
    (sentences, warnings.len())
}

/// Cleans documents and partitions the surviving sentences by year.
///
/// Documents are processed in parallel and merged in `(doc_id, position)`
/// order, so the result does not depend on the thread count.
pub fn build_slices(docs: &[RawDocument], opts: &CleanOptions) -> SliceBuild {
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| docs[a].id.cmp(&docs[b].id).then(a.cmp(&b)));

    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    let mut accepted = Vec::new();
    for &i in &order {
        let doc = &docs[i];
        if !seen.insert(doc.id.as_str()) {
            rejects.push(Reject {
                doc_id: doc.id.clone(),
                reason: "duplicate id".into(),
            });
            continue;
        }
        match doc.year {
            None => rejects.push(Reject {
                doc_id: doc.id.clone(),
                reason: "missing year".into(),
            }),
            Some(y) if opts.year_range.is_some_and(|(lo, hi)| y < lo || y > hi) => {
                rejects.push(Reject {
                    doc_id: doc.id.clone(),
                    reason: format!("year {y} outside configured range"),
                })
            }
            Some(y) => accepted.push((doc, y)),
        }
    }

    let cleaned: Vec<(Vec<String>, usize)> = accepted
        .par_iter()
        .map(|(doc, _)| clean_document(doc, opts))
        .collect();

    let mut slices: BTreeMap<i32, CorpusSlice> = BTreeMap::new();
    let mut markup_warnings = 0;
    for ((doc, year), (sentences, warnings)) in accepted.iter().zip(cleaned) {
        markup_warnings += warnings;
        let slice = slices.entry(*year).or_insert_with(|| CorpusSlice {
            year: *year,
            sentences: vec![],
        });
        slice
            .sentences
            .extend(sentences.into_iter().map(|text| CleanSentence {
                doc_id: doc.id.clone(),
                year: *year,
                text,
            }));
    }
    SliceBuild {
        slices,
        rejects,
        markup_warnings,
    }
}

/// Keeps the last ⌈s/2⌉ of an abstract's `s` sentences.
pub fn ablate_abstract(abstract_: &str) -> String {
    let sentences = segment_sentences(abstract_);
    let keep = sentences.len().div_ceil(2);
    sentences[sentences.len() - keep..].join(" ")
}

pub fn read_documents(path: &Path) -> Result<Vec<RawDocument>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            RawDocument::from_json(l)
                .map_err(|e| Error::Malformed(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

pub fn write_documents(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&d.to_json());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn slice_file_name(year: i32) -> String {
    format!("sentences_{year}.txt")
}

/// Writes `sentences_<year>.txt` files plus `rejects.jsonl`; returns paths written.
pub fn write_slices(dir: &Path, build: &SliceBuild) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (year, slice) in &build.slices {
        let path = dir.join(slice_file_name(*year));
        let mut body = String::new();
        for s in &slice.sentences {
            body.push_str(&s.text);
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("rejects.jsonl");
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    for r in &build.rejects {
        writeln!(f, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(&path, e))?;
    }
    written.push(path);
    Ok(written)
}

/// Reads every `sentences_<year>.txt` in a directory, ordered by year.
///
/// Per-sentence document ids are not stored in slice files; sentences get a
/// synthetic `"<year>:<line>"` id.
pub fn read_slices(dir: &Path) -> Result<BTreeMap<i32, CorpusSlice>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut slices = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(year) = name
            .strip_prefix("sentences_")
            .and_then(|r| r.strip_suffix(".txt"))
            .and_then(|y| y.parse::<i32>().ok())
        else {
            continue;
        };
        let path = entry.path();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let sentences = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(n, l)| CleanSentence {
                doc_id: format!("{year}:{n}"),
                year,
                text: l.to_string(),
            })
            .collect();
        slices.insert(year, CorpusSlice { year, sentences });
    }
    if slices.is_empty() {
        return Err(Error::Malformed(format!(
            "no sentences_<year>.txt files in {}",
            dir.display()
        )));
    }
    Ok(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, year: Option<i32>, abs: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            year,
            abstract_: abs.into(),
            body: None,
            categories: vec!["cs.AI".into()],
            title: None,
        }
    }

    #[test]
    fn jsonl_field_names() {
        let d = RawDocument::from_json(
            r#"{"id":"x","year":2009,"abstract":"A b.","body":null,"categories":["cs.LG"],"title":"T"}"#,
        )
        .unwrap();
        assert_eq!(d.abstract_, "A b.");
        assert_eq!(d.year, Some(2009));
        assert!(d.to_json().contains("\"abstract\":\"A b.\""));
    }

    #[test]
    fn partition_by_year() {
        let docs = vec![
            doc(
                "b",
                Some(2010),
                "Deep networks learn useful features. Training them takes time.",
            ),
            doc(
                "a",
                Some(2009),
                "Quantum states decohere quickly in practice.",
            ),
        ];
        let build = build_slices(&docs, &CleanOptions::default());
        assert_eq!(build.slices.len(), 2);
        assert_eq!(build.slices[&2009].len(), 1);
        assert_eq!(build.slices[&2010].len(), 2);
        assert_eq!(
            build.slices[&2010].sentences[0].text,
            "deep networks learn useful features."
        );
        assert!(build.rejects.is_empty());
    }

    #[test]
    fn all_filtered_doc_contributes_nothing() {
        let docs = vec![doc("a", Some(2009), "Hi. Ok! the of and.")];
        let build = build_slices(&docs, &CleanOptions::default());
        assert!(build.slices.get(&2009).map_or(true, |s| s.is_empty()));
    }

    #[test]
    fn missing_year_rejected() {
        let docs = vec![doc(
            "a",
            None,
            "Quantum states decohere quickly in practice.",
        )];
        let build = build_slices(&docs, &CleanOptions::default());
        assert!(build.slices.is_empty());
        assert_eq!(
            build.rejects,
            vec![Reject {
                doc_id: "a".into(),
                reason: "missing year".into()
            }]
        );
    }

    #[test]
    fn specials_stay_uppercase() {
        assert_eq!(
            lowercase_preserving_specials("See [CITE] AND [equ] Now"),
            "see [CITE] and [EQU] now"
        );
    }

    #[test]
    fn ablation_keeps_back_half() {
        assert_eq!(
            ablate_abstract("A one. B two. C three. D four."),
            "C three. D four."
        );
        assert_eq!(ablate_abstract("A one."), "A one.");
        assert_eq!(
            ablate_abstract("A one. B two. C three. D four. E five."),
            "C three. D four. E five."
        );
        assert_eq!(ablate_abstract(""), "");
    }

    proptest! {
        #[test]
        fn emitted_sentences_satisfy_filters(words in prop::collection::vec(
            prop::sample::select(vec!["the", "of", "model", "Quantum", "data", "!!", "$x$", "\\cite{a}", "Graph.", "We", "3.", "networks", "URL", "http://a.b", "a"]), 0..40)) {
            let text = words.join(" ");
            let d = doc("p", Some(2011), &text);
            let build = build_slices(&[d.clone()], &CleanOptions::default());
            let emitted: Vec<String> = build.slices.values().flat_map(|s| s.texts().map(String::from)).collect();
            let normalized = normalize_markup(&text, MarkupMode::LightweightLatex);
            let oracle: Vec<String> = segment_sentences(&normalized)
                .into_iter()
                .filter(|s| {
                    s.chars().count() >= 20
                        && word_count(s) >= 3
                        && nonessential_ratio(s) <= 0.40
                })
                .map(|s| lowercase_preserving_specials(&s))
                .collect();
            prop_assert_eq!(emitted, oracle);
        }
    }
}
