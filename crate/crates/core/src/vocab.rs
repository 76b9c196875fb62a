//! Whole-word vocabulary.
//!
//! Tokens are complete lowercase words; there is no subword splitting, and
//! words below the frequency threshold map to `[UNK]`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{units, CorpusSlice, UnitKind};
use crate::{Error, Result};

/// Special tokens, in id order.
pub const SPECIAL_TOKENS: [&str; 10] = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[CITE]", "[EQU]", "[FIG]", "[REF]", "[SEC]",
];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;
pub const NUM_SPECIALS: usize = SPECIAL_TOKENS.len();

/// Splits cleaned text into word tokens. Special tokens come back in their
/// canonical uppercase form, everything else lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    units(text)
        .into_iter()
        .map(|u| match u.kind {
            UnitKind::Special => u.text.to_ascii_uppercase(),
            _ => u.text.to_lowercase(),
        })
        .collect()
}

/// Exact token counts over all slices.
pub fn count_words<'a, I>(slices: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = &'a CorpusSlice>,
{
    let texts: Vec<&str> = slices.into_iter().flat_map(|s| s.texts()).collect();
    texts
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, t| {
            for tok in tokenize(t) {
                *acc.entry(tok).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    id_of: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let mut id_of = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if id_of.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Malformed(format!(
                    "duplicate vocabulary token `{t}`"
                )));
            }
        }
        Ok(Vocabulary {
            tokens,
            counts,
            id_of,
        })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.id_of.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.id(token).map(|i| self.counts[i as usize])
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < NUM_SPECIALS
    }

    pub fn non_special_ids(&self) -> std::ops::Range<u32> {
        NUM_SPECIALS as u32..self.tokens.len() as u32
    }

    pub fn non_special_tokens(&self) -> HashSet<&str> {
        self.tokens[NUM_SPECIALS..]
            .iter()
            .map(String::as_str)
            .collect()
    }

    /// Id of a word, falling back to `[UNK]`.
    pub fn lookup(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (t, c) in self.tokens.iter().zip(&self.counts) {
            out.push_str(t);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let (tok, count) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!(
                    "{}:{}: expected token<TAB>count",
                    path.display(),
                    n + 1
                ))
            })?;
            let count = count
                .parse::<u64>()
                .map_err(|e| Error::Malformed(format!("{}:{}: {e}", path.display(), n + 1)))?;
            tokens.push(tok.to_string());
            counts.push(count);
        }
        if tokens.len() < NUM_SPECIALS || tokens[..NUM_SPECIALS] != SPECIAL_TOKENS {
            return Err(Error::Malformed(format!(
                "{}: vocabulary must start with the special tokens in order",
                path.display()
            )));
        }
        Self::from_parts(tokens, counts)
    }
}

/// Keeps tokens with `count >= min_count`, ordered by count descending then
/// token ascending, truncated so the total size including specials is at most
/// `max_size`.
pub fn build_vocab(
    counts: &HashMap<String, u64>,
    min_count: u64,
    max_size: Option<usize>,
) -> Result<Vocabulary> {
    if let Some(max) = max_size {
        if max < NUM_SPECIALS {
            return Err(Error::Config(format!(
                "max vocabulary size {max} is smaller than the {NUM_SPECIALS} special tokens"
            )));
        }
    }
    let mut kept: Vec<(&String, u64)> = counts
        .iter()
        .filter(|(t, &c)| c >= min_count && !SPECIAL_TOKENS.contains(&t.as_str()))
        .map(|(t, &c)| (t, c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(max) = max_size {
        kept.truncate(max - NUM_SPECIALS);
    }
    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    let mut cs = vec![0u64; NUM_SPECIALS];
    for (t, c) in kept {
        tokens.push(t.to_lowercase());
        cs.push(c);
    }
    Vocabulary::from_parts(tokens, cs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    /// Number of non-padding positions.
    pub length: usize,
}

/// Encodes a sentence as `[CLS] w… [SEP] [PAD]…` of exactly `max_len` ids.
///
/// # Panics
/// If `max_len < 2`.
pub fn encode(sentence: &str, vocab: &Vocabulary, max_len: usize) -> EncodedSequence {
    assert!(max_len >= 2, "max_len must leave room for [CLS] and [SEP]");
    let words = tokenize(sentence);
    let body = words.len().min(max_len - 2);
    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    ids.extend(words[..body].iter().map(|w| vocab.lookup(w)));
    ids.push(SEP_ID);
    let length = ids.len();
    ids.resize(max_len, PAD_ID);
    let mut attention_mask = vec![1u8; length];
    attention_mask.resize(max_len, 0);
    EncodedSequence {
        ids,
        attention_mask,
        length,
    }
}

/// Words of an encoded sequence, without `[CLS]`, `[SEP]` and `[PAD]`.
pub fn decode(ids: &[u32], vocab: &Vocabulary) -> Vec<String> {
    ids.iter()
        .filter(|&&i| !matches!(i, PAD_ID | CLS_ID | SEP_ID))
        .map(|&i| vocab.token(i).to_string())
        .collect()
}

/// Jaccard similarity of the non-special token sets; two empty sets give 1.
pub fn vocab_jaccard(a: &Vocabulary, b: &Vocabulary) -> f64 {
    let sa = a.non_special_tokens();
    let sb = b.non_special_tokens();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CleanSentence;
    use proptest::prelude::*;

    fn slice(texts: &[&str]) -> CorpusSlice {
        CorpusSlice {
            year: 2009,
            sentences: texts
                .iter()
                .map(|t| CleanSentence {
                    doc_id: "d".into(),
                    year: 2009,
                    text: t.to_string(),
                })
                .collect(),
        }
    }

    fn counts(pairs: &[(&str, u64)]) -> HashMap<String, u64> {
        pairs.iter().map(|(t, c)| (t.to_string(), *c)).collect()
    }

    #[test]
    fn direct_count() {
        let c = count_words([&slice(&["the cat", "the dog"])]);
        assert_eq!(c, counts(&[("the", 2), ("cat", 1), ("dog", 1)]));
        assert!(count_words(std::iter::empty()).is_empty());
    }

    #[test]
    fn special_token_counted_once() {
        let c = count_words([&slice(&["see [CITE] here"])]);
        assert_eq!(c["[CITE]"], 1);
        assert_eq!(c.len(), 3);
        assert!(!c.contains_key("cite"));
    }

    #[test]
    fn threshold_boundary() {
        let v = build_vocab(&counts(&[("a", 100), ("b", 49), ("c", 50)]), 50, None).unwrap();
        assert_eq!(
            &v.tokens()[NUM_SPECIALS..],
            &["a".to_string(), "c".to_string()]
        );
        let v = build_vocab(&counts(&[("a", 1)]), 50, None).unwrap();
        assert_eq!(v.size(), NUM_SPECIALS);
    }

    #[test]
    fn ties_sorted_lexicographically() {
        let v = build_vocab(&counts(&[("zeta", 5), ("alpha", 5), ("mid", 7)]), 1, None).unwrap();
        assert_eq!(&v.tokens()[NUM_SPECIALS..], &["mid", "alpha", "zeta"]);
    }

    #[test]
    fn max_size_truncates_and_validates() {
        let v = build_vocab(
            &counts(&[("a", 3), ("b", 2), ("c", 1)]),
            1,
            Some(NUM_SPECIALS + 2),
        )
        .unwrap();
        assert_eq!(v.size(), NUM_SPECIALS + 2);
        assert!(matches!(
            build_vocab(&counts(&[]), 1, Some(3)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn specials_have_lowest_ids() {
        let v = build_vocab(&counts(&[("[CITE]", 999), ("x", 1)]), 1, None).unwrap();
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            assert_eq!(v.id(s), Some(i as u32));
        }
        assert_eq!(v.size(), NUM_SPECIALS + 1);
    }

    #[test]
    fn encode_layout() {
        let v = build_vocab(&counts(&[("a", 3), ("b", 2), ("c", 1)]), 1, None).unwrap();
        let e = encode("a b c", &v, 8);
        let (a, b, c) = (v.id("a").unwrap(), v.id("b").unwrap(), v.id("c").unwrap());
        assert_eq!(e.ids, vec![CLS_ID, a, b, c, SEP_ID, PAD_ID, PAD_ID, PAD_ID]);
        assert_eq!(e.attention_mask, vec![1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(e.length, 5);
        assert_eq!(encode("a zzz", &v, 8).ids[2], UNK_ID);
    }

    #[test]
    fn encode_truncates() {
        let v = build_vocab(&counts(&[("a", 3)]), 1, None).unwrap();
        let e = encode(&["a"; 20].join(" "), &v, 6);
        assert_eq!(e.ids.len(), 6);
        assert_eq!(e.ids[5], SEP_ID);
        assert_eq!(e.length, 6);
        assert!(e.attention_mask.iter().all(|&m| m == 1));
    }

    #[test]
    fn jaccard_cases() {
        let mk = |ts: &[&str]| {
            build_vocab(&ts.iter().map(|t| (t.to_string(), 1)).collect(), 1, None).unwrap()
        };
        assert_eq!(vocab_jaccard(&mk(&["a", "b"]), &mk(&["a", "b"])), 1.0);
        assert_eq!(vocab_jaccard(&mk(&["a"]), &mk(&["b"])), 0.0);
        assert!((vocab_jaccard(&mk(&["a", "b"]), &mk(&["b", "c"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(vocab_jaccard(&mk(&[]), &mk(&[])), 1.0);
    }

    #[test]
    fn tsv_round_trip() {
        let v = build_vocab(&counts(&[("a", 3), ("b", 2)]), 1, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        v.write_tsv(&p).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("[PAD]\t0\n[UNK]\t0\n"));
        assert_eq!(Vocabulary::read_tsv(&p).unwrap(), v);
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(words in prop::collection::vec(prop::sample::select(vec!["x", "y", "zz", "w"]), 0..10)) {
            let v = build_vocab(&counts(&[("x", 1), ("y", 1), ("zz", 1), ("w", 1)]), 1, None).unwrap();
            let e = encode(&words.join(" "), &v, 16);
            prop_assert_eq!(decode(&e.ids, &v), words.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        }

        #[test]
        fn raising_min_count_never_adds(cs in prop::collection::hash_map("[a-e]{1,2}", 0u64..20, 0..20), lo in 0u64..10, bump in 0u64..10) {
            let low = build_vocab(&cs, lo, None).unwrap();
            let high = build_vocab(&cs, lo + bump, None).unwrap();
            prop_assert!(high.non_special_tokens().is_subset(&low.non_special_tokens()));
        }

        #[test]
        fn jaccard_symmetric(a in prop::collection::hash_set("[a-d]", 0..4), b in prop::collection::hash_set("[a-d]", 0..4)) {
            let va = build_vocab(&a.iter().map(|t| (t.clone(), 1)).collect(), 1, None).unwrap();
            let vb = build_vocab(&b.iter().map(|t| (t.clone(), 1)).collect(), 1, None).unwrap();
            let j = vocab_jaccard(&va, &vb);
            prop_assert_eq!(j, vocab_jaccard(&vb, &va));
            prop_assert_eq!(j == 1.0, a == b);
        }
    }
}
