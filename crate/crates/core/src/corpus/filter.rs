//! Sentence cleaning filters: minimum length, minimum word count and the
//! non-essential unit ratio.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::vocab::SPECIAL_TOKENS;

const STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

pub const MIN_CHARS: usize = 20;
pub const MIN_WORDS: usize = 3;
pub const MAX_NONESSENTIAL_RATIO: f64 = 0.40;

/// The shipped English stopword list.
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Word,
    Stopword,
    Special,
    Punctuation,
    Symbol,
    Emoji,
    Url,
}

impl UnitKind {
    pub fn is_essential(self) -> bool {
        matches!(self, UnitKind::Word | UnitKind::Special)
    }

    pub fn is_word(self) -> bool {
        matches!(
            self,
            UnitKind::Word | UnitKind::Stopword | UnitKind::Special
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit<'a> {
    pub text: &'a str,
    pub kind: UnitKind,
}

fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF | 0xFE0F | 0x200D)
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk
        .trim_start_matches(['(', '<', '"'])
        .to_ascii_lowercase();
    lower.starts_with("http://")
        || lower.starts_with("https://")
        || lower.starts_with("www.")
        || lower.starts_with("ftp://")
        || lower.contains("://")
}

/// Matches a bracketed special token (case-insensitive) at the start of `s`.
pub(crate) fn special_prefix(s: &str) -> Option<usize> {
    if !s.starts_with('[') {
        return None;
    }
    SPECIAL_TOKENS.iter().find_map(|tok| {
        (s.len() >= tok.len()
            && s.is_char_boundary(tok.len())
            && s[..tok.len()].eq_ignore_ascii_case(tok))
        .then_some(tok.len())
    })
}

/// Splits a sentence into units on whitespace and punctuation boundaries.
///
/// Words are maximal alphanumeric runs, with `'` or `-` allowed between two
/// alphanumerics. Every other non-space character is a unit of its own.
/// URL-shaped whitespace chunks and bracketed special tokens are single units.
pub fn units(sentence: &str) -> Vec<Unit<'_>> {
    let mut out = Vec::new();
    for chunk in sentence.split_whitespace() {
        if is_url(chunk) {
            out.push(Unit {
                text: chunk,
                kind: UnitKind::Url,
            });
            continue;
        }
        let mut i = 0;
        while i < chunk.len() {
            let rest = &chunk[i..];
            if let Some(n) = special_prefix(rest) {
                out.push(Unit {
                    text: &rest[..n],
                    kind: UnitKind::Special,
                });
                i += n;
                continue;
            }
            let c = rest.chars().next().expect("non-empty");
            if c.is_alphanumeric() {
                let n = word_len(rest);
                let word = &rest[..n];
                let kind = if stopwords().contains(word.to_lowercase().as_str()) {
                    UnitKind::Stopword
                } else {
                    UnitKind::Word
                };
                out.push(Unit { text: word, kind });
                i += n;
                continue;
            }
            let kind = if c.is_ascii_punctuation() {
                UnitKind::Punctuation
            } else if is_emoji(c) {
                UnitKind::Emoji
            } else {
                UnitKind::Symbol
            };
            out.push(Unit {
                text: &rest[..c.len_utf8()],
                kind,
            });
            i += c.len_utf8();
        }
    }
    out
}

fn word_len(s: &str) -> usize {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut end = 0;
    let mut k = 0;
    while k < chars.len() {
        let (b, c) = chars[k];
        if c.is_alphanumeric() {
            end = b + c.len_utf8();
            k += 1;
        } else if matches!(c, '\'' | '-' | '\u{2019}')
            && k > 0
            && chars.get(k + 1).is_some_and(|(_, n)| n.is_alphanumeric())
        {
            k += 1;
        } else {
            break;
        }
    }
    end
}

/// Fraction of non-essential units; an empty sentence scores 1.0.
pub fn nonessential_ratio(sentence: &str) -> f64 {
    let units = units(sentence);
    if units.is_empty() {
        return 1.0;
    }
    let bad = units.iter().filter(|u| !u.kind.is_essential()).count();
    bad as f64 / units.len() as f64
}

pub fn word_count(sentence: &str) -> usize {
    units(sentence).iter().filter(|u| u.kind.is_word()).count()
}

/// Applies the three cleaning rules to a markup-normalized sentence.
pub fn is_valid_sentence(sentence: &str) -> bool {
    sentence.chars().count() >= MIN_CHARS
        && word_count(sentence) >= MIN_WORDS
        && nonessential_ratio(sentence) <= MAX_NONESSENTIAL_RATIO
}
