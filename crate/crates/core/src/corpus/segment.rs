//! Rule-based sentence segmentation.

use std::collections::HashSet;
use std::sync::OnceLock;

const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// The shipped abbreviation list (lowercase, trailing period included).
pub fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn is_abbreviation(token: &str) -> bool {
    let token = token.trim_start_matches(['(', '[', '"', '\'']);
    abbreviations().contains(token.to_lowercase().as_str())
}

/// Splits text at `.`, `!` or `?` followed by whitespace and an uppercase
/// letter or digit, unless the period closes a listed abbreviation.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    for (k, &(byte, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let Some(&(_, after)) = chars.get(k + 1) else {
            continue;
        };
        if !after.is_whitespace() {
            continue;
        }
        let Some(&(_, first)) = chars[k + 1..].iter().find(|(_, ch)| !ch.is_whitespace()) else {
            continue;
        };
        if !(first.is_uppercase() || first.is_ascii_digit()) {
            continue;
        }
        let end = byte + c.len_utf8();
        if c == '.' {
            let token_start = text[..end].rfind(char::is_whitespace).map_or(0, |p| {
                p + text[p..].chars().next().map_or(1, char::len_utf8)
            });
            if is_abbreviation(&text[token_start..end]) {
                continue;
            }
        }
        push_trimmed(&mut sentences, &text[start..end]);
        start = end;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}
