//! Lightweight LaTeX markup normalization.
//!
//! Only the handful of constructs that matter for sentence cleaning are
//! recognised: citations, references, sectioning commands, figure and table
//! floats, math, comments and a few text-formatting wrappers. Anything else is
//! left in place.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MarkupMode {
    #[default]
    LightweightLatex,
    Plain,
}

impl std::str::FromStr for MarkupMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lightweight-latex" | "latex" => Ok(MarkupMode::LightweightLatex),
            "plain" => Ok(MarkupMode::Plain),
            other => Err(format!("unknown markup mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkupWarning {
    /// A `$` without a closing partner. Byte offset into the pass input.
    UnbalancedMath { offset: usize },
}

struct Rules {
    floats: Vec<Regex>,
    display_envs: Vec<Regex>,
    cite: Regex,
    reference: Regex,
    section: Regex,
    formatting: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let env = |name: &str| {
            Regex::new(&format!(
                r"(?s)\\begin\{{{name}\*?\}}.*?\\end\{{{name}\*?\}}"
            ))
            .expect("static regex")
        };
        Rules {
            floats: ["figure", "table", "wrapfigure", "sidewaysfigure", "sidewaystable"]
                .iter()
                .map(|n| env(n))
                .collect(),
            display_envs: [
                "equation",
                "align",
                "eqnarray",
                "gather",
                "multline",
                "displaymath",
                "math",
            ]
            .iter()
            .map(|n| env(n))
            .collect(),
            cite: Regex::new(r"\\[A-Za-z]*cite[A-Za-z]*\*?(?:\s*\[[^\]]*\])*\s*\{[^}]*\}")
                .expect("static regex"),
            reference: Regex::new(
                r"\\(?:ref|eqref|autoref|cref|Cref|pageref|vref|nameref)\*?\{[^}]*\}",
            )
            .expect("static regex"),
            section: Regex::new(
                r"\\(?:part|chapter|section|subsection|subsubsection|paragraph|subparagraph)\*?(?:\[[^\]]*\])?\{([^}]*)\}",
            )
            .expect("static regex"),
            formatting: Regex::new(
                r"\\(?:emph|textbf|textit|texttt|textsc|textrm|textsf|underline|mbox|text)\{([^{}]*)\}",
            )
            .expect("static regex"),
        }
    })
}

/// Normalizes markup and whitespace. See [`normalize_markup_with_warnings`].
pub fn normalize_markup(text: &str, mode: MarkupMode) -> String {
    normalize_markup_with_warnings(text, mode).0
}

/// Replaces markup with bracketed special tokens and collapses whitespace.
///
/// Input is NFC-normalized first. In lightweight-latex mode the rewrite is
/// iterated to a fixpoint, which makes the function idempotent. Unbalanced
/// `$` delimiters are dropped and reported; the text after them is kept as
/// plain text.
pub fn normalize_markup_with_warnings(
    text: &str,
    mode: MarkupMode,
) -> (String, Vec<MarkupWarning>) {
    let nfc: String = text.nfc().collect();
    match mode {
        MarkupMode::Plain => (collapse_whitespace(&nfc), Vec::new()),
        MarkupMode::LightweightLatex => {
            let mut warnings = Vec::new();
            let mut current = nfc;
            for pass in 0..64 {
                let mut pass_warnings = Vec::new();
                let next = latex_pass(&current, &mut pass_warnings);
                if pass == 0 {
                    warnings = pass_warnings;
                }
                if next == current {
                    break;
                }
                current = next;
            }
            (current, warnings)
        }
    }
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn latex_pass(text: &str, warnings: &mut Vec<MarkupWarning>) -> String {
    let r = rules();
    let mut s = strip_comments(text);
    s = s.replace('~', " ");
    for re in &r.floats {
        s = re.replace_all(&s, " [FIG] ").into_owned();
    }
    for re in &r.display_envs {
        s = re.replace_all(&s, " [EQU] ").into_owned();
    }
    s = replace_math(&s, warnings);
    s = r.formatting.replace_all(&s, "$1").into_owned();
    s = r.cite.replace_all(&s, " [CITE] ").into_owned();
    s = r.reference.replace_all(&s, " [REF] ").into_owned();
    s = r.section.replace_all(&s, " [SEC] $1 ").into_owned();
    collapse_whitespace(&s)
}

/// Drops `%` comments up to (not including) the line break. `\%` survives.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_comment = false;
    while let Some(c) = chars.next() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
                out.push(c);
            }
            continue;
        }
        match c {
            '\\' => {
                out.push(c);
                if let Some(&n) = chars.peek() {
                    out.push(n);
                    chars.next();
                }
            }
            '%' => in_comment = true,
            _ => out.push(c),
        }
    }
    out
}

/// Replaces `$…$`, `$$…$$`, `\(…\)` and `\[…\]` spans with `[EQU]`.
fn replace_math(text: &str, warnings: &mut Vec<MarkupWarning>) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut plain_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if i + 1 < bytes.len() => {
                let next = bytes[i + 1];
                let closer = match next {
                    b'(' => Some(r"\)"),
                    b'[' => Some(r"\]"),
                    _ => None,
                };
                if let Some(closer) = closer {
                    if let Some(end) = find_unescaped(text, i + 2, closer) {
                        out.push_str(&text[plain_start..i]);
                        out.push_str(" [EQU] ");
                        i = end + closer.len();
                        plain_start = i;
                        continue;
                    }
                }
                // skip the escaped character (handles `\$`)
                i += 1 + utf8_len(bytes[i + 1]);
            }
            b'$' => {
                let double = i + 1 < bytes.len() && bytes[i + 1] == b'$';
                let delim = if double { "$$" } else { "$" };
                match find_unescaped(text, i + delim.len(), delim) {
                    Some(end) => {
                        out.push_str(&text[plain_start..i]);
                        out.push_str(" [EQU] ");
                        i = end + delim.len();
                        plain_start = i;
                    }
                    None => {
                        warnings.push(MarkupWarning::UnbalancedMath { offset: i });
                        log::debug!("unbalanced math delimiter at byte {i}");
                        out.push_str(&text[plain_start..i]);
                        i += delim.len();
                        plain_start = i;
                    }
                }
            }
            b => i += utf8_len(b),
        }
    }
    out.push_str(&text[plain_start.min(text.len())..]);
    out
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7F => 1,
        0xC0..=0xDF => 2,
        0xE0..=0xEF => 3,
        _ => 4,
    }
}

fn find_unescaped(text: &str, from: usize, needle: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        if bytes[i] == b'\\' && !needle.starts_with('\\') {
            i += 2;
            continue;
        }
        if text[i..].starts_with(needle) {
            return Some(i);
        }
        if bytes[i] == b'\\' {
            // a backslash pair that is not the closer, e.g. `\alpha`
            i += 1 + bytes.get(i + 1).map_or(0, |&b| utf8_len(b));
            continue;
        }
        i += utf8_len(bytes[i]);
    }
    None
}
