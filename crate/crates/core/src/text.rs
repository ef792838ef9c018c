//! Name normalization and word-boundary helpers.
//!
//! Names and input text go through the same per-codepoint transform:
//! NFD decomposition, combining-mark removal, lowercasing and whitespace
//! collapsing. The text variant keeps a map from every normalized char back
//! to the codepoint it came from, so matches can be reported as stand-off
//! spans on the original string.

use unicode_normalization::char::{decompose_canonical, is_combining_mark};
use unicode_segmentation::UnicodeSegmentation;

/// Normalized form of `s`, with leading and trailing whitespace removed.
pub fn normalize(s: &str) -> String {
    let shadow = NormalizedText::new(s);
    shadow.as_string().trim().to_string()
}

fn push_normalized(c: char, mut emit: impl FnMut(char)) {
    decompose_canonical(c, |d| {
        if !is_combining_mark(d) {
            for l in d.to_lowercase() {
                emit(l);
            }
        }
    });
}

/// Normalized shadow of a text with an offset map to the original.
#[derive(Debug, Clone)]
pub struct NormalizedText {
    chars: Vec<char>,
    origin: Vec<usize>,
    original_len: usize,
}

impl NormalizedText {
    pub fn new(text: &str) -> Self {
        let mut chars = Vec::with_capacity(text.len());
        let mut origin = Vec::with_capacity(text.len());
        let mut n = 0;
        for (i, c) in text.chars().enumerate() {
            n = i + 1;
            if c.is_whitespace() {
                if chars.last() != Some(&' ') {
                    chars.push(' ');
                    origin.push(i);
                }
                continue;
            }
            push_normalized(c, |d| {
                chars.push(d);
                origin.push(i);
            });
        }
        NormalizedText {
            chars,
            origin,
            original_len: n,
        }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Maps a normalized char range back to a codepoint range in the
    /// original text. Returns `None` when the range would split an original
    /// codepoint that expanded into several normalized chars.
    pub fn original_span(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        if start >= end || end > self.chars.len() {
            return None;
        }
        if start > 0 && self.origin[start - 1] == self.origin[start] {
            return None;
        }
        if end < self.chars.len() && self.origin[end] == self.origin[end - 1] {
            return None;
        }
        Some((self.origin[start], self.origin[end - 1] + 1))
    }
}

/// Word-boundary positions of `text` as codepoint offsets, per Unicode text
/// segmentation. Always contains 0 and the text length.
pub fn word_boundaries(text: &str) -> Vec<bool> {
    let len = text.chars().count();
    let mut marks = vec![false; len + 1];
    marks[len] = true;
    let mut cp = 0;
    for seg in text.split_word_bounds() {
        marks[cp] = true;
        cp += seg.chars().count();
    }
    marks
}

/// A word-like token: a Unicode word segment containing at least one
/// alphanumeric char, with its codepoint span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cp = 0;
    for seg in text.split_word_bounds() {
        let n = seg.chars().count();
        if seg.chars().any(char::is_alphanumeric) {
            out.push(Token {
                start: cp,
                end: cp + n,
                text: seg.to_string(),
            });
        }
        cp += n;
    }
    out
}

/// Substring of `text` by codepoint range.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end - start).collect()
}

/// URL-safe slug of a normalized name: alphanumeric runs joined by '-'.
pub fn slug(name: &str) -> String {
    let norm = normalize(name);
    let mut out = String::new();
    let mut dash = false;
    for c in norm.chars() {
        if c.is_alphanumeric() {
            if dash && !out.is_empty() {
                out.push('-');
            }
            dash = false;
            out.push(c);
        } else {
            dash = true;
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_folds_case_diacritics_and_space() {
        assert_eq!(normalize("  Den   Haag "), "den haag");
        assert_eq!(normalize("Curaçao"), "curacao");
        assert_eq!(normalize("Ĳsselmeer"), "ĳsselmeer");
        assert_eq!(normalize("'s-Gravenhage"), "'s-gravenhage");
        assert_eq!(normalize("Zuid-\tHolland"), "zuid- holland");
    }

    #[test]
    fn offset_map_points_at_original_codepoints() {
        let t = NormalizedText::new("Café  Noord");
        assert_eq!(t.as_string(), "cafe noord");
        // "noord" starts at normalized 5, original 6
        assert_eq!(t.original_span(5, 10), Some((6, 11)));
        assert_eq!(t.original_span(0, 4), Some((0, 4)));
    }

    #[test]
    fn expanded_codepoints_cannot_be_split() {
        // Hangul syllables decompose canonically into several jamo.
        let t = NormalizedText::new("한x");
        assert_eq!(t.chars().len(), 4);
        assert_eq!(t.original_span(0, 1), None);
        assert_eq!(t.original_span(0, 3), Some((0, 1)));
        assert_eq!(t.original_span(3, 4), Some((1, 2)));
    }

    #[test]
    fn boundaries_follow_word_segmentation() {
        let b = word_boundaries("Amsterdam and Rotterdam");
        assert!(b[0] && b[9] && b[10] && b[13] && b[14] && b[23]);
        assert!(!b[6]);
        let b = word_boundaries("Ee been");
        assert!(b[2] && b[3] && !b[4]);
    }

    #[test]
    fn tokens_skip_space_and_punctuation() {
        let toks: Vec<String> = tokenize("lives at 12, Kerkstraat!")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, vec!["lives", "at", "12", "Kerkstraat"]);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Kerkstraat"), "kerkstraat");
        assert_eq!(slug("'s-Gravenhage"), "s-gravenhage");
        assert_eq!(slug("Sint Jansstraat"), "sint-jansstraat");
        assert_eq!(slug("???"), "_");
    }
}
