//! Toponym detection.
//!
//! Every normalized gazetteer name is compiled into an Aho-Corasick
//! automaton over Unicode scalar values. Text is scanned through its
//! normalized shadow (see [`crate::text::NormalizedText`]); raw hits are
//! mapped back to the original text, kept only when both ends fall on word
//! boundaries, and reduced to a non-overlapping leftmost-longest set.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gazetteer::Gazetteer;
use crate::text::{char_slice, word_boundaries, NormalizedText};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizerError {
    #[error("cannot build an automaton from an empty lexicon")]
    EmptyLexicon,
}

const ROOT: u32 = 0;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct State {
    // sorted by char
    next: Vec<(char, u32)>,
    fail: u32,
    // nearest state on the failure chain (excluding self) that ends a pattern
    dict: u32,
    pattern: Option<u32>,
}

impl State {
    fn new() -> Self {
        State {
            next: Vec::new(),
            fail: ROOT,
            dict: NONE,
            pattern: None,
        }
    }

    fn goto(&self, c: char) -> Option<u32> {
        self.next
            .binary_search_by_key(&c, |(k, _)| *k)
            .ok()
            .map(|i| self.next[i].1)
    }
}

/// A raw automaton hit in normalized-char coordinates, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawMatch {
    pub pattern: u32,
    pub start: usize,
    pub end: usize,
}

/// Multi-pattern matcher over normalized names.
#[derive(Debug, Clone)]
pub struct Automaton {
    states: Vec<State>,
    patterns: Vec<String>,
    pattern_lens: Vec<usize>,
}

impl Automaton {
    /// Builds the trie, then failure and dictionary links breadth first.
    /// Duplicate and empty names are ignored; pattern ids follow the sorted
    /// order of the distinct names.
    pub fn build<'a, I>(names: I) -> Result<Self, RecognizerError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut patterns: Vec<String> = names
            .into_iter()
            .filter(|n| !n.is_empty())
            .map(str::to_string)
            .collect();
        patterns.sort();
        patterns.dedup();
        if patterns.is_empty() {
            return Err(RecognizerError::EmptyLexicon);
        }

        let mut states = vec![State::new()];
        let mut pattern_lens = Vec::with_capacity(patterns.len());
        for (pid, p) in patterns.iter().enumerate() {
            let mut s = ROOT;
            let mut len = 0;
            for c in p.chars() {
                len += 1;
                s = match states[s as usize].goto(c) {
                    Some(t) => t,
                    None => {
                        let t = states.len() as u32;
                        states.push(State::new());
                        let next = &mut states[s as usize].next;
                        let pos = next.partition_point(|(k, _)| *k < c);
                        next.insert(pos, (c, t));
                        t
                    }
                };
            }
            states[s as usize].pattern = Some(pid as u32);
            pattern_lens.push(len);
        }

        let mut queue: VecDeque<u32> = VecDeque::new();
        let root_children: Vec<u32> = states[ROOT as usize].next.iter().map(|&(_, t)| t).collect();
        for child in root_children {
            states[child as usize].fail = ROOT;
            queue.push_back(child);
        }
        while let Some(s) = queue.pop_front() {
            let children = states[s as usize].next.clone();
            for (c, child) in children {
                let mut f = states[s as usize].fail;
                let target = loop {
                    if let Some(t) = states[f as usize].goto(c) {
                        break t;
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = states[f as usize].fail;
                };
                states[child as usize].fail = target;
                states[child as usize].dict = if states[target as usize].pattern.is_some() {
                    target
                } else {
                    states[target as usize].dict
                };
                queue.push_back(child);
            }
        }

        Ok(Automaton {
            states,
            patterns,
            pattern_lens,
        })
    }

    /// Number of states including the root.
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn pattern(&self, id: u32) -> &str {
        &self.patterns[id as usize]
    }

    fn step(&self, mut s: u32, c: char) -> u32 {
        loop {
            if let Some(t) = self.states[s as usize].goto(c) {
                return t;
            }
            if s == ROOT {
                return ROOT;
            }
            s = self.states[s as usize].fail;
        }
    }

    /// Every occurrence of every pattern, overlapping ones included, ordered
    /// by end position and then by decreasing length.
    pub fn find_overlapping(&self, text: &[char]) -> Vec<RawMatch> {
        let mut out = Vec::new();
        let mut s = ROOT;
        for (i, &c) in text.iter().enumerate() {
            s = self.step(s, c);
            let mut t = if self.states[s as usize].pattern.is_some() {
                s
            } else {
                self.states[s as usize].dict
            };
            while t != NONE {
                let pid = self.states[t as usize].pattern.expect("dict links end patterns");
                let end = i + 1;
                out.push(RawMatch {
                    pattern: pid,
                    start: end - self.pattern_lens[pid as usize],
                    end,
                });
                t = self.states[t as usize].dict;
            }
        }
        out
    }
}

/// Codepoint range `[start, end)` in the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl Serialize for Span {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        if start >= end {
            return Err(serde::de::Error::custom(format!("empty span [{start}, {end})")));
        }
        Ok(Span { start, end })
    }
}

/// A detected toponym and the gazetteer features it may refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMention {
    pub span: Span,
    pub surface: String,
    pub matched_name: String,
    pub candidates: Vec<String>,
}

/// Word-boundary aligned hits mapped to original spans, before overlap
/// resolution.
pub fn aligned_matches(text: &str, automaton: &Automaton) -> Vec<(Span, u32)> {
    let shadow = NormalizedText::new(text);
    let bounds = word_boundaries(text);
    automaton
        .find_overlapping(shadow.chars())
        .into_iter()
        .filter_map(|m| {
            let (s, e) = shadow.original_span(m.start, m.end)?;
            (bounds[s] && bounds[e]).then_some((Span::new(s, e), m.pattern))
        })
        .collect()
}

/// Non-overlapping leftmost-longest selection.
fn leftmost_longest(mut hits: Vec<(Span, u32)>) -> Vec<(Span, u32)> {
    hits.sort_by(|(a, pa), (b, pb)| a.start.cmp(&b.start).then(b.end.cmp(&a.end)).then(pa.cmp(pb)));
    let mut out: Vec<(Span, u32)> = Vec::new();
    for (span, pid) in hits {
        if out.last().is_none_or(|(last, _)| span.start >= last.end) {
            out.push((span, pid));
        }
    }
    out
}

/// Scans text for gazetteer toponyms.
#[derive(Debug, Clone)]
pub struct Recognizer {
    automaton: Automaton,
}

impl Recognizer {
    pub fn new(gazetteer: &Gazetteer) -> Result<Self, RecognizerError> {
        Ok(Recognizer {
            automaton: Automaton::build(gazetteer.name_index().names())?,
        })
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn detect(&self, text: &str, gazetteer: &Gazetteer) -> Vec<CandidateMention> {
        detect(text, &self.automaton, gazetteer)
    }
}

/// Candidate mentions sorted by start offset. Spans are codepoint offsets
/// into `text`.
pub fn detect(text: &str, automaton: &Automaton, gazetteer: &Gazetteer) -> Vec<CandidateMention> {
    leftmost_longest(aligned_matches(text, automaton))
        .into_iter()
        .filter_map(|(span, pid)| {
            let name = automaton.pattern(pid);
            let candidates: Vec<String> = gazetteer.name_index().get(name).to_vec();
            (!candidates.is_empty()).then(|| CandidateMention {
                span,
                surface: char_slice(text, span.start, span.end),
                matched_name: name.to_string(),
                candidates,
            })
        })
        .collect()
}
