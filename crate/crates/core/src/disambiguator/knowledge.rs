//! Pluggable encyclopedic knowledge used as NIL-classifier evidence.

use std::collections::HashMap;
use std::io::BufRead;

use serde::Serialize;

use super::DisambiguationError;
use crate::text::normalize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KbEntry {
    pub has_page: bool,
    pub is_ambiguous: bool,
}

/// Answers whether a name has an encyclopedia page and whether that page is
/// a disambiguation page. Implementations must be cheap and thread safe.
pub trait KnowledgeProvider: Send + Sync {
    fn entry(&self, normalized_name: &str) -> KbEntry;
}

/// Provider that knows nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoKnowledge;

impl KnowledgeProvider for NoKnowledge {
    fn entry(&self, _: &str) -> KbEntry {
        KbEntry::default()
    }
}

/// File-backed provider: `name<TAB>has_page<TAB>is_ambiguous` with `0/1`
/// or `true/false` flags.
#[derive(Debug, Clone, Default)]
pub struct TsvKnowledge {
    entries: HashMap<String, KbEntry>,
}

fn flag(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

impl TsvKnowledge {
    pub fn read<R: BufRead>(r: R) -> Result<Self, DisambiguationError> {
        let mut entries = HashMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let parsed = match cols.as_slice() {
                [name, page, amb] => flag(page).zip(flag(amb)).map(|(p, a)| (name, p, a)),
                _ => None,
            };
            let (name, has_page, is_ambiguous) = parsed.ok_or_else(|| DisambiguationError::Format {
                what: "knowledge file",
                line: i + 1,
                detail: "expected name<TAB>has_page<TAB>is_ambiguous".into(),
            })?;
            entries.insert(normalize(name), KbEntry { has_page, is_ambiguous });
        }
        Ok(TsvKnowledge { entries })
    }
}

impl KnowledgeProvider for TsvKnowledge {
    fn entry(&self, normalized_name: &str) -> KbEntry {
        self.entries.get(normalized_name).copied().unwrap_or_default()
    }
}
