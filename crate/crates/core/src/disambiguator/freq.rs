//! Reference-corpus frequencies of gazetteer names.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::DisambiguationError;
use crate::recognizer::{aligned_matches, Automaton};

/// Normalized toponym -> occurrence count. Missing names count as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreqTable {
    counts: BTreeMap<String, u64>,
}

impl FreqTable {
    pub fn get(&self, name: &str) -> u64 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (name, n) in &self.counts {
            writeln!(w, "{name}\t{n}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, DisambiguationError> {
        let mut counts = BTreeMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |detail: &str| DisambiguationError::Format {
                what: "frequency table",
                line: i + 1,
                detail: detail.to_string(),
            };
            let (name, n) = line.rsplit_once('\t').ok_or_else(|| bad("expected name<TAB>count"))?;
            let n = n
                .trim()
                .parse::<u64>()
                .map_err(|_| bad("count is not a non-negative integer"))?;
            counts.insert(name.to_string(), n);
        }
        Ok(FreqTable { counts })
    }
}

impl FromIterator<(String, u64)> for FreqTable {
    fn from_iter<T: IntoIterator<Item = (String, u64)>>(iter: T) -> Self {
        FreqTable {
            counts: iter.into_iter().collect(),
        }
    }
}

/// Counts word-boundary aligned occurrences of every automaton pattern,
/// overlapping hits included. The corpus is read line by line, so names do
/// not match across line breaks.
pub fn build_freq_table<R: BufRead>(corpus: R, automaton: &Automaton) -> Result<FreqTable, DisambiguationError> {
    let mut counts = vec![0u64; automaton.patterns().len()];
    for line in corpus.lines() {
        for (_, pid) in aligned_matches(&line?, automaton) {
            counts[pid as usize] += 1;
        }
    }
    Ok(automaton.patterns().iter().cloned().zip(counts).collect())
}
