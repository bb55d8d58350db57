use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::store::{EntryId, GlossaryEntry};
use crate::textproc::{normalized_tokens, tokenize, ByteSpan};

/// Longest source term (in tokens) the matcher can retrieve.
pub const MAX_GRAM: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryMatch {
    pub entry: GlossaryEntry,
    /// Normalized tokens of the entry's source term, as found in the query.
    pub matched_gram: Vec<String>,
    /// Where the gram first occurs in the query.
    pub input_span: ByteSpan,
}

/// Whether a source term can ever be returned by the matcher.
pub fn is_reachable(source_term: &str) -> bool {
    (1..=MAX_GRAM).contains(&normalized_tokens(source_term).len())
}

/// Lookup table from normalized 1- and 2-grams to the entries whose source
/// term is exactly that gram. Terms of other lengths are not indexed.
#[derive(Debug, Default, Clone)]
pub struct GlossaryIndex {
    by_gram: HashMap<Vec<String>, BTreeSet<EntryId>>,
    gram_of: HashMap<EntryId, Vec<String>>,
}

impl GlossaryIndex {
    pub fn build<'a>(entries: impl IntoIterator<Item = &'a GlossaryEntry>) -> Self {
        let mut index = Self::default();
        for entry in entries {
            index.upsert(entry);
        }
        index
    }

    pub fn upsert(&mut self, entry: &GlossaryEntry) {
        self.remove(entry.id);
        let gram = normalized_tokens(&entry.source_term);
        if !(1..=MAX_GRAM).contains(&gram.len()) {
            return;
        }
        self.by_gram.entry(gram.clone()).or_default().insert(entry.id);
        self.gram_of.insert(entry.id, gram);
    }

    pub fn remove(&mut self, id: EntryId) {
        let Some(gram) = self.gram_of.remove(&id) else {
            return;
        };
        if let Some(ids) = self.by_gram.get_mut(&gram) {
            ids.remove(&id);
            if ids.is_empty() {
                self.by_gram.remove(&gram);
            }
        }
    }

    /// Entries whose source term occurs in `query`, ordered by first
    /// occurrence then id, one match per entry, truncated to `cap` when
    /// `cap > 0`.
    pub fn find(
        &self,
        query: &str,
        entries: &BTreeMap<EntryId, GlossaryEntry>,
        cap: usize,
    ) -> Vec<GlossaryMatch> {
        let tokens = tokenize(query);
        let mut first_seen: HashMap<EntryId, (Vec<String>, ByteSpan)> = HashMap::new();

        for start in 0..tokens.len() {
            for len in 1..=MAX_GRAM.min(tokens.len() - start) {
                let window = &tokens[start..start + len];
                let gram: Vec<String> = window.iter().map(|t| t.normalized.clone()).collect();
                let Some(ids) = self.by_gram.get(&gram) else {
                    continue;
                };
                let span = ByteSpan::new(window[0].byte_span.start, window[len - 1].byte_span.end);
                for id in ids {
                    first_seen.entry(*id).or_insert_with(|| (gram.clone(), span));
                }
            }
        }

        let mut matches: Vec<GlossaryMatch> = first_seen
            .into_iter()
            .filter_map(|(id, (matched_gram, input_span))| {
                entries.get(&id).map(|entry| GlossaryMatch {
                    entry: entry.clone(),
                    matched_gram,
                    input_span,
                })
            })
            .collect();
        matches.sort_by(|a, b| {
            (a.input_span.start, a.entry.id).cmp(&(b.input_span.start, b.entry.id))
        });
        if cap > 0 {
            matches.truncate(cap);
        }
        matches
    }
}

/// One-shot matcher over a plain entry list (builds a throwaway index).
pub fn match_glossary(query: &str, entries: &[GlossaryEntry], cap: usize) -> Vec<GlossaryMatch> {
    let by_id: BTreeMap<EntryId, GlossaryEntry> =
        entries.iter().map(|e| (e.id, e.clone())).collect();
    GlossaryIndex::build(by_id.values()).find(query, &by_id, cap)
}
