//! Okapi BM25 over the source side of the translation memory.
//!
//! ```text
//! idf(t)   = ln(1 + (D - df + 0.5) / (df + 0.5))
//! score(d) = Σ_t idf(t) · tf·(k1 + 1) / (tf + k1·(1 - b + b·len(d)/avg_len))
//! ```
//!
//! Query terms are the distinct normalized unigrams of the query, summed in
//! lexicographic order so that scores are bit-reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::store::{EntryId, TmEntry};
use crate::textproc::normalized_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn is_valid(&self) -> bool {
        self.k1.is_finite() && self.k1 > 0.0 && (0.0..=1.0).contains(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmMatch {
    pub entry: TmEntry,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub enum IndexChange<'a> {
    Upsert(&'a TmEntry),
    Delete(EntryId),
}

#[derive(Debug, Clone, Default)]
struct DocStats {
    len: u64,
    terms: Vec<String>,
}

/// Inverted index with the corpus statistics BM25 needs. Every mutation
/// leaves the statistics exactly as a full rebuild would.
#[derive(Debug, Clone)]
pub struct TmIndex {
    params: Bm25Params,
    docs: HashMap<EntryId, DocStats>,
    postings: HashMap<String, BTreeMap<EntryId, u32>>,
    total_len: u64,
}

impl Default for TmIndex {
    fn default() -> Self {
        Self::new(Bm25Params::default())
    }
}

impl TmIndex {
    pub fn new(params: Bm25Params) -> Self {
        assert!(params.is_valid(), "invalid BM25 parameters {params:?}");
        Self {
            params,
            docs: HashMap::new(),
            postings: HashMap::new(),
            total_len: 0,
        }
    }

    pub fn build<'a>(entries: impl IntoIterator<Item = &'a TmEntry>, params: Bm25Params) -> Self {
        let mut index = Self::new(params);
        for entry in entries {
            index.upsert(entry);
        }
        index
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn apply(&mut self, change: IndexChange<'_>) {
        match change {
            IndexChange::Upsert(entry) => self.upsert(entry),
            IndexChange::Delete(id) => self.delete(id),
        }
    }

    pub fn upsert(&mut self, entry: &TmEntry) {
        self.delete(entry.id);
        let tokens = normalized_tokens(&entry.source_text);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        for (term, count) in &tf {
            self.postings
                .entry(term.clone())
                .or_default()
                .insert(entry.id, *count);
        }
        let len = tokens.len() as u64;
        self.total_len += len;
        self.docs.insert(
            entry.id,
            DocStats {
                len,
                terms: tf.into_keys().collect(),
            },
        );
    }

    /// Unknown ids are ignored.
    pub fn delete(&mut self, id: EntryId) {
        let Some(doc) = self.docs.remove(&id) else {
            return;
        };
        self.total_len -= doc.len;
        for term in doc.terms {
            if let Some(list) = self.postings.get_mut(&term) {
                list.remove(&id);
                if list.is_empty() {
                    self.postings.remove(&term);
                }
            }
        }
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avg_len(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.docs.len() as f64
        }
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, BTreeMap::len)
    }

    pub fn doc_len(&self, id: EntryId) -> Option<u64> {
        self.docs.get(&id).map(|d| d.len)
    }

    /// Top `n` documents as `(id, score)`, best first, ties by smaller id.
    pub fn search(&self, query: &str, n: usize) -> Vec<(EntryId, f64)> {
        if n == 0 || self.docs.is_empty() {
            return Vec::new();
        }
        let terms: BTreeSet<String> = normalized_tokens(query).into_iter().collect();
        let d = self.docs.len() as f64;
        let avg_len = self.avg_len();
        let Bm25Params { k1, b } = self.params;

        let mut scores: HashMap<EntryId, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let df = list.len() as f64;
            let idf = (1.0 + (d - df + 0.5) / (df + 0.5)).ln();
            for (id, &tf) in list {
                let tf = f64::from(tf);
                let len_ratio = if avg_len > 0.0 {
                    self.docs[id].len as f64 / avg_len
                } else {
                    0.0
                };
                let norm = k1 * (1.0 - b + b * len_ratio);
                *scores.entry(*id).or_insert(0.0) += idf * (tf * (k1 + 1.0)) / (tf + norm);
            }
        }

        let mut ranked: Vec<(EntryId, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(n);
        ranked
    }
}

/// Resolves the index hits against the entry table.
pub fn retrieve_tm(
    index: &TmIndex,
    entries: &BTreeMap<EntryId, TmEntry>,
    query: &str,
    n: usize,
) -> Vec<TmMatch> {
    index
        .search(query, n)
        .into_iter()
        .filter_map(|(id, score)| entries.get(&id).map(|e| (e.clone(), score)))
        .enumerate()
        .map(|(i, (entry, score))| TmMatch {
            entry,
            score,
            rank: i + 1,
        })
        .collect()
}
