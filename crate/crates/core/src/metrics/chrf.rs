//! chrF++: character n-gram F-score extended with word n-grams.
//!
//! For every character order `1..=char_order` and word order
//! `1..=word_order` the clipped n-gram matches between hypothesis and
//! reference give a precision P and recall R, combined as
//! `F = (1 + β²)·P·R / (β²·P + R)` (0 when `P + R = 0`). The score is the
//! mean F over the orders for which at least one side has n-grams, × 100.
//!
//! Character n-grams ignore whitespace. Words are whitespace-separated, with
//! one leading or trailing punctuation character split off as its own
//! token. Case is preserved.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::textproc::char_ngrams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        Self {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

impl ChrfParams {
    pub fn is_valid(&self) -> bool {
        self.char_order >= 1 && self.beta.is_finite() && self.beta > 0.0
    }
}

/// Match counts for one n-gram order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderStats {
    pub hyp: u64,
    pub reference: u64,
    pub matched: u64,
}

impl OrderStats {
    fn add(&mut self, other: &OrderStats) {
        self.hyp += other.hyp;
        self.reference += other.reference;
        self.matched += other.matched;
    }
}

/// Sufficient statistics for chrF++: character orders first, then word
/// orders. Statistics of several segments add up to corpus statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats {
    pub orders: Vec<OrderStats>,
}

impl ChrfStats {
    pub fn compute(hypothesis: &str, reference: &str, params: &ChrfParams) -> Self {
        let mut orders = Vec::with_capacity(params.char_order + params.word_order);
        let hyp_chars = char_ngrams(hypothesis, params.char_order);
        let ref_chars = char_ngrams(reference, params.char_order);
        for (h, r) in hyp_chars.iter().zip(&ref_chars) {
            orders.push(order_stats(h, r));
        }
        let hyp_words = word_tokens(hypothesis);
        let ref_words = word_tokens(reference);
        for k in 1..=params.word_order {
            orders.push(order_stats(&word_ngrams(&hyp_words, k), &word_ngrams(&ref_words, k)));
        }
        Self { orders }
    }

    pub fn accumulate(&mut self, other: &ChrfStats) {
        if self.orders.is_empty() {
            self.orders = vec![OrderStats::default(); other.orders.len()];
        }
        assert_eq!(self.orders.len(), other.orders.len(), "mismatched chrF statistics");
        for (mine, theirs) in self.orders.iter_mut().zip(&other.orders) {
            mine.add(theirs);
        }
    }

    /// Score in `[0, 100]`. With no n-grams on either side at any order the
    /// score is 0.
    pub fn score(&self, beta: f64) -> f64 {
        let beta2 = beta * beta;
        let mut total = 0.0;
        let mut effective = 0usize;
        for o in &self.orders {
            if o.hyp == 0 && o.reference == 0 {
                continue;
            }
            effective += 1;
            let p = if o.hyp > 0 { o.matched as f64 / o.hyp as f64 } else { 0.0 };
            let r = if o.reference > 0 { o.matched as f64 / o.reference as f64 } else { 0.0 };
            if p + r > 0.0 {
                total += (1.0 + beta2) * p * r / (beta2 * p + r);
            }
        }
        if effective == 0 {
            0.0
        } else {
            100.0 * total / effective as f64
        }
    }
}

fn order_stats<K: Eq + Hash>(hyp: &HashMap<K, usize>, reference: &HashMap<K, usize>) -> OrderStats {
    let matched = hyp
        .iter()
        .map(|(gram, &n)| n.min(reference.get(gram).copied().unwrap_or(0)))
        .sum::<usize>();
    OrderStats {
        hyp: hyp.values().sum::<usize>() as u64,
        reference: reference.values().sum::<usize>() as u64,
        matched: matched as u64,
    }
}

fn is_punct(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// Whitespace tokens with a single leading or trailing punctuation mark
/// split off (trailing takes precedence).
pub fn word_tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut chars = word.chars();
        let first = chars.next();
        let last = word.chars().next_back();
        if word.chars().count() == 1 {
            out.push(word);
        } else if last.is_some_and(is_punct) {
            let cut = word.len() - last.map_or(0, char::len_utf8);
            out.push(&word[..cut]);
            out.push(&word[cut..]);
        } else if first.is_some_and(is_punct) {
            let cut = first.map_or(0, char::len_utf8);
            out.push(&word[..cut]);
            out.push(&word[cut..]);
        } else {
            out.push(word);
        }
    }
    out
}

fn word_ngrams<'a>(words: &[&'a str], k: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut counts = HashMap::new();
    for window in words.windows(k) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    counts
}

pub fn chrfpp_sentence(hypothesis: &str, reference: &str, params: &ChrfParams) -> f64 {
    ChrfStats::compute(hypothesis, reference, params).score(params.beta)
}

/// Corpus score from pooled statistics (not a mean of sentence scores).
/// `None` for an empty list.
pub fn chrfpp_corpus<H, R>(pairs: &[(H, R)], params: &ChrfParams) -> Option<f64>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if pairs.is_empty() {
        return None;
    }
    let mut pooled = ChrfStats::default();
    for (h, r) in pairs {
        pooled.accumulate(&ChrfStats::compute(h.as_ref(), r.as_ref(), params));
    }
    Some(pooled.score(params.beta))
}
