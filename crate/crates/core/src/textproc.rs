//! Tokenization, normalization and n-gram extraction.
//!
//! Tokens are maximal runs of Unicode letters, digits and combining marks.
//! An apostrophe or hyphen stays inside a token when it sits between two
//! token characters (`la'ós`, `well-known`); every other character is a
//! separator and is discarded.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Half-open byte range `[start, end)` into a UTF-8 string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

impl ByteSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Full Unicode case fold of `surface`.
    pub normalized: String,
    pub byte_span: ByteSpan,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c.general_category_group() == GeneralCategoryGroup::Mark
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}' | '\u{2011}')
}

/// Full Unicode case fold.
pub fn normalize(text: &str) -> String {
    caseless::default_case_fold_str(text)
}

/// Byte spans of the tokens in `text`, left to right.
pub fn token_spans(text: &str) -> Vec<ByteSpan> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
            continue;
        }
        if let Some(s) = start {
            let next_is_word = chars.peek().is_some_and(|&(_, n)| is_word_char(n));
            if is_joiner(c) && next_is_word {
                continue;
            }
            spans.push(ByteSpan::new(s, i));
            start = None;
        }
    }
    if let Some(s) = start {
        spans.push(ByteSpan::new(s, text.len()));
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<Token> {
    token_spans(text)
        .into_iter()
        .map(|span| {
            let surface = span.slice(text).to_string();
            Token {
                normalized: normalize(&surface),
                surface,
                byte_span: span,
            }
        })
        .collect()
}

/// Normalized token sequence of `text`.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.normalized).collect()
}

/// Multiset of word n-grams keyed by order.
pub type NgramCounts = BTreeMap<usize, HashMap<Vec<String>, usize>>;

/// Every contiguous k-tuple of normalized tokens for each requested order.
///
/// Orders of zero are ignored; an order longer than the token list yields an
/// empty multiset for that order.
pub fn ngrams(tokens: &[Token], orders: &[usize]) -> NgramCounts {
    let mut out = NgramCounts::new();
    for &k in orders {
        if k == 0 {
            continue;
        }
        let counts = out.entry(k).or_default();
        for window in tokens.windows(k) {
            let gram: Vec<String> = window.iter().map(|t| t.normalized.clone()).collect();
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    out
}

/// Character n-gram multisets for orders `1..=max_order`, whitespace removed.
///
/// Element `k - 1` of the result holds the order-`k` counts.
pub fn char_ngrams(text: &str, max_order: usize) -> Vec<HashMap<String, usize>> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    (1..=max_order)
        .map(|k| {
            let mut counts = HashMap::new();
            for window in chars.windows(k) {
                *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
            }
            counts
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_on_punctuation_and_space() {
        let toks = tokenize("Always check burn again,");
        let s: Vec<_> = toks.iter().map(|t| t.surface.as_str()).collect();
        let n: Vec<_> = toks.iter().map(|t| t.normalized.as_str()).collect();
        assert_eq!(s, ["Always", "check", "burn", "again"]);
        assert_eq!(n, ["always", "check", "burn", "again"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ,.;  ").is_empty());
    }

    #[test]
    fn internal_apostrophe_and_hyphen() {
        assert_eq!(surfaces("la'ós kanek"), ["la'ós", "kanek"]);
        assert_eq!(surfaces("la\u{2019}ós ne\u{2019}ebé"), ["la\u{2019}ós", "ne\u{2019}ebé"]);
        assert_eq!(surfaces("ahi-haan"), ["ahi-haan"]);
        assert_eq!(surfaces("'quoted' end- -start a--b"), ["quoted", "end", "start", "a", "b"]);
    }

    #[test]
    fn combining_marks_stay_in_token() {
        // "e" + COMBINING ACUTE ACCENT
        assert_eq!(surfaces("cafe\u{301} noir"), ["cafe\u{301}", "noir"]);
    }

    #[test]
    fn full_case_fold() {
        assert_eq!(tokenize("Straße")[0].normalized, "strasse");
    }

    #[test]
    fn ngram_examples() {
        let toks = tokenize("a b c");
        let grams = ngrams(&toks, &[1, 2]);
        assert_eq!(grams[&1].len(), 3);
        assert_eq!(grams[&2][&vec!["a".to_string(), "b".to_string()]], 1);
        assert_eq!(grams[&2][&vec!["b".to_string(), "c".to_string()]], 1);
        assert_eq!(grams[&2].len(), 2);

        assert!(ngrams(&tokenize("a"), &[2])[&2].is_empty());
        assert_eq!(ngrams(&tokenize("a a"), &[1])[&1][&vec!["a".to_string()]], 2);
    }

    #[test]
    fn char_ngram_examples() {
        let g = char_ngrams("ab c", 2);
        assert_eq!(g[1].len(), 2);
        assert_eq!(g[1]["ab"], 1);
        assert_eq!(g[1]["bc"], 1);
        assert_eq!(char_ngrams("aaa", 2)[1]["aa"], 2);
        assert!(char_ngrams("", 3).iter().all(|m| m.is_empty()));
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("a"), Just("B"), Just("é"), Just("Σ"), Just("ß"), Just("7"),
                Just(" "), Just(","), Just("'"), Just("-"), Just("\u{301}"),
                Just("ж"), Just("\u{2019}"), Just("?"), Just("\n"),
            ],
            0..40,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn spans_reconstruct_input(text in text_strategy()) {
            let toks = tokenize(&text);
            let mut rebuilt = String::new();
            let mut cursor = 0;
            for t in &toks {
                prop_assert!(t.byte_span.start >= cursor);
                prop_assert!(!t.byte_span.is_empty());
                prop_assert_eq!(t.byte_span.slice(&text), t.surface.as_str());
                prop_assert_eq!(&t.normalized, &normalize(&t.surface));
                rebuilt.push_str(&text[cursor..t.byte_span.start]);
                rebuilt.push_str(&t.surface);
                cursor = t.byte_span.end;
            }
            rebuilt.push_str(&text[cursor..]);
            prop_assert_eq!(rebuilt, text);
        }

        #[test]
        fn lowercasing_preserves_normalized_sequence(text in text_strategy()) {
            prop_assert_eq!(normalized_tokens(&text.to_lowercase()), normalized_tokens(&text));
        }

        #[test]
        fn ngram_count_identity(text in text_strategy(), orders in proptest::collection::btree_set(1usize..5, 1..4)) {
            let toks = tokenize(&text);
            let orders: Vec<usize> = orders.into_iter().collect();
            let grams = ngrams(&toks, &orders);
            let total: usize = grams.values().flat_map(|m| m.values()).sum();
            let expected: usize = orders.iter().map(|&k| (toks.len() + 1).saturating_sub(k)).sum();
            prop_assert_eq!(total, expected);
        }
    }
}
