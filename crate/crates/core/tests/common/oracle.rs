//! Slow reference implementations written from the formulas, sharing no
//! code with the library beyond the tokenizer.

use tulun_core::store::{EntryId, GlossaryEntry, TmEntry};
use tulun_core::textproc::{normalized_tokens, tokenize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

// ── chrF++ ───────────────────────────────────────────────────────────────

fn punct(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in text.split_whitespace() {
        let cs: Vec<char> = w.chars().collect();
        let n = cs.len();
        if n > 1 && punct(cs[n - 1]) {
            out.push(cs[..n - 1].iter().collect());
            out.push(cs[n - 1].to_string());
        } else if n > 1 && punct(cs[0]) {
            out.push(cs[0].to_string());
            out.push(cs[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

/// Every n-gram enumerated into a list; multiset intersection by repeated
/// removal from the reference list.
fn counts(hyp: Vec<String>, reference: Vec<String>) -> (usize, usize, usize) {
    let (h, r) = (hyp.len(), reference.len());
    let mut pool = reference;
    let mut matched = 0;
    for g in &hyp {
        if let Some(pos) = pool.iter().position(|x| x == g) {
            pool.swap_remove(pos);
            matched += 1;
        }
    }
    (h, r, matched)
}

fn char_grams(text: &str, k: usize) -> Vec<String> {
    let cs: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cs.len() < k {
        return Vec::new();
    }
    (0..=cs.len() - k).map(|i| cs[i..i + k].iter().collect()).collect()
}

fn word_grams(ws: &[String], k: usize) -> Vec<String> {
    if ws.len() < k {
        return Vec::new();
    }
    (0..=ws.len() - k).map(|i| ws[i..i + k].join("\u{1}")).collect()
}

/// Per-order (hyp, ref, matched) triples: char orders 1..=6, word 1..=2.
pub fn chrf_stats(hyp: &str, reference: &str) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 1..=6 {
        out.push(counts(char_grams(hyp, k), char_grams(reference, k)));
    }
    let (hw, rw) = (words(hyp), words(reference));
    for k in 1..=2 {
        out.push(counts(word_grams(&hw, k), word_grams(&rw, k)));
    }
    out
}

pub fn chrf_from_stats(stats: &[(usize, usize, usize)]) -> f64 {
    let beta2 = 4.0;
    let mut sum = 0.0;
    let mut n = 0;
    for &(h, r, m) in stats {
        if h == 0 && r == 0 {
            continue;
        }
        n += 1;
        let p = if h == 0 { 0.0 } else { m as f64 / h as f64 };
        let rc = if r == 0 { 0.0 } else { m as f64 / r as f64 };
        if p + rc > 0.0 {
            sum += (1.0 + beta2) * p * rc / (beta2 * p + rc);
        }
    }
    if n == 0 {
        0.0
    } else {
        100.0 * sum / n as f64
    }
}

pub fn chrf(hyp: &str, reference: &str) -> f64 {
    chrf_from_stats(&chrf_stats(hyp, reference))
}

pub fn chrf_corpus(pairs: &[(String, String)]) -> f64 {
    let mut pooled = vec![(0, 0, 0); 8];
    for (h, r) in pairs {
        for (acc, s) in pooled.iter_mut().zip(chrf_stats(h, r)) {
            acc.0 += s.0;
            acc.1 += s.1;
            acc.2 += s.2;
        }
    }
    chrf_from_stats(&pooled)
}

// ── BM25 ─────────────────────────────────────────────────────────────────

/// Scores every document independently from the closed formula and ranks
/// by score descending, then id ascending. Zero scores are dropped.
pub fn bm25_rank(docs: &[TmEntry], query: &str, n: usize) -> Vec<(EntryId, f64)> {
    let (k1, b) = (1.2, 0.75);
    let tokenized: Vec<(EntryId, Vec<String>)> =
        docs.iter().map(|d| (d.id, normalized_tokens(&d.source_text))).collect();
    let d = tokenized.len() as f64;
    if tokenized.is_empty() {
        return Vec::new();
    }
    let avg = tokenized.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / d;
    let mut terms = normalized_tokens(query);
    terms.sort();
    terms.dedup();

    let mut scored = Vec::new();
    for (id, toks) in &tokenized {
        let mut score = 0.0;
        for q in &terms {
            let tf = toks.iter().filter(|t| *t == q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = tokenized.iter().filter(|(_, t)| t.contains(q)).count() as f64;
            let idf = (1.0 + (d - df + 0.5) / (df + 0.5)).ln();
            let ratio = if avg > 0.0 { toks.len() as f64 / avg } else { 0.0 };
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * ratio));
        }
        if score > 0.0 {
            scored.push((*id, score));
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    scored.truncate(n);
    scored
}

// ── glossary ─────────────────────────────────────────────────────────────

/// `(entry id, start byte of first occurrence)` for every entry whose 1- or
/// 2-token term occurs contiguously in the query, ordered by (start, id).
pub fn glossary_scan(entries: &[GlossaryEntry], query: &str) -> Vec<(EntryId, usize)> {
    let q = tokenize(query);
    let mut out = Vec::new();
    for e in entries {
        let term = normalized_tokens(&e.source_term);
        if term.is_empty() || term.len() > 2 || term.len() > q.len() {
            continue;
        }
        let hit = (0..=q.len() - term.len())
            .find(|&i| (0..term.len()).all(|j| q[i + j].normalized == term[j]));
        if let Some(i) = hit {
            out.push((e.id, q[i].byte_span.start));
        }
    }
    out.sort_by_key(|&(id, start)| (start, id));
    out
}
