//! Token-level LCS diff used for change highlighting.

use serde::{Deserialize, Serialize};

use crate::textproc::{tokenize, ByteSpan, Token};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSpans {
    /// Removed or changed content in the first text.
    pub before: Vec<ByteSpan>,
    /// Added or changed content in the second text.
    pub after: Vec<ByteSpan>,
}

/// Marks every token outside the longest common subsequence (by surface
/// equality); runs of consecutive unmatched tokens merge into one span that
/// also covers the bytes between them.
///
/// Among equally long subsequences the choice is made so that swapping the
/// arguments swaps the outputs.
pub fn diff_spans(before: &str, after: &str) -> DiffSpans {
    let a = tokenize(before);
    let b = tokenize(after);
    let (keep_a, keep_b) = lcs_mask(&a, &b);
    DiffSpans {
        before: changed_spans(&a, &keep_a),
        after: changed_spans(&b, &keep_b),
    }
}

fn lcs_mask(a: &[Token], b: &[Token]) -> (Vec<bool>, Vec<bool>) {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    // suffix[i * width + j] = LCS length of a[i..] and b[j..]
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if a[i].surface == b[j].surface {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }
    let at = |i: usize, j: usize| suffix[i * width + j];

    let mut keep_a = vec![false; n];
    let mut keep_b = vec![false; m];
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i].surface == b[j].surface {
            keep_a[i] = true;
            keep_b[j] = true;
            i += 1;
            j += 1;
            continue;
        }
        let skip_a = at(i + 1, j);
        let skip_b = at(i, j + 1);
        if skip_a > skip_b {
            i += 1;
        } else if skip_b > skip_a {
            j += 1;
        } else if at(i + 1, j + 1) == at(i, j) {
            i += 1;
            j += 1;
        } else if a[i].surface < b[j].surface {
            // Tie: drop the lexically smaller token so the choice does not
            // depend on argument order.
            i += 1;
        } else {
            j += 1;
        }
    }
    (keep_a, keep_b)
}

fn changed_spans(tokens: &[Token], keep: &[bool]) -> Vec<ByteSpan> {
    let mut spans: Vec<ByteSpan> = Vec::new();
    let mut prev_changed = false;
    for (token, &kept) in tokens.iter().zip(keep) {
        if kept {
            prev_changed = false;
            continue;
        }
        match spans.last_mut() {
            Some(last) if prev_changed => last.end = token.byte_span.end,
            _ => spans.push(token.byte_span),
        }
        prev_changed = true;
    }
    spans
}

/// `text` with the given spans cut out.
pub fn remove_spans(text: &str, spans: &[ByteSpan]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in spans {
        out.push_str(&text[cursor..span.start]);
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}
