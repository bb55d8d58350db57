//! Two-column CSV payloads (glossary, TM, evaluation datasets).

use serde::{Deserialize, Serialize};

use super::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// Physical line in the payload, header = line 1.
    pub line: u64,
    /// 1-based data row.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportWarning {
    pub line: u64,
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub inserted: usize,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<ImportWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportKind {
    Glossary,
    Tm,
}

impl ImportKind {
    pub fn columns(self) -> [&'static str; 2] {
        match self {
            ImportKind::Glossary => ["source_term", "target_text"],
            ImportKind::Tm => ["source_text", "target_text"],
        }
    }
}

impl std::str::FromStr for ImportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glossary" => Ok(Self::Glossary),
            "tm" => Ok(Self::Tm),
            other => Err(format!("unknown import kind `{other}` (expected glossary or tm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CsvRow {
    pub line: u64,
    pub row: usize,
    pub first: String,
    pub second: String,
}

/// Parses a UTF-8 CSV with a header naming both `columns` (any order, extra
/// columns ignored). Rows missing a field are returned as rejections; rows
/// with blank fields are left for the caller to validate.
pub(crate) fn parse_pairs(
    bytes: &[u8],
    columns: [&str; 2],
) -> Result<(Vec<CsvRow>, Vec<RejectedRow>), StoreError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| StoreError::validation(format!("payload is not valid UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| StoreError::validation(format!("unreadable CSV header: {e}")))?
        .clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| StoreError::validation(format!("missing required column `{name}`")))
    };
    let (a, b) = (position(columns[0])?, position(columns[1])?);

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejected.push(RejectedRow {
                    line,
                    row,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match (record.get(a), record.get(b)) {
            (Some(first), Some(second)) => rows.push(CsvRow {
                line,
                row,
                first: first.to_string(),
                second: second.to_string(),
            }),
            (None, _) => rejected.push(RejectedRow {
                line,
                row,
                reason: format!("missing {}", columns[0]),
            }),
            (_, None) => rejected.push(RejectedRow {
                line,
                row,
                reason: format!("missing {}", columns[1]),
            }),
        }
    }
    Ok((rows, rejected))
}
