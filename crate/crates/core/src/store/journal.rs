//! Line-delimited record file for one collection.
//!
//! Each line is either a full record or a tombstone `{"id":N,"deleted":true}`.
//! Replaying the file in order (last write wins) yields the live set. When
//! dead lines outnumber live records the file is rewritten to a snapshot of
//! the live set via write-to-temp and rename.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EntryId, StoreError};

pub(crate) trait Keyed {
    fn key(&self) -> EntryId;
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tombstone {
    id: EntryId,
    deleted: bool,
}

pub(crate) enum Op<'a, T> {
    Put(&'a T),
    Delete(EntryId),
}

const COMPACT_SLACK: usize = 64;

#[derive(Debug)]
pub(crate) struct Journal {
    path: PathBuf,
    file: File,
    lines: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Journal {
    /// Opens (creating if absent) and replays the journal.
    pub fn open<T>(path: &Path) -> Result<(Self, BTreeMap<EntryId, T>), StoreError>
    where
        T: DeserializeOwned + Serialize + Keyed,
    {
        let mut live = BTreeMap::new();
        let mut lines = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                lines += 1;
                let corrupt = |reason: String| StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: i + 1,
                    record: line.clone(),
                    reason,
                };
                if let Ok(t) = serde_json::from_str::<Tombstone>(&line) {
                    if !t.deleted {
                        return Err(corrupt("tombstone with deleted=false".into()));
                    }
                    live.remove(&t.id);
                    continue;
                }
                let record: T = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                live.insert(record.key(), record);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        let mut journal = Self {
            path: path.to_path_buf(),
            file,
            lines,
        };
        if journal.lines != live.len() {
            journal.compact(&live)?;
        }
        Ok((journal, live))
    }

    pub fn append<T: Serialize>(&mut self, ops: &[Op<'_, T>]) -> Result<(), StoreError> {
        if ops.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for op in ops {
            match op {
                Op::Put(record) => serde_json::to_writer(&mut buf, record)?,
                Op::Delete(id) => serde_json::to_writer(
                    &mut buf,
                    &Tombstone {
                        id: *id,
                        deleted: true,
                    },
                )?,
            }
            buf.push(b'\n');
        }
        let path = self.path.clone();
        self.file.write_all(&buf).map_err(io_err(&path))?;
        self.file.sync_data().map_err(io_err(&path))?;
        self.lines += ops.len();
        Ok(())
    }

    /// Compacts when the file carries too many superseded lines.
    pub fn maybe_compact<T: Serialize>(
        &mut self,
        live: &BTreeMap<EntryId, T>,
    ) -> Result<(), StoreError> {
        if self.lines > 2 * live.len() + COMPACT_SLACK {
            self.compact(live)?;
        }
        Ok(())
    }

    pub fn compact<T: Serialize>(&mut self, live: &BTreeMap<EntryId, T>) -> Result<(), StoreError> {
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let file = File::create(&tmp).map_err(io_err(&tmp))?;
            let mut w = BufWriter::new(file);
            for record in live.values() {
                serde_json::to_writer(&mut w, record)?;
                w.write_all(b"\n").map_err(io_err(&tmp))?;
            }
            let file = w.into_inner().map_err(|e| io_err(&tmp)(e.into_error()))?;
            file.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &self.path).map_err(io_err(&self.path))?;
        self.file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(io_err(&self.path))?;
        self.lines = live.len();
        Ok(())
    }
}

/// Writes `bytes` to `path` atomically (temp file + rename).
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp).map_err(io_err(&tmp))?;
        file.write_all(bytes).map_err(io_err(&tmp))?;
        file.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}
