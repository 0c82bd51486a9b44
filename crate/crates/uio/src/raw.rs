use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::record::SampleRecord;
use crate::storage::Storage;
use crate::UioError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEntry {
    pub key: String,
    /// `(suffix, locator)` pairs.
    pub payloads: Vec<(String, String)>,
}

/// Sample list for loading small datasets file by file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawList {
    pub entries: Vec<RawEntry>,
}

fn suffix_of(locator: &str, position: usize) -> String {
    let name = locator.rsplit('/').next().unwrap_or(locator);
    match name.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && !ext.is_empty() => ext.to_string(),
        _ => ["wav", "txt"]
            .get(position)
            .map_or_else(|| format!("f{position}"), |s| s.to_string()),
    }
}

impl RawList {
    /// Parses `key wav_path txt_path` lines. A payload's suffix is its file
    /// extension; relative paths are resolved against `base`.
    pub fn parse(text: &str, name: &str, base: Option<&Path>) -> Result<Self, UioError> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |message: String| UioError::Parse {
                locator: name.to_string(),
                line: i + 1,
                message,
            };
            if fields.len() < 2 {
                return Err(err("expected `key path...`".into()));
            }
            if !seen.insert(fields[0]) {
                return Err(err(format!("duplicate key `{}`", fields[0])));
            }
            let mut payloads: Vec<(String, String)> = Vec::new();
            for (j, loc) in fields[1..].iter().enumerate() {
                let suffix = suffix_of(loc, j);
                if payloads.iter().any(|(s, _)| *s == suffix) {
                    return Err(err(format!("two payloads with suffix `{suffix}`")));
                }
                let loc = match base {
                    Some(b) if !loc.contains("://") && Path::new(loc).is_relative() => {
                        b.join(loc).to_string_lossy().into_owned()
                    }
                    _ => loc.to_string(),
                };
                payloads.push((suffix, loc));
            }
            entries.push(RawEntry {
                key: fields[0].to_string(),
                payloads,
            });
        }
        Ok(RawList { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Random-access reader over a [`RawList`]; one open per payload file.
pub struct RawReader {
    list: RawList,
    storage: Arc<dyn Storage>,
    pos: usize,
}

impl RawReader {
    pub fn new(list: RawList, storage: Arc<dyn Storage>) -> Self {
        RawReader { list, storage, pos: 0 }
    }

    /// Positions the reader so the next record is entry `index`.
    pub fn seek(&mut self, index: usize) {
        self.pos = index.min(self.list.len());
    }

    pub fn get(&self, index: usize) -> Option<Result<SampleRecord, UioError>> {
        let entry = self.list.entries.get(index)?;
        Some(self.load(entry))
    }

    fn load(&self, entry: &RawEntry) -> Result<SampleRecord, UioError> {
        let mut rec = SampleRecord::new(&entry.key);
        for (suffix, loc) in &entry.payloads {
            let missing = |source| UioError::Missing {
                key: entry.key.clone(),
                locator: loc.clone(),
                source,
            };
            let mut data = Vec::new();
            let mut f = self.storage.open(loc).map_err(|e| match e {
                UioError::Io { source, .. } => missing(source),
                other => other,
            })?;
            f.read_to_end(&mut data).map_err(missing)?;
            rec.payloads.insert(suffix.clone(), data);
        }
        Ok(rec)
    }
}

impl Iterator for RawReader {
    type Item = Result<SampleRecord, UioError>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.get(self.pos)?;
        self.pos += 1;
        Some(out)
    }
}
