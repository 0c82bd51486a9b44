use std::collections::BTreeMap;

use crate::UioError;

/// Suffix of the tar entry that carries a record's metadata.
pub const META_SUFFIX: &str = "meta.json";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleRecord {
    pub key: String,
    /// Suffix (`wav`, `txt`, ...) to bytes.
    pub payloads: BTreeMap<String, Vec<u8>>,
    pub metadata: BTreeMap<String, String>,
}

impl SampleRecord {
    pub fn new(key: impl Into<String>) -> Self {
        SampleRecord {
            key: key.into(),
            ..Default::default()
        }
    }

    pub fn with_payload(mut self, suffix: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        self.payloads.insert(suffix.into(), bytes.into());
        self
    }

    pub fn with_meta(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.metadata.insert(k.into(), v.into());
        self
    }

    pub fn num_bytes(&self) -> usize {
        self.payloads.values().map(Vec::len).sum()
    }

    /// Keys are entry-name prefixes, so they may not contain `/` or `.`.
    pub fn validate(&self) -> Result<(), UioError> {
        let bad = |reason: &str| {
            Err(UioError::InvalidRecord {
                key: self.key.clone(),
                reason: reason.to_string(),
            })
        };
        if self.key.is_empty() {
            return bad("empty key");
        }
        if self.key.contains(['/', '\\', '.']) || self.key.chars().any(char::is_whitespace) {
            return bad("key may not contain path separators, dots or whitespace");
        }
        if self.payloads.is_empty() {
            return bad("no payload");
        }
        for suffix in self.payloads.keys() {
            if suffix.is_empty() || suffix.contains(['/', '\\']) || suffix == META_SUFFIX {
                return bad(&format!("bad payload suffix `{suffix}`"));
            }
        }
        Ok(())
    }
}
