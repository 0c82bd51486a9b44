use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::UioError;

/// Byte-stream access to sample data. Locators are local paths or
/// `file://` URLs; other schemes are rejected by the local backend.
pub trait Storage: Send + Sync {
    fn open(&self, locator: &str) -> Result<Box<dyn Read + Send>, UioError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LocalStorage;

impl LocalStorage {
    pub fn resolve(locator: &str) -> Result<PathBuf, UioError> {
        if let Some(p) = locator.strip_prefix("file://") {
            return Ok(PathBuf::from(p));
        }
        if locator.contains("://") {
            return Err(UioError::Unsupported(locator.to_string()));
        }
        Ok(PathBuf::from(locator))
    }
}

impl Storage for LocalStorage {
    fn open(&self, locator: &str) -> Result<Box<dyn Read + Send>, UioError> {
        let path = Self::resolve(locator)?;
        let f = File::open(&path).map_err(crate::io_err(locator))?;
        Ok(Box::new(f))
    }
}

/// Access counters collected by [`InstrumentedStorage`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub opens: usize,
    pub opens_per_locator: HashMap<String, usize>,
    pub bytes: u64,
    /// Reads that did not start where the previous read on the same
    /// locator ended, including reads after reopening it.
    pub out_of_order_reads: usize,
}

/// Wraps a backend and records every open and read.
#[derive(Clone)]
pub struct InstrumentedStorage<S> {
    inner: S,
    stats: Arc<Mutex<ReadStats>>,
    cursors: Arc<Mutex<HashMap<String, u64>>>,
}

impl<S: Storage> InstrumentedStorage<S> {
    pub fn new(inner: S) -> Self {
        InstrumentedStorage {
            inner,
            stats: Arc::default(),
            cursors: Arc::default(),
        }
    }

    pub fn stats(&self) -> ReadStats {
        self.stats.lock().unwrap().clone()
    }
}

struct Counting {
    inner: Box<dyn Read + Send>,
    locator: String,
    offset: u64,
    stats: Arc<Mutex<ReadStats>>,
    cursors: Arc<Mutex<HashMap<String, u64>>>,
}

impl Read for Counting {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        let mut cursors = self.cursors.lock().unwrap();
        let end = cursors.entry(self.locator.clone()).or_insert(0);
        let mut stats = self.stats.lock().unwrap();
        if *end != self.offset {
            stats.out_of_order_reads += 1;
        }
        self.offset += n as u64;
        *end = self.offset;
        stats.bytes += n as u64;
        Ok(n)
    }
}

impl<S: Storage> Storage for InstrumentedStorage<S> {
    fn open(&self, locator: &str) -> Result<Box<dyn Read + Send>, UioError> {
        let inner = self.inner.open(locator)?;
        {
            let mut stats = self.stats.lock().unwrap();
            stats.opens += 1;
            *stats.opens_per_locator.entry(locator.to_string()).or_insert(0) += 1;
        }
        Ok(Box::new(Counting {
            inner,
            locator: locator.to_string(),
            offset: 0,
            stats: self.stats.clone(),
            cursors: self.cursors.clone(),
        }))
    }
}
