use std::collections::VecDeque;
use std::io::{BufReader, Read};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::Arc;
use std::thread;

use flate2::read::GzDecoder;

use crate::pack::ShardList;
use crate::record::{SampleRecord, META_SUFFIX};
use crate::storage::Storage;
use crate::{shuffled_order, UioError};

/// What to do when a shard cannot be opened or parsed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorPolicy {
    #[default]
    FailFast,
    SkipWithWarning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadOptions {
    pub shuffle: bool,
    pub seed: u64,
    pub policy: ErrorPolicy,
    /// Shards decoded concurrently ahead of the consumer, at least 1.
    pub prefetch: usize,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            shuffle: false,
            seed: 0,
            policy: ErrorPolicy::FailFast,
            prefetch: 2,
        }
    }
}

type Msg = Result<SampleRecord, UioError>;

/// Decoded records a reader thread may hold ahead of the consumer.
const RECORD_BUFFER: usize = 64;

/// Streams records shard by shard. Each shard is decoded sequentially on
/// its own thread; records are yielded in shard-list order regardless of
/// which thread finishes first.
pub struct ShardReader {
    storage: Arc<dyn Storage>,
    pending: VecDeque<String>,
    inflight: VecDeque<(String, Receiver<Msg>)>,
    opts: ReadOptions,
    failed: bool,
}

/// Reads every record of `list`, visiting shards in seeded Fisher–Yates
/// order when `opts.shuffle` is set.
pub fn read_shards(list: &ShardList, opts: ReadOptions, storage: Arc<dyn Storage>) -> ShardReader {
    let locators: Vec<String> = list.locators().map(str::to_string).collect();
    let pending = if opts.shuffle {
        shuffled_order(locators.len(), opts.seed)
            .into_iter()
            .map(|i| locators[i].clone())
            .collect()
    } else {
        locators.into()
    };
    ShardReader {
        storage,
        pending,
        inflight: VecDeque::new(),
        opts,
        failed: false,
    }
}

impl ShardReader {
    fn fill(&mut self) {
        while self.inflight.len() < self.opts.prefetch.max(1) {
            let Some(locator) = self.pending.pop_front() else { break };
            let (tx, rx) = sync_channel(RECORD_BUFFER);
            let storage = self.storage.clone();
            let loc = locator.clone();
            thread::spawn(move || read_shard(storage.as_ref(), &loc, &tx));
            self.inflight.push_back((locator, rx));
        }
    }
}

impl Iterator for ShardReader {
    type Item = Result<SampleRecord, UioError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.fill();
            let (locator, rx) = self.inflight.front()?;
            match rx.recv() {
                Ok(Ok(rec)) => return Some(Ok(rec)),
                Ok(Err(e)) => {
                    let locator = locator.clone();
                    self.inflight.pop_front();
                    match self.opts.policy {
                        ErrorPolicy::FailFast => {
                            self.failed = true;
                            self.inflight.clear();
                            self.pending.clear();
                            return Some(Err(e));
                        }
                        ErrorPolicy::SkipWithWarning => log::warn!("skipping shard {locator}: {e}"),
                    }
                }
                Err(_) => {
                    self.inflight.pop_front();
                }
            }
        }
    }
}

fn split_name(name: &str) -> Option<(&str, &str)> {
    let base = name.rsplit('/').next().unwrap_or(name);
    base.split_once('.').filter(|(k, s)| !k.is_empty() && !s.is_empty())
}

fn read_shard(storage: &dyn Storage, locator: &str, tx: &SyncSender<Msg>) {
    let stream = match storage.open(locator) {
        Ok(s) => s,
        Err(e) => {
            let _ = tx.send(Err(e));
            return;
        }
    };
    let stream = BufReader::with_capacity(1 << 16, stream);
    let stream: Box<dyn Read> = if locator.ends_with(".gz") {
        Box::new(GzDecoder::new(stream))
    } else {
        Box::new(stream)
    };
    if let Err(e) = parse_tar(stream, locator, tx) {
        let _ = tx.send(Err(e));
    }
}

/// Groups adjacent `key.suffix` entries into records and sends each as
/// soon as the next key starts.
fn parse_tar(stream: Box<dyn Read>, locator: &str, tx: &SyncSender<Msg>) -> Result<(), UioError> {
    let corrupt = |entry: String, message: String| UioError::Corrupt {
        shard: locator.to_string(),
        entry,
        message,
    };
    let mut archive = tar::Archive::new(stream);
    let entries = archive.entries().map_err(|e| corrupt("#0".into(), e.to_string()))?;
    let mut current: Option<SampleRecord> = None;
    let mut last_name = String::from("<start>");
    for (i, entry) in entries.enumerate() {
        let mut entry = entry.map_err(|e| corrupt(format!("#{i} (after `{last_name}`)"), e.to_string()))?;
        if !entry.header().entry_type().is_file() {
            continue;
        }
        let name = entry
            .path()
            .map_err(|e| corrupt(format!("#{i}"), e.to_string()))?
            .to_string_lossy()
            .into_owned();
        let mut data = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut data)
            .map_err(|e| corrupt(name.clone(), e.to_string()))?;
        let (key, suffix) =
            split_name(&name).ok_or_else(|| corrupt(name.clone(), "name is not `key.suffix`".into()))?;
        if current.as_ref().is_some_and(|r| r.key != key) && tx.send(Ok(current.take().unwrap())).is_err() {
            return Ok(());
        }
        let rec = current.get_or_insert_with(|| SampleRecord::new(key));
        if suffix == META_SUFFIX {
            rec.metadata = serde_json::from_slice(&data).map_err(|e| corrupt(name.clone(), e.to_string()))?;
        } else {
            rec.payloads.insert(suffix.to_string(), data);
        }
        last_name = name;
    }
    if let Some(rec) = current {
        let _ = tx.send(Ok(rec));
    }
    Ok(())
}
