//! Unified sample IO: pack small keyed samples into tar shards, stream them
//! back shard by shard with seeded shard-level shuffling, read raw sample
//! lists with random access, and post-process streams with chained ops.

mod chain;
mod pack;
mod raw;
mod reader;
mod record;
mod storage;

pub use chain::{ChainOp, Item, Pipeline, StreamKind};
pub use pack::{pack_shards, PackOptions, ShardInfo, ShardList, MANIFEST_NAME};
pub use raw::{RawEntry, RawList, RawReader};
pub use reader::{read_shards, ErrorPolicy, ReadOptions, ShardReader};
pub use record::{SampleRecord, META_SUFFIX};
pub use storage::{InstrumentedStorage, LocalStorage, ReadStats, Storage};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, thiserror::Error)]
pub enum UioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid record `{key}`: {reason}")]
    InvalidRecord { key: String, reason: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("shard {shard}: corrupt entry {entry}: {message}")]
    Corrupt {
        shard: String,
        entry: String,
        message: String,
    },
    #[error("sample `{key}`: cannot read {locator}: {source}")]
    Missing {
        key: String,
        locator: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{locator}: line {line}: {message}")]
    Parse {
        locator: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported locator `{0}`")]
    Unsupported(String),
    #[error("{0}")]
    Op(String),
}

pub(crate) fn io_err(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> UioError {
    let path = path.into();
    move |source| UioError::Io { path, source }
}

/// Fisher–Yates driven by ChaCha8: for `i` from the end, swap with
/// `next_u64() % (i + 1)`.
pub fn seeded_shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// The shard visiting order for `n` shards under `seed`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    seeded_shuffle(&mut order, &mut ChaCha8Rng::seed_from_u64(seed));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_is_a_seeded_permutation() {
        let a = shuffled_order(50, 7);
        assert_eq!(a, shuffled_order(50, 7));
        assert_ne!(a, shuffled_order(50, 8));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_eq!(shuffled_order(0, 1), Vec::<usize>::new());
    }
}
