use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::record::SampleRecord;
use crate::{seeded_shuffle, UioError};

/// Element type flowing between chain ops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    Records,
    Batches,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Record(SampleRecord),
    Batch(Vec<SampleRecord>),
}

impl Item {
    pub fn kind(&self) -> StreamKind {
        match self {
            Item::Record(_) => StreamKind::Records,
            Item::Batch(_) => StreamKind::Batches,
        }
    }

    pub fn into_record(self) -> Option<SampleRecord> {
        match self {
            Item::Record(r) => Some(r),
            Item::Batch(_) => None,
        }
    }

    pub fn into_batch(self) -> Option<Vec<SampleRecord>> {
        match self {
            Item::Batch(b) => Some(b),
            Item::Record(_) => None,
        }
    }
}

type Pred = Arc<dyn Fn(&SampleRecord) -> bool + Send + Sync>;
type MapFn = Arc<dyn Fn(SampleRecord) -> Result<SampleRecord, UioError> + Send + Sync>;

#[derive(Clone)]
pub enum ChainOp {
    /// Fills a buffer, shuffles it with a seeded generator, drains it.
    Shuffle {
        buffer: usize,
        seed: u64,
    },
    Filter(Pred),
    Map(MapFn),
    Batch(usize),
    Unbatch,
}

impl fmt::Debug for ChainOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainOp::Shuffle { buffer, seed } => write!(f, "Shuffle({buffer}, seed {seed})"),
            ChainOp::Filter(_) => f.write_str("Filter"),
            ChainOp::Map(_) => f.write_str("Map"),
            ChainOp::Batch(n) => write!(f, "Batch({n})"),
            ChainOp::Unbatch => f.write_str("Unbatch"),
        }
    }
}

impl ChainOp {
    pub fn filter(pred: impl Fn(&SampleRecord) -> bool + Send + Sync + 'static) -> Self {
        ChainOp::Filter(Arc::new(pred))
    }

    pub fn map(f: impl Fn(SampleRecord) -> Result<SampleRecord, UioError> + Send + Sync + 'static) -> Self {
        ChainOp::Map(Arc::new(f))
    }

    /// Output kind for `input`, or `None` when the op cannot accept it.
    fn output(&self, input: StreamKind) -> Option<StreamKind> {
        use StreamKind::*;
        match (self, input) {
            (ChainOp::Shuffle { .. }, k) => Some(k),
            (ChainOp::Filter(_) | ChainOp::Map(_), Records) => Some(Records),
            (ChainOp::Batch(_), Records) => Some(Batches),
            (ChainOp::Unbatch, Batches) => Some(Records),
            _ => None,
        }
    }
}

type Stream = Box<dyn Iterator<Item = Result<Item, UioError>> + Send>;

/// A type-checked sequence of chain ops over a record stream.
#[derive(Clone, Debug)]
pub struct Pipeline {
    ops: Vec<ChainOp>,
    output: StreamKind,
}

impl Pipeline {
    pub fn new(ops: Vec<ChainOp>) -> Result<Self, UioError> {
        let mut kind = StreamKind::Records;
        for (i, op) in ops.iter().enumerate() {
            match op {
                ChainOp::Shuffle { buffer: 0, .. } | ChainOp::Batch(0) => {
                    return Err(UioError::Config(format!("op {i} ({op:?}) needs a positive size")))
                }
                _ => {}
            }
            kind = op
                .output(kind)
                .ok_or_else(|| UioError::Config(format!("op {i} ({op:?}) cannot consume {kind:?}")))?;
        }
        Ok(Pipeline { ops, output: kind })
    }

    pub fn output_kind(&self) -> StreamKind {
        self.output
    }

    pub fn apply<I>(&self, input: I) -> impl Iterator<Item = Result<Item, UioError>> + Send
    where
        I: Iterator<Item = Result<SampleRecord, UioError>> + Send + 'static,
    {
        let mut stream: Stream = Box::new(input.map(|r| r.map(Item::Record)));
        for op in &self.ops {
            stream = match op.clone() {
                ChainOp::Shuffle { buffer, seed } => Box::new(ShuffleBuffer {
                    inner: stream,
                    buffer,
                    rng: ChaCha8Rng::seed_from_u64(seed),
                    out: Vec::new(),
                    done: false,
                }),
                ChainOp::Filter(pred) => Box::new(stream.filter(move |it| match it {
                    Ok(Item::Record(r)) => pred(r),
                    _ => true,
                })),
                ChainOp::Map(f) => Box::new(stream.map(move |it| match it? {
                    Item::Record(r) => f(r).map(Item::Record),
                    other => Ok(other),
                })),
                ChainOp::Batch(size) => Box::new(Batcher {
                    inner: stream,
                    size,
                    done: false,
                }),
                ChainOp::Unbatch => Box::new(stream.flat_map(|it| -> Vec<Result<Item, UioError>> {
                    match it {
                        Ok(Item::Batch(b)) => b.into_iter().map(|r| Ok(Item::Record(r))).collect(),
                        other => vec![other],
                    }
                })),
            };
        }
        stream
    }
}

struct ShuffleBuffer {
    inner: Stream,
    buffer: usize,
    rng: ChaCha8Rng,
    /// Shuffled items waiting to be yielded, in reverse order.
    out: Vec<Item>,
    done: bool,
}

impl Iterator for ShuffleBuffer {
    type Item = Result<Item, UioError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(it) = self.out.pop() {
            return Some(Ok(it));
        }
        if self.done {
            return None;
        }
        let mut buf = Vec::with_capacity(self.buffer);
        while buf.len() < self.buffer {
            match self.inner.next() {
                Some(Ok(it)) => buf.push(it),
                Some(Err(e)) => return Some(Err(e)),
                None => {
                    self.done = true;
                    break;
                }
            }
        }
        seeded_shuffle(&mut buf, &mut self.rng);
        buf.reverse();
        self.out = buf;
        self.out.pop().map(Ok)
    }
}

struct Batcher {
    inner: Stream,
    size: usize,
    done: bool,
}

impl Iterator for Batcher {
    type Item = Result<Item, UioError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut batch = Vec::with_capacity(self.size);
        while batch.len() < self.size {
            match self.inner.next() {
                Some(Ok(Item::Record(r))) => batch.push(r),
                Some(Ok(Item::Batch(_))) => unreachable!("pipeline type-checked"),
                Some(Err(e)) => return Some(Err(e)),
                None => {
                    self.done = true;
                    break;
                }
            }
        }
        (!batch.is_empty()).then_some(Ok(Item::Batch(batch)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n: usize) -> impl Iterator<Item = Result<SampleRecord, UioError>> + Send + 'static {
        (0..n).map(|i| Ok(SampleRecord::new(format!("k{i}")).with_payload("txt", "x".repeat(i))))
    }

    fn keys(items: Vec<Item>) -> Vec<String> {
        items.into_iter().map(|i| i.into_record().unwrap().key).collect()
    }

    #[test]
    fn empty_chain_is_identity() {
        let p = Pipeline::new(vec![]).unwrap();
        let out: Vec<Item> = p.apply(input(3)).map(Result::unwrap).collect();
        assert_eq!(keys(out), vec!["k0", "k1", "k2"]);
    }

    #[test]
    fn filter_then_batch() {
        let p = Pipeline::new(vec![ChainOp::filter(|r| r.num_bytes() > 0), ChainOp::Batch(2)]).unwrap();
        assert_eq!(p.output_kind(), StreamKind::Batches);
        let sizes: Vec<usize> = p
            .apply(input(6))
            .map(|b| b.unwrap().into_batch().unwrap().len())
            .collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn shuffle_is_deterministic_permutation() {
        let p = Pipeline::new(vec![ChainOp::Shuffle { buffer: 4, seed: 7 }]).unwrap();
        let a = keys(p.apply(input(10)).map(Result::unwrap).collect());
        let b = keys(p.apply(input(10)).map(Result::unwrap).collect());
        assert_eq!(a, b);
        assert_ne!(
            a,
            keys(
                Pipeline::new(vec![])
                    .unwrap()
                    .apply(input(10))
                    .map(Result::unwrap)
                    .collect()
            )
        );
        let mut sorted = a.clone();
        sorted.sort();
        let mut expect: Vec<String> = (0..10).map(|i| format!("k{i}")).collect();
        expect.sort();
        assert_eq!(sorted, expect);
    }

    #[test]
    fn incompatible_ops_fail_at_build() {
        assert!(matches!(
            Pipeline::new(vec![ChainOp::Batch(2), ChainOp::filter(|_| true)]),
            Err(UioError::Config(_))
        ));
        assert!(Pipeline::new(vec![ChainOp::Unbatch]).is_err());
        assert!(Pipeline::new(vec![ChainOp::Batch(0)]).is_err());
        assert!(Pipeline::new(vec![
            ChainOp::Batch(2),
            ChainOp::Shuffle { buffer: 2, seed: 0 },
            ChainOp::Unbatch
        ])
        .is_ok());
    }

    #[test]
    fn map_errors_flow_through() {
        let p = Pipeline::new(vec![ChainOp::map(|r| {
            if r.key == "k1" {
                Err(UioError::Op("bad".into()))
            } else {
                Ok(r)
            }
        })])
        .unwrap();
        let out: Vec<_> = p.apply(input(3)).collect();
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
    }
}
