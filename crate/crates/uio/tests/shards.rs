use std::collections::HashSet;
use std::sync::Arc;

use ctcgraph_uio::{
    pack_shards, read_shards, ChainOp, InstrumentedStorage, LocalStorage, PackOptions, Pipeline, ReadOptions,
    SampleRecord,
};
use proptest::prelude::*;

fn synthetic(n: usize) -> Vec<SampleRecord> {
    (0..n)
        .map(|i| {
            let wav: Vec<u8> = (0..(i % 97) * 13).map(|j| (i * 31 + j * 7) as u8).collect();
            SampleRecord::new(format!("utt{i:05}"))
                .with_payload("wav", wav)
                .with_payload("txt", format!("transcript {i}"))
                .with_meta("idx", i.to_string())
        })
        .collect()
}

#[test]
fn thousand_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic(1000);
    for gzip in [false, true] {
        let out = dir.path().join(if gzip { "gz" } else { "plain" });
        let list = pack_shards(input.clone(), PackOptions { shard_size: 128, gzip }, &out).unwrap();
        assert_eq!(list.len(), 8);
        let back: Vec<SampleRecord> = read_shards(&list, ReadOptions::default(), Arc::new(LocalStorage))
            .map(Result::unwrap)
            .collect();
        assert_eq!(back, input);
    }
}

#[test]
fn shuffled_epochs_cover_every_record_once() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic(300);
    let list = pack_shards(
        input,
        PackOptions {
            shard_size: 25,
            gzip: false,
        },
        dir.path(),
    )
    .unwrap();
    let mut orders = Vec::new();
    for seed in 0..5 {
        let storage = InstrumentedStorage::new(LocalStorage);
        let opts = ReadOptions {
            shuffle: true,
            seed,
            prefetch: 4,
            ..Default::default()
        };
        let keys: Vec<String> = read_shards(&list, opts, Arc::new(storage.clone()))
            .map(|r| r.unwrap().key)
            .collect();
        assert_eq!(keys.len(), 300);
        assert_eq!(keys.iter().collect::<HashSet<_>>().len(), 300);
        let stats = storage.stats();
        assert_eq!(stats.opens, list.len());
        assert_eq!(stats.out_of_order_reads, 0);
        orders.push(keys);
    }
    assert!(orders.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn reader_feeds_a_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let list = pack_shards(
        synthetic(10),
        PackOptions {
            shard_size: 4,
            gzip: false,
        },
        dir.path(),
    )
    .unwrap();
    let p = Pipeline::new(vec![
        ChainOp::Shuffle { buffer: 3, seed: 1 },
        ChainOp::filter(|r| !r.payloads["wav"].is_empty()),
        ChainOp::Batch(4),
    ])
    .unwrap();
    let run = || -> Vec<Vec<String>> {
        let reader = read_shards(&list, ReadOptions::default(), Arc::new(LocalStorage));
        p.apply(reader)
            .map(|b| b.unwrap().into_batch().unwrap().into_iter().map(|r| r.key).collect())
            .collect()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.iter().map(Vec::len).sum::<usize>(), 9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn arbitrary_payloads_round_trip(
        payloads in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..2000), 1..20),
        shard_size in 1usize..7,
        gzip in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let input: Vec<SampleRecord> = payloads
            .into_iter()
            .enumerate()
            .map(|(i, p)| SampleRecord::new(format!("k{i}")).with_payload("bin", p))
            .collect();
        let list = pack_shards(input.clone(), PackOptions { shard_size, gzip }, dir.path()).unwrap();
        let back: Vec<SampleRecord> = read_shards(&list, ReadOptions::default(), Arc::new(LocalStorage))
            .map(Result::unwrap)
            .collect();
        prop_assert_eq!(back, input);
    }
}
