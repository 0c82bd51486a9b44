use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use clap::Args;
use ctcgraph_uio::{
    pack_shards, read_shards, ErrorPolicy, LocalStorage, PackOptions, RawList, RawReader, ReadOptions, ShardList,
    UioError,
};

use crate::{read_text, usage};

#[derive(Args)]
pub struct PackArgs {
    /// Raw sample list: `key wav_path txt_path` per line
    #[arg(long)]
    pub list: PathBuf,
    /// Output directory for shards and the manifest
    #[arg(long)]
    pub out: PathBuf,
    /// Records per shard
    #[arg(long, default_value_t = 1000)]
    pub shard_size: usize,
    /// Gzip each shard
    #[arg(long)]
    pub gzip: bool,
}

#[derive(Args)]
pub struct CatArgs {
    /// A shard manifest, or shard files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Visit shards in seeded random order
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip unreadable shards with a warning instead of failing
    #[arg(long)]
    pub skip_bad: bool,
}

fn uio_error(e: UioError) -> anyhow::Error {
    match e {
        UioError::Parse { .. } | UioError::Config(_) => usage(e.to_string()),
        other => other.into(),
    }
}

pub fn run_pack(a: PackArgs) -> Result<()> {
    if a.shard_size == 0 {
        return Err(usage("--shard-size must be at least 1"));
    }
    let name = a.list.display().to_string();
    let raw = RawList::parse(&read_text(&a.list)?, &name, a.list.parent()).map_err(uio_error)?;
    let records = RawReader::new(raw, Arc::new(LocalStorage)).collect::<Result<Vec<_>, _>>()?;
    let list = pack_shards(
        records,
        PackOptions {
            shard_size: a.shard_size,
            gzip: a.gzip,
        },
        &a.out,
    )?;
    for s in &list.shards {
        println!("{} {} {}", s.locator, s.count, s.bytes);
    }
    Ok(())
}

fn is_shard(p: &std::path::Path) -> bool {
    let s = p.to_string_lossy();
    s.ends_with(".tar") || s.ends_with(".tar.gz")
}

pub fn run_cat(a: CatArgs) -> Result<()> {
    let list = if a.inputs.len() == 1 && !is_shard(&a.inputs[0]) {
        ShardList::load(&a.inputs[0]).map_err(uio_error)?
    } else {
        ShardList::from_locators(a.inputs.iter().map(|p| p.to_string_lossy().into_owned())).map_err(uio_error)?
    };
    let opts = ReadOptions {
        shuffle: a.shuffle,
        seed: a.seed,
        policy: if a.skip_bad {
            ErrorPolicy::SkipWithWarning
        } else {
            ErrorPolicy::FailFast
        },
        ..Default::default()
    };
    let mut out = String::new();
    let mut failure = None;
    for rec in read_shards(&list, opts, Arc::new(LocalStorage)) {
        match rec {
            Ok(r) => {
                let _ = writeln!(out, "{}\t{}", r.key, r.num_bytes());
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    print!("{out}");
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
