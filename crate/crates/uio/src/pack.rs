use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;

use crate::record::{SampleRecord, META_SUFFIX};
use crate::{io_err, UioError};

/// File listing every shard of a packed directory.
pub const MANIFEST_NAME: &str = "shards.list";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackOptions {
    pub shard_size: usize,
    pub gzip: bool,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions {
            shard_size: 1000,
            gzip: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardInfo {
    pub locator: String,
    pub count: usize,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShardList {
    pub shards: Vec<ShardInfo>,
}

impl ShardList {
    /// Builds a list from locators alone; counts and sizes are unknown (0).
    pub fn from_locators<S: Into<String>>(locators: impl IntoIterator<Item = S>) -> Result<Self, UioError> {
        let shards = locators
            .into_iter()
            .map(|l| ShardInfo {
                locator: l.into(),
                count: 0,
                bytes: 0,
            })
            .collect();
        let list = ShardList { shards };
        list.check_unique()?;
        Ok(list)
    }

    fn check_unique(&self) -> Result<(), UioError> {
        let mut seen = HashSet::new();
        for s in &self.shards {
            if !seen.insert(&s.locator) {
                return Err(UioError::Config(format!("shard `{}` listed twice", s.locator)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shards.is_empty()
    }

    pub fn locators(&self) -> impl Iterator<Item = &str> {
        self.shards.iter().map(|s| s.locator.as_str())
    }

    /// `locator count bytes` lines. Locators are written relative to `base`
    /// when they live under it.
    pub fn to_manifest(&self, base: Option<&Path>) -> String {
        let mut out = String::new();
        for s in &self.shards {
            let loc = base
                .and_then(|b| Path::new(&s.locator).strip_prefix(b).ok())
                .and_then(Path::to_str)
                .unwrap_or(&s.locator);
            let _ = writeln!(out, "{loc} {} {}", s.count, s.bytes);
        }
        out
    }

    /// Parses manifest text; relative locators are resolved against `base`.
    /// Lines may carry just a locator.
    pub fn parse_manifest(text: &str, name: &str, base: Option<&Path>) -> Result<Self, UioError> {
        let mut shards = Vec::new();
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
            let num = |j: usize| -> Result<u64, UioError> {
                fields
                    .get(j)
                    .map_or(Ok(0), |f| f.parse().map_err(|_| err(format!("bad number `{f}`"))))
            };
            if fields.len() > 3 {
                return Err(err("expected `shard_path sample_count byte_size`".into()));
            }
            let mut locator = fields[0].to_string();
            if let Some(b) = base {
                if !locator.contains("://") && Path::new(&locator).is_relative() {
                    locator = b.join(&locator).to_string_lossy().into_owned();
                }
            }
            shards.push(ShardInfo {
                locator,
                count: num(1)? as usize,
                bytes: num(2)?,
            });
        }
        let list = ShardList { shards };
        list.check_unique()?;
        Ok(list)
    }

    pub fn load(manifest: &Path) -> Result<Self, UioError> {
        let name = manifest.to_string_lossy().into_owned();
        let text = std::fs::read_to_string(manifest).map_err(io_err(&name))?;
        Self::parse_manifest(&text, &name, manifest.parent())
    }
}

fn append(builder: &mut tar::Builder<Box<dyn Write>>, name: &str, data: &[u8]) -> std::io::Result<()> {
    let mut header = tar::Header::new_ustar();
    header.set_path(name)?;
    header.set_size(data.len() as u64);
    header.set_mode(0o644);
    header.set_mtime(0);
    header.set_uid(0);
    header.set_gid(0);
    header.set_entry_type(tar::EntryType::Regular);
    header.set_cksum();
    builder.append(&header, data)
}

struct OpenShard {
    path: PathBuf,
    builder: tar::Builder<Box<dyn Write>>,
    count: usize,
}

impl OpenShard {
    fn create(dir: &Path, index: usize, gzip: bool) -> Result<Self, UioError> {
        let name = format!("shard_{index:06}.tar{}", if gzip { ".gz" } else { "" });
        let path = dir.join(name);
        let file = BufWriter::new(File::create(&path).map_err(io_err(path.to_string_lossy()))?);
        let sink: Box<dyn Write> = if gzip {
            Box::new(GzEncoder::new(file, Compression::default()))
        } else {
            Box::new(file)
        };
        let mut builder = tar::Builder::new(sink);
        builder.mode(tar::HeaderMode::Deterministic);
        Ok(OpenShard {
            path,
            builder,
            count: 0,
        })
    }

    fn finish(self) -> Result<ShardInfo, UioError> {
        let name = self.path.to_string_lossy().into_owned();
        let mut sink = self.builder.into_inner().map_err(io_err(&name))?;
        sink.flush().map_err(io_err(&name))?;
        drop(sink);
        let bytes = std::fs::metadata(&self.path).map_err(io_err(&name))?.len();
        Ok(ShardInfo {
            locator: name,
            count: self.count,
            bytes,
        })
    }
}

/// Packs records into `shard_NNNNNN.tar[.gz]` files of at most
/// `shard_size` records each and writes [`MANIFEST_NAME`] next to them.
/// Entries are `key.suffix` in suffix order, then `key.meta.json` when the
/// record has metadata. An empty input writes nothing.
pub fn pack_shards(
    samples: impl IntoIterator<Item = SampleRecord>,
    opts: PackOptions,
    out: &Path,
) -> Result<ShardList, UioError> {
    if opts.shard_size == 0 {
        return Err(UioError::Config("shard_size must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    let mut list = ShardList::default();
    let mut current: Option<OpenShard> = None;
    for rec in samples {
        rec.validate()?;
        if !seen.insert(rec.key.clone()) {
            return Err(UioError::DuplicateKey(rec.key));
        }
        if current.is_none() {
            std::fs::create_dir_all(out).map_err(io_err(out.to_string_lossy()))?;
            current = Some(OpenShard::create(out, list.len(), opts.gzip)?);
        }
        let shard = current.as_mut().unwrap();
        let shard_name = shard.path.to_string_lossy().into_owned();
        for (suffix, data) in &rec.payloads {
            append(&mut shard.builder, &format!("{}.{suffix}", rec.key), data).map_err(io_err(&shard_name))?;
        }
        if !rec.metadata.is_empty() {
            let json = serde_json::to_vec(&rec.metadata).expect("string map serializes");
            append(&mut shard.builder, &format!("{}.{META_SUFFIX}", rec.key), &json).map_err(io_err(&shard_name))?;
        }
        shard.count += 1;
        if shard.count == opts.shard_size {
            list.shards.push(current.take().unwrap().finish()?);
        }
    }
    if let Some(shard) = current {
        list.shards.push(shard.finish()?);
    }
    if !list.is_empty() {
        let manifest = out.join(MANIFEST_NAME);
        std::fs::write(&manifest, list.to_manifest(Some(out))).map_err(io_err(manifest.to_string_lossy()))?;
        log::info!("packed {} shards into {}", list.len(), out.display());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(n: usize) -> Vec<SampleRecord> {
        (0..n)
            .map(|i| SampleRecord::new(format!("u{i}")).with_payload("txt", format!("text {i}").into_bytes()))
            .collect()
    }

    #[test]
    fn shard_sizes_follow_ceiling_division() {
        let dir = tempfile::tempdir().unwrap();
        let list = pack_shards(
            recs(5),
            PackOptions {
                shard_size: 2,
                gzip: false,
            },
            dir.path(),
        )
        .unwrap();
        assert_eq!(list.shards.iter().map(|s| s.count).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert!(list.shards[0].locator.ends_with("shard_000000.tar"));
        let loaded = ShardList::load(&dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(loaded, list);
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap();
        assert!(text.starts_with("shard_000000.tar 2 "));
    }

    #[test]
    fn default_size_packs_small_sets_into_one_shard() {
        let dir = tempfile::tempdir().unwrap();
        let list = pack_shards(recs(3), PackOptions::default(), dir.path()).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.shards[0].count, 3);
    }

    #[test]
    fn empty_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let list = pack_shards(Vec::new(), PackOptions::default(), &out).unwrap();
        assert!(list.is_empty());
        assert!(!out.exists());
    }

    #[test]
    fn duplicate_keys_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = recs(2);
        r.push(r[0].clone());
        match pack_shards(r, PackOptions::default(), dir.path()) {
            Err(UioError::DuplicateKey(k)) => assert_eq!(k, "u0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn output_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for gzip in [false, true] {
            let la = pack_shards(recs(4), PackOptions { shard_size: 3, gzip }, a.path()).unwrap();
            let lb = pack_shards(recs(4), PackOptions { shard_size: 3, gzip }, b.path()).unwrap();
            for (x, y) in la.shards.iter().zip(&lb.shards) {
                assert_eq!(std::fs::read(&x.locator).unwrap(), std::fs::read(&y.locator).unwrap());
            }
        }
    }

    #[test]
    fn manifest_rejects_duplicates_and_junk() {
        assert!(ShardList::parse_manifest("a.tar 1 2\na.tar 1 2\n", "m", None).is_err());
        let err = ShardList::parse_manifest("a.tar x\n", "m", None).unwrap_err();
        assert!(matches!(err, UioError::Parse { line: 1, .. }));
        let l = ShardList::parse_manifest("a.tar\n/abs/b.tar 3 9\n", "m", Some(Path::new("/d"))).unwrap();
        assert_eq!(l.locators().collect::<Vec<_>>(), vec!["/d/a.tar", "/abs/b.tar"]);
    }
}
