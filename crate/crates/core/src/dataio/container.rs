use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::dynsys::TrajectorySet;
use crate::error::{Error, FormatError, Result};

pub const MAGIC: [u8; 4] = *b"LTSF";
pub const FORMAT_VERSION: u16 = 1;

/// A named train/test pair plus free-form generator metadata.
///
/// Both sets share the state dimension and either both carry timestamps or
/// neither does.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetContainer {
    pub name: String,
    pub train: TrajectorySet,
    pub test: TrajectorySet,
    pub metadata: BTreeMap<String, String>,
}

impl DatasetContainer {
    pub fn new(
        name: impl Into<String>,
        train: TrajectorySet,
        test: TrajectorySet,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let name = name.into();
        check_text(&name, "name")?;
        if train.is_empty() || test.is_empty() {
            return Err(Error::Shape(format!(
                "train {:?} and test {:?} must both be non-empty",
                train.shape(),
                test.shape()
            )));
        }
        if train.dim() != test.dim() {
            return Err(Error::Shape(format!(
                "train dim {} differs from test dim {}",
                train.dim(),
                test.dim()
            )));
        }
        if train.timestamps().is_some() != test.timestamps().is_some() {
            return Err(Error::Shape("train and test disagree on timestamps".into()));
        }
        for (k, v) in &metadata {
            if k.is_empty() || k.contains('=') || k == "name" {
                return Err(Error::Config(format!("invalid metadata key {k:?}")));
            }
            check_text(k, "metadata key")?;
            check_text(v, "metadata value")?;
        }
        Ok(Self {
            name,
            train,
            test,
            metadata,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn traj_len(&self) -> usize {
        self.train.traj_len()
    }
}

fn check_text(s: &str, what: &str) -> Result<()> {
    if s.contains('\n') {
        return Err(Error::Config(format!("{what} must not contain newlines: {s:?}")));
    }
    Ok(())
}

/// Magic, version and the metadata block.
pub fn encode_header(metadata: &[(String, String)]) -> Vec<u8> {
    let text: String = metadata.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    let mut out = Vec::with_capacity(10 + text.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out
}

/// Everything in a tensor block before its values.
pub fn encode_block_header(dims: [u64; 3], timestamps: Option<&[f64]>) -> Vec<u8> {
    let mut out = vec![3u8];
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    match timestamps {
        Some(ts) => {
            out.push(1);
            for t in ts {
                out.extend_from_slice(&t.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    out
}

fn container_metadata(c: &DatasetContainer) -> Vec<(String, String)> {
    std::iter::once(("name".to_string(), c.name.clone()))
        .chain(c.metadata.iter().map(|(k, v)| (k.clone(), v.clone())))
        .collect()
}

fn write_block<W: Write>(w: &mut W, set: &TrajectorySet) -> std::io::Result<()> {
    let (m, n, d) = set.shape();
    w.write_all(&encode_block_header([m as u64, n as u64, d as u64], set.timestamps()))?;
    for v in set.data() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Writes `c` in LTSF-TENSOR v1 layout; values are stored as `f32`.
pub fn save(c: &DatasetContainer, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let run = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(&encode_header(&container_metadata(c)))?;
        write_block(w, &c.train)?;
        write_block(w, &c.test)?;
        w.flush()
    };
    run(&mut w).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(FormatError::Truncated(what))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N], FormatError> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, FormatError> {
        Ok(self.array::<1>(what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, FormatError> {
        let bytes = self.take(n.checked_mul(8).ok_or(FormatError::Truncated(what))?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<Vec<(String, String)>, FormatError> {
    let magic = cur.array::<4>("magic")?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = cur.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let len = cur.u32("metadata length")? as usize;
    let text = std::str::from_utf8(cur.take(len, "metadata")?)
        .map_err(|_| FormatError::BadMetadata("metadata is not UTF-8".into()))?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            line.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| FormatError::BadMetadata(format!("line without '=': {line:?}")))
        })
        .collect()
}

struct BlockHeader {
    dims: [u64; 3],
    timestamps: Option<Vec<f64>>,
}

impl BlockHeader {
    fn values(&self) -> Result<usize, FormatError> {
        let d = self.dims;
        d[0].checked_mul(d[1])
            .and_then(|v| v.checked_mul(d[2]))
            .and_then(|v| v.checked_mul(4))
            .and_then(|v| usize::try_from(v).ok())
            .map(|bytes| bytes / 4)
            .ok_or(FormatError::ShapeOverflow(d))
    }
}

fn parse_block_header(cur: &mut Cursor<'_>) -> Result<BlockHeader, FormatError> {
    let rank = cur.u8("tensor rank")?;
    if rank != 3 {
        return Err(FormatError::BadRank(rank));
    }
    let dims = [cur.u64("dims")?, cur.u64("dims")?, cur.u64("dims")?];
    let n = usize::try_from(dims[1]).map_err(|_| FormatError::ShapeOverflow(dims))?;
    let timestamps = match cur.u8("timestamp flag")? {
        0 => None,
        1 => Some(cur.f64s(n, "timestamps")?),
        other => return Err(FormatError::BadMetadata(format!("timestamp flag {other}"))),
    };
    Ok(BlockHeader { dims, timestamps })
}

fn parse_block(cur: &mut Cursor<'_>) -> Result<TrajectorySet> {
    let header = parse_block_header(cur)?;
    let count = header.values()?;
    let bytes = cur.take(count * 4, "tensor values")?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
        .collect();
    let [m, n, d] = header.dims.map(|v| v as usize);
    TrajectorySet::new((m, n, d), data, header.timestamps)
}

fn split_metadata(pairs: Vec<(String, String)>) -> Result<(String, BTreeMap<String, String>), FormatError> {
    let mut name = None;
    let mut rest = BTreeMap::new();
    for (k, v) in pairs {
        if k == "name" {
            name = Some(v);
        } else {
            rest.insert(k, v);
        }
    }
    let name = name.ok_or_else(|| FormatError::BadMetadata("missing name".into()))?;
    Ok((name, rest))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses a container from raw bytes.
pub fn decode(bytes: &[u8]) -> Result<DatasetContainer> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (name, metadata) = split_metadata(parse_header(&mut cur)?)?;
    if metadata.get("format").map(String::as_str) == Some("checkpoint") {
        return Err(FormatError::BadMetadata("file is a checkpoint, not a dataset".into()).into());
    }
    let train = parse_block(&mut cur)?;
    let test = parse_block(&mut cur)?;
    if cur.remaining() != 0 {
        return Err(FormatError::TrailingBytes(cur.remaining()).into());
    }
    DatasetContainer::new(name, train, test, metadata)
}

pub fn load(path: &Path) -> Result<DatasetContainer> {
    decode(&read_all(path)?)
}

/// Shapes and metadata of a container, read without loading tensor values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeaderSummary {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub train_dims: [u64; 3],
    pub test_dims: [u64; 3],
    pub has_timestamps: bool,
}

pub fn peek(path: &Path) -> Result<HeaderSummary> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    let mut fixed = [0u8; 10];
    read_or_truncated(&mut file, &mut fixed, "header").map_err(|e| e.into_error(path))?;
    let meta_len = u32::from_le_bytes(fixed[6..10].try_into().expect("4 bytes")) as usize;
    let mut head = fixed.to_vec();
    head.resize(10 + meta_len, 0);
    read_or_truncated(&mut file, &mut head[10..], "metadata").map_err(|e| e.into_error(path))?;
    let pairs = parse_header(&mut Cursor { bytes: &head, pos: 0 })?;
    let (name, metadata) = split_metadata(pairs)?;

    let mut blocks = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut bh = [0u8; 26];
        read_or_truncated(&mut file, &mut bh, "block header").map_err(|e| e.into_error(path))?;
        let mut cur = Cursor { bytes: &bh, pos: 0 };
        let rank = cur.u8("tensor rank")?;
        if rank != 3 {
            return Err(FormatError::BadRank(rank).into());
        }
        let dims = [cur.u64("dims")?, cur.u64("dims")?, cur.u64("dims")?];
        let flag = cur.u8("timestamp flag")?;
        let ts_bytes = if flag == 1 { dims[1] * 8 } else { 0 };
        let values = BlockHeader { dims, timestamps: None }.values()? as u64 * 4;
        let skip = i64::try_from(ts_bytes + values).map_err(|_| FormatError::ShapeOverflow(dims))?;
        file.seek(SeekFrom::Current(skip)).map_err(io)?;
        blocks.push((dims, flag == 1));
    }
    Ok(HeaderSummary {
        name,
        metadata,
        train_dims: blocks[0].0,
        test_dims: blocks[1].0,
        has_timestamps: blocks[0].1,
    })
}

enum ReadFail {
    Truncated(&'static str),
    Io(std::io::Error),
}

impl ReadFail {
    fn into_error(self, path: &Path) -> Error {
        match self {
            ReadFail::Truncated(what) => FormatError::Truncated(what).into(),
            ReadFail::Io(e) => Error::io(path, e),
        }
    }
}

fn read_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<(), ReadFail> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => ReadFail::Truncated(what),
        _ => ReadFail::Io(e),
    })
}

/// Named `f64` parameter groups plus metadata, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: BTreeMap<String, String>,
    pub groups: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn group(&self, name: &str) -> Result<&[f64]> {
        self.groups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| FormatError::BadMetadata(format!("checkpoint has no group {name:?}")).into())
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| FormatError::BadMetadata(format!("checkpoint has no key {key:?}")).into())
    }
}

/// Header with `format=checkpoint`, then `u32` group count and per group a
/// `u16`-length name, a `u64` count and that many `f64` values.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut meta = vec![("format".to_string(), "checkpoint".to_string())];
    for (k, v) in &ckpt.metadata {
        if k == "format" || k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::Config(format!("invalid checkpoint metadata {k:?}={v:?}")));
        }
        meta.push((k.clone(), v.clone()));
    }
    if !meta.iter().any(|(k, _)| k == "name") {
        meta.insert(0, ("name".into(), "checkpoint".into()));
    }
    let mut out = encode_header(&meta);
    out.extend_from_slice(&(ckpt.groups.len() as u32).to_le_bytes());
    for (name, values) in &ckpt.groups {
        let len = u16::try_from(name.len())
            .map_err(|_| Error::Config(format!("group name too long: {} bytes", name.len())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = read_all(path)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    let mut metadata: BTreeMap<String, String> = parse_header(&mut cur)?.into_iter().collect();
    if metadata.remove("format").as_deref() != Some("checkpoint") {
        return Err(FormatError::BadMetadata("not a checkpoint file".into()).into());
    }
    let count = cur.u32("group count")? as usize;
    let mut groups = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = cur.u16("group name length")? as usize;
        let name = std::str::from_utf8(cur.take(len, "group name")?)
            .map_err(|_| FormatError::BadMetadata("group name is not UTF-8".into()))?
            .to_string();
        let n = usize::try_from(cur.u64("group length")?).map_err(|_| FormatError::Truncated("group values"))?;
        groups.push((name, cur.f64s(n, "group values")?));
    }
    if cur.remaining() != 0 {
        return Err(FormatError::TrailingBytes(cur.remaining()).into());
    }
    Ok(Checkpoint { metadata, groups })
}
