//! Binary file formats for datasets and graphs.
//!
//! Dataset ("ANND"): magic, version u16, n u64, d u64, omega f64, then n*d
//! row-major f64 coordinates, trailing CRC32 of all preceding bytes.
//!
//! Graph ("ANNG"): magic, version u16, n u64, d u64, tau f64, model tag u8
//! plus its parameters as f64s, seed u64, CSR offsets (n+1 u64), neighbor
//! indices (u64 each), trailing CRC32.
//!
//! All integers little-endian. Writes are atomic (temp file + rename).

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{DensityParams, GeometryError, UnitVector};
use crate::graph::{Dataset, EdgeModel, EdgeVariant, GraphError, NeighborGraph};

pub const DATASET_MAGIC: [u8; 4] = *b"ANND";
pub const GRAPH_MAGIC: [u8; 4] = *b"ANNG";
pub const FORMAT_VERSION: u16 = 1;

const TAG_EXACT: u8 = 0;
const TAG_UNIFORM: u8 = 1;
const TAG_ADAPTIVE: u8 = 2;
const TAG_TWOSIDED: u8 = 3;

#[derive(Debug, Error)]
pub enum FileFormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes: expected {expected:?}, got {got:?}")]
    BadMagic { expected: [u8; 4], got: [u8; 4] },
    #[error("unsupported format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("unknown model tag {0}")]
    BadModelTag(u8),
    #[error("inconsistent contents: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Write `bytes` to `path` atomically: temp file in the same directory, then
/// rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FileFormatError> {
        if self.pos + n > self.buf.len() {
            return Err(FileFormatError::Truncated {
                needed: self.pos + n,
                found: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FileFormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FileFormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FileFormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FileFormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn verify_envelope<'a>(
    bytes: &'a [u8],
    magic: [u8; 4],
) -> Result<Reader<'a>, FileFormatError> {
    // magic + version + crc is the smallest well-formed file.
    if bytes.len() < 10 {
        return Err(FileFormatError::Truncated { needed: 10, found: bytes.len() });
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FileFormatError::ChecksumMismatch { stored, computed });
    }
    let mut r = Reader::new(body);
    let got: [u8; 4] = r.take(4)?.try_into().unwrap();
    if got != magic {
        return Err(FileFormatError::BadMagic { expected: magic, got });
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(FileFormatError::UnsupportedVersion(version));
    }
    Ok(r)
}

pub fn write_dataset(data: &Dataset, path: &Path) -> Result<(), FileFormatError> {
    let params = data.params();
    let mut buf = Vec::with_capacity(30 + data.len() * params.d() * 8);
    buf.extend_from_slice(&DATASET_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.n() as u64).to_le_bytes());
    buf.extend_from_slice(&(params.d() as u64).to_le_bytes());
    buf.extend_from_slice(&params.omega().to_le_bytes());
    for p in data.points() {
        for &c in p.coords() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    write_atomic(path, &buf)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, FileFormatError> {
    let bytes = fs::read(path)?;
    let mut r = verify_envelope(&bytes, DATASET_MAGIC)?;
    let n = r.u64()? as usize;
    let d = r.u64()? as usize;
    let omega = r.f64()?;
    let params = DensityParams::new(n, d)?;
    if (params.omega() - omega).abs() > 1e-9 {
        return Err(FileFormatError::Inconsistent(format!(
            "stored omega {omega} does not match log2(n)/d = {}",
            params.omega()
        )));
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut coords = Vec::with_capacity(d);
        for _ in 0..d {
            coords.push(r.f64()?);
        }
        points.push(UnitVector::from_normalized(coords)?);
    }
    if !r.done() {
        return Err(FileFormatError::Inconsistent(
            "trailing bytes after coordinate block".to_string(),
        ));
    }
    Ok(Dataset::new(points, params)?)
}

fn model_tag_and_params(model: &EdgeModel) -> (u8, Vec<f64>) {
    match model.variant() {
        EdgeVariant::Exact => (TAG_EXACT, vec![]),
        EdgeVariant::Uniform { delta } => (TAG_UNIFORM, vec![delta]),
        EdgeVariant::Adaptive => (TAG_ADAPTIVE, vec![]),
        EdgeVariant::TwoSided { delta1, delta2 } => (TAG_TWOSIDED, vec![delta1, delta2]),
    }
}

pub fn write_graph(graph: &NeighborGraph, path: &Path) -> Result<(), FileFormatError> {
    let mut buf =
        Vec::with_capacity(64 + (graph.n() + 1) * 8 + graph.edge_count() * 8);
    buf.extend_from_slice(&GRAPH_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(graph.n() as u64).to_le_bytes());
    buf.extend_from_slice(&(graph.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&graph.model().tau().to_le_bytes());
    let (tag, ps) = model_tag_and_params(graph.model());
    buf.push(tag);
    for p in ps {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    buf.extend_from_slice(&graph.seed().to_le_bytes());
    for &off in graph.offsets() {
        buf.extend_from_slice(&(off as u64).to_le_bytes());
    }
    for &t in graph.targets() {
        buf.extend_from_slice(&(t as u64).to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    write_atomic(path, &buf)?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<NeighborGraph, FileFormatError> {
    let bytes = fs::read(path)?;
    let mut r = verify_envelope(&bytes, GRAPH_MAGIC)?;
    let n = r.u64()? as usize;
    let d = r.u64()? as usize;
    let tau = r.f64()?;
    let tag = r.u8()?;
    let variant = match tag {
        TAG_EXACT => EdgeVariant::Exact,
        TAG_UNIFORM => EdgeVariant::Uniform { delta: r.f64()? },
        TAG_ADAPTIVE => EdgeVariant::Adaptive,
        TAG_TWOSIDED => EdgeVariant::TwoSided { delta1: r.f64()?, delta2: r.f64()? },
        other => return Err(FileFormatError::BadModelTag(other)),
    };
    let model = EdgeModel::new(variant, tau)?;
    let seed = r.u64()?;

    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(r.u64()? as usize);
    }
    if offsets[0] != 0 {
        return Err(FileFormatError::Inconsistent("offsets must start at 0".into()));
    }
    for w in offsets.windows(2) {
        if w[1] < w[0] {
            return Err(FileFormatError::Inconsistent("offsets must be nondecreasing".into()));
        }
    }
    let edge_count = *offsets.last().unwrap();
    let mut targets = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let t = r.u64()?;
        if t as usize >= n {
            return Err(FileFormatError::Inconsistent(format!(
                "neighbor index {t} out of range for n={n}"
            )));
        }
        targets.push(t as u32);
    }
    if !r.done() {
        return Err(FileFormatError::Inconsistent(
            "trailing bytes after neighbor block".to_string(),
        ));
    }
    // Structural invariants: rows strictly ascending, no self-loops.
    for i in 0..n {
        let row = &targets[offsets[i]..offsets[i + 1]];
        for w in row.windows(2) {
            if w[0] >= w[1] {
                return Err(FileFormatError::Inconsistent(format!(
                    "row {i} is not strictly ascending"
                )));
            }
        }
        if row.contains(&(i as u32)) {
            return Err(FileFormatError::Inconsistent(format!("self-loop at vertex {i}")));
        }
    }
    Ok(NeighborGraph::from_parts(n, d, offsets, targets, model, seed))
}
