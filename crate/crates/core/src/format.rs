//! On-disk virtual texture (`.vtx`) and NoiseValue sidecar (`.vtn`).
//!
//! `.vtx` layout, all integers little-endian:
//!
//! ```text
//! 0   "VTX1"
//! 4   version        u32 (= 1)
//! 8   page_size      u32
//! 12  border         u32
//! 16  mip_count      u32
//! 20  bytes_per_px   u32 (= 3)
//! 24  40 zero bytes
//! 64  page 0, page 1, ... each (page_size + 2*border)^2 * 3 bytes, RGB8 row-major
//! ```
//!
//! `.vtn` layout: `"VTN1"`, version u32, count u32, 4 reserved zero bytes, then
//! `count` f32 values in absolute page order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use crate::error::{Result, VtError};
use crate::page::{PageId, TextureMeta, BYTES_PER_PIXEL};

pub const HEADER_LEN: usize = 64;
pub const VTX_MAGIC: [u8; 4] = *b"VTX1";
pub const VTX_VERSION: u32 = 1;
pub const NOISE_HEADER_LEN: usize = 16;
pub const VTN_MAGIC: [u8; 4] = *b"VTN1";
pub const VTN_VERSION: u32 = 1;

/// One stored page: the page interior plus its border, RGB8 row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PagePayload {
    pub id: PageId,
    pub pixels: Vec<u8>,
}

impl PagePayload {
    /// Texel at `(x, y)` of the bordered block.
    pub fn texel(&self, edge: u32, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * edge + x) * BYTES_PER_PIXEL) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Anything pages can be fetched from by absolute index.
pub trait PageSource: Sync {
    fn meta(&self) -> TextureMeta;
    fn read_page(&self, p_abs: usize) -> Result<PagePayload>;
}

pub fn encode_header(meta: &TextureMeta) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&VTX_MAGIC);
    let fields = [VTX_VERSION, meta.page_size, meta.border, meta.mip_count, BYTES_PER_PIXEL];
    for (i, v) in fields.iter().enumerate() {
        h[4 + 4 * i..8 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    h
}

pub fn decode_header(h: &[u8]) -> Result<TextureMeta> {
    if h.len() < HEADER_LEN {
        return Err(VtError::format("header shorter than 64 bytes"));
    }
    if h[0..4] != VTX_MAGIC {
        return Err(VtError::format(format!("bad magic {:?}", &h[0..4])));
    }
    let word = |i: usize| u32::from_le_bytes(h[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != VTX_VERSION {
        return Err(VtError::format(format!("unsupported version {}", word(0))));
    }
    if word(4) != BYTES_PER_PIXEL {
        return Err(VtError::format(format!("unsupported bytes per pixel {}", word(4))));
    }
    TextureMeta::new(word(1), word(2), word(3)).map_err(|e| VtError::format(e.to_string()))
}

/// Writes header and pages. Pages must arrive in ascending absolute order and
/// cover the whole pyramid.
pub fn write_vt_to<W: Write>(
    mut out: W,
    meta: &TextureMeta,
    pages: impl IntoIterator<Item = PagePayload>,
) -> Result<()> {
    out.write_all(&encode_header(meta))?;
    let mut expected = 0usize;
    for page in pages {
        if page.id.abs_index() != expected {
            return Err(VtError::format(format!(
                "page {:?} out of order, expected absolute index {expected}",
                page.id
            )));
        }
        if page.pixels.len() != meta.page_bytes() {
            return Err(VtError::format(format!(
                "page {:?} has {} bytes, expected {}",
                page.id,
                page.pixels.len(),
                meta.page_bytes()
            )));
        }
        out.write_all(&page.pixels)?;
        expected += 1;
    }
    if expected != meta.total_pages() {
        return Err(VtError::format(format!("wrote {expected} pages, pyramid needs {}", meta.total_pages())));
    }
    out.flush()?;
    Ok(())
}

pub fn write_vt(
    path: impl AsRef<Path>,
    meta: &TextureMeta,
    pages: impl IntoIterator<Item = PagePayload>,
) -> Result<()> {
    let file = File::create(path)?;
    write_vt_to(BufWriter::new(file), meta, pages)
}

/// Read handle on a `.vtx` file. Page reads seek directly to the fixed-stride offset.
#[derive(Debug)]
pub struct VtFile {
    meta: TextureMeta,
    file: Mutex<File>,
}

impl VtFile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = File::open(path)?;
        let mut header = [0u8; HEADER_LEN];
        file.read_exact(&mut header)?;
        let meta = decode_header(&header)?;
        Ok(Self { meta, file: Mutex::new(file) })
    }
}

impl PageSource for VtFile {
    fn meta(&self) -> TextureMeta {
        self.meta
    }

    fn read_page(&self, p_abs: usize) -> Result<PagePayload> {
        let id = self.meta.from_abs(p_abs)?;
        let mut pixels = vec![0u8; self.meta.page_bytes()];
        let mut file = self.file.lock().expect("vtx file lock poisoned");
        file.seek(SeekFrom::Start(self.meta.page_file_offset(p_abs)))?;
        file.read_exact(&mut pixels)?;
        Ok(PagePayload { id, pixels })
    }
}

/// All pages of a pyramid held in memory, indexed by absolute page index.
#[derive(Debug, Clone)]
pub struct PageStore {
    meta: TextureMeta,
    pages: Vec<Vec<u8>>,
}

impl PageStore {
    pub fn new(meta: TextureMeta, pages: Vec<PagePayload>) -> Result<Self> {
        if pages.len() != meta.total_pages() {
            return Err(VtError::format(format!("{} pages given, pyramid needs {}", pages.len(), meta.total_pages())));
        }
        let mut out = Vec::with_capacity(pages.len());
        for (i, p) in pages.into_iter().enumerate() {
            if p.id.abs_index() != i || p.pixels.len() != meta.page_bytes() {
                return Err(VtError::format(format!("page {:?} misplaced or mis-sized", p.id)));
            }
            out.push(p.pixels);
        }
        Ok(Self { meta, pages: out })
    }

    pub fn load(source: &dyn PageSource) -> Result<Self> {
        let meta = source.meta();
        let pages = (0..meta.total_pages()).map(|i| source.read_page(i)).collect::<Result<Vec<_>>>()?;
        Self::new(meta, pages)
    }

    pub fn iter(&self) -> impl Iterator<Item = PagePayload> + '_ {
        self.pages
            .iter()
            .enumerate()
            .map(move |(i, px)| PagePayload { id: self.meta.from_abs(i).expect("index in range"), pixels: px.clone() })
    }
}

impl PageSource for PageStore {
    fn meta(&self) -> TextureMeta {
        self.meta
    }

    fn read_page(&self, p_abs: usize) -> Result<PagePayload> {
        let id = self.meta.from_abs(p_abs)?;
        Ok(PagePayload { id, pixels: self.pages[p_abs].clone() })
    }
}

/// Per-page NoiseValues in absolute page order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    pub values: Vec<f32>,
}

impl NoiseTable {
    pub fn zeros(count: usize) -> Self {
        Self { values: vec![0.0; count] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: PageId) -> f32 {
        self.values[id.abs_index()]
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

pub fn write_noise_to<W: Write>(mut out: W, table: &NoiseTable) -> Result<()> {
    out.write_all(&VTN_MAGIC)?;
    out.write_all(&VTN_VERSION.to_le_bytes())?;
    out.write_all(&(table.values.len() as u32).to_le_bytes())?;
    out.write_all(&[0u8; 4])?;
    for v in &table.values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_noise(path: impl AsRef<Path>, table: &NoiseTable) -> Result<()> {
    write_noise_to(BufWriter::new(File::create(path)?), table)
}

/// Reads a sidecar; `expected_count` is the page count of the companion texture.
pub fn read_noise_from<R: Read>(mut input: R, expected_count: Option<usize>) -> Result<NoiseTable> {
    let mut header = [0u8; NOISE_HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[0..4] != VTN_MAGIC {
        return Err(VtError::format("bad noise sidecar magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VTN_VERSION {
        return Err(VtError::format(format!("unsupported noise sidecar version {version}")));
    }
    let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if let Some(expected) = expected_count {
        if count != expected {
            return Err(VtError::format(format!("noise sidecar holds {count} values, texture has {expected} pages")));
        }
    }
    let mut raw = vec![0u8; count * 4];
    input.read_exact(&mut raw)?;
    let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(NoiseTable { values })
}

pub fn read_noise(path: impl AsRef<Path>, expected_count: Option<usize>) -> Result<NoiseTable> {
    read_noise_from(BufReader::new(File::open(path)?), expected_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pages(meta: &TextureMeta) -> Vec<PagePayload> {
        (0..meta.total_pages())
            .map(|i| PagePayload {
                id: meta.from_abs(i).unwrap(),
                pixels: (0..meta.page_bytes()).map(|b| (b * 7 + i * 13) as u8).collect(),
            })
            .collect()
    }

    #[test]
    fn header_is_64_bytes_little_endian() {
        let meta = TextureMeta::new(128, 4, 5).unwrap();
        let h = encode_header(&meta);
        assert_eq!(h.len(), 64);
        assert_eq!(&h[0..4], b"VTX1");
        assert_eq!(&h[8..12], &[128, 0, 0, 0]);
        assert!(h[24..].iter().all(|&b| b == 0));
        assert_eq!(decode_header(&h).unwrap(), meta);
    }

    #[test]
    fn roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vtx");
        let meta = TextureMeta::new(4, 1, 2).unwrap();
        let written = pages(&meta);
        assert_eq!(written.len(), 5);
        write_vt(&path, &meta, written.clone()).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, meta.page_file_offset(5));

        let vt = VtFile::open(&path).unwrap();
        for p in &written {
            assert_eq!(&vt.read_page(p.id.abs_index()).unwrap(), p);
        }
        assert!(matches!(vt.read_page(5), Err(VtError::Domain(_))));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0..4].copy_from_slice(b"XXXX");
        let bad = dir.path().join("bad.vtx");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(VtFile::open(&bad), Err(VtError::Format(_))));

        let truncated = dir.path().join("short.vtx");
        std::fs::write(&truncated, &std::fs::read(&path).unwrap()[..200]).unwrap();
        let vt = VtFile::open(&truncated).unwrap();
        assert!(matches!(vt.read_page(4), Err(VtError::Io(_))));
    }

    #[test]
    fn writer_rejects_incomplete_or_unordered_streams() {
        let meta = TextureMeta::new(4, 1, 2).unwrap();
        let mut ps = pages(&meta);
        ps.swap(1, 2);
        assert!(write_vt_to(Vec::new(), &meta, ps).is_err());
        let mut ps = pages(&meta);
        ps.pop();
        assert!(write_vt_to(Vec::new(), &meta, ps).is_err());
    }

    #[test]
    fn noise_sidecar() {
        let table = NoiseTable::zeros(21);
        let mut buf = Vec::new();
        write_noise_to(&mut buf, &table).unwrap();
        assert_eq!(buf.len(), 16 + 84);
        assert_eq!(read_noise_from(&buf[..], Some(21)).unwrap(), table);
        assert!(matches!(read_noise_from(&buf[..], Some(5)), Err(VtError::Format(_))));
    }
}
