//! Residency state: the page cache, the page table with ancestor fallback,
//! and the indirection table the sampler reads.
//!
//! The root page is loaded and locked at construction so every page table
//! entry always resolves to some resident frame.

use crate::error::{Result, VtError};
use crate::format::{PagePayload, PageSource};
use crate::page::{pages_below, PageId, TextureMeta, BYTES_PER_PIXEL};

/// Frame coordinates inside the cache grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FrameCoord {
    pub fx: u32,
    pub fy: u32,
}

#[derive(Debug, Clone, Default)]
struct FrameSlot {
    page: Option<PageId>,
    last_use: u64,
    locked: bool,
}

/// Fixed grid of page-sized frames backed by one RGB8 "physical texture".
#[derive(Debug, Clone)]
pub struct PageCache {
    meta: TextureMeta,
    frames_x: u32,
    frames_y: u32,
    slots: Vec<FrameSlot>,
    /// Frame index per absolute page index.
    resident: Vec<Option<u32>>,
    texels: Vec<u8>,
    clock: u64,
}

impl PageCache {
    pub fn new(meta: TextureMeta, frames_x: u32, frames_y: u32) -> Result<Self> {
        if frames_x == 0 || frames_y == 0 {
            return Err(VtError::Capacity("cache needs at least one frame".into()));
        }
        let edge = meta.stored_edge() as usize;
        let texels = vec![0u8; frames_x as usize * frames_y as usize * edge * edge * BYTES_PER_PIXEL as usize];
        Ok(Self {
            meta,
            frames_x,
            frames_y,
            slots: vec![FrameSlot::default(); (frames_x * frames_y) as usize],
            resident: vec![None; meta.total_pages()],
            texels,
            clock: 1,
        })
    }

    pub fn meta(&self) -> &TextureMeta {
        &self.meta
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn frames(&self) -> (u32, u32) {
        (self.frames_x, self.frames_y)
    }

    pub fn resident_count(&self) -> usize {
        self.slots.iter().filter(|s| s.page.is_some()).count()
    }

    pub fn locked_count(&self) -> usize {
        self.slots.iter().filter(|s| s.locked).count()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Starts a new recency epoch (one per rendered frame).
    pub fn advance_clock(&mut self) {
        self.clock += 1;
    }

    pub fn is_resident(&self, id: PageId) -> bool {
        self.resident[id.abs_index()].is_some()
    }

    pub fn frame_of(&self, id: PageId) -> Option<FrameCoord> {
        self.resident[id.abs_index()].map(|i| self.coord(i))
    }

    pub fn occupant(&self, frame: FrameCoord) -> Option<PageId> {
        self.slots[self.index(frame)].page
    }

    pub fn is_locked(&self, id: PageId) -> bool {
        self.resident[id.abs_index()].is_some_and(|i| self.slots[i as usize].locked)
    }

    pub fn last_use(&self, id: PageId) -> Option<u64> {
        self.resident[id.abs_index()].map(|i| self.slots[i as usize].last_use)
    }

    pub fn resident_pages(&self) -> impl Iterator<Item = PageId> + '_ {
        self.slots.iter().filter_map(|s| s.page)
    }

    fn coord(&self, index: u32) -> FrameCoord {
        FrameCoord { fx: index % self.frames_x, fy: index / self.frames_x }
    }

    fn index(&self, f: FrameCoord) -> usize {
        (f.fy * self.frames_x + f.fx) as usize
    }

    /// Marks a resident page as used in the current epoch; no-op otherwise.
    pub fn touch(&mut self, id: PageId) {
        if let Some(i) = self.resident[id.abs_index()] {
            self.slots[i as usize].last_use = self.clock;
        }
    }

    /// Stores `payload` in the least recently used unlocked frame (ties go to
    /// the lowest frame index) and returns the evicted page, if any.
    /// Re-inserting a resident page only refreshes its recency.
    pub fn insert(&mut self, payload: &PagePayload) -> Result<Option<PageId>> {
        let id = payload.id;
        if !self.meta.contains(id) {
            return Err(VtError::domain(format!("page {id:?} outside the texture")));
        }
        if payload.pixels.len() != self.meta.page_bytes() {
            return Err(VtError::format(format!("payload for {id:?} has the wrong size")));
        }
        if self.is_resident(id) {
            self.touch(id);
            return Ok(None);
        }
        let victim = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.locked)
            .min_by_key(|(i, s)| (s.last_use, *i))
            .map(|(i, _)| i)
            .ok_or_else(|| VtError::Capacity("every cache frame is locked".into()))?;
        let evicted = self.slots[victim].page.take();
        if let Some(old) = evicted {
            self.resident[old.abs_index()] = None;
        }
        self.slots[victim] = FrameSlot { page: Some(id), last_use: self.clock, locked: false };
        self.resident[id.abs_index()] = Some(victim as u32);
        self.upload(victim, &payload.pixels);
        Ok(evicted)
    }

    /// Frees the frame holding `id`. Returns false when the page was not
    /// resident; locked pages cannot be evicted.
    pub fn evict(&mut self, id: PageId) -> Result<bool> {
        let Some(i) = self.resident[id.abs_index()] else {
            return Ok(false);
        };
        if self.slots[i as usize].locked {
            return Err(VtError::Contract(format!("cannot evict locked page {id:?}")));
        }
        self.slots[i as usize] = FrameSlot::default();
        self.resident[id.abs_index()] = None;
        Ok(true)
    }

    pub fn lock(&mut self, id: PageId) -> Result<()> {
        let i = self.resident[id.abs_index()]
            .ok_or_else(|| VtError::Contract(format!("cannot lock non-resident page {id:?}")))?;
        self.slots[i as usize].locked = true;
        Ok(())
    }

    fn upload(&mut self, frame: usize, pixels: &[u8]) {
        let edge = self.meta.stored_edge() as usize;
        let row_bytes = edge * BYTES_PER_PIXEL as usize;
        let stride = self.physical_width() as usize * BYTES_PER_PIXEL as usize;
        let c = self.coord(frame as u32);
        let base = c.fy as usize * edge * stride + c.fx as usize * row_bytes;
        for (r, row) in pixels.chunks_exact(row_bytes).enumerate() {
            let o = base + r * stride;
            self.texels[o..o + row_bytes].copy_from_slice(row);
        }
    }

    pub fn physical_width(&self) -> u32 {
        self.frames_x * self.meta.stored_edge()
    }

    pub fn physical_height(&self) -> u32 {
        self.frames_y * self.meta.stored_edge()
    }

    /// Texel of the physical texture in absolute texel coordinates.
    #[inline]
    pub fn texel(&self, px: u32, py: u32) -> [u8; 3] {
        let i = ((py * self.physical_width() + px) * BYTES_PER_PIXEL) as usize;
        [self.texels[i], self.texels[i + 1], self.texels[i + 2]]
    }
}

/// Per-page record of where to sample: its own frame if resident, otherwise
/// the frame of the nearest resident ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PageTableEntry {
    pub resident: bool,
    pub frame: FrameCoord,
    /// Mip of the page actually occupying `frame`.
    pub source_mip: u32,
}

#[derive(Debug, Clone)]
pub struct PageTable {
    entries: Vec<PageTableEntry>,
}

impl PageTable {
    pub fn new(meta: &TextureMeta) -> Self {
        Self { entries: vec![PageTableEntry::default(); meta.total_pages()] }
    }

    pub fn entry(&self, id: PageId) -> &PageTableEntry {
        &self.entries[id.abs_index()]
    }

    pub fn entries(&self) -> &[PageTableEntry] {
        &self.entries
    }

    /// Single ascending pass; parents precede children in absolute order, so a
    /// non-resident entry can copy its parent's already-final fallback.
    pub fn update(&mut self, cache: &PageCache) -> Result<()> {
        let meta = *cache.meta();
        for abs in 0..self.entries.len() {
            let id = meta.from_abs(abs)?;
            self.entries[abs] = match cache.frame_of(id) {
                Some(frame) => PageTableEntry { resident: true, frame, source_mip: id.mip },
                None => match id.parent() {
                    Some(parent) => PageTableEntry { resident: false, ..self.entries[parent.abs_index()] },
                    None => {
                        return Err(VtError::Contract("root page is not resident".into()));
                    }
                },
            };
        }
        Ok(())
    }

    /// Mip of the page that currently stands in for `id`.
    pub fn fallback_mip(&self, id: PageId) -> u32 {
        self.entry(id).source_mip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndirectionEntry {
    /// Frame column (red channel).
    pub fx: u32,
    /// Frame row (green channel).
    pub fy: u32,
    /// Mip of the page residing in that frame (blue channel).
    pub mip: u32,
}

/// Flattened page table, one texel per page in absolute order.
#[derive(Debug, Clone, Default)]
pub struct IndirectionTable {
    entries: Vec<IndirectionEntry>,
}

impl IndirectionTable {
    pub fn build(table: &PageTable) -> Self {
        Self {
            entries: table
                .entries()
                .iter()
                .map(|e| IndirectionEntry { fx: e.frame.fx, fy: e.frame.fy, mip: e.source_mip })
                .collect(),
        }
    }

    pub fn get(&self, id: PageId) -> Option<&IndirectionEntry> {
        self.entries.get(id.abs_index())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Cache, page table and indirection table kept consistent together.
#[derive(Debug, Clone)]
pub struct VtRuntime {
    pub meta: TextureMeta,
    pub cache: PageCache,
    pub table: PageTable,
    pub indirection: IndirectionTable,
}

impl VtRuntime {
    /// Empty cache with the root page loaded and locked.
    pub fn new(source: &dyn PageSource, frames_x: u32, frames_y: u32) -> Result<Self> {
        let meta = source.meta();
        let mut cache = PageCache::new(meta, frames_x, frames_y)?;
        cache.insert(&source.read_page(0)?)?;
        cache.lock(PageId::ROOT)?;
        let mut rt = Self { meta, cache, table: PageTable::new(&meta), indirection: IndirectionTable::default() };
        rt.refresh()?;
        Ok(rt)
    }

    /// Square-ish cache of at least `frames` frames.
    pub fn with_capacity(source: &dyn PageSource, frames: usize) -> Result<Self> {
        let fx = (frames as f64).sqrt().ceil().max(1.0) as u32;
        let fy = (frames as u32).div_ceil(fx).max(1);
        Self::new(source, fx, fy)
    }

    /// Every page of the texture resident.
    pub fn fully_resident(source: &dyn PageSource) -> Result<Self> {
        let total = source.meta().total_pages();
        let mut rt = Self::with_capacity(source, total)?;
        for abs in 1..total {
            rt.cache.insert(&source.read_page(abs)?)?;
        }
        rt.refresh()?;
        Ok(rt)
    }

    /// Rebuilds page table and indirection table from the cache.
    pub fn refresh(&mut self) -> Result<()> {
        self.table.update(&self.cache)?;
        self.indirection = IndirectionTable::build(&self.table);
        Ok(())
    }

    /// Loads and pins every page of mips `0..k`.
    pub fn lock_mips(&mut self, k: u32, source: &dyn PageSource) -> Result<usize> {
        let k = k.min(self.meta.mip_count);
        let count = pages_below(k);
        if count > self.cache.capacity() {
            return Err(VtError::Capacity(format!(
                "locking {k} mips needs {count} frames, cache has {}",
                self.cache.capacity()
            )));
        }
        for abs in 0..count {
            let id = self.meta.from_abs(abs)?;
            if !self.cache.is_resident(id) {
                self.cache.insert(&source.read_page(abs)?)?;
            }
            self.cache.lock(id)?;
        }
        self.refresh()?;
        Ok(count)
    }

    /// Inserts pages then refreshes the tables; returns evicted pages.
    pub fn load(&mut self, payloads: &[PagePayload]) -> Result<Vec<PageId>> {
        let mut evicted = Vec::new();
        for p in payloads {
            evicted.extend(self.cache.insert(p)?);
        }
        self.refresh()?;
        Ok(evicted)
    }

    pub fn is_resident(&self, id: PageId) -> bool {
        self.cache.is_resident(id)
    }
}
