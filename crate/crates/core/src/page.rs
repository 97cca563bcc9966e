//! Page addressing for a square mip pyramid.
//!
//! Mip 0 is the lowest resolution level and holds exactly one page; every
//! further level doubles the edge length, so level `m` holds `4^m` pages.
//! Pages are identified either by `(mip, x, y)` or by an absolute index that
//! enumerates all levels in ascending order, row-major within each level.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};

/// Bytes per texel; the pyramid is always stored as RGB8.
pub const BYTES_PER_PIXEL: u32 = 3;

/// Number of pages stored in the levels `0..mip_count`, i.e. `Σ 4^i`.
pub const fn pages_below(mip_count: u32) -> usize {
    ((1usize << (2 * mip_count)) - 1) / 3
}

/// Shape of a virtual texture pyramid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextureMeta {
    /// Edge length of a page in texels, without border.
    pub page_size: u32,
    /// Texels of neighbour data replicated around every stored page.
    pub border: u32,
    pub mip_count: u32,
}

impl TextureMeta {
    pub fn new(page_size: u32, border: u32, mip_count: u32) -> Result<Self> {
        if page_size < 2 || !page_size.is_power_of_two() {
            return Err(VtError::domain(format!("page size {page_size} is not a power of two >= 2")));
        }
        if border >= page_size / 2 {
            return Err(VtError::domain(format!(
                "border {border} must be smaller than half the page size {page_size}"
            )));
        }
        if mip_count == 0 || mip_count > 16 {
            return Err(VtError::domain(format!("mip count {mip_count} out of range 1..=16")));
        }
        Ok(Self { page_size, border, mip_count })
    }

    /// Smallest pyramid whose top level has edge `dim_max`.
    pub fn for_dim(dim_max: u32, page_size: u32, border: u32) -> Result<Self> {
        if dim_max < page_size || !dim_max.is_multiple_of(page_size) || !(dim_max / page_size).is_power_of_two() {
            return Err(VtError::domain(format!(
                "dimension {dim_max} is not page size {page_size} times a power of two"
            )));
        }
        let mip_count = (dim_max / page_size).trailing_zeros() + 1;
        Self::new(page_size, border, mip_count)
    }

    pub fn max_mip(&self) -> u32 {
        self.mip_count - 1
    }

    /// Edge of the highest resolution level.
    pub fn dim_max(&self) -> u32 {
        self.page_size << self.max_mip()
    }

    pub fn mip_dim(&self, mip: u32) -> u32 {
        self.page_size << mip
    }

    pub fn total_pages(&self) -> usize {
        pages_below(self.mip_count)
    }

    pub fn pages_in_mip(&self, mip: u32) -> Result<usize> {
        self.check_mip(mip)?;
        Ok(1usize << (2 * mip))
    }

    /// Edge of a stored page including the border on both sides.
    pub fn stored_edge(&self) -> u32 {
        self.page_size + 2 * self.border
    }

    /// Byte length of one stored (bordered) page.
    pub fn page_bytes(&self) -> usize {
        let e = self.stored_edge() as usize;
        e * e * BYTES_PER_PIXEL as usize
    }

    pub fn page_id(&self, mip: u32, x: u32, y: u32) -> Result<PageId> {
        self.check_mip(mip)?;
        let side = 1u32 << mip;
        if x >= side || y >= side {
            return Err(VtError::domain(format!("page ({x}, {y}) outside the {side}x{side} grid of mip {mip}")));
        }
        Ok(PageId { mip, x, y })
    }

    pub fn from_abs(&self, p_abs: usize) -> Result<PageId> {
        if p_abs >= self.total_pages() {
            return Err(VtError::domain(format!(
                "absolute page index {p_abs} out of range (total {})",
                self.total_pages()
            )));
        }
        let mut mip = 0;
        while pages_below(mip + 1) <= p_abs {
            mip += 1;
        }
        let (x, y) = rel_xy(p_abs - pages_below(mip), mip)?;
        Ok(PageId { mip, x, y })
    }

    /// Byte offset of page `p_abs` in a `.vtx` file.
    pub fn page_file_offset(&self, p_abs: usize) -> u64 {
        crate::format::HEADER_LEN as u64 + self.page_bytes() as u64 * p_abs as u64
    }

    pub fn contains(&self, id: PageId) -> bool {
        id.mip < self.mip_count && id.x < (1 << id.mip) && id.y < (1 << id.mip)
    }

    fn check_mip(&self, mip: u32) -> Result<()> {
        if mip >= self.mip_count {
            return Err(VtError::domain(format!("mip {mip} out of range (mip count {})", self.mip_count)));
        }
        Ok(())
    }
}

/// Splits a relative page index within mip `mip` into column and row.
pub fn rel_xy(rel: usize, mip: u32) -> Result<(u32, u32)> {
    let side = 1usize << mip;
    if rel >= side * side {
        return Err(VtError::domain(format!("relative index {rel} out of range for mip {mip}")));
    }
    Ok(((rel % side) as u32, (rel / side) as u32))
}

pub fn xy_rel(x: u32, y: u32, mip: u32) -> Result<usize> {
    let side = 1u32 << mip;
    if x >= side || y >= side {
        return Err(VtError::domain(format!("({x}, {y}) outside mip {mip}")));
    }
    Ok(x as usize + y as usize * side as usize)
}

/// Address of one page: level plus column/row within that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PageId {
    pub mip: u32,
    pub x: u32,
    pub y: u32,
}

impl PageId {
    pub const ROOT: PageId = PageId { mip: 0, x: 0, y: 0 };

    pub fn new(mip: u32, x: u32, y: u32) -> Self {
        Self { mip, x, y }
    }

    pub fn rel_index(&self) -> usize {
        self.x as usize + ((self.y as usize) << self.mip)
    }

    pub fn abs_index(&self) -> usize {
        self.rel_index() + pages_below(self.mip)
    }

    pub fn is_root(&self) -> bool {
        self.mip == 0
    }

    pub fn parent(&self) -> Option<PageId> {
        (self.mip > 0).then(|| PageId::new(self.mip - 1, self.x / 2, self.y / 2))
    }

    /// The four pages of the next level covering the same area, or `None` at the top mip.
    pub fn children(&self, mip_count: u32) -> Option<[PageId; 4]> {
        if self.mip + 1 >= mip_count {
            return None;
        }
        let (m, x, y) = (self.mip + 1, 2 * self.x, 2 * self.y);
        Some([PageId::new(m, x, y), PageId::new(m, x + 1, y), PageId::new(m, x, y + 1), PageId::new(m, x + 1, y + 1)])
    }

    /// Ancestors ordered from the parent up to the root.
    pub fn ancestors(&self) -> Ancestors {
        Ancestors { next: self.parent() }
    }

    /// The ancestor (or self) living on level `mip`, which must not exceed `self.mip`.
    pub fn ancestor_at(&self, mip: u32) -> PageId {
        debug_assert!(mip <= self.mip);
        let shift = self.mip - mip;
        PageId::new(mip, self.x >> shift, self.y >> shift)
    }

    pub fn is_ancestor_of(&self, other: &PageId) -> bool {
        self.mip < other.mip && other.ancestor_at(self.mip) == *self
    }
}

pub struct Ancestors {
    next: Option<PageId>,
}

impl Iterator for Ancestors {
    type Item = PageId;

    fn next(&mut self) -> Option<PageId> {
        let cur = self.next?;
        self.next = cur.parent();
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TextureMeta {
        TextureMeta::new(128, 4, 6).unwrap()
    }

    #[test]
    fn pages_per_mip() {
        let m = meta();
        assert_eq!(m.pages_in_mip(0).unwrap(), 1);
        assert_eq!(m.pages_in_mip(2).unwrap(), 16);
        assert_eq!(m.pages_in_mip(3).unwrap(), 64);
        assert!(matches!(m.pages_in_mip(6), Err(VtError::Domain(_))));
        assert_eq!(pages_below(4), 85);
        assert_eq!(m.total_pages(), 1365);
    }

    #[test]
    fn absolute_and_relative_indices() {
        let m = meta();
        let (x, y) = rel_xy(1, 2).unwrap();
        assert_eq!(PageId::new(2, x, y).abs_index(), 6);
        assert_eq!(PageId::ROOT.abs_index(), 0);
        assert_eq!(m.from_abs(11).unwrap(), PageId::new(2, 2, 1));
        assert!(m.from_abs(1365).is_err());

        assert_eq!(rel_xy(5, 2).unwrap(), (1, 1));
        assert_eq!(rel_xy(0, 7).unwrap(), (0, 0));
        assert_eq!(xy_rel(3, 2, 2).unwrap(), 11);
        assert!(rel_xy(16, 2).is_err());
        assert!(xy_rel(4, 0, 2).is_err());
    }

    #[test]
    fn hierarchy() {
        assert_eq!(PageId::new(2, 3, 1).parent(), Some(PageId::new(1, 1, 0)));
        assert_eq!(PageId::ROOT.parent(), None);
        assert_eq!(
            PageId::new(1, 1, 0).children(3).unwrap(),
            [PageId::new(2, 2, 0), PageId::new(2, 3, 0), PageId::new(2, 2, 1), PageId::new(2, 3, 1)]
        );
        assert_eq!(PageId::new(2, 0, 0).children(3), None);
        let chain: Vec<_> = PageId::new(3, 5, 2).ancestors().collect();
        assert_eq!(chain, vec![PageId::new(2, 2, 1), PageId::new(1, 1, 0), PageId::ROOT]);
    }

    #[test]
    fn file_offsets() {
        let m = TextureMeta::new(128, 4, 3).unwrap();
        assert_eq!(m.page_file_offset(0), 64);
        assert_eq!(m.page_file_offset(2), 64 + 55488 * 2);
        assert_eq!(m.page_file_offset(2), 111040);
        let m0 = TextureMeta::new(128, 0, 3).unwrap();
        assert_eq!(m0.page_file_offset(1), 64 + 49152);
    }

    #[test]
    fn meta_validation() {
        assert!(TextureMeta::new(100, 4, 3).is_err());
        assert!(TextureMeta::new(128, 64, 3).is_err());
        assert!(TextureMeta::new(128, 4, 0).is_err());
        let m = TextureMeta::for_dim(256, 128, 0).unwrap();
        assert_eq!(m.mip_count, 2);
        assert_eq!(TextureMeta::for_dim(128, 128, 0).unwrap().mip_count, 1);
        assert!(TextureMeta::for_dim(384, 128, 0).is_err());
        assert_eq!(TextureMeta::new(128, 4, 9).unwrap().dim_max(), 32768);
    }
}
