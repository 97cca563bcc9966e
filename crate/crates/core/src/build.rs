//! Virtual texture compilation: compose the top level from placed images,
//! build the mip chain, cut bordered pages, compute NoiseValues and write
//! the `.vtx`/`.vtn` pair.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};
use crate::format::{self, NoiseTable, PagePayload, PageSource, PageStore};
use crate::image_ops::{clamped, luminance};
use crate::page::{PageId, TextureMeta};

/// Where each source image goes in the top mip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub target_dim: u32,
    pub placements: Vec<LayoutPlacement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlacement {
    /// Image path, relative to the layout file's directory unless absolute.
    pub image: PathBuf,
    pub x: u32,
    pub y: u32,
}

impl LayoutFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Loads every placed image, resolving relative paths against `base_dir`.
    pub fn load_sources(&self, base_dir: &Path) -> Result<Vec<PlacedImage>> {
        self.placements
            .iter()
            .map(|p| {
                let path = if p.image.is_absolute() { p.image.clone() } else { base_dir.join(&p.image) };
                let image = image::open(&path)?.to_rgb8();
                Ok(PlacedImage { image, x: p.x, y: p.y })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PlacedImage {
    pub image: RgbImage,
    pub x: u32,
    pub y: u32,
}

impl PlacedImage {
    fn rect(&self) -> (u32, u32, u32, u32) {
        (self.x, self.y, self.x + self.image.width(), self.y + self.image.height())
    }
}

/// Composes the top mip. Unplaced texels stay black.
pub fn compose_top(target_dim: u32, placed: &[PlacedImage]) -> Result<RgbImage> {
    for (i, p) in placed.iter().enumerate() {
        let (_, _, x1, y1) = p.rect();
        if x1 > target_dim || y1 > target_dim {
            return Err(VtError::Layout(format!(
                "placement {i} at ({}, {}) of size {}x{} exceeds dimension {target_dim}",
                p.x,
                p.y,
                p.image.width(),
                p.image.height()
            )));
        }
        for (j, q) in placed.iter().enumerate().skip(i + 1) {
            let (ax0, ay0, ax1, ay1) = p.rect();
            let (bx0, by0, bx1, by1) = q.rect();
            if ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1 {
                return Err(VtError::Layout(format!("placements {i} and {j} overlap")));
            }
        }
    }
    let mut top = RgbImage::new(target_dim, target_dim);
    for p in placed {
        image::imageops::replace(&mut top, &p.image, p.x as i64, p.y as i64);
    }
    Ok(top)
}

/// Halves the edge with a 2x2 box filter, rounding half up.
pub fn downsample(img: &RgbImage) -> Result<RgbImage> {
    let (w, h) = img.dimensions();
    if w % 2 != 0 || h % 2 != 0 || w == 0 || h == 0 {
        return Err(VtError::domain(format!("cannot halve odd or empty image {w}x{h}")));
    }
    Ok(RgbImage::from_fn(w / 2, h / 2, |x, y| {
        let mut out = [0u8; 3];
        let px = [
            img.get_pixel(2 * x, 2 * y),
            img.get_pixel(2 * x + 1, 2 * y),
            img.get_pixel(2 * x, 2 * y + 1),
            img.get_pixel(2 * x + 1, 2 * y + 1),
        ];
        for (c, o) in out.iter_mut().enumerate() {
            let sum: u32 = px.iter().map(|p| p.0[c] as u32).sum();
            *o = ((sum + 2) / 4) as u8;
        }
        Rgb(out)
    }))
}

/// The full pyramid in memory; `levels[0]` is a single page, `levels[max_mip]` the top.
#[derive(Debug, Clone)]
pub struct MipChain {
    pub meta: TextureMeta,
    pub levels: Vec<RgbImage>,
}

impl MipChain {
    pub fn build(top: RgbImage, page_size: u32, border: u32) -> Result<Self> {
        if top.width() != top.height() {
            return Err(VtError::domain("top mip must be square"));
        }
        let meta = TextureMeta::for_dim(top.width(), page_size, border)?;
        let mut levels = vec![top];
        while levels.len() < meta.mip_count as usize {
            let next = downsample(levels.last().unwrap())?;
            levels.push(next);
        }
        levels.reverse();
        Ok(Self { meta, levels })
    }

    /// Reassembles the chain by stitching page interiors read from `source`.
    pub fn from_source(source: &dyn PageSource) -> Result<Self> {
        let meta = source.meta();
        let (p, b, edge) = (meta.page_size, meta.border, meta.stored_edge());
        let mut levels: Vec<RgbImage> =
            (0..meta.mip_count).map(|m| RgbImage::new(meta.mip_dim(m), meta.mip_dim(m))).collect();
        for i in 0..meta.total_pages() {
            let page = source.read_page(i)?;
            let img = &mut levels[page.id.mip as usize];
            for y in 0..p {
                for x in 0..p {
                    img.put_pixel(page.id.x * p + x, page.id.y * p + y, Rgb(page.texel(edge, x + b, y + b)));
                }
            }
        }
        Ok(Self { meta, levels })
    }

    pub fn level(&self, mip: u32) -> &RgbImage {
        &self.levels[mip as usize]
    }

    /// Cuts the bordered block of `id`; texels beyond the mip edge are clamped.
    pub fn cut_page(&self, id: PageId) -> PagePayload {
        let meta = &self.meta;
        let img = self.level(id.mip);
        let edge = meta.stored_edge();
        let x0 = (id.x * meta.page_size) as i64 - meta.border as i64;
        let y0 = (id.y * meta.page_size) as i64 - meta.border as i64;
        let mut pixels = Vec::with_capacity(meta.page_bytes());
        for dy in 0..edge as i64 {
            for dx in 0..edge as i64 {
                pixels.extend_from_slice(&clamped(img, x0 + dx, y0 + dy).0);
            }
        }
        PagePayload { id, pixels }
    }

    pub fn pages(&self) -> impl Iterator<Item = PagePayload> + '_ {
        (0..self.meta.total_pages()).map(move |i| self.cut_page(self.meta.from_abs(i).unwrap()))
    }

    pub fn page_store(&self) -> PageStore {
        PageStore::new(self.meta, self.pages().collect()).expect("chain yields a complete pyramid")
    }

    /// NoiseValue of every page: RMSE in luminance between the page and the
    /// bilinearly upscaled quarter of its parent covering the same area.
    pub fn compute_noise(&self) -> NoiseTable {
        let meta = self.meta;
        let values = (0..meta.total_pages())
            .into_par_iter()
            .map(|i| {
                let id = meta.from_abs(i).unwrap();
                match id.parent() {
                    None => 0.0,
                    Some(parent) => page_noise(self, id, parent) as f32,
                }
            })
            .collect();
        NoiseTable { values }
    }
}

fn page_noise(chain: &MipChain, id: PageId, parent: PageId) -> f64 {
    let p = chain.meta.page_size;
    let q = p / 2;
    let parent_img = chain.level(parent.mip);
    let child_img = chain.level(id.mip);
    let qx = parent.x * p + (id.x % 2) * q;
    let qy = parent.y * p + (id.y % 2) * q;
    let quarter: Vec<f64> = (0..q)
        .flat_map(|y| (0..q).map(move |x| (x, y)))
        .map(|(x, y)| luminance(parent_img.get_pixel(qx + x, qy + y).0))
        .collect();
    let up = upsample2x_bilinear(&quarter, q as usize);
    let mut sum = 0.0;
    for y in 0..p {
        for x in 0..p {
            let c = luminance(child_img.get_pixel(id.x * p + x, id.y * p + y).0);
            let d = c - up[(y * p + x) as usize];
            sum += d * d;
        }
    }
    (sum / (p as f64 * p as f64)).sqrt()
}

/// Doubles a square scalar grid with bilinear interpolation and edge clamping.
pub fn upsample2x_bilinear(src: &[f64], edge: usize) -> Vec<f64> {
    let out_edge = edge * 2;
    let coord = |i: usize| {
        let u = (i as f64 + 0.5) / 2.0 - 0.5;
        let u = u.clamp(0.0, (edge - 1) as f64);
        let i0 = u.floor() as usize;
        let i1 = (i0 + 1).min(edge - 1);
        (i0, i1, u - i0 as f64)
    };
    let mut out = vec![0.0; out_edge * out_edge];
    for y in 0..out_edge {
        let (y0, y1, fy) = coord(y);
        for x in 0..out_edge {
            let (x0, x1, fx) = coord(x);
            let top = src[y0 * edge + x0] * (1.0 - fx) + src[y0 * edge + x1] * fx;
            let bot = src[y1 * edge + x0] * (1.0 - fx) + src[y1 * edge + x1] * fx;
            out[y * out_edge + x] = top * (1.0 - fy) + bot * fy;
        }
    }
    out
}

/// Builds the pyramid from a top image and writes both output files.
pub fn build_vt(
    top: RgbImage,
    page_size: u32,
    border: u32,
    vtx_path: impl AsRef<Path>,
    vtn_path: impl AsRef<Path>,
) -> Result<MipChain> {
    let chain = MipChain::build(top, page_size, border)?;
    format::write_vt(vtx_path, &chain.meta, chain.pages())?;
    format::write_noise(vtn_path, &chain.compute_noise())?;
    Ok(chain)
}

/// Layout file to `.vtx`/`.vtn`.
pub fn build_from_layout(
    layout_path: impl AsRef<Path>,
    page_size: u32,
    border: u32,
    vtx_path: impl AsRef<Path>,
    vtn_path: impl AsRef<Path>,
) -> Result<MipChain> {
    let layout_path = layout_path.as_ref();
    let layout = LayoutFile::load(layout_path)?;
    let base = layout_path.parent().unwrap_or(Path::new("."));
    let placed = layout.load_sources(base)?;
    let top = compose_top(layout.target_dim, &placed)?;
    build_vt(top, page_size, border, vtx_path, vtn_path)
}
