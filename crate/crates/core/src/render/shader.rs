//! CPU emulation of the virtual texturing fragment shader: LOD selection,
//! page identification, need-buffer codecs and filtered sampling through
//! the indirection table.

use crate::build::MipChain;
use crate::error::{Result, VtError};
use crate::page::{PageId, TextureMeta};
use crate::render::raster::Fragment;
use crate::runtime::VtRuntime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    #[default]
    Nearest,
    Bilinear,
    Trilinear,
}

impl std::str::FromStr for FilterMode {
    type Err = VtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "bilinear" => Ok(Self::Bilinear),
            "trilinear" => Ok(Self::Trilinear),
            _ => Err(VtError::Config(format!("unknown filter mode {s:?}"))),
        }
    }
}

/// Continuous mip level from screen-space UV derivatives (edge compression).
///
/// `d = log2(e_max * dim_max)` is clamped to `[0, max_mip]` and the level is
/// `max_mip - d`, so larger compression selects lower-resolution levels.
pub fn compute_mip(ds_dx: f64, dt_dx: f64, ds_dy: f64, dt_dy: f64, dim_max: u32, max_mip: u32) -> f64 {
    let ex2 = ds_dx * ds_dx + dt_dx * dt_dx;
    let ey2 = ds_dy * ds_dy + dt_dy * dt_dy;
    let e_max = ex2.max(ey2).sqrt();
    if e_max.is_nan() || e_max <= 0.0 || !e_max.is_finite() {
        return max_mip as f64;
    }
    let d = (e_max * dim_max as f64).log2().clamp(0.0, max_mip as f64);
    max_mip as f64 - d
}

pub fn fragment_level(f: &Fragment, meta: &TextureMeta) -> f64 {
    compute_mip(f.ds_dx, f.dt_dx, f.ds_dy, f.dt_dy, meta.dim_max(), meta.max_mip())
}

/// Page containing `(s, t)` on level `mip`; coordinates of exactly 1 land on the last page.
pub fn identify_page(s: f64, t: f64, mip: u32) -> PageId {
    let side = 1u32 << mip;
    let cell = |v: f64| ((v * side as f64).floor().max(0.0) as u32).min(side - 1);
    PageId::new(mip, cell(s), cell(t))
}

/// 8-bit-per-channel need-buffer texel; the alpha channel carries the high
/// nibbles of both coordinates.
pub fn encode_need8(x: u32, y: u32, mip: u32) -> Result<[u8; 4]> {
    if x >= 4096 || y >= 4096 {
        return Err(VtError::Encoding(format!("page ({x}, {y}) exceeds 4096 per axis")));
    }
    if mip >= 256 {
        return Err(VtError::Encoding(format!("mip {mip} exceeds 255")));
    }
    Ok([(x % 256) as u8, (y % 256) as u8, mip as u8, (x / 256 + (y / 256) * 16) as u8])
}

pub fn decode_need8(rgba: [u8; 4]) -> (u32, u32, u32) {
    let [r, g, b, a] = rgba.map(u32::from);
    (r + (a % 16) * 256, g + (a / 16) * 256, b)
}

pub fn encode_need32(x: u32, y: u32, mip: u32) -> [u32; 3] {
    [x, y, mip]
}

pub fn decode_need32(rgb: [u32; 3]) -> (u32, u32, u32) {
    (rgb[0], rgb[1], rgb[2])
}

/// 2-D filter applied within one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelFilter {
    Nearest,
    Bilinear,
}

/// A texture that can be sampled per level.
pub trait LevelSampler: Sync {
    fn meta(&self) -> TextureMeta;

    /// Samples the texture at the resolution of level `mip`, or whatever
    /// stands in for it.
    fn sample_level(&self, s: f64, t: f64, mip: u32, filter: LevelFilter) -> [f64; 3];
}

/// Full sample at a continuous level: nearest and bilinear use `⌊level⌋`,
/// trilinear blends `⌊level⌋` towards `⌊level⌋ + 1` by the fractional part.
pub fn sample(sampler: &dyn LevelSampler, s: f64, t: f64, level: f64, mode: FilterMode) -> [f64; 3] {
    let max_mip = sampler.meta().max_mip();
    let s = s.clamp(0.0, 1.0);
    let t = t.clamp(0.0, 1.0);
    let base = (level.floor().max(0.0) as u32).min(max_mip);
    match mode {
        FilterMode::Nearest => sampler.sample_level(s, t, base, LevelFilter::Nearest),
        FilterMode::Bilinear => sampler.sample_level(s, t, base, LevelFilter::Bilinear),
        FilterMode::Trilinear => {
            let f = (level - base as f64).clamp(0.0, 1.0);
            let lo = sampler.sample_level(s, t, base, LevelFilter::Bilinear);
            if base == max_mip || f == 0.0 {
                return lo;
            }
            let hi = sampler.sample_level(s, t, base + 1, LevelFilter::Bilinear);
            lerp3(lo, hi, f)
        }
    }
}

pub(crate) fn lerp3(a: [f64; 3], b: [f64; 3], f: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f, a[2] + (b[2] - a[2]) * f]
}

fn to_f64(c: [u8; 3]) -> [f64; 3] {
    c.map(f64::from)
}

fn bilerp(c: [[u8; 3]; 4], fx: f64, fy: f64) -> [f64; 3] {
    let top = lerp3(to_f64(c[0]), to_f64(c[1]), fx);
    let bot = lerp3(to_f64(c[2]), to_f64(c[3]), fx);
    lerp3(top, bot, fy)
}

/// Texel-space coordinate split for bilinear filtering with half-texel centering.
fn bilinear_coord(u: f64) -> (i64, f64) {
    let c = u - 0.5;
    let i = c.floor();
    (i as i64, c - i)
}

/// Samples through the page cache: the indirection entry of the page needed
/// on `mip` gives the frame and the mip of the page that actually resides
/// there; the internal offset is recomputed for that mip.
pub struct CacheSampler<'a> {
    pub runtime: &'a VtRuntime,
}

impl CacheSampler<'_> {
    pub fn sample_physical(&self, s: f64, t: f64, mip: u32, filter: LevelFilter) -> [f64; 3] {
        let rt = self.runtime;
        let meta = rt.meta;
        let needed = identify_page(s, t, mip);
        let entry = rt
            .indirection
            .get(needed)
            .unwrap_or_else(|| panic!("indirection table has no entry for {needed:?}; runtime not initialised"));
        let avail = needed.ancestor_at(entry.mip);
        let scale = (1u64 << entry.mip) as f64;
        let p = meta.page_size as f64;
        let edge = meta.stored_edge() as i64;
        let border = meta.border as i64;
        // Internal offset in texels of the resident page, in [0, page_size].
        let u = (s * scale - avail.x as f64) * p;
        let v = (t * scale - avail.y as f64) * p;
        let ox = entry.fx as i64 * edge + border;
        let oy = entry.fy as i64 * edge + border;
        let fetch = |x: i64, y: i64| {
            let x = x.clamp(-border, edge - border - 1);
            let y = y.clamp(-border, edge - border - 1);
            rt.cache.texel((ox + x) as u32, (oy + y) as u32)
        };
        match filter {
            LevelFilter::Nearest => {
                let last = meta.page_size as i64 - 1;
                to_f64(fetch((u.floor() as i64).min(last), (v.floor() as i64).min(last)))
            }
            LevelFilter::Bilinear => {
                let (x0, fx) = bilinear_coord(u);
                let (y0, fy) = bilinear_coord(v);
                bilerp([fetch(x0, y0), fetch(x0 + 1, y0), fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1)], fx, fy)
            }
        }
    }
}

impl LevelSampler for CacheSampler<'_> {
    fn meta(&self) -> TextureMeta {
        self.runtime.meta
    }

    fn sample_level(&self, s: f64, t: f64, mip: u32, filter: LevelFilter) -> [f64; 3] {
        self.sample_physical(s, t, mip, filter)
    }
}

/// Reference sampler reading the mip chain directly with clamp-to-edge.
pub struct ChainSampler<'a> {
    pub chain: &'a MipChain,
}

impl LevelSampler for ChainSampler<'_> {
    fn meta(&self) -> TextureMeta {
        self.chain.meta
    }

    fn sample_level(&self, s: f64, t: f64, mip: u32, filter: LevelFilter) -> [f64; 3] {
        let img = self.chain.level(mip);
        let dim = img.width() as f64;
        let last = img.width() as i64 - 1;
        let fetch = |x: i64, y: i64| img.get_pixel(x.clamp(0, last) as u32, y.clamp(0, last) as u32).0;
        let (u, v) = (s * dim, t * dim);
        match filter {
            LevelFilter::Nearest => to_f64(fetch((u.floor() as i64).min(last), (v.floor() as i64).min(last))),
            LevelFilter::Bilinear => {
                let (x0, fx) = bilinear_coord(u);
                let (y0, fy) = bilinear_coord(v);
                bilerp([fetch(x0, y0), fetch(x0 + 1, y0), fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1)], fx, fy)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::PageSource;
    use image::{Rgb, RgbImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(border: u32) -> MipChain {
        let top = RgbImage::from_fn(64, 64, |x, y| Rgb([(x * 4) as u8, (y * 4) as u8, ((x * 13) ^ (y * 7)) as u8]));
        MipChain::build(top, 16, border).unwrap()
    }

    #[test]
    fn lod_examples() {
        let level = compute_mip(1.0 / 512.0, 0.0, 0.0, 1.0 / 512.0, 32768, 8);
        assert!((level - 2.0).abs() < 1e-12);
        assert_eq!(compute_mip(1.0 / 32768.0, 0.0, 0.0, 1.0 / 32768.0, 32768, 8), 8.0);
        assert_eq!(compute_mip(1.0, 1.0, 0.0, 0.0, 32768, 8), 0.0);
        assert_eq!(compute_mip(0.0, 0.0, 0.0, 0.0, 32768, 8), 8.0);
        // Magnification beyond the top level clamps as well.
        assert_eq!(compute_mip(1e-9, 0.0, 0.0, 0.0, 32768, 8), 8.0);
    }

    #[test]
    fn page_identification() {
        assert_eq!(identify_page(0.7, 0.2, 3), PageId::new(3, 5, 1));
        assert_eq!(identify_page(0.0, 0.0, 5), PageId::new(5, 0, 0));
        assert_eq!(identify_page(1.0, 0.5, 2).x, 3);
    }

    #[test]
    fn need_codecs() {
        assert_eq!(encode_need8(300, 600, 10).unwrap(), [44, 88, 10, 33]);
        assert_eq!(encode_need8(0, 0, 0).unwrap(), [0, 0, 0, 0]);
        assert!(matches!(encode_need8(4096, 0, 0), Err(VtError::Encoding(_))));
        assert!(encode_need8(0, 0, 256).is_err());
        assert_eq!(encode_need32(300, 600, 10), [300, 600, 10]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (x, y, m) = (rng.gen_range(0..4096), rng.gen_range(0..4096), rng.gen_range(0..256));
            let enc = encode_need8(x, y, m).unwrap();
            assert_eq!(decode_need8(enc), (x, y, m));
            assert_eq!(decode_need32(encode_need32(x, y, m)), decode_need8(enc));
        }
    }

    #[test]
    fn internal_offset_uses_resident_mip() {
        // s = 0.3 on mip 2 lies at fract(1.2) = 0.2 of page column 1.
        let s: f64 = 0.3;
        let scaled = s * 4.0;
        assert!((scaled - scaled.floor() - 0.2).abs() < 1e-12);
        assert_eq!(identify_page(s, 0.0, 2).x, 1);
    }

    #[test]
    fn full_residency_matches_chain() {
        for border in [1, 2] {
            let c = chain(border);
            let store = c.page_store();
            let rt = VtRuntime::fully_resident(&store).unwrap();
            let vt = CacheSampler { runtime: &rt };
            let reference = ChainSampler { chain: &c };
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..4000 {
                let (s, t) = (rng.gen::<f64>(), rng.gen::<f64>());
                let mip = rng.gen_range(0..c.meta.mip_count);
                for f in [LevelFilter::Nearest, LevelFilter::Bilinear] {
                    assert_eq!(vt.sample_level(s, t, mip, f), reference.sample_level(s, t, mip, f));
                }
            }
            for &(s, t) in &[(0.0, 0.0), (1.0, 1.0), (0.25, 0.5), (0.5, 1.0)] {
                for mip in 0..c.meta.mip_count {
                    assert_eq!(
                        vt.sample_level(s, t, mip, LevelFilter::Bilinear),
                        reference.sample_level(s, t, mip, LevelFilter::Bilinear)
                    );
                }
            }
        }
    }

    #[test]
    fn fallback_samples_ancestor_level() {
        let c = chain(1);
        let store = c.page_store();
        let mut rt = VtRuntime::new(&store, 4, 4).unwrap();
        let parent = PageId::new(1, 1, 0);
        rt.load(&[store.read_page(parent.abs_index()).unwrap()]).unwrap();
        let vt = CacheSampler { runtime: &rt };
        let reference = ChainSampler { chain: &c };
        // Page (2, 2, 1) is absent; its parent (1, 1, 0) is resident.
        let (s, t) = (0.6, 0.3);
        assert_eq!(identify_page(s, t, 2).parent(), Some(parent));
        assert_eq!(
            vt.sample_level(s, t, 2, LevelFilter::Nearest),
            reference.sample_level(s, t, 1, LevelFilter::Nearest)
        );
        // Elsewhere only the root is available.
        assert_eq!(
            vt.sample_level(0.1, 0.9, 2, LevelFilter::Nearest),
            reference.sample_level(0.1, 0.9, 0, LevelFilter::Nearest)
        );
    }

    #[test]
    fn trilinear_is_lerp_of_bilinear_levels() {
        let c = chain(2);
        let reference = ChainSampler { chain: &c };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (s, t) = (rng.gen::<f64>(), rng.gen::<f64>());
            let level = rng.gen_range(0.0..c.meta.max_mip() as f64);
            let base = level.floor() as u32;
            let want = lerp3(
                reference.sample_level(s, t, base, LevelFilter::Bilinear),
                reference.sample_level(s, t, base + 1, LevelFilter::Bilinear),
                level - base as f64,
            );
            assert_eq!(sample(&reference, s, t, level, FilterMode::Trilinear), want);
        }
    }
}
