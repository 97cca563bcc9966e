//! Need-buffer analysis: per-page statistics and hit/miss counters.

use std::collections::BTreeMap;

use crate::page::PageId;
use crate::render::Viewport;

/// Floor of the radial pixel weight.
pub const WEIGHT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageStats {
    pub page: PageId,
    pub pixel_count: u64,
    pub weighted_pixel_sum: f64,
    pub distance_sum: f64,
    pub min_mip: u32,
}

impl PageStats {
    pub fn mean_distance(&self) -> f64 {
        self.distance_sum / self.pixel_count as f64
    }
}

/// Statistics of one need buffer, keyed by absolute page index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analysis {
    pub pages: BTreeMap<usize, PageStats>,
    pub hits: u64,
    pub misses: u64,
}

/// Radial weight `max(ε, 1 − r/r_max)` of pixel `(x, y)` relative to `center`;
/// `r_max` is half the screen diagonal.
pub fn radial_weight(x: f64, y: f64, center: (f64, f64), viewport: Viewport, epsilon: f64) -> f64 {
    let r_max = 0.5 * (viewport.width as f64).hypot(viewport.height as f64);
    let r = (x - center.0).hypot(y - center.1);
    (1.0 - r / r_max).max(epsilon)
}

/// Accumulates per-page statistics from a need buffer and its depth buffer.
/// Pixel weights use integer pixel coordinates against `center`. A pixel is
/// a hit when its page is resident at its own mip.
pub fn analyze(
    need: &[Option<PageId>],
    depth: &[f32],
    viewport: Viewport,
    center: (f64, f64),
    is_resident: impl Fn(PageId) -> bool,
) -> Analysis {
    assert_eq!(need.len(), viewport.pixel_count(), "need buffer does not match viewport");
    assert_eq!(depth.len(), need.len(), "depth buffer does not match need buffer");
    let mut out = Analysis::default();
    let width = viewport.width as usize;
    for (i, slot) in need.iter().enumerate() {
        let Some(page) = *slot else { continue };
        let (x, y) = ((i % width) as f64, (i / width) as f64);
        let w = radial_weight(x, y, center, viewport, WEIGHT_EPSILON);
        let stats = out.pages.entry(page.abs_index()).or_insert(PageStats {
            page,
            pixel_count: 0,
            weighted_pixel_sum: 0.0,
            distance_sum: 0.0,
            min_mip: page.mip,
        });
        stats.pixel_count += 1;
        stats.weighted_pixel_sum += w;
        stats.distance_sum += depth[i] as f64;
        stats.min_mip = stats.min_mip.min(page.mip);
    }
    for stats in out.pages.values() {
        if is_resident(stats.page) {
            out.hits += stats.pixel_count;
        } else {
            out.misses += stats.pixel_count;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp() -> Viewport {
        Viewport::new(8, 4).unwrap()
    }

    #[test]
    fn single_resident_page() {
        let p = PageId::new(2, 1, 3);
        let need = vec![Some(p); 32];
        let depth = vec![2.0; 32];
        let a = analyze(&need, &depth, vp(), (4.0, 2.0), |_| true);
        assert_eq!(a.pages.len(), 1);
        assert_eq!((a.hits, a.misses), (32, 0));
        assert_eq!(a.pages[&p.abs_index()].mean_distance(), 2.0);
    }

    #[test]
    fn half_missing() {
        let (a_page, b_page) = (PageId::new(1, 0, 0), PageId::new(1, 1, 0));
        let need: Vec<_> = (0..32).map(|i| Some(if i % 8 < 4 { a_page } else { b_page })).collect();
        let out = analyze(&need, &[1.0; 32], vp(), (4.0, 2.0), |p| p == b_page);
        assert_eq!((out.hits, out.misses), (16, 16));
        assert_eq!(out.pages[&a_page.abs_index()].pixel_count, 16);
    }

    #[test]
    fn empty_buffer() {
        let out = analyze(&[None; 32], &[0.0; 32], vp(), (4.0, 2.0), |_| false);
        assert_eq!(out, Analysis::default());
    }

    #[test]
    fn weight_endpoints() {
        let v = Viewport::new(64, 48).unwrap();
        assert_eq!(radial_weight(32.0, 24.0, (32.0, 24.0), v, WEIGHT_EPSILON), 1.0);
        assert_eq!(radial_weight(0.0, 0.0, (32.0, 24.0), v, WEIGHT_EPSILON), WEIGHT_EPSILON);
        let mid = radial_weight(32.0 + 20.0, 24.0, (32.0, 24.0), v, WEIGHT_EPSILON);
        assert!((mid - 0.5).abs() < 1e-12);
    }
}
