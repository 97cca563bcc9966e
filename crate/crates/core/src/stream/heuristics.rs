//! Page priority heuristics, NoiseValue scaling and the LookAhead camera.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};
use crate::format::NoiseTable;
use crate::page::PageId;
use crate::render::{Camera, Viewport};
use crate::runtime::PageTable;
use crate::stream::analysis::PageStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    Random,
    PixelSum,
    Distance,
    WeightedPixel,
    HotSpot,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 5] =
        [Self::Random, Self::PixelSum, Self::Distance, Self::WeightedPixel, Self::HotSpot];

    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::PixelSum => "pixelsum",
            Self::Distance => "distance",
            Self::WeightedPixel => "weightedpixel",
            Self::HotSpot => "hotspot",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = VtError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| VtError::Config(format!("unknown heuristic {s:?}")))
    }
}

impl std::fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rotation per frame that pushes the HotSpot center fully to the screen edge.
pub const HOTSPOT_SATURATION_DEG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LookaheadConfig {
    /// Weight of the prediction pass when merged into the primary priorities.
    pub lambda: f64,
    /// Collapse the prediction to the current view when the change of
    /// rotation speed (radians per frame²) exceeds this value.
    pub damping: Option<f64>,
}

impl Default for LookaheadConfig {
    fn default() -> Self {
        Self { lambda: 0.5, damping: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    pub kind: HeuristicKind,
    pub seed: u64,
    pub hotspot_gain: f64,
    pub noise_scaling: bool,
    pub lookahead: Option<LookaheadConfig>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            kind: HeuristicKind::PixelSum,
            seed: 0,
            hotspot_gain: 1.0 / HOTSPOT_SATURATION_DEG.to_radians(),
            noise_scaling: false,
            lookahead: None,
        }
    }
}

impl HeuristicConfig {
    pub fn new(kind: HeuristicKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(la) = self.lookahead {
            if !(0.0..=1.0).contains(&la.lambda) {
                return Err(VtError::Config(format!("lookahead lambda {} outside [0, 1]", la.lambda)));
            }
        }
        if !(self.hotspot_gain.is_finite() && self.hotspot_gain >= 0.0) {
            return Err(VtError::Config(format!("hotspot gain {} must be finite and non-negative", self.hotspot_gain)));
        }
        Ok(())
    }

    /// Label used in stream logs.
    pub fn label(&self) -> String {
        let mut s = self.kind.name().to_string();
        if self.noise_scaling {
            s.push_str("+noise");
        }
        if self.lookahead.is_some() {
            s.push_str("+lookahead");
        }
        s
    }
}

/// Uniform draw in `[0, 1)` fixed by `(seed, frame, page)`.
pub fn random_priority(seed: u64, frame: u64, page: PageId) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng.set_word_pos(page.abs_index() as u128 * 2);
    rng.gen::<f64>()
}

/// Priority of one page; `stats` must have been accumulated against the
/// center matching the heuristic (screen midpoint or HotSpot center).
pub fn priority(stats: &PageStats, kind: HeuristicKind, seed: u64, frame: u64) -> f64 {
    match kind {
        HeuristicKind::Random => random_priority(seed, frame, stats.page),
        HeuristicKind::PixelSum => stats.pixel_count as f64,
        HeuristicKind::Distance => 1.0 / (1.0 + stats.mean_distance()),
        HeuristicKind::WeightedPixel | HeuristicKind::HotSpot => stats.weighted_pixel_sum,
    }
}

/// Screen point the HotSpot weighting is centered on. Turning right moves
/// it towards the right edge and looking up towards the top edge, where new
/// pages enter the view; each axis saturates at the border.
pub fn hotspot_center(delta_yaw: f64, delta_pitch: f64, gain: f64, viewport: Viewport) -> (f64, f64) {
    let (hw, hh) = (viewport.width as f64 / 2.0, viewport.height as f64 / 2.0);
    let shift = |d: f64| if d == 0.0 { 0.0 } else { d.signum() * (gain * d.abs()).min(1.0) };
    (hw + shift(delta_yaw) * hw, hh - shift(delta_pitch) * hh)
}

pub fn screen_center(viewport: Viewport) -> (f64, f64) {
    (viewport.width as f64 / 2.0, viewport.height as f64 / 2.0)
}

/// Scales `priority` by the NoiseValues between `page` and the resident
/// page it currently falls back to. Resident pages scale to 0.
pub fn noise_scale(priority: f64, page: PageId, noise: &NoiseTable, table: &PageTable) -> f64 {
    let fallback = table.fallback_mip(page);
    let sum: f64 = std::iter::once(page)
        .chain(page.ancestors())
        .take_while(|p| p.mip > fallback)
        .map(|p| noise.get(p) as f64)
        .sum();
    priority * sum
}

/// Camera that repeats the last frame's motion once more.
pub fn lookahead_camera(camera: &Camera, previous: &Camera) -> Camera {
    let p = camera.position;
    let q = previous.position;
    Camera {
        position: [2.0 * p[0] - q[0], 2.0 * p[1] - q[1], 2.0 * p[2] - q[2]],
        yaw: 2.0 * camera.yaw - previous.yaw,
        pitch: 2.0 * camera.pitch - previous.pitch,
        ..*camera
    }
}

/// LookAhead with second-derivative damping: if the rotation speed changed
/// by more than `threshold` since the frame before, predict no motion.
pub fn damped_lookahead_camera(camera: &Camera, previous: &Camera, before: &Camera, threshold: f64) -> Camera {
    let accel_yaw = (camera.yaw - previous.yaw) - (previous.yaw - before.yaw);
    let accel_pitch = (camera.pitch - previous.pitch) - (previous.pitch - before.pitch);
    if accel_yaw.abs() > threshold || accel_pitch.abs() > threshold {
        *camera
    } else {
        lookahead_camera(camera, previous)
    }
}

/// Union of two priority maps with the lookahead side weighted by `lambda`.
pub fn merge_need(
    primary: &BTreeMap<usize, (PageId, f64)>,
    lookahead: &BTreeMap<usize, (PageId, f64)>,
    lambda: f64,
) -> BTreeMap<usize, (PageId, f64)> {
    let mut out = primary.clone();
    if lambda == 0.0 {
        return out;
    }
    for (&abs, &(page, p)) in lookahead {
        out.entry(abs).or_insert((page, 0.0)).1 += lambda * p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::PageStore;
    use crate::page::TextureMeta;
    use crate::runtime::PageCache;
    use std::f64::consts::FRAC_PI_4;

    fn stats(page: PageId, n: u64, w: f64, d: f64) -> PageStats {
        PageStats { page, pixel_count: n, weighted_pixel_sum: w, distance_sum: d, min_mip: page.mip }
    }

    #[test]
    fn definitional_priorities() {
        let p = PageId::new(3, 2, 1);
        assert_eq!(priority(&stats(p, 37, 5.0, 0.0), HeuristicKind::PixelSum, 0, 0), 37.0);
        assert_eq!(priority(&stats(p, 4, 5.0, 0.0), HeuristicKind::Distance, 0, 0), 1.0);
        assert_eq!(priority(&stats(p, 4, 5.0, 12.0), HeuristicKind::Distance, 0, 0), 0.25);
        assert_eq!(priority(&stats(p, 4, 5.0, 0.0), HeuristicKind::WeightedPixel, 0, 0), 5.0);
    }

    #[test]
    fn random_is_seeded_per_page_and_frame() {
        let p = PageId::new(2, 1, 1);
        let a = random_priority(1, 5, p);
        assert_eq!(a, random_priority(1, 5, p));
        assert_ne!(a, random_priority(2, 5, p));
        assert_ne!(a, random_priority(1, 6, p));
        assert_ne!(a, random_priority(1, 5, PageId::new(2, 0, 1)));
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn hotspot_directions() {
        let vp = Viewport::new(200, 100).unwrap();
        let gain = HeuristicConfig::default().hotspot_gain;
        assert_eq!(hotspot_center(0.0, 0.0, gain, vp), (100.0, 50.0));
        assert_eq!(hotspot_center(0.5, 0.0, gain, vp), (200.0, 50.0));
        assert_eq!(hotspot_center(-0.5, 0.0, gain, vp), (0.0, 50.0));
        assert_eq!(hotspot_center(0.5, 0.5, gain, vp), (200.0, 0.0));
        let (x, _) = hotspot_center(2.5f64.to_radians(), 0.0, gain, vp);
        assert!((x - 150.0).abs() < 1e-9);
    }

    #[test]
    fn noise_scaling_follows_fallback_chain() {
        let meta = TextureMeta::new(4, 1, 3).unwrap();
        let store = PageStore::new(
            meta,
            (0..meta.total_pages())
                .map(|abs| crate::format::PagePayload {
                    id: meta.from_abs(abs).unwrap(),
                    pixels: vec![0; meta.page_bytes()],
                })
                .collect(),
        )
        .unwrap();
        let mut cache = PageCache::new(meta, 4, 4).unwrap();
        let mut table = PageTable::new(&meta);
        let page = PageId::new(2, 3, 1);
        let parent = page.parent().unwrap();
        for id in [PageId::ROOT, parent] {
            cache.insert(&crate::format::PageSource::read_page(&store, id.abs_index()).unwrap()).unwrap();
        }
        table.update(&cache).unwrap();
        let mut noise = NoiseTable::zeros(meta.total_pages());
        noise.values[page.abs_index()] = 2.5;
        noise.values[parent.abs_index()] = 7.0;
        assert_eq!(noise_scale(10.0, page, &noise, &table), 25.0);
        assert_eq!(noise_scale(10.0, parent, &noise, &table), 0.0);
        // Sibling of the parent falls back to the root: its own value only.
        let uncle = PageId::new(1, 0, 1);
        noise.values[uncle.abs_index()] = 1.5;
        assert_eq!(noise_scale(2.0, uncle, &noise, &table), 3.0);
        // A child of the uncle accumulates both links.
        let cousin = PageId::new(2, 0, 2);
        noise.values[cousin.abs_index()] = 0.5;
        assert_eq!(noise_scale(2.0, cousin, &noise, &table), 4.0);
        assert_eq!(noise_scale(2.0, cousin, &NoiseTable::zeros(meta.total_pages()), &table), 0.0);
    }

    #[test]
    fn lookahead_doubles_motion() {
        let prev = Camera::at([0.0, 1.0, 0.0], 0.0, 0.1);
        assert_eq!(lookahead_camera(&prev, &prev), prev);
        let cur = Camera::at([0.0, 1.0, -0.5], FRAC_PI_4, 0.1);
        let la = lookahead_camera(&cur, &prev);
        assert!((la.yaw - 2.0 * FRAC_PI_4).abs() < 1e-12);
        assert_eq!(la.position, [0.0, 1.0, -1.0]);
        assert_eq!(la.pitch, 0.1);
        assert_eq!(damped_lookahead_camera(&cur, &prev, &prev, 0.2), cur);
        assert_eq!(damped_lookahead_camera(&cur, &prev, &prev, 1.0), la);
    }

    #[test]
    fn merge_rule() {
        let a = PageId::new(1, 0, 0);
        let b = PageId::new(1, 1, 0);
        let primary = BTreeMap::from([(a.abs_index(), (a, 5.0))]);
        let look = BTreeMap::from([(a.abs_index(), (a, 8.0)), (b.abs_index(), (b, 8.0))]);
        assert_eq!(merge_need(&primary, &look, 0.0), primary);
        let m = merge_need(&primary, &look, 0.5);
        assert_eq!(m[&a.abs_index()].1, 9.0);
        assert_eq!(merge_need(&primary, &look, 1.0)[&b.abs_index()].1, 8.0);
    }
}
