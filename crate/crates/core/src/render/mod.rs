//! Software renderer emulating the virtual texturing fragment pipeline.

pub mod camera;
pub mod raster;
pub mod shader;

use image::RgbImage;
use rayon::prelude::*;

pub use camera::Camera;
pub use raster::{rasterize, Fragment, FragmentBuffer, FragmentQuad, Viewport};
pub use shader::{
    compute_mip, decode_need32, decode_need8, encode_need32, encode_need8, fragment_level, identify_page, sample,
    CacheSampler, ChainSampler, FilterMode, LevelFilter, LevelSampler,
};

use crate::error::Result;
use crate::image_ops::to_rgb8;
use crate::page::PageId;
use crate::scene::SceneMesh;

/// The three render targets of one frame.
#[derive(Debug, Clone)]
pub struct FrameBuffers {
    pub color: RgbImage,
    /// View depth per pixel; `camera.far` where nothing was drawn.
    pub depth: Vec<f32>,
    /// Page each pixel wants at its own level of detail.
    pub need: Vec<Option<PageId>>,
}

impl FrameBuffers {
    pub fn viewport(&self) -> Viewport {
        Viewport { width: self.color.width(), height: self.color.height() }
    }

    pub fn covered_pixels(&self) -> usize {
        self.need.iter().filter(|n| n.is_some()).count()
    }
}

/// Shades a rasterized fragment buffer, filling color and need targets.
pub fn shade(fragments: &FragmentBuffer, sampler: &dyn LevelSampler, filter: FilterMode) -> FrameBuffers {
    let vp = fragments.viewport;
    let meta = sampler.meta();
    let width = vp.width as usize;
    let mut color = RgbImage::new(vp.width, vp.height);
    let mut need = vec![None; vp.pixel_count()];
    color
        .par_chunks_mut(width * 3)
        .zip(need.par_chunks_mut(width))
        .zip(fragments.fragments.par_chunks(width))
        .for_each(|((color_row, need_row), frag_row)| {
            for (x, frag) in frag_row.iter().enumerate() {
                let Some(f) = frag else { continue };
                let level = shader::fragment_level(f, &meta);
                let mip = level.floor() as u32;
                need_row[x] = Some(identify_page(f.s.clamp(0.0, 1.0), f.t.clamp(0.0, 1.0), mip));
                let rgb = to_rgb8(sample(sampler, f.s, f.t, level, filter));
                color_row[x * 3..x * 3 + 3].copy_from_slice(&rgb.0);
            }
        });
    FrameBuffers { color, depth: fragments.depth.clone(), need }
}

/// Rasterizes and shades one frame against any level sampler.
pub fn render_frame(
    scene: &SceneMesh,
    camera: &Camera,
    sampler: &dyn LevelSampler,
    viewport: Viewport,
    filter: FilterMode,
) -> Result<FrameBuffers> {
    camera.validate()?;
    let fragments = rasterize(scene, camera, viewport);
    Ok(shade(&fragments, sampler, filter))
}

/// Need and depth targets only, as rendered for a prediction pass; color stays black.
pub fn render_need(
    scene: &SceneMesh,
    camera: &Camera,
    meta: &crate::page::TextureMeta,
    viewport: Viewport,
) -> Result<FrameBuffers> {
    camera.validate()?;
    let fragments = rasterize(scene, camera, viewport);
    let need = fragments
        .fragments
        .par_iter()
        .map(|frag| {
            frag.map(|f| {
                let mip = shader::fragment_level(&f, meta).floor() as u32;
                identify_page(f.s.clamp(0.0, 1.0), f.t.clamp(0.0, 1.0), mip)
            })
        })
        .collect();
    Ok(FrameBuffers { color: RgbImage::new(viewport.width, viewport.height), depth: fragments.depth, need })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::MipChain;
    use crate::runtime::VtRuntime;
    use image::Rgb;

    fn wall_scene() -> SceneMesh {
        let mut scene = SceneMesh::default();
        scene.push_quad(
            "wall",
            [[-2.0, 2.0, -3.0], [2.0, 2.0, -3.0], [2.0, -2.0, -3.0], [-2.0, -2.0, -3.0]],
            [1.0, 1.0],
        );
        scene.push_quad(
            "floor",
            [[-2.0, -1.0, 0.0], [2.0, -1.0, 0.0], [2.0, -1.0, -3.0], [-2.0, -1.0, -3.0]],
            [0.5, 0.5],
        );
        scene
    }

    fn chain() -> MipChain {
        let top = RgbImage::from_fn(256, 256, |x, y| Rgb([x as u8, y as u8, ((x / 8 + y / 8) % 2 * 200) as u8]));
        MipChain::build(top, 32, 2).unwrap()
    }

    #[test]
    fn empty_scene_is_black() {
        let c = chain();
        let cam = Camera::default();
        let out = render_frame(
            &SceneMesh::default(),
            &cam,
            &ChainSampler { chain: &c },
            Viewport::new(16, 8).unwrap(),
            FilterMode::Nearest,
        )
        .unwrap();
        assert!(out.color.pixels().all(|p| p.0 == [0, 0, 0]));
        assert!(out.need.iter().all(Option::is_none));
        assert!(out.depth.iter().all(|&d| d == cam.far as f32));
    }

    #[test]
    fn full_residency_equals_reference() {
        let c = chain();
        let store = c.page_store();
        let rt = VtRuntime::fully_resident(&store).unwrap();
        let vp = Viewport::new(64, 48).unwrap();
        let scene = wall_scene();
        for filter in [FilterMode::Nearest, FilterMode::Bilinear, FilterMode::Trilinear] {
            for yaw in [-0.3, 0.0, 0.4] {
                let cam = Camera::at([0.1, 0.2, 0.5], yaw, -0.1);
                let vt = render_frame(&scene, &cam, &CacheSampler { runtime: &rt }, vp, filter).unwrap();
                let reference = render_frame(&scene, &cam, &ChainSampler { chain: &c }, vp, filter).unwrap();
                assert_eq!(vt.color, reference.color);
                assert_eq!(vt.need, reference.need);
                assert!(vt.covered_pixels() > 0);
                assert_eq!(render_need(&scene, &cam, &c.meta, vp).unwrap().need, vt.need);
            }
        }
    }

    #[test]
    fn root_only_resolves_to_root() {
        let c = chain();
        let store = c.page_store();
        let rt = VtRuntime::new(&store, 2, 2).unwrap();
        let vp = Viewport::new(32, 32).unwrap();
        let cam = Camera::default();
        let scene = wall_scene();
        let out = render_frame(&scene, &cam, &CacheSampler { runtime: &rt }, vp, FilterMode::Nearest).unwrap();
        let frags = rasterize(&scene, &cam, vp);
        let root_frame = rt.cache.frame_of(PageId::ROOT).unwrap();
        for (i, need) in out.need.iter().enumerate() {
            let Some(page) = need else { continue };
            let e = rt.indirection.get(*page).unwrap();
            assert_eq!((e.fx, e.fy, e.mip), (root_frame.fx, root_frame.fy, 0));
            let f = frags.fragments[i].unwrap();
            let want = to_rgb8(ChainSampler { chain: &c }.sample_level(
                f.s.clamp(0.0, 1.0),
                f.t.clamp(0.0, 1.0),
                0,
                LevelFilter::Nearest,
            ));
            let (x, y) = (i as u32 % 32, i as u32 / 32);
            assert_eq!(*out.color.get_pixel(x, y), want);
        }
    }

    #[test]
    fn deterministic() {
        let c = chain();
        let vp = Viewport::new(40, 30).unwrap();
        let cam = Camera::at([0.0, 0.0, 1.0], 0.2, 0.1);
        let a = render_frame(&wall_scene(), &cam, &ChainSampler { chain: &c }, vp, FilterMode::Trilinear).unwrap();
        let b = render_frame(&wall_scene(), &cam, &ChainSampler { chain: &c }, vp, FilterMode::Trilinear).unwrap();
        assert_eq!(a.color, b.color);
        assert_eq!(a.depth, b.depth);
    }

    #[test]
    fn need_mips_within_range() {
        let c = chain();
        let vp = Viewport::new(64, 64).unwrap();
        let cam = Camera::at([0.0, -0.95, -0.2], 0.0, -0.6);
        let out = render_frame(&wall_scene(), &cam, &ChainSampler { chain: &c }, vp, FilterMode::Nearest).unwrap();
        assert!(out.need.iter().flatten().all(|p| p.mip <= c.meta.max_mip()));
    }
}
