//! Procedural test worlds: an indoor gallery whose every surface panel gets
//! a unique generated texture, retextured into one virtual texture, plus
//! scripted camera paths through it.

use std::collections::HashMap;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::build::MipChain;
use crate::error::Result;
use crate::format::{NoiseTable, PageStore};
use crate::layout::{retexture, Placement};
use crate::page::PageId;
use crate::render::Camera;
use crate::scene::SceneMesh;

/// Gallery dimensions and texture options.
#[derive(Debug, Clone, PartialEq)]
pub struct GallerySpec {
    /// Interior width along x.
    pub width: f64,
    pub height: f64,
    /// Length along z; the gallery spans `-length/2 ..= length/2`.
    pub length: f64,
    /// Panels per side wall; floor and ceiling get half as many segments.
    pub wall_panels: usize,
    /// Edge of each panel's source texture in texels.
    pub texture_edge: u32,
    pub page_size: u32,
    pub border: u32,
    pub seed: u64,
    /// Surfaces painted in one flat color.
    pub uniform: Vec<Surface>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    LeftWall,
    RightWall,
    Floor,
    Ceiling,
    EndWalls,
}

impl Default for GallerySpec {
    /// 50 panels of 512² texels on a 32-texel page grid: a 4096² texture
    /// with 8 mips.
    fn default() -> Self {
        Self {
            width: 3.0,
            height: 2.5,
            length: 24.0,
            wall_panels: 16,
            texture_edge: 512,
            page_size: 32,
            border: 2,
            seed: 1,
            uniform: Vec::new(),
        }
    }
}

/// Eye height used by the scripted paths.
pub const EYE_HEIGHT: f64 = 1.6;

/// A built world: retextured mesh, mip chain, page store and NoiseValues.
pub struct DemoWorld {
    pub scene: SceneMesh,
    pub chain: MipChain,
    pub store: PageStore,
    pub noise: NoiseTable,
    pub placements: Vec<Placement>,
    pub surfaces: Vec<Surface>,
    pub spec: GallerySpec,
}

impl DemoWorld {
    pub fn build(spec: GallerySpec) -> Result<Self> {
        let (scene, surfaces) = gallery_mesh(&spec);
        let sources: HashMap<String, RgbImage> = scene
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let img = if spec.uniform.contains(&surfaces[i]) {
                    RgbImage::from_pixel(spec.texture_edge, spec.texture_edge, Rgb(uniform_color(surfaces[i])))
                } else {
                    panel_texture(i, spec.texture_edge, spec.seed)
                };
                (f.texture.clone(), img)
            })
            .collect();
        let re = retexture(&scene, &sources, spec.page_size)?;
        let chain = MipChain::build(re.compose_top()?, spec.page_size, spec.border)?;
        let store = chain.page_store();
        let noise = chain.compute_noise();
        Ok(Self { scene: re.mesh, chain, store, noise, placements: re.placements, surfaces, spec })
    }

    pub fn meta(&self) -> crate::page::TextureMeta {
        self.chain.meta
    }

    /// True if the page's texels lie entirely inside one flat-colored panel.
    pub fn page_is_uniform(&self, page: PageId) -> bool {
        let meta = self.chain.meta;
        let span = meta.page_size << (meta.max_mip() - page.mip);
        let (x0, y0) = (page.x * span, page.y * span);
        self.placements.iter().any(|p| {
            self.spec.uniform.contains(&self.surfaces[p.face])
                && p.x <= x0
                && p.y <= y0
                && x0 + span <= p.x + p.w
                && y0 + span <= p.y + p.h
        })
    }
}

fn uniform_color(surface: Surface) -> [u8; 3] {
    match surface {
        Surface::LeftWall => [182, 176, 160],
        Surface::RightWall => [150, 166, 180],
        Surface::Floor => [96, 84, 72],
        Surface::Ceiling => [220, 220, 214],
        Surface::EndWalls => [120, 40, 40],
    }
}

/// Gallery geometry with one face per panel, each referencing its own texture
/// name with UVs spanning `[0, 1]²`. Walls face inwards.
pub fn gallery_mesh(spec: &GallerySpec) -> (SceneMesh, Vec<Surface>) {
    let mut mesh = SceneMesh::default();
    let mut surfaces = Vec::new();
    let (hw, h, hl) = (spec.width / 2.0, spec.height, spec.length / 2.0);
    let n = spec.wall_panels;
    let seg = spec.length / n as f64;
    let mut push = |mesh: &mut SceneMesh, s: Surface, corners: [[f64; 3]; 4]| {
        let name = format!("panel_{:03}", surfaces.len());
        mesh.push_quad(&name, corners, [1.0, 1.0]);
        surfaces.push(s);
    };
    for i in 0..n {
        let (z0, z1) = (hl - seg * i as f64, hl - seg * (i + 1) as f64);
        push(&mut mesh, Surface::LeftWall, [[-hw, h, z0], [-hw, h, z1], [-hw, 0.0, z1], [-hw, 0.0, z0]]);
        push(&mut mesh, Surface::RightWall, [[hw, h, z1], [hw, h, z0], [hw, 0.0, z0], [hw, 0.0, z1]]);
    }
    let floor_segs = (n / 2).max(1);
    let fseg = spec.length / floor_segs as f64;
    for i in 0..floor_segs {
        let (z0, z1) = (hl - fseg * i as f64, hl - fseg * (i + 1) as f64);
        push(&mut mesh, Surface::Floor, [[-hw, 0.0, z1], [hw, 0.0, z1], [hw, 0.0, z0], [-hw, 0.0, z0]]);
        push(&mut mesh, Surface::Ceiling, [[-hw, h, z0], [hw, h, z0], [hw, h, z1], [-hw, h, z1]]);
    }
    push(&mut mesh, Surface::EndWalls, [[-hw, h, -hl], [hw, h, -hl], [hw, 0.0, -hl], [-hw, 0.0, -hl]]);
    push(&mut mesh, Surface::EndWalls, [[hw, h, hl], [-hw, h, hl], [-hw, 0.0, hl], [hw, 0.0, hl]]);
    (mesh, surfaces)
}

/// Smooth random lattice sampled with wrap-around.
struct Lattice {
    n: usize,
    values: Vec<f32>,
}

impl Lattice {
    fn new(rng: &mut ChaCha8Rng, n: usize) -> Self {
        Self { n, values: (0..n * n).map(|_| rng.gen::<f32>()).collect() }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let (x, y) = (u * self.n as f64, v * self.n as f64);
        let (xi, yi) = (x.floor(), y.floor());
        let (fx, fy) = (smooth(x - xi), smooth(y - yi));
        let n = self.n;
        let g = |i: f64, j: f64| self.values[(j as usize % n) * n + i as usize % n] as f64;
        let top = g(xi, yi) * (1.0 - fx) + g(xi + 1.0, yi) * fx;
        let bot = g(xi, yi + 1.0) * (1.0 - fx) + g(xi + 1.0, yi + 1.0) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Unique panel texture: a per-panel hue, one of four structural patterns and
/// multi-octave noise down to single-texel grain so every mip carries detail.
pub fn panel_texture(index: usize, edge: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64);
    let base: [f64; 3] = [rng.gen_range(60.0..200.0), rng.gen_range(60.0..200.0), rng.gen_range(60.0..200.0)];
    let accent: [f64; 3] = [rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0)];
    let octaves: Vec<(Lattice, f64)> = [(4, 0.35), (16, 0.25), (64, 0.2), (edge as usize / 2, 0.12)]
        .into_iter()
        .map(|(n, amp)| (Lattice::new(&mut rng, n.max(1)), amp))
        .collect();
    let grain: Vec<f32> = (0..edge * edge).map(|_| rng.gen::<f32>()).collect();
    let pattern = index % 4;
    let cells = rng.gen_range(4..12) as f64;
    RgbImage::from_fn(edge, edge, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / edge as f64, (y as f64 + 0.5) / edge as f64);
        let mask = match pattern {
            0 => {
                // Bricks with offset rows.
                let row = (v * cells * 2.0).floor();
                let bu = u * cells + if row as i64 % 2 == 0 { 0.0 } else { 0.5 };
                let (fu, fv) = (bu.fract(), (v * cells * 2.0).fract());
                if fu < 0.06 || fv < 0.1 {
                    1.0
                } else {
                    0.0
                }
            }
            1 => {
                let (cu, cv) = ((u * cells).floor() as i64, (v * cells).floor() as i64);
                ((cu + cv) % 2) as f64
            }
            2 => {
                let plank = (u * cells).fract();
                if plank < 0.04 {
                    1.0
                } else {
                    0.5 + 0.5 * (v * 40.0 + (u * cells).floor() * 1.7).sin() * 0.3
                }
            }
            _ => {
                let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
                0.5 + 0.5 * (r * cells * 6.0).sin()
            }
        };
        let mut n = 0.0;
        for (lat, amp) in &octaves {
            n += (lat.at(u, v) - 0.5) * amp;
        }
        n += (grain[(y * edge + x) as usize] as f64 - 0.5) * 0.15;
        let rgb: [u8; 3] = std::array::from_fn(|c| {
            let col = base[c] * (1.0 - mask * 0.6) + accent[c] * mask * 0.6;
            (col * (1.0 + n)).round().clamp(0.0, 255.0) as u8
        });
        Rgb(rgb)
    })
}

/// Walk down the gallery while looking around: yaw sweeps between the
/// walls, pitch nods gently.
pub fn flythrough(spec: &GallerySpec, frames: usize) -> Vec<Camera> {
    let hl = spec.length / 2.0;
    let (start, end) = (hl - 1.5, -hl + 1.5);
    (0..frames)
        .map(|i| {
            let f = i as f64 / (frames.max(2) - 1) as f64;
            let z = start + (end - start) * f;
            let x = 0.4 * (f * std::f64::consts::TAU * 1.5).sin();
            let yaw = 50f64.to_radians() * (f * std::f64::consts::TAU * 2.0).sin();
            let pitch = 12f64.to_radians() * (f * std::f64::consts::TAU * 3.0).sin();
            Camera::at([x, EYE_HEIGHT, z], yaw, pitch)
        })
        .collect()
}

/// Stand still for `hold` frames, then turn at `deg_per_frame` for `turn` frames.
pub fn rotation_path(spec: &GallerySpec, hold: usize, turn: usize, deg_per_frame: f64) -> Vec<Camera> {
    let z = spec.length / 4.0;
    let step = deg_per_frame.to_radians();
    (0..hold + turn).map(|i| Camera::at([0.0, EYE_HEIGHT, z], step * i.saturating_sub(hold) as f64, 0.0)).collect()
}

/// Stand still for `hold` frames, snap by `snap_deg` in a single frame, then hold again.
pub fn snap_path(spec: &GallerySpec, hold: usize, after: usize, snap_deg: f64) -> Vec<Camera> {
    let z = spec.length / 4.0;
    (0..hold + after)
        .map(|i| {
            let yaw = if i < hold { 0.0 } else { snap_deg.to_radians() };
            Camera::at([0.0, EYE_HEIGHT, z], yaw, 0.0)
        })
        .collect()
}
