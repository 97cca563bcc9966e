//! Geometry retexturing: give every face its own region of the virtual texture.
//!
//! Each face's source texture is duplicated (tiled when its UVs repeat),
//! placed on a page-granular grid with first fit, and the face's UVs are
//! rewritten into the coordinate space of the combined top mip. Whole-texture
//! duplication and page-rounding waste are kept as-is.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use image::RgbImage;

use crate::build::{LayoutFile, LayoutPlacement};
use crate::error::{Result, VtError};
use crate::scene::{Face, SceneMesh, Vertex};

/// A face's private copy of its source texture with UVs normalised into it.
#[derive(Debug, Clone)]
pub struct Unrolled {
    pub image: RgbImage,
    pub uvs: Vec<[f64; 2]>,
    pub repeats: (u32, u32),
    /// The face covers no UV area; it was given a single source copy.
    pub degenerate: bool,
}

pub fn unroll_face(uvs: &[[f64; 2]], source: &RgbImage) -> Unrolled {
    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for uv in uvs {
        for a in 0..2 {
            min[a] = min[a].min(uv[a]);
            max[a] = max[a].max(uv[a]);
        }
    }
    let degenerate = uvs.is_empty() || (0..2).any(|a| max[a] <= min[a]);
    if degenerate {
        let base = if uvs.is_empty() { [0.0; 2] } else { [min[0].floor(), min[1].floor()] };
        let uvs = uvs.iter().map(|uv| [(uv[0] - base[0]).clamp(0.0, 1.0), (uv[1] - base[1]).clamp(0.0, 1.0)]).collect();
        return Unrolled { image: source.clone(), uvs, repeats: (1, 1), degenerate: true };
    }
    let reps = |a: usize| ((max[a].ceil() - min[a].floor()) as u32).max(1);
    let (rs, rt) = (reps(0), reps(1));
    let (fs, ft) = (min[0].floor(), min[1].floor());
    let (sw, sh) = source.dimensions();
    let mut image = RgbImage::new(sw * rs, sh * rt);
    for ty in 0..rt {
        for tx in 0..rs {
            image::imageops::replace(&mut image, source, (tx * sw) as i64, (ty * sh) as i64);
        }
    }
    let uvs = uvs.iter().map(|uv| [(uv[0] - fs) / rs as f64, (uv[1] - ft) / rt as f64]).collect();
    Unrolled { image, uvs, repeats: (rs, rt), degenerate: false }
}

/// Grid cells (pages) needed to hold a `w` x `h` image.
pub fn estimate_entries(w: u32, h: u32, page_size: u32) -> (u32, u32) {
    (w.div_ceil(page_size), h.div_ceil(page_size))
}

/// Page-sized occupancy grid for the top mip, `side` cells per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutGrid {
    side: u32,
    cells: Vec<bool>,
}

impl Default for LayoutGrid {
    fn default() -> Self {
        Self::new(1)
    }
}

impl LayoutGrid {
    pub fn new(side: u32) -> Self {
        assert!(side.is_power_of_two());
        Self { side, cells: vec![false; (side * side) as usize] }
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn is_occupied(&self, x: u32, y: u32) -> bool {
        self.cells[(y * self.side + x) as usize]
    }

    pub fn mark(&mut self, x: u32, y: u32, cols: u32, rows: u32) {
        for cy in y..y + rows {
            for cx in x..x + cols {
                self.cells[(cy * self.side + cx) as usize] = true;
            }
        }
    }

    fn block_free(&self, x: u32, y: u32, cols: u32, rows: u32) -> bool {
        (y..y + rows).all(|cy| (x..x + cols).all(|cx| !self.is_occupied(cx, cy)))
    }

    fn grow(&mut self) {
        let side = self.side * 2;
        let mut cells = vec![false; (side * side) as usize];
        for y in 0..self.side {
            for x in 0..self.side {
                cells[(y * side + x) as usize] = self.is_occupied(x, y);
            }
        }
        self.side = side;
        self.cells = cells;
    }

    /// Row-major first fit for a `cols` x `rows` block, doubling the grid
    /// until one fits. Marks and returns the block's origin cell.
    pub fn first_fit(&mut self, cols: u32, rows: u32) -> (u32, u32) {
        assert!(cols >= 1 && rows >= 1);
        loop {
            if cols <= self.side && rows <= self.side {
                for y in 0..=self.side - rows {
                    for x in 0..=self.side - cols {
                        if self.block_free(x, y, cols, rows) {
                            self.mark(x, y, cols, rows);
                            return (x, y);
                        }
                    }
                }
            }
            self.grow();
        }
    }
}

/// Region of one face's unique image in the top mip, in texels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub face: usize,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// Maps a UV inside a unique image to the destination texture of edge `w_d` x `h_d`.
pub fn transform_uv(s: f64, t: f64, placement: &Placement, w_d: u32, h_d: u32) -> (f64, f64) {
    (
        (s * placement.w as f64 + placement.x as f64) / w_d as f64,
        (t * placement.h as f64 + placement.y as f64) / h_d as f64,
    )
}

#[derive(Debug, Clone)]
pub struct Retextured {
    pub layout: LayoutFile,
    /// Unique image per face, named as referenced by `layout`.
    pub images: Vec<(String, RgbImage)>,
    pub placements: Vec<Placement>,
    pub mesh: SceneMesh,
    pub degenerate_faces: Vec<usize>,
}

impl Retextured {
    /// Writes the unique images, `layout.json` and `scene.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, img) in &self.images {
            img.save(dir.join(name))?;
        }
        self.layout.save(dir.join("layout.json"))?;
        self.mesh.save(dir.join("scene.json"))
    }

    /// Top mip composed directly from the in-memory unique images.
    pub fn compose_top(&self) -> Result<RgbImage> {
        let placed: Vec<_> = self
            .placements
            .iter()
            .map(|p| crate::build::PlacedImage { image: self.images[p.face].1.clone(), x: p.x, y: p.y })
            .collect();
        crate::build::compose_top(self.layout.target_dim, &placed)
    }
}

/// Gives every face a disjoint, page-aligned region and rewrites UVs into it.
/// Vertices are duplicated per face so each face owns its texture coordinates.
pub fn retexture(scene: &SceneMesh, sources: &HashMap<String, RgbImage>, page_size: u32) -> Result<Retextured> {
    scene.validate()?;
    let mut grid = LayoutGrid::default();
    let mut images = Vec::with_capacity(scene.faces.len());
    let mut placements = Vec::with_capacity(scene.faces.len());
    let mut degenerate_faces = Vec::new();
    let mut local_meshes = Vec::with_capacity(scene.faces.len());

    for (fi, face) in scene.faces.iter().enumerate() {
        let source = sources
            .get(&face.texture)
            .ok_or_else(|| VtError::Layout(format!("face {fi} references unknown texture {:?}", face.texture)))?;
        let mut order: Vec<u32> = Vec::new();
        let mut remap: HashMap<u32, u32> = HashMap::new();
        for &i in face.triangles.iter().flatten() {
            remap.entry(i).or_insert_with(|| {
                order.push(i);
                order.len() as u32 - 1
            });
        }
        let uvs: Vec<[f64; 2]> = order.iter().map(|&i| scene.vertices[i as usize].uv).collect();
        let unrolled = unroll_face(&uvs, source);
        if unrolled.degenerate {
            degenerate_faces.push(fi);
        }
        let (w, h) = unrolled.image.dimensions();
        let (cols, rows) = estimate_entries(w, h, page_size);
        let (cx, cy) = grid.first_fit(cols, rows);
        placements.push(Placement { face: fi, x: cx * page_size, y: cy * page_size, w, h });
        images.push((format!("face_{fi:05}.png"), unrolled.image));
        let tris: Vec<[u32; 3]> = face.triangles.iter().map(|t| t.map(|i| remap[&i])).collect();
        local_meshes.push((order, unrolled.uvs, tris));
    }

    let dim = grid.side() * page_size;
    let mut mesh = SceneMesh::default();
    for ((fi, (order, uvs, tris)), placement) in local_meshes.into_iter().enumerate().zip(&placements) {
        let base = mesh.vertices.len() as u32;
        for (&vi, uv) in order.iter().zip(&uvs) {
            let (s, t) = transform_uv(uv[0], uv[1], placement, dim, dim);
            mesh.vertices.push(Vertex { position: scene.vertices[vi as usize].position, uv: [s, t] });
        }
        mesh.faces.push(Face {
            texture: scene.faces[fi].texture.clone(),
            triangles: tris.into_iter().map(|t| t.map(|i| i + base)).collect(),
        });
    }

    let layout = LayoutFile {
        target_dim: dim,
        placements: placements
            .iter()
            .map(|p| LayoutPlacement { image: PathBuf::from(&images[p.face].0), x: p.x, y: p.y })
            .collect(),
    };
    Ok(Retextured { layout, images, placements, mesh, degenerate_faces })
}
