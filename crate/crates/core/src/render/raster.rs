//! Scanline-free half-space rasterizer producing a per-pixel fragment buffer.
//!
//! Triangles are clipped against the near plane in view space, projected,
//! and rasterized with a top-left fill rule and keep-nearest depth test.
//! UVs are interpolated perspective-correctly. Screen-space UV derivatives
//! come from 2x2 pixel quads: every quad pixel's value is evaluated from the
//! triangle's plane equations, so pixels the triangle does not cover still
//! provide helper values at its edges.

use crate::error::{Result, VtError};
use crate::render::Camera;
use crate::scene::{SceneMesh, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Viewport {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
            return Err(VtError::domain(format!("viewport {width}x{height} must be non-empty and even")));
        }
        Ok(Self { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// One shaded sample: virtual UV, its quad derivatives and view depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub s: f64,
    pub t: f64,
    pub ds_dx: f64,
    pub dt_dx: f64,
    pub ds_dy: f64,
    pub dt_dy: f64,
    pub depth: f64,
}

/// UV values of a 2x2 pixel block, `[top-left, top-right, bottom-left, bottom-right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentQuad {
    pub uv: [[f64; 2]; 4],
}

impl FragmentQuad {
    /// Fine derivatives for the quad pixel at `(qx, qy)` ∈ {0,1}².
    pub fn derivatives(&self, qx: usize, qy: usize) -> ([f64; 2], [f64; 2]) {
        let row = qy * 2;
        let col = qx;
        let ddx = [self.uv[row + 1][0] - self.uv[row][0], self.uv[row + 1][1] - self.uv[row][1]];
        let ddy = [self.uv[2 + col][0] - self.uv[col][0], self.uv[2 + col][1] - self.uv[col][1]];
        (ddx, ddy)
    }
}

/// Rasterizer output: the winning fragment per pixel plus the depth buffer.
#[derive(Debug, Clone)]
pub struct FragmentBuffer {
    pub viewport: Viewport,
    pub fragments: Vec<Option<Fragment>>,
    /// View depth per pixel, `far` where nothing was drawn.
    pub depth: Vec<f32>,
}

#[derive(Clone, Copy)]
struct ViewVertex {
    pos: [f64; 3],
    uv: [f64; 2],
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_w: f64,
    s_w: f64,
    t_w: f64,
}

/// Plane `a*x + b*y + c` of a screen-linear attribute.
#[derive(Clone, Copy)]
struct Plane {
    a: f64,
    b: f64,
    c: f64,
}

impl Plane {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

struct TrianglePlanes {
    inv_w: Plane,
    s_w: Plane,
    t_w: Plane,
}

impl TrianglePlanes {
    fn uv(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let iw = self.inv_w.at(x, y);
        (iw > 0.0).then(|| [self.s_w.at(x, y) / iw, self.t_w.at(x, y) / iw])
    }
}

fn plane(v: &[ScreenVertex; 3], f: impl Fn(&ScreenVertex) -> f64) -> Plane {
    let (x0, y0, x1, y1, x2, y2) = (v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y);
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let (f0, f1, f2) = (f(&v[0]), f(&v[1]), f(&v[2]));
    let a = ((f1 - f0) * (y2 - y0) - (f2 - f0) * (y1 - y0)) / det;
    let b = ((x1 - x0) * (f2 - f0) - (x2 - x0) * (f1 - f0)) / det;
    Plane { a, b, c: f0 - a * x0 - b * y0 }
}

fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Top or left edge for counter-clockwise (positive area, y down) winding.
fn is_top_left(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn clip_near(tri: [ViewVertex; 3], near: f64) -> Vec<ViewVertex> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let (da, db) = (a.pos[2] - near, b.pos[2] - near);
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let k = da / (da - db);
            let lerp = |x: f64, y: f64| x + (y - x) * k;
            out.push(ViewVertex {
                pos: [lerp(a.pos[0], b.pos[0]), lerp(a.pos[1], b.pos[1]), near],
                uv: [lerp(a.uv[0], b.uv[0]), lerp(a.uv[1], b.uv[1])],
            });
        }
    }
    out
}

pub fn rasterize(scene: &SceneMesh, camera: &Camera, viewport: Viewport) -> FragmentBuffer {
    let n = viewport.pixel_count();
    let mut buf = FragmentBuffer { viewport, fragments: vec![None; n], depth: vec![camera.far as f32; n] };
    let mut zbuf = vec![f64::INFINITY; n];
    let (w, h) = (viewport.width as f64, viewport.height as f64);
    let tan_half = (camera.fov_y / 2.0).tan();
    let aspect = w / h;

    for tri in scene.triangles() {
        let view = tri.map(|v: Vertex| ViewVertex { pos: camera.to_view(v.position), uv: v.uv });
        let poly = clip_near(view, camera.near);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<ScreenVertex> = poly
            .iter()
            .map(|v| {
                let depth = v.pos[2];
                let ndc_x = v.pos[0] / depth / (tan_half * aspect);
                let ndc_y = v.pos[1] / depth / tan_half;
                ScreenVertex {
                    x: (ndc_x + 1.0) * 0.5 * w,
                    y: (1.0 - ndc_y) * 0.5 * h,
                    inv_w: 1.0 / depth,
                    s_w: v.uv[0] / depth,
                    t_w: v.uv[1] / depth,
                }
            })
            .collect();
        for k in 1..screen.len() - 1 {
            draw_triangle([screen[0], screen[k], screen[k + 1]], camera, &mut buf, &mut zbuf);
        }
    }
    buf
}

fn draw_triangle(mut v: [ScreenVertex; 3], camera: &Camera, buf: &mut FragmentBuffer, zbuf: &mut [f64]) {
    let area = edge(&v[0], &v[1], v[2].x, v[2].y);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
    }
    let planes = TrianglePlanes { inv_w: plane(&v, |p| p.inv_w), s_w: plane(&v, |p| p.s_w), t_w: plane(&v, |p| p.t_w) };
    let vp = buf.viewport;
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as i64;
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil().min(vp.width as f64) as i64;
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as i64;
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil().min(vp.height as f64) as i64;
    let edges = [(1, 2), (2, 0), (0, 1)];
    let bias: [bool; 3] = edges.map(|(a, b)| is_top_left(&v[a], &v[b]));

    for py in min_y..max_y {
        let cy = py as f64 + 0.5;
        for px in min_x..max_x {
            let cx = px as f64 + 0.5;
            let inside = edges.iter().zip(bias).all(|(&(a, b), tl)| {
                let e = edge(&v[a], &v[b], cx, cy);
                e > 0.0 || (e == 0.0 && tl)
            });
            if !inside {
                continue;
            }
            let iw = planes.inv_w.at(cx, cy);
            if iw <= 0.0 {
                continue;
            }
            let depth = 1.0 / iw;
            if depth < camera.near || depth > camera.far {
                continue;
            }
            let idx = py as usize * vp.width as usize + px as usize;
            if depth >= zbuf[idx] {
                continue;
            }
            let Some(quad) = quad_values(&planes, px, py) else {
                continue;
            };
            let (qx, qy) = ((px & 1) as usize, (py & 1) as usize);
            let uv = quad.uv[qy * 2 + qx];
            let (ddx, ddy) = quad.derivatives(qx, qy);
            zbuf[idx] = depth;
            buf.depth[idx] = depth as f32;
            buf.fragments[idx] = Some(Fragment {
                s: uv[0],
                t: uv[1],
                ds_dx: ddx[0],
                dt_dx: ddx[1],
                ds_dy: ddy[0],
                dt_dy: ddy[1],
                depth,
            });
        }
    }
}

fn quad_values(planes: &TrianglePlanes, px: i64, py: i64) -> Option<FragmentQuad> {
    let (x0, y0) = ((px & !1) as f64 + 0.5, (py & !1) as f64 + 0.5);
    Some(FragmentQuad {
        uv: [planes.uv(x0, y0)?, planes.uv(x0 + 1.0, y0)?, planes.uv(x0, y0 + 1.0)?, planes.uv(x0 + 1.0, y0 + 1.0)?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A quad facing the camera at distance `dist`, sized to fill `frac` of
    /// the vertical view of a 90° camera.
    fn facing_quad(dist: f64, half: f64, uv_max: f64) -> SceneMesh {
        let mut m = SceneMesh::default();
        let z = -dist;
        m.push_quad("q", [[-half, half, z], [half, half, z], [half, -half, z], [-half, -half, z]], [uv_max, uv_max]);
        m
    }

    fn cam90() -> Camera {
        Camera { fov_y: std::f64::consts::FRAC_PI_2, ..Camera::default() }
    }

    #[test]
    fn full_screen_quad_covers_everything() {
        let vp = Viewport::new(64, 64).unwrap();
        let buf = rasterize(&facing_quad(2.0, 4.0, 1.0), &cam90(), vp);
        assert!(buf.fragments.iter().all(|f| f.is_some()));
        assert!(buf.depth.iter().all(|&d| (d - 2.0).abs() < 1e-6));
    }

    #[test]
    fn nearer_quad_wins() {
        let vp = Viewport::new(32, 32).unwrap();
        let mut scene = facing_quad(3.0, 6.0, 1.0);
        let near = facing_quad(1.0, 0.25, 1.0);
        let base = scene.vertices.len() as u32;
        scene.vertices.extend(near.vertices);
        scene.faces.push(crate::scene::Face {
            texture: "n".into(),
            triangles: near.faces[0].triangles.iter().map(|t| t.map(|i| i + base)).collect(),
        });
        let buf = rasterize(&scene, &cam90(), vp);
        let center = buf.depth[16 * 32 + 16];
        assert!((center - 1.0).abs() < 1e-6);
        assert!((buf.depth[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn screen_aligned_quad_has_exact_derivatives() {
        // A 90° camera at distance 1 spans [-1, 1]; a half-extent of 1 fills
        // a 512 px viewport exactly.
        let vp = Viewport::new(512, 512).unwrap();
        let buf = rasterize(&facing_quad(1.0, 1.0, 1.0), &cam90(), vp);
        for f in buf.fragments.iter().map(|f| f.unwrap()) {
            assert!((f.ds_dx - 1.0 / 512.0).abs() < 1e-12);
            assert!((f.dt_dy - 1.0 / 512.0).abs() < 1e-12);
            assert!(f.dt_dx.abs() < 1e-12 && f.ds_dy.abs() < 1e-12);
        }
    }

    #[test]
    fn shared_edges_are_drawn_once() {
        let vp = Viewport::new(64, 64).unwrap();
        let scene = facing_quad(2.0, 1.3, 1.0);
        let mut counts = vec![0u32; vp.pixel_count()];
        for tri in scene.triangles() {
            let single = SceneMesh {
                vertices: tri.to_vec(),
                faces: vec![crate::scene::Face { texture: "x".into(), triangles: vec![[0, 1, 2]] }],
            };
            let b = rasterize(&single, &cam90(), vp);
            for (c, f) in counts.iter_mut().zip(&b.fragments) {
                *c += f.is_some() as u32;
            }
        }
        assert!(counts.iter().all(|&c| c <= 1));
        assert!(counts.contains(&1));
    }

    #[test]
    fn near_plane_clipping_keeps_visible_part() {
        let mut m = SceneMesh::default();
        // Floor running from behind the camera to far ahead.
        m.push_quad("f", [[-5.0, -1.0, 5.0], [5.0, -1.0, 5.0], [5.0, -1.0, -50.0], [-5.0, -1.0, -50.0]], [1.0, 1.0]);
        let buf = rasterize(&m, &cam90(), Viewport::new(32, 32).unwrap());
        let covered = buf.fragments.iter().filter(|f| f.is_some()).count();
        assert!(covered > 0 && covered < 32 * 32);
        assert!(buf.fragments[31 * 32 + 16].is_some());
        assert!(buf.fragments[16].is_none());
    }

    #[test]
    fn viewport_must_be_even() {
        assert!(Viewport::new(31, 32).is_err());
        assert!(Viewport::new(0, 2).is_err());
    }
}
