//! Retextures the gallery so every panel owns a unique texture region, then
//! saves the layout and rewritten scene.
//!
//! cargo run --example retexture_scene -- [out_dir]

use std::collections::HashMap;
use std::path::PathBuf;

use vtlab::demo::{gallery_mesh, panel_texture, GallerySpec};
use vtlab::layout::retexture;

fn main() -> vtlab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/retexture".into()));
    let spec = GallerySpec { wall_panels: 6, texture_edge: 128, ..GallerySpec::default() };
    let (scene, _) = gallery_mesh(&spec);
    let sources: HashMap<_, _> = scene
        .faces
        .iter()
        .enumerate()
        .map(|(i, f)| (f.texture.clone(), panel_texture(i, spec.texture_edge, spec.seed)))
        .collect();

    let re = retexture(&scene, &sources, spec.page_size)?;
    println!("{} faces packed into {}²", re.placements.len(), re.layout.target_dim);
    for p in re.placements.iter().take(6) {
        println!("  face {:>2} at ({:>4}, {:>4}) size {}x{}", p.face, p.x, p.y, p.w, p.h);
    }
    re.save(&out)?;
    println!("layout.json, scene.json and face images written to {}", out.display());
    Ok(())
}
