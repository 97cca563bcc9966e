//! Writes a complete input set for the `vtlab` binary: panel images, an
//! un-retextured gallery scene, a camera path and a run config.
//!
//! cargo run --release --example demo_inputs -- [dir]
//!
//! then, from that directory:
//!
//! vtlab retexture --scene scene.json --sources sources --page-size 32 --out layout
//! vtlab build --layout layout/layout.json --page-size 32 --border 2 --out vt
//! vtlab reference --config run.toml --out reference
//! vtlab simulate --config run.toml --heuristic hotspot --lookahead --out stream
//! vtlab evaluate --reference reference --test stream --out quality.csv

use std::path::PathBuf;

use vtlab::demo::{flythrough, gallery_mesh, panel_texture, GallerySpec};
use vtlab::stream::CameraPath;

const RUN_TOML: &str = r#"vtx = "vt/texture.vtx"
vtn = "vt/texture.vtn"
scene = "layout/scene.json"
path = "path.txt"
out = "stream"
seed = 0

[viewport]
width = 256
height = 256

[sim]
budget = 5
cache_frames = [32, 32]
preload_mips = 3
ancestors = "none"

[heuristic]
kind = "weightedpixel"
"#;

fn main() -> vtlab::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/demo_inputs".into()));
    let spec = GallerySpec::default();
    std::fs::create_dir_all(dir.join("sources"))?;
    let (mut scene, _) = gallery_mesh(&spec);
    for (i, face) in scene.faces.iter_mut().enumerate() {
        face.texture.push_str(".png");
        panel_texture(i, spec.texture_edge, spec.seed).save(dir.join("sources").join(&face.texture))?;
    }
    scene.save(dir.join("scene.json"))?;
    CameraPath::new(flythrough(&spec, 60)).save(dir.join("path.txt"))?;
    std::fs::write(dir.join("run.toml"), RUN_TOML)?;
    println!("{} panel images, scene, path and run.toml written to {}", scene.faces.len(), dir.display());
    Ok(())
}
