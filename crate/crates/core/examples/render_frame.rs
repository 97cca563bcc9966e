//! Renders one reference frame and one frame through a small page cache
//! holding only the three lowest mips.
//!
//! cargo run --release --example render_frame -- [out_dir]

use vtlab::demo::{DemoWorld, GallerySpec, EYE_HEIGHT};
use vtlab::eval::{ssim, SsimParams};
use vtlab::render::{render_frame, CacheSampler, Camera, ChainSampler, FilterMode, Viewport};
use vtlab::runtime::VtRuntime;

fn main() -> vtlab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/render_frame".into());
    std::fs::create_dir_all(&out)?;
    let world = DemoWorld::build(GallerySpec::default())?;
    let cam = Camera::at([0.5, EYE_HEIGHT, 6.0], 0.4, -0.05);
    let vp = Viewport::new(512, 512)?;

    let reference = render_frame(&world.scene, &cam, &ChainSampler { chain: &world.chain }, vp, FilterMode::Trilinear)?;
    reference.color.save(format!("{out}/reference.png"))?;

    let mut rt = VtRuntime::new(&world.store, 8, 8)?;
    rt.lock_mips(3, &world.store)?;
    let coarse = render_frame(&world.scene, &cam, &CacheSampler { runtime: &rt }, vp, FilterMode::Trilinear)?;
    coarse.color.save(format!("{out}/coarse.png"))?;

    let needed: std::collections::BTreeSet<_> = coarse.need.iter().flatten().collect();
    println!("{} of {} pixels covered", reference.covered_pixels(), vp.pixel_count());
    println!("{} distinct pages needed, {} resident", needed.len(), rt.cache.resident_count());
    println!(
        "SSIM of the coarse frame against the reference: {:.4}",
        ssim(&reference.color, &coarse.color, &SsimParams::default())?
    );
    Ok(())
}
