//! Fixed camera, one page per frame: plain streaming pops pages in at full
//! resolution, ancestor streaming fades detail in level by level.
//!
//! cargo run --release --example ancestor_streaming

use vtlab::demo::{DemoWorld, GallerySpec, EYE_HEIGHT};
use vtlab::eval::{ssim, SsimParams};
use vtlab::render::{render_frame, Camera, ChainSampler, FilterMode, Viewport};
use vtlab::stream::{AncestorStrategy, HeuristicConfig, HeuristicKind, SimConfig, Simulator};

fn main() -> vtlab::Result<()> {
    let world = DemoWorld::build(GallerySpec::default())?;
    let vp = Viewport::new(256, 256)?;
    let cam = Camera::at([0.0, EYE_HEIGHT, 3.0], 0.5, -0.1);
    let reference =
        render_frame(&world.scene, &cam, &ChainSampler { chain: &world.chain }, vp, FilterMode::Nearest)?.color;
    let params = SsimParams::default();

    for strategy in [AncestorStrategy::None, AncestorStrategy::Intern, AncestorStrategy::Extern] {
        let cfg = SimConfig {
            budget: 1,
            preload_mips: 0,
            preload_visible: false,
            ancestors: strategy,
            ..SimConfig::default()
        };
        let mut sim = Simulator::new(
            &world.scene,
            &world.store,
            None,
            vp,
            cfg,
            HeuristicConfig::new(HeuristicKind::PixelSum),
            &cam,
        )?;
        let mut series = Vec::new();
        let mut mips = Vec::new();
        for _ in 0..60 {
            let rec = sim.step(&cam)?;
            mips.extend(rec.dispatched.iter().map(|e| e.mip));
            series.push(ssim(&reference, &rec.buffers.color, &params)?);
        }
        let exact = series.iter().position(|&s| s == 1.0);
        let drops = series.windows(2).filter(|w| w[1] < w[0]).count();
        println!("{strategy:?}: exact from frame {exact:?}, {drops} SSIM drops");
        println!("  first loads by mip: {:?}", &mips[..mips.len().min(16)]);
        let marks: Vec<String> = series.iter().step_by(6).map(|s| format!("{s:.3}")).collect();
        println!("  ssim every 6th frame: {}", marks.join(" "));
    }
    Ok(())
}
