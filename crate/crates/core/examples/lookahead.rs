//! HotSpot with and without the LookAhead pass on a steady turn and on a
//! sudden 45° snap, where extrapolating the motion overshoots.
//!
//! cargo run --release --example lookahead

use vtlab::demo::{rotation_path, snap_path, DemoWorld, GallerySpec};
use vtlab::eval::{report, QualityReport, SsimParams};
use vtlab::render::{render_frame, Camera, ChainSampler, FilterMode, Viewport};
use vtlab::stream::{simulate, HeuristicConfig, HeuristicKind, LookaheadConfig, SimConfig};

fn run(world: &DemoWorld, path: &[Camera], heur: HeuristicConfig) -> vtlab::Result<QualityReport> {
    let vp = Viewport::new(256, 256)?;
    let sampler = ChainSampler { chain: &world.chain };
    let refs = path
        .iter()
        .map(|c| render_frame(&world.scene, c, &sampler, vp, FilterMode::Nearest).map(|f| f.color))
        .collect::<vtlab::Result<Vec<_>>>()?;
    let sim = simulate(&world.scene, path, &world.store, None, vp, SimConfig::default(), heur)?;
    report(&refs, &sim.frames, &SsimParams::default())
}

fn main() -> vtlab::Result<()> {
    let world = DemoWorld::build(GallerySpec::default())?;
    let hot = HeuristicConfig::new(HeuristicKind::HotSpot);
    let la = HeuristicConfig { lookahead: Some(LookaheadConfig::default()), ..hot };
    let damped = HeuristicConfig {
        lookahead: Some(LookaheadConfig { damping: Some(10f64.to_radians()), ..LookaheadConfig::default() }),
        ..hot
    };

    let turn = rotation_path(&world.spec, 5, 60, 3.0);
    println!("3°/frame turn        mean ssim   min ssim");
    for h in [hot, la] {
        let r = run(&world, &turn, h)?;
        println!("  {:<18} {:>9.4} {:>10.4}", h.label(), r.mean_ssim(), r.min_ssim());
    }

    let snap = snap_path(&world.spec, 6, 6, 45.0);
    println!("45° snap at frame 6, per-frame ssim:");
    for (name, h) in [("hotspot", hot), ("lookahead", la), ("damped lookahead", damped)] {
        let series = run(&world, &snap, h)?.ssim_series();
        let shown: Vec<String> = series[5..].iter().map(|s| format!("{s:.3}")).collect();
        println!("  {name:<18} {}", shown.join(" "));
    }
    Ok(())
}
