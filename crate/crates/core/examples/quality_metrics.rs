//! RMSE, SSIM and center-weighted SSIM for the same distortion placed in the
//! middle and in a corner of an image.
//!
//! cargo run --example quality_metrics -- [out_dir]

use image::Rgb;
use vtlab::demo::panel_texture;
use vtlab::eval::{diff_image, rmse, ssim, wssim, SsimParams};

fn main() -> vtlab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/quality_metrics".into());
    std::fs::create_dir_all(&out)?;
    let params = SsimParams::default();
    let original = panel_texture(4, 128, 2);

    let blot = |x0: u32, y0: u32| {
        let mut img = original.clone();
        for y in y0..y0 + 32 {
            for x in x0..x0 + 32 {
                img.put_pixel(x, y, Rgb([128, 128, 128]));
            }
        }
        img
    };
    let center = blot(48, 48);
    let corner = blot(0, 0);

    println!("{:<10} {:>8} {:>8} {:>8}", "variant", "rmse", "ssim", "wssim");
    for (name, img) in [("identical", &original), ("center", &center), ("corner", &corner)] {
        println!(
            "{name:<10} {:>8.3} {:>8.4} {:>8.4}",
            rmse(&original, img)?,
            ssim(&original, img, &params)?,
            wssim(&original, img, &params)?
        );
    }
    diff_image(&original, &center)?.save(format!("{out}/diff_center.png"))?;
    Ok(())
}
