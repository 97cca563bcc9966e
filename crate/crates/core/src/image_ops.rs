use image::{Rgb, RgbImage};

/// Rec. 601 luma weights.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

pub fn luminance(c: [u8; 3]) -> f64 {
    LUMA[0] * c[0] as f64 + LUMA[1] * c[1] as f64 + LUMA[2] * c[2] as f64
}

/// Luminance scaled by 1000, kept integral so window sums stay exact.
pub fn luminance_milli(c: [u8; 3]) -> i64 {
    299 * c[0] as i64 + 587 * c[1] as i64 + 114 * c[2] as i64
}

/// Pixel read with clamp-to-edge addressing.
pub fn clamped(img: &RgbImage, x: i64, y: i64) -> Rgb<u8> {
    let cx = x.clamp(0, img.width() as i64 - 1) as u32;
    let cy = y.clamp(0, img.height() as i64 - 1) as u32;
    *img.get_pixel(cx, cy)
}

pub fn to_rgb8(c: [f64; 3]) -> Rgb<u8> {
    Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8))
}
