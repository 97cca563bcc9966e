//! Builds a virtual texture from a procedural image, writes the `.vtx` and
//! `.vtn` files and reads one page back.
//!
//! cargo run --example build_texture -- [out_dir]

use vtlab::build::build_vt;
use vtlab::demo::panel_texture;
use vtlab::format::{read_noise, PageSource, VtFile};

fn main() -> vtlab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/build_texture".into());
    std::fs::create_dir_all(&out)?;
    let (vtx, vtn) = (format!("{out}/texture.vtx"), format!("{out}/texture.vtn"));

    let chain = build_vt(panel_texture(0, 1024, 3), 128, 4, &vtx, &vtn)?;
    let meta = chain.meta;
    println!(
        "{}x{} texture: {} mips, {} pages of {}² (+{} border)",
        meta.dim_max(),
        meta.dim_max(),
        meta.mip_count,
        meta.total_pages(),
        meta.page_size,
        meta.border
    );

    let file = VtFile::open(&vtx)?;
    let page = file.read_page(5)?;
    println!("page 5 is {:?}, read from byte {}", page.id, meta.page_file_offset(5));
    assert_eq!(page, chain.cut_page(page.id));

    let noise = read_noise(&vtn, Some(meta.total_pages()))?;
    for mip in 0..meta.mip_count {
        let pages: Vec<f32> = (0..meta.total_pages())
            .map(|a| meta.from_abs(a).unwrap())
            .filter(|p| p.mip == mip)
            .map(|p| noise.get(p))
            .collect();
        let mean = pages.iter().sum::<f32>() / pages.len() as f32;
        println!("mip {mip}: {:>3} pages, mean NoiseValue {mean:.3}", pages.len());
    }
    Ok(())
}
