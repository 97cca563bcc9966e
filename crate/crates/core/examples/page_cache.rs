//! Walks through cache insertion, LRU eviction and ancestor fallback in the
//! page table on a tiny four-mip texture.
//!
//! cargo run --example page_cache

use vtlab::build::MipChain;
use vtlab::demo::panel_texture;
use vtlab::format::PageSource;
use vtlab::page::PageId;
use vtlab::runtime::VtRuntime;

fn show(rt: &VtRuntime, pages: &[PageId]) {
    for p in pages {
        let e = rt.table.entry(*p);
        println!(
            "  {:?}: {} frame ({}, {}) holding mip {}",
            p,
            if e.resident { "resident in" } else { "falls back to" },
            e.frame.fx,
            e.frame.fy,
            e.source_mip
        );
    }
}

fn main() -> vtlab::Result<()> {
    let chain = MipChain::build(panel_texture(1, 64, 9), 8, 1)?;
    let store = chain.page_store();
    let mut rt = VtRuntime::new(&store, 2, 2)?;
    let watch = [PageId::new(3, 5, 2), PageId::new(2, 2, 1), PageId::new(1, 1, 0)];

    println!("root only:");
    show(&rt, &watch);

    for p in [PageId::new(1, 1, 0), PageId::new(2, 2, 1), PageId::new(2, 0, 0)] {
        rt.cache.advance_clock();
        rt.cache.insert(&store.read_page(p.abs_index())?)?;
    }
    rt.refresh()?;
    println!("after loading three pages (cache full):");
    show(&rt, &watch);

    rt.cache.advance_clock();
    rt.cache.touch(PageId::new(2, 2, 1));
    let evicted = rt.cache.insert(&store.read_page(PageId::new(3, 5, 2).abs_index())?)?;
    rt.refresh()?;
    println!("loading {:?} evicted the least recently used {:?}:", watch[0], evicted.unwrap());
    show(&rt, &watch);
    Ok(())
}
