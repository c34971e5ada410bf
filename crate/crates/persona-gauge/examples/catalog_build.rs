//! Builds location catalogs from a check-in stream: per time block the
//! top-k categories by frequency, unioned in block order.

use std::path::Path;

use persona_gauge::adaptability::{build_catalog, load_checkins, TimeBlock};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_checkins.tsv");
    let checkins = load_checkins(&path, 7, 3)?;
    println!("{} check-ins from {}", checkins.len(), path.display());

    for block in TimeBlock::ALL {
        let n = checkins.iter().filter(|(b, _)| *b == block).count();
        println!("  {:<9} {n} check-ins", block.label());
    }

    for top_k in 1..=3 {
        let catalog = build_catalog(&checkins, top_k)?;
        println!(
            "\ntop-{top_k} union ({} categories): {}",
            catalog.categories().len(),
            catalog.categories().join(", ")
        );
    }
    Ok(())
}
