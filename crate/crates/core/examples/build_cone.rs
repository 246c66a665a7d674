//! Enumerate the T=3 type spaces, build both stability conventions and
//! round-trip the cone through the binary cache.
//!
//!     cargo run --release --example build_cone

use prefstab::cone::{build_cone, load_cache, save_cache, StabilityConvention};

fn main() -> prefstab::Result<()> {
    for convention in [StabilityConvention::FixedClosure, StabilityConvention::Augmentable] {
        let start = std::time::Instant::now();
        let cone = build_cone(3, convention)?;
        let c = cone.counts();
        println!("{convention}: built in {:.2?}", start.elapsed());
        println!("  individual types      {:>9} ({} rational)", c.individual_types, c.rational_individual_types);
        println!("  collective types      {:>9} ({} consistent)", c.collective_types, c.consistent_collective_types);
        println!("  configurations        {:>9}", c.total_configurations);
        println!("  consistent couples    {:>9}", c.consistent_configurations);
        println!("  stable (columns)      {:>9}", c.stable_configurations);
        println!("  data-feasible columns {:>9}", cone.data_feasible().cols());
    }

    let cone = build_cone(3, StabilityConvention::FixedClosure)?;
    let path = std::env::temp_dir().join("prefstab-example-cone.bin");
    save_cache(&cone, &path)?;
    let back = load_cache(&path, Some((3, StabilityConvention::FixedClosure)))?;
    println!("cache {} digest {}", path.display(), back.digest());
    assert_eq!(back, cone);
    Ok(())
}
