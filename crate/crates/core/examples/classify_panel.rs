//! Load a panel, classify every household and tally the observed types.
//!
//!     cargo run --release --example classify_panel -- [households.csv prices.csv]

use std::collections::BTreeMap;
use std::path::PathBuf;

use prefstab::data::{load_panel, HouseholdKind, PanelSchema};
use prefstab::inference::classify_panel;
use prefstab::rp::DEFAULT_EPSILON;

fn main() -> prefstab::Result<()> {
    let bundled = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_p080");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let households = args.next().unwrap_or_else(|| bundled.join("households.csv"));
    let prices = args.next().unwrap_or_else(|| bundled.join("prices.csv"));

    let data = load_panel(&households, &prices, &PanelSchema::default())?;
    println!(
        "{} households over {} periods and {} goods ({} incomplete dropped)",
        data.households.len(),
        data.periods,
        data.goods,
        data.dropped_incomplete
    );
    let types = classify_panel(&data, DEFAULT_EPSILON);
    for kind in HouseholdKind::ALL {
        let pool: Vec<_> = types.iter().filter(|t| t.kind == kind).collect();
        let rational = pool.iter().filter(|t| t.rational).count();
        let mut distinct: BTreeMap<u64, usize> = BTreeMap::new();
        for t in &pool {
            *distinct.entry(t.code).or_default() += 1;
        }
        let mut top: Vec<_> = distinct.iter().collect();
        top.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        println!(
            "{:<9} {:>4} households, {:>4} rational, {:>3} distinct types, most common {:?}",
            kind.label(),
            pool.len(),
            rational,
            distinct.len(),
            &top[..top.len().min(3)]
        );
    }
    Ok(())
}
