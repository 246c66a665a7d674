//! Generate a synthetic panel from a stable/non-stable mixture, write it as
//! CSV, load it back and run the bootstrap test.
//!
//!     cargo run --release --example synthetic_panel -- [p] [n_under] [dir]

use std::path::PathBuf;

use prefstab::cli::{format_result_row, result_header};
use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::data::{load_panel, PanelSchema};
use prefstab::inference::{bootstrap_test, estimate_frequencies, TestConfig};
use prefstab::rp::DEFAULT_EPSILON;
use prefstab::simulate::{alternative_set, synthetic_panel, AlternativeSet};

fn main() -> prefstab::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: f64 = args.next().map_or(0.8, |s| s.parse().expect("p"));
    let n_under: usize = args.next().map_or(500, |s| s.parse().expect("n_under"));
    let dir = args.next().map_or_else(|| std::env::temp_dir().join("prefstab-synthetic"), PathBuf::from);

    let cone = build_cone(3, StabilityConvention::FixedClosure)?;
    let theta1 = alternative_set(&cone, AlternativeSet::ConsistentCouple)?;
    let panel = synthetic_panel(&cone, &theta1, p, n_under, 7)?;
    let (households, prices) = panel.write_csv(&dir)?;
    println!("wrote {} and {}", households.display(), prices.display());

    let data = load_panel(&households, &prices, &PanelSchema::default())?;
    let config = TestConfig::default();
    let freq = estimate_frequencies(&data, DEFAULT_EPSILON, &config)?;
    let result = bootstrap_test(&cone.data_feasible(), &freq, &config)?;
    println!("{}", result_header());
    println!("{}", format_result_row(&format!("p={p}"), &result));
    println!("reject at alpha={}: {}", result.alpha, result.reject);
    Ok(())
}
