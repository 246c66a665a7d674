//! Run the tightened bootstrap test on a bundled synthetic panel and show
//! the bootstrap distribution next to the observed statistic.
//!
//!     cargo run --release --example bootstrap_test -- [p080|p100] [B]

use std::path::PathBuf;

use prefstab::cli::{format_result_row, result_header, summary_quantiles};
use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::data::{load_panel, PanelSchema};
use prefstab::inference::{bootstrap_test, estimate_frequencies, TestConfig};
use prefstab::rp::DEFAULT_EPSILON;

fn main() -> prefstab::Result<()> {
    let mut args = std::env::args().skip(1);
    let tag = args.next().unwrap_or_else(|| "p080".into());
    let reps: usize = args.next().map_or(500, |s| s.parse().expect("B"));
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("synthetic_{tag}"));

    let data = load_panel(&dir.join("households.csv"), &dir.join("prices.csv"), &PanelSchema::default())?;
    let cone = build_cone(3, StabilityConvention::FixedClosure)?.data_feasible();
    let config = TestConfig {
        bootstrap_reps: reps,
        ..TestConfig::default()
    };
    let freq = estimate_frequencies(&data, DEFAULT_EPSILON, &config)?;
    let r = bootstrap_test(&cone, &freq, &config)?;
    println!("{}", result_header());
    println!("{}", format_result_row(&tag, &r));
    println!("tau_n {:.3e} over {} columns", r.tau_n, cone.cols());
    println!("bootstrap J: {}", summary_quantiles(&r.bootstrap_stats));
    println!("reject at alpha {}: {}", r.alpha, r.reject);
    Ok(())
}
