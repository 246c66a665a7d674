//! A small Monte Carlo power curve in the share p of stable households.
//!
//!     cargo run --release --example power_curve -- [n_under] [samples]

use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::simulate::{alternative_set, power_curve, AlternativeSet, SimConfig};

fn main() -> prefstab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_under: usize = args.next().map_or(300, |s| s.parse().expect("n_under"));
    let samples: usize = args.next().map_or(10, |s| s.parse().expect("samples"));

    let cone = build_cone(3, StabilityConvention::FixedClosure)?;
    let theta1 = alternative_set(&cone, AlternativeSet::ConsistentCouple)?;
    let config = SimConfig {
        samples,
        n_under,
        p_grid: vec![0.75, 0.85, 0.95, 1.0],
        ..SimConfig::default()
    };
    let table = power_curve(&config, &cone, &theta1)?;
    println!("{:>5} {:>6} {:>10} {:>7}", "p", "alpha", "rejection", "mc_se");
    for row in &table.rows {
        println!("{:>5} {:>6} {:>10.3} {:>7.3}", row.p, row.alpha, row.frequency(), row.mc_se);
    }
    for (p, share) in &table.zero_share {
        println!("p={p}: J_observed = 0 in {:.0}% of samples", 100.0 * share);
    }
    Ok(())
}
