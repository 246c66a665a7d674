//! Demographic conditioning and the control-function windows on a bundled
//! synthetic panel.
//!
//!     cargo run --release --example control_function -- [p080|p100]

use std::path::PathBuf;

use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::data::{load_panel, PanelSchema};
use prefstab::inference::{
    bootstrap_test, control_function_ranks, control_grid, control_window, estimate_frequencies, filter_subsample,
    Condition, TestConfig, CONTROL_HALF_WIDTH,
};
use prefstab::rp::DEFAULT_EPSILON;

fn main() -> prefstab::Result<()> {
    let tag = std::env::args().nth(1).unwrap_or_else(|| "p080".into());
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("synthetic_{tag}"));
    let data = load_panel(&dir.join("households.csv"), &dir.join("prices.csv"), &PanelSchema::default())?;
    let cone = build_cone(3, StabilityConvention::FixedClosure)?.data_feasible();
    let config = TestConfig {
        bootstrap_reps: 100,
        ..TestConfig::default()
    };

    for cond in ["college=1", "college=0", "age=1"] {
        let condition: Condition = cond.parse()?;
        let sub = filter_subsample(&data, &condition);
        let counts = sub.counts();
        match estimate_frequencies(&sub, DEFAULT_EPSILON, &config).and_then(|f| bootstrap_test(&cone, &f, &config)) {
            Ok(r) => println!("{cond:<10} pools {counts:?}: J {:.4e}, p {:.2}", r.j_observed, r.p_value),
            Err(e) => println!("{cond:<10} pools {counts:?}: {e}"),
        }
    }

    let ranks = control_function_ranks(&data, None)?;
    for v0 in control_grid() {
        let window = control_window(&data, &ranks, v0, CONTROL_HALF_WIDTH);
        match estimate_frequencies(&window, DEFAULT_EPSILON, &config).and_then(|f| bootstrap_test(&cone, &f, &config)) {
            Ok(r) => println!("v={v0:.2} n_min {:>3}: J {:.4e}, p {:.2}", r.n_c.min(r.n_m).min(r.n_f), r.j_observed, r.p_value),
            Err(e) => println!("v={v0:.2}: {e}"),
        }
    }
    Ok(())
}
