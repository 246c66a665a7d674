//! Find similar stable matches and run a short worst-case size study.
//!
//!     cargo run --release --example worst_case -- [n0] [samples]

use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::inference::tightening;
use prefstab::simulate::{component_mixes, find_similar, in_alternative, worst_case_size, SimConfig, WorstCaseSpec};

fn main() -> prefstab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n0: usize = args.next().map_or(2, |s| s.parse().expect("n0"));
    let samples: usize = args.next().map_or(20, |s| s.parse().expect("samples"));

    let cone = build_cone(3, StabilityConvention::FixedClosure)?;
    let similar = find_similar(&cone, n0, 0)?;
    for (k, &j) in similar.iter().enumerate() {
        println!("match {k}: column {j} = {:?}", cone.columns()[j]);
    }
    let (a, b) = (&cone.columns()[similar[0]], &cone.columns()[similar[1]]);
    let bad = component_mixes(a, b).iter().filter(|m| in_alternative(&cone, m)).count();
    println!("{bad} of the 8 component mixes of the first pair are consistent but not stable");

    let n_under = 500;
    let spec = WorstCaseSpec {
        n_similar: n0,
        weights: None,
        tau: tightening(cone.cols(), n_under),
    };
    let config = SimConfig {
        samples,
        n_under,
        ..SimConfig::default()
    };
    let table = worst_case_size(&spec, &config, &cone)?;
    for row in &table.rows {
        println!(
            "alpha {:.2}: {} / {} false positives ({:.3} +/- {:.3})",
            row.alpha,
            row.false_positives,
            row.samples,
            row.frequency(),
            2.0 * row.mc_se()
        );
    }
    Ok(())
}
