//! Project observed type frequencies onto the tightened cone and inspect
//! the solution: objective, KKT residual, active columns.
//!
//!     cargo run --release --example project

use prefstab::cone::{build_cone, StabilityConvention};
use prefstab::inference::{tightening, FrequencyVector};
use prefstab::simulate::{alternative_set, sample_population, AlternativeSet};
use prefstab::solver::{project_onto_cone, NnlsProblem, SolverOptions, StepRule, WeightMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> prefstab::Result<()> {
    let cone = build_cone(3, StabilityConvention::FixedClosure)?;
    let theta1 = alternative_set(&cone, AlternativeSet::ConsistentCouple)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in [1.0, 0.9, 0.7] {
        let freq: FrequencyVector = sample_population(p, 500, cone.columns(), &theta1, &mut rng)?;
        let tau = tightening(cone.cols(), freq.n_min());
        let lower = vec![tau; cone.cols()];
        for step in [StepRule::Coordinate, StepRule::Landweber] {
            let problem = NnlsProblem::new(cone.matrix(), &WeightMatrix::Identity, step)?;
            let opts = SolverOptions {
                max_sweeps: 200_000,
                ..SolverOptions::default()
            };
            let start = std::time::Instant::now();
            let proj = project_onto_cone(&problem, &freq.values, &lower, &opts, None)?;
            let above = proj.nu.iter().filter(|&&v| v > tau * (1.0 + 1e-9)).count();
            println!(
                "p={p:<4} {step:?}: objective {:.4e}, J {:.4e}, KKT {:.1e}, {} sweeps, {} columns above tau, {:.2?}",
                proj.objective,
                freq.n_total() as f64 * proj.objective,
                proj.kkt_residual,
                proj.iterations,
                above,
                start.elapsed()
            );
        }
    }
    Ok(())
}
