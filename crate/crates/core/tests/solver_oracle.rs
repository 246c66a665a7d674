mod common;

use common::*;
use prefstab::solver::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(
    a: &SparseBinary,
    omega: &WeightMatrix,
    rule: StepRule,
    pi: &[f64],
    lower: &[f64],
    trace: bool,
) -> ConeProjection {
    let problem = NnlsProblem::new(a, omega, rule).unwrap();
    let opts = SolverOptions {
        record_trace: trace,
        ..SolverOptions::default()
    };
    project_onto_cone(&problem, pi, lower, &opts, None).unwrap()
}

/// Natural KKT residual `max |min(s_j, g_j)|` recomputed from scratch.
fn kkt(a: &SparseBinary, omega: &[f64], pi: &[f64], p: &ConeProjection, lower: &[f64]) -> f64 {
    let e: Vec<f64> = pi.iter().zip(&p.gamma).map(|(x, g)| x - g).collect();
    (0..a.cols())
        .map(|j| {
            let g: f64 = -a.column(j).iter().map(|&i| omega[i as usize] * e[i as usize]).sum::<f64>();
            (p.nu[j] - lower[j]).min(g).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn both_step_rules_agree_with_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let inst = SmallInstance::random(&mut rng);
        let a = inst.matrix();
        let tau = if rng.gen_bool(0.5) { 0.0 } else { 1e-3 };
        let lower = vec![tau; a.cols()];
        let ones = vec![1.0; inst.rows];
        let oracle = weighted_projection_objective(&inst.dense(), &inst.pi, &lower, &ones);
        for rule in [StepRule::Coordinate, StepRule::Landweber] {
            let p = solve(&a, &WeightMatrix::Identity, rule, &inst.pi, &lower, false);
            assert!((p.objective - oracle).abs() <= 1e-8, "{rule:?}: {} vs {oracle}", p.objective);
            assert!(p.kkt_residual <= 1e-10);
            assert!(kkt(&a, &ones, &inst.pi, &p, &lower) <= 1e-9);
        }
    }
}

#[test]
fn diagonal_weights_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..40 {
        let inst = SmallInstance::random(&mut rng);
        let a = inst.matrix();
        let w: Vec<f64> = (0..inst.rows).map(|_| rng.gen_range(0.2..3.0)).collect();
        let lower = vec![0.0; a.cols()];
        let oracle = weighted_projection_objective(&inst.dense(), &inst.pi, &lower, &w);
        let p = solve(&a, &WeightMatrix::Diagonal(w.clone()), StepRule::Coordinate, &inst.pi, &lower, false);
        assert!((p.objective - oracle).abs() <= 1e-8);
        assert!(kkt(&a, &w, &inst.pi, &p, &lower) <= 1e-9);
    }
}

#[test]
fn objective_never_increases_across_sweeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let inst = SmallInstance::random(&mut rng);
        let a = inst.matrix();
        let lower = vec![0.0; a.cols()];
        for rule in [StepRule::Coordinate, StepRule::Landweber] {
            let p = solve(&a, &WeightMatrix::Identity, rule, &inst.pi, &lower, true);
            assert!(!p.objective_trace.is_empty());
            for w in p.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "{rule:?}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn cone_gram_entries_and_mass_identity() {
    let a = cone().matrix();
    let ones = vec![1.0; a.rows()];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let (j, k) = (rng.gen_range(0..a.cols()), rng.gen_range(0..a.cols()));
        let h = a.gram_entry(&ones, j, k);
        assert!([0.0, 1.0, 2.0, 3.0].contains(&h));
        let shared = a.column(j).iter().filter(|i| a.column(k).contains(i)).count();
        assert_eq!(h, shared as f64);
    }
    assert_eq!(a.gram_entry(&ones, 0, 0), 3.0);
    let nu: Vec<f64> = (0..a.cols()).map(|_| rng.gen::<f64>()).collect();
    let gamma = a.mul(&nu);
    let lhs: f64 = gamma.iter().sum();
    let rhs: f64 = 3.0 * nu.iter().sum::<f64>();
    assert!((lhs - rhs).abs() <= 1e-9 * rhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = SmallInstance::random(&mut rng);
        let a = inst.matrix();
        let mut perm: Vec<usize> = (0..a.cols()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let b = a.permute_columns(&perm);
        let lower = vec![1e-3; a.cols()];
        let pa = solve(&a, &WeightMatrix::Identity, StepRule::Coordinate, &inst.pi, &lower, false);
        let pb = solve(&b, &WeightMatrix::Identity, StepRule::Coordinate, &inst.pi, &lower, false);
        prop_assert!((pa.objective - pb.objective).abs() <= 1e-10);
    }

    #[test]
    fn points_inside_the_tightened_cone_have_zero_distance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = SmallInstance::random(&mut rng);
        let a = inst.matrix();
        let tau = 1e-4;
        let nu: Vec<f64> = (0..a.cols()).map(|_| tau + rng.gen::<f64>()).collect();
        let pi = a.mul(&nu);
        let p = solve(&a, &WeightMatrix::Identity, StepRule::Coordinate, &pi, &vec![tau; a.cols()], false);
        prop_assert!(p.objective <= 1e-12);
    }
}
