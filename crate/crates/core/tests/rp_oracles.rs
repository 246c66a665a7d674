mod common;

use common::*;
use proptest::prelude::*;
use prefstab::rp::*;

#[test]
fn rationality_matches_cycle_detection_for_every_t3_type() {
    let mut rational = 0;
    for xi in enumerate_individual_types(3, DEFAULT_TYPE_CAP).unwrap() {
        let oracle = garp_by_scc(&individual_rel(&xi));
        assert_eq!(is_garp_rational(&xi), oracle, "code {}", xi.code());
        rational += oracle as usize;
    }
    assert_eq!(rational, 25);
}

#[test]
fn consistency_matches_exhaustive_oracle_for_every_t3_type() {
    let transitive = transitive_relations(3);
    let mut consistent = 0;
    for c in enumerate_collective_types(3, DEFAULT_TYPE_CAP).unwrap() {
        let oracle = carp_consistent_oracle(&Couple::of(&c), &transitive);
        assert_eq!(is_carp_consistent(&c), oracle, "code {}", c.code());
        consistent += oracle as usize;
    }
    assert_eq!(consistent, 449);
}

#[test]
fn search_agrees_with_library_exhaustive_check() {
    for c in enumerate_collective_types(3, DEFAULT_TYPE_CAP).unwrap().iter().step_by(7) {
        assert_eq!(is_carp_consistent(c), is_carp_consistent_exhaustive(c));
    }
}

#[test]
fn data_feasible_patterns_at_t3() {
    let n = enumerate_collective_types(3, DEFAULT_TYPE_CAP)
        .unwrap()
        .iter()
        .filter(|c| is_data_feasible(c))
        .count();
    // per budget: no sum, one of two pairs, both pairs, both pairs plus sum
    assert_eq!(n, 5 * 5 * 5);
}

fn relation_strategy(periods: usize) -> impl Strategy<Value = RelationBits> {
    (0..1u64 << pair_count(periods)).prop_map(move |c| RelationBits::from_code(periods, c))
}

proptest! {
    #[test]
    fn closure_matches_matrix_powers(r in relation_strategy(5)) {
        let ours = r.transitive_closure();
        let oracle = closure_by_powers(&rel_of(5, |s, t| r.get(s, t)));
        prop_assert_eq!(rel_of(5, |s, t| ours.get(s, t)), oracle);
    }

    #[test]
    fn closure_is_idempotent_and_contains_input(r in relation_strategy(5)) {
        let c = r.transitive_closure();
        prop_assert!(r.is_subset_of(&c));
        prop_assert_eq!(c.transitive_closure(), c);
    }

    #[test]
    fn garp_matches_cycle_detection_t4(code in 0..1u64 << pair_count(4)) {
        let xi = IndividualType::new(4, code);
        prop_assert_eq!(is_garp_rational(&xi), garp_by_scc(&individual_rel(&xi)));
    }

    #[test]
    fn relation_code_round_trip(code in 0..1u64 << pair_count(6)) {
        prop_assert_eq!(RelationBits::from_code(6, code).code(), code);
    }

    #[test]
    fn collective_code_round_trip(code in 0..CollectiveType::space_size(4)) {
        let c = CollectiveType::from_code(4, code);
        prop_assert_eq!(c.code(), code);
        prop_assert_eq!(CollectiveType::new(4, c.pair_code(), c.sum_code()), c);
    }
}
