mod common;

use std::collections::BTreeSet;

use common::*;
use nalgebra::{DMatrix, DVector};
use prefstab::cone::*;
use prefstab::data::{ChoicePath, HouseholdKind, PricedChoice};
use prefstab::rp::*;
use prefstab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn counts_of_the_t3_build() {
    let c = cone().counts();
    assert_eq!(c.individual_types, 64);
    assert_eq!(c.rational_individual_types, 25);
    assert_eq!(c.collective_types, 512);
    assert_eq!(c.consistent_collective_types, 449);
    assert_eq!(c.total_configurations, 1 << 21);
    assert_eq!(c.consistent_configurations, 449 * 64 * 64);
    assert_eq!(c.stable_configurations, cone().cols() as u64);
}

#[test]
fn columns_are_sorted_one_hot_triples() {
    let m = cone();
    assert_eq!(m.rows(), 640);
    assert_eq!(m.block_sizes(), [512, 64, 64]);
    assert!(m.columns().windows(2).all(|w| w[0] < w[1]));
    for (j, theta) in m.columns().iter().enumerate() {
        let rows = m.matrix().column(j);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0] as u64, theta.couple.code());
        assert_eq!(rows[1] as u64, 512 + theta.female.code());
        assert_eq!(rows[2] as u64, 576 + theta.male.code());
    }
}

/// Scan all 2^21 configurations, caching the per-component verdicts.
#[test]
fn fixed_closure_cone_matches_full_scan_oracle() {
    let transitive = transitive_relations(3);
    let couples: Vec<_> = enumerate_collective_types(3, DEFAULT_TYPE_CAP)
        .unwrap()
        .into_iter()
        .map(|c| {
            let plain = Couple::of(&c);
            let ok = carp_consistent_oracle(&plain, &transitive);
            (c, plain, ok)
        })
        .collect();
    let singles: Vec<_> = enumerate_individual_types(3, DEFAULT_TYPE_CAP)
        .unwrap()
        .into_iter()
        .map(|x| {
            let r = individual_rel(&x);
            let ok = garp_by_scc(&r);
            (x, closure(&r), ok)
        })
        .collect();
    let mut stable = BTreeSet::new();
    let mut scanned = 0u64;
    for (c, plain, c_ok) in &couples {
        for (m, hm, m_ok) in &singles {
            for (f, hf, f_ok) in &singles {
                scanned += 1;
                if *c_ok && *m_ok && *f_ok && plain.items_hold([hm, hf]) {
                    stable.insert(ConfigurationType::new(*c, *m, *f));
                }
            }
        }
    }
    assert_eq!(scanned, 1 << 21);
    let ours: BTreeSet<_> = cone().columns().iter().copied().collect();
    assert_eq!(ours.len(), stable.len());
    assert!(ours == stable);
}

#[test]
fn augmentable_agrees_with_oracle_on_a_sample() {
    let transitive = transitive_relations(3);
    let couples: Vec<_> = enumerate_collective_types(3, DEFAULT_TYPE_CAP)
        .unwrap()
        .into_iter()
        .filter(is_carp_consistent)
        .collect();
    let singles: Vec<_> = enumerate_individual_types(3, DEFAULT_TYPE_CAP)
        .unwrap()
        .into_iter()
        .filter(is_garp_rational)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut stable = 0;
    for _ in 0..1500 {
        let theta = ConfigurationType::new(
            couples[rng.gen_range(0..couples.len())],
            singles[rng.gen_range(0..singles.len())],
            singles[rng.gen_range(0..singles.len())],
        );
        let (rm, rf) = (individual_rel(&theta.male), individual_rel(&theta.female));
        let contains = |h: &Rel, r: &Rel| (0..3).all(|s| (0..3).all(|t| !r[s][t] || h[s][t]));
        let plain = Couple::of(&theta.couple);
        let oracle = transitive.iter().filter(|h| contains(h, &rm)).any(|hm| {
            transitive
                .iter()
                .filter(|h| contains(h, &rf))
                .any(|hf| plain.items_hold([hm, hf]))
        });
        assert_eq!(is_preference_stable(&theta, StabilityConvention::Augmentable), oracle);
        stable += oracle as usize;
    }
    assert!(stable > 0);
}

// A worked three-budget configuration: budgets s, t, u are periods 0, 1, 2.
fn example_couple() -> CollectiveType {
    // p_s x_u <= 1; s R (t+u) and u R (s+t)
    let pair = RelationBits::from_edges(3, &[(0, 2)]);
    let sums = (1 << sum_index(3, 0, 1, 2)) | (1 << sum_index(3, 2, 0, 1));
    CollectiveType::new(3, pair.code(), sums)
}

/// A single person whose cross-period values `p_s · x_t` are `v[s][t]`,
/// built from prices `e_s + 0.05ι` by solving for the bundles.
fn single_from_values(v: [[f64; 3]; 3]) -> ChoicePath {
    let price = |s: usize| DVector::from_fn(3, |k, _| if k == s { 1.05 } else { 0.05 });
    let p = DMatrix::from_fn(3, 3, |s, k| price(s)[k]);
    let lu = p.lu();
    let obs = (0..3)
        .map(|t| {
            let x = lu.solve(&DVector::from_fn(3, |s, _| v[s][t])).unwrap();
            assert!(x.iter().all(|q| *q > 0.0));
            PricedChoice::new(t as u32, price(t).as_slice().to_vec(), x.as_slice().to_vec())
        })
        .collect();
    ChoicePath::new("single", HouseholdKind::SingleMale, obs)
}

#[test]
fn example_configuration_from_constructed_data() {
    // man: p_t x_s <= 1 and p_u x_t <= 1
    let man = single_from_values([[1.0, 1.4, 1.3], [0.7, 1.0, 1.2], [1.5, 0.8, 1.0]]);
    // woman: p_u x_s <= 1
    let woman = single_from_values([[1.0, 1.3, 1.6], [1.2, 1.0, 1.1], [0.6, 1.4, 1.0]]);
    let xm = classify_individual(&man, DEFAULT_EPSILON);
    let xf = classify_individual(&woman, DEFAULT_EPSILON);
    assert_eq!(xm.relation(), RelationBits::from_edges(3, &[(1, 0), (2, 1)]));
    assert_eq!(xf.relation(), RelationBits::from_edges(3, &[(2, 0)]));
    assert!(is_garp_rational(&xm) && is_garp_rational(&xf));

    let xc = example_couple();
    assert!(is_carp_consistent(&xc));
    let theta = ConfigurationType::new(xc, xm, xf);
    for conv in [StabilityConvention::FixedClosure, StabilityConvention::Augmentable] {
        assert!(!is_preference_stable(&theta, conv));
    }
    // t H^m s and u H^f s rule out s R (t + u)
    assert!(stability_violations(&theta)
        .iter()
        .any(|v| *v == CarpViolation::SumReversal { t: 0, s1: 1, s2: 2 }));
    // p_u (x_s + x_t) <= 1 together with p_u x_t > 1 cannot come from data
    assert!(!is_data_feasible(&xc));
}

#[test]
fn cache_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cone.bin");
    save_cache(cone(), &path).unwrap();
    let back = load_cache(&path, Some((3, StabilityConvention::FixedClosure))).unwrap();
    assert_eq!(&back, cone());
    assert_eq!(back.digest(), cone().digest());

    assert!(matches!(
        load_cache(&path, Some((3, StabilityConvention::Augmentable))),
        Err(Error::VersionMismatch(_))
    ));
    assert!(matches!(
        load_cache(&path, Some((4, StabilityConvention::FixedClosure))),
        Err(Error::VersionMismatch(_))
    ));

    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 5;
    bytes[last] ^= 0x10;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_cache(&path, None), Err(Error::ChecksumMismatch)));
}

#[test]
fn builds_are_deterministic() {
    let again = build_cone(3, StabilityConvention::FixedClosure).unwrap();
    assert_eq!(again.digest(), cone().digest());
}

#[test]
fn feasible_restriction_keeps_only_feasible_couples() {
    let f = cone().data_feasible();
    assert!(f.cols() < cone().cols());
    assert!(f.columns().iter().all(|c| is_data_feasible(&c.couple)));
    assert_eq!(
        f.cols(),
        cone().columns().iter().filter(|c| is_data_feasible(&c.couple)).count()
    );
}

#[test]
fn degenerate_requests_are_refused() {
    assert!(matches!(
        build_cone(2, StabilityConvention::FixedClosure),
        Err(Error::Usage(_))
    ));
    assert!(matches!(
        enumerate_stable(3, StabilityConvention::FixedClosure, 1000),
        Err(Error::SizeLimit { .. })
    ));
}
