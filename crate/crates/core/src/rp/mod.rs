//! Revealed-preference classification: discrete types for singles and
//! couples, GARP rationality and the necessary collective conditions.

mod carp;
mod relation;
mod types;

pub use carp::{
    all_violations, extend_hypotheses, first_violation, is_carp_consistent, is_carp_consistent_exhaustive,
    CarpViolation, HypothesizedRelations,
};
pub use relation::{pair_count, pair_index, RelationBits, MAX_PERIODS};
pub use types::{
    classify_collective, classify_individual, direct_relation, is_data_feasible, is_garp_rational, sum_count,
    sum_index, sum_triples, CollectiveType, IndividualType, DEFAULT_EPSILON,
};

use crate::error::{Error, Result};

/// Default cap on the number of types an enumeration may produce.
pub const DEFAULT_TYPE_CAP: u64 = 1 << 24;

pub fn transitive_closure(r: &RelationBits) -> RelationBits {
    r.transitive_closure()
}

/// All individual types for `periods` budgets in ascending code order.
pub fn enumerate_individual_types(periods: usize, cap: u64) -> Result<Vec<IndividualType>> {
    if periods < 2 {
        return Err(Error::Usage(format!(
            "individual types need at least 2 periods, got {periods}"
        )));
    }
    if pair_count(periods) >= 63 || IndividualType::space_size(periods) > cap {
        return Err(Error::SizeLimit {
            what: "individual types",
            requested: 1u128 << pair_count(periods),
            cap,
        });
    }
    if periods > 3 {
        log::warn!(
            "enumerating {} individual types for T={periods}",
            IndividualType::space_size(periods)
        );
    }
    Ok((0..IndividualType::space_size(periods))
        .map(|code| IndividualType::new(periods, code))
        .collect())
}

/// All collective types for `periods` budgets in ascending combined code.
pub fn enumerate_collective_types(periods: usize, cap: u64) -> Result<Vec<CollectiveType>> {
    if periods < 3 {
        return Err(Error::Usage(format!(
            "collective types need at least 3 periods, got {periods}"
        )));
    }
    let bits = pair_count(periods) + sum_count(periods);
    if bits >= 63 || CollectiveType::space_size(periods) > cap {
        return Err(Error::SizeLimit {
            what: "collective types",
            requested: 1u128 << bits.min(127),
            cap,
        });
    }
    if periods > 3 {
        log::warn!(
            "enumerating {} collective types for T={periods}",
            CollectiveType::space_size(periods)
        );
    }
    Ok((0..CollectiveType::space_size(periods))
        .map(|code| CollectiveType::from_code(periods, code))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_space_sizes() {
        assert_eq!(enumerate_individual_types(3, DEFAULT_TYPE_CAP).unwrap().len(), 64);
        assert_eq!(enumerate_individual_types(2, DEFAULT_TYPE_CAP).unwrap().len(), 4);
        assert_eq!(enumerate_collective_types(3, DEFAULT_TYPE_CAP).unwrap().len(), 512);
    }

    #[test]
    fn enumeration_is_ascending_and_unique() {
        let v = enumerate_collective_types(3, DEFAULT_TYPE_CAP).unwrap();
        assert!(v.windows(2).all(|w| w[0].code() < w[1].code()));
    }

    #[test]
    fn collective_needs_three_periods() {
        assert!(matches!(
            enumerate_collective_types(2, DEFAULT_TYPE_CAP),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn size_cap_is_enforced() {
        assert!(matches!(
            enumerate_collective_types(4, 1 << 20),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn rational_count_t3() {
        let n = enumerate_individual_types(3, DEFAULT_TYPE_CAP)
            .unwrap()
            .iter()
            .filter(|x| is_garp_rational(x))
            .count();
        assert_eq!(n, 25);
    }
}
