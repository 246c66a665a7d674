use serde::{Deserialize, Serialize};

use super::relation::{pair_count, RelationBits, MAX_PERIODS};
use crate::data::ChoicePath;

/// Default boundary tolerance for budget comparisons.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Number of double-sum comparisons `p_s · (x_a + x_b)`: one per budget `s`
/// and unordered pair `{a, b}` of the other budgets.
pub const fn sum_count(periods: usize) -> usize {
    if periods < 3 {
        0
    } else {
        periods * (periods - 1) * (periods - 2) / 2
    }
}

/// The double-sum comparisons in canonical order: anchor `s` ascending, then
/// the pair `(a, b)`, `a < b`, both different from `s`, lexicographically.
pub fn sum_triples(periods: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(sum_count(periods));
    for s in 0..periods {
        for a in 0..periods {
            for b in a + 1..periods {
                if a != s && b != s {
                    out.push((s, a, b));
                }
            }
        }
    }
    out
}

/// Position of the double-sum comparison `(s, {a, b})` in canonical order.
pub fn sum_index(periods: usize, s: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(a != s && b != s && a != b);
    let others = periods - 1;
    let per_anchor = others * (others - 1) / 2;
    // rank of (a, b) among pairs drawn from the budgets other than s
    let ra = if a < s { a } else { a - 1 };
    let rb = if b < s { b } else { b - 1 };
    let rank = ra * (2 * others - ra - 1) / 2 + (rb - ra - 1);
    s * per_anchor + rank
}

/// A revealed-preference type for one person: the off-diagonal pattern of
/// `p_s · x_t <= 1` comparisons, as an LSB-first code over row-major pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndividualType {
    periods: u8,
    code: u64,
}

impl IndividualType {
    pub fn new(periods: usize, code: u64) -> Self {
        assert!((2..=MAX_PERIODS).contains(&periods));
        assert!(
            pair_count(periods) == 64 || code >> pair_count(periods) == 0,
            "code {code} out of range for T={periods}"
        );
        IndividualType {
            periods: periods as u8,
            code,
        }
    }

    pub fn from_relation(r: &RelationBits) -> Self {
        Self::new(r.periods(), r.code())
    }

    pub fn periods(&self) -> usize {
        self.periods as usize
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn relation(&self) -> RelationBits {
        RelationBits::from_code(self.periods(), self.code)
    }

    /// Number of distinct individual types for `periods` budgets.
    pub fn space_size(periods: usize) -> u64 {
        1u64 << pair_count(periods)
    }
}

/// A collective revealed-preference type for a couple: the pairwise pattern
/// on aggregate choices plus the double-sum pattern.
///
/// Ordered by combined code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollectiveType {
    periods: u8,
    pair_code: u64,
    sum_code: u64,
}

impl CollectiveType {
    pub fn new(periods: usize, pair_code: u64, sum_code: u64) -> Self {
        assert!((3..=MAX_PERIODS).contains(&periods));
        assert!(pair_code >> pair_count(periods) == 0);
        assert!(sum_count(periods) >= 64 || sum_code >> sum_count(periods) == 0);
        CollectiveType {
            periods: periods as u8,
            pair_code,
            sum_code,
        }
    }

    /// Split a combined code `pair_code | sum_code << T(T-1)`.
    pub fn from_code(periods: usize, code: u64) -> Self {
        let shift = pair_count(periods);
        Self::new(periods, code & ((1 << shift) - 1), code >> shift)
    }

    pub fn periods(&self) -> usize {
        self.periods as usize
    }

    pub fn pair_code(&self) -> u64 {
        self.pair_code
    }

    pub fn sum_code(&self) -> u64 {
        self.sum_code
    }

    /// Combined code, pairwise bits low and double-sum bits high.
    pub fn code(&self) -> u64 {
        self.pair_code | self.sum_code << pair_count(self.periods())
    }

    pub fn relation(&self) -> RelationBits {
        RelationBits::from_code(self.periods(), self.pair_code)
    }

    /// `true` when `p_s · (x_a + x_b) <= 1` was recorded.
    pub fn sum_revealed(&self, s: usize, a: usize, b: usize) -> bool {
        self.sum_code >> sum_index(self.periods(), s, a, b) & 1 == 1
    }

    /// The recorded double-sum revelations `(s, a, b)`, `a < b`.
    pub fn sum_facts(&self) -> Vec<(usize, usize, usize)> {
        sum_triples(self.periods())
            .into_iter()
            .enumerate()
            .filter(|(i, _)| self.sum_code >> i & 1 == 1)
            .map(|(_, f)| f)
            .collect()
    }

    pub fn space_size(periods: usize) -> u64 {
        1u64 << (pair_count(periods) + sum_count(periods))
    }
}

impl Ord for CollectiveType {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.periods, self.sum_code, self.pair_code).cmp(&(other.periods, other.sum_code, other.pair_code))
    }
}

impl PartialOrd for CollectiveType {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pairwise pattern `bit(s, t) = p_s · x_t <= 1 + epsilon` on a normalized path.
pub fn classify_individual(path: &ChoicePath, epsilon: f64) -> IndividualType {
    IndividualType::from_relation(&direct_relation(path, epsilon))
}

pub fn direct_relation(path: &ChoicePath, epsilon: f64) -> RelationBits {
    let obs = &path.observations;
    let n = obs.len();
    let mut r = RelationBits::empty(n);
    for s in 0..n {
        for t in 0..n {
            if s != t && dot(&obs[s].prices, &obs[t].quantities) <= 1.0 + epsilon {
                r.set(s, t, true);
            }
        }
    }
    r
}

/// Pairwise and double-sum pattern of a couple's aggregate choices.
///
/// Records whatever sign pattern is observed; the two fields are not forced
/// to agree with each other.
pub fn classify_collective(path: &ChoicePath, epsilon: f64) -> CollectiveType {
    let obs = &path.observations;
    let n = obs.len();
    let pair_code = direct_relation(path, epsilon).code();
    let mut sum_code = 0u64;
    for (i, (s, a, b)) in sum_triples(n).into_iter().enumerate() {
        let v = dot(&obs[s].prices, &obs[a].quantities) + dot(&obs[s].prices, &obs[b].quantities);
        if v <= 1.0 + epsilon {
            sum_code |= 1 << i;
        }
    }
    CollectiveType::new(n, pair_code, sum_code)
}

/// Whether some non-negative data can show this pattern: a revealed double
/// sum `p_s · (x_a + x_b) <= 1` needs both `p_s · x_a <= 1` and
/// `p_s · x_b <= 1`.
pub fn is_data_feasible(c: &CollectiveType) -> bool {
    let r = c.relation();
    c.sum_facts().into_iter().all(|(s, a, b)| r.get(s, a) && r.get(s, b))
}

/// `true` iff the revealed-preference digraph of `xi` is acyclic, i.e. no
/// `s` is indirectly revealed preferred to `t` while `t` is directly revealed
/// preferred to `s`.
pub fn is_garp_rational(xi: &IndividualType) -> bool {
    let r = xi.relation();
    let closure = r.transitive_closure();
    let n = r.periods();
    !(0..n).any(|s| (0..n).any(|t| s != t && closure.edge(s, t) && r.edge(t, s)))
}
