//! Necessary conditions of the collective axiom, stated over two hypothesized
//! relations `H^m`, `H^f` and their transitive closures.
//!
//! Items, with `R` the couple's pairwise relation and `R(a + b)` a recorded
//! double-sum revelation:
//!
//! 1. `s R t` implies `s H^m t` or `s H^f t`.
//! 2. `𝓗^κ` is the transitive closure of `H^κ`.
//! 3. `s R t` and `t 𝓗^κ s` imply `s H^κ' t`.
//! 4. `s R (t1 + t2)` and `t1 𝓗^κ s` imply `s H^κ' t2`.
//! 5. `s1 𝓗^m t` and `s2 𝓗^f t` rule out `t R (s1 + s2)`.
//! 6. `s 𝓗^m t` and `s 𝓗^f t` rule out `t R s`.
//!
//! Items 1, 3 and 4 only ever demand more edges and items 5 and 6 only ever
//! forbid edges, and every premise is monotone in `H`. So a depth-first
//! search that adds forced edges, branches on item 1 and prunes on items 5/6
//! is complete.

use super::relation::{pair_count, RelationBits};
use super::types::CollectiveType;

/// The hypothesized member relations `(H^m, H^f)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HypothesizedRelations {
    pub male: RelationBits,
    pub female: RelationBits,
}

impl HypothesizedRelations {
    pub fn new(male: RelationBits, female: RelationBits) -> Self {
        assert_eq!(male.periods(), female.periods());
        HypothesizedRelations { male, female }
    }

    pub fn empty(periods: usize) -> Self {
        Self::new(RelationBits::empty(periods), RelationBits::empty(periods))
    }

    pub fn periods(&self) -> usize {
        self.male.periods()
    }

    pub fn closures(&self) -> [RelationBits; 2] {
        [
            self.male.transitive_closure(),
            self.female.transitive_closure(),
        ]
    }

    fn member(&self, k: usize) -> &RelationBits {
        if k == 0 {
            &self.male
        } else {
            &self.female
        }
    }

    fn member_mut(&mut self, k: usize) -> &mut RelationBits {
        if k == 0 {
            &mut self.male
        } else {
            &mut self.female
        }
    }
}

/// Which item of the collective axiom failed, with the budgets involved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarpViolation {
    /// Item 1: `s R t` is covered by neither member.
    Uncovered { s: usize, t: usize },
    /// Item 3 or 4: member `member` (0 = m, 1 = f) must hold `s H t`.
    Forced {
        item: u8,
        member: usize,
        s: usize,
        t: usize,
    },
    /// Item 5: both members rank the summands above `t` yet `t R (s1 + s2)`.
    SumReversal { t: usize, s1: usize, s2: usize },
    /// Item 6: both members rank `s` above `t` yet `t R s`.
    JointReversal { s: usize, t: usize },
}

impl CarpViolation {
    pub fn item(&self) -> u8 {
        match self {
            CarpViolation::Uncovered { .. } => 1,
            CarpViolation::Forced { item, .. } => *item,
            CarpViolation::SumReversal { .. } => 5,
            CarpViolation::JointReversal { .. } => 6,
        }
    }
}

/// Items 5 and 6: the violations that adding edges can never repair.
fn rejection(xc: &CollectiveType, closures: &[RelationBits; 2]) -> Option<CarpViolation> {
    let r = xc.relation();
    let n = xc.periods();
    let [cm, cf] = closures;
    for (t, a, b) in xc.sum_facts() {
        for (s1, s2) in [(a, b), (b, a)] {
            if cm.edge(s1, t) && cf.edge(s2, t) {
                return Some(CarpViolation::SumReversal { t, s1, s2 });
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if cm.edge(s, t) && cf.edge(s, t) && r.edge(t, s) {
                return Some(CarpViolation::JointReversal { s, t });
            }
        }
    }
    None
}

/// Items 3 and 4: an edge some member is required to hold but does not.
fn forced(
    xc: &CollectiveType,
    h: &HypothesizedRelations,
    closures: &[RelationBits; 2],
) -> Option<CarpViolation> {
    let r = xc.relation();
    let n = xc.periods();
    for k in 0..2 {
        let other = h.member(1 - k);
        for s in 0..n {
            for t in 0..n {
                if r.edge(s, t) && closures[k].edge(t, s) && !other.edge(s, t) {
                    return Some(CarpViolation::Forced {
                        item: 3,
                        member: 1 - k,
                        s,
                        t,
                    });
                }
            }
        }
        for (s, a, b) in xc.sum_facts() {
            for (t1, t2) in [(a, b), (b, a)] {
                if closures[k].edge(t1, s) && !other.edge(s, t2) {
                    return Some(CarpViolation::Forced {
                        item: 4,
                        member: 1 - k,
                        s,
                        t: t2,
                    });
                }
            }
        }
    }
    None
}

fn uncovered(xc: &CollectiveType, h: &HypothesizedRelations) -> Option<(usize, usize)> {
    xc.relation()
        .edges()
        .find(|&(s, t)| !h.male.edge(s, t) && !h.female.edge(s, t))
}

/// First violated item for the given hypotheses, checking items in order
/// 1, 3, 4, 5, 6; `None` when all six hold.
pub fn first_violation(xc: &CollectiveType, h: &HypothesizedRelations) -> Option<CarpViolation> {
    debug_assert_eq!(xc.periods(), h.periods());
    if let Some((s, t)) = uncovered(xc, h) {
        return Some(CarpViolation::Uncovered { s, t });
    }
    let closures = h.closures();
    forced(xc, h, &closures).or_else(|| rejection(xc, &closures))
}

/// Every violated item for the given hypotheses, in item order.
pub fn all_violations(xc: &CollectiveType, h: &HypothesizedRelations) -> Vec<CarpViolation> {
    let r = xc.relation();
    let n = xc.periods();
    let [cm, cf] = h.closures();
    let closures = [cm, cf];
    let mut out: Vec<CarpViolation> = r
        .edges()
        .filter(|&(s, t)| !h.male.edge(s, t) && !h.female.edge(s, t))
        .map(|(s, t)| CarpViolation::Uncovered { s, t })
        .collect();
    for k in 0..2 {
        let other = h.member(1 - k);
        for (s, t) in r.edges() {
            if closures[k].edge(t, s) && !other.edge(s, t) {
                out.push(CarpViolation::Forced { item: 3, member: 1 - k, s, t });
            }
        }
    }
    for k in 0..2 {
        let other = h.member(1 - k);
        for (s, a, b) in xc.sum_facts() {
            for (t1, t2) in [(a, b), (b, a)] {
                if closures[k].edge(t1, s) && !other.edge(s, t2) {
                    out.push(CarpViolation::Forced { item: 4, member: 1 - k, s, t: t2 });
                }
            }
        }
    }
    for (t, a, b) in xc.sum_facts() {
        for (s1, s2) in [(a, b), (b, a)] {
            if cm.edge(s1, t) && cf.edge(s2, t) {
                out.push(CarpViolation::SumReversal { t, s1, s2 });
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if cm.edge(s, t) && cf.edge(s, t) && r.edge(t, s) {
                out.push(CarpViolation::JointReversal { s, t });
            }
        }
    }
    out
}

/// Search for hypotheses containing `seed` that satisfy every item.
///
/// Returns the first solution in a deterministic depth-first order, or
/// `None` when no superset of `seed` works.
pub fn extend_hypotheses(
    xc: &CollectiveType,
    seed: HypothesizedRelations,
) -> Option<HypothesizedRelations> {
    let mut h = seed;
    loop {
        let closures = h.closures();
        if rejection(xc, &closures).is_some() {
            return None;
        }
        if let Some(CarpViolation::Forced { member, s, t, .. }) = forced(xc, &h, &closures) {
            h.member_mut(member).set(s, t, true);
            continue;
        }
        let Some((s, t)) = uncovered(xc, &h) else {
            return Some(h);
        };
        for k in 0..2 {
            let mut branch = h;
            branch.member_mut(k).set(s, t, true);
            if let Some(found) = extend_hypotheses(xc, branch) {
                return Some(found);
            }
        }
        return None;
    }
}

/// `true` iff some pair of hypothesized relations satisfies all six items.
pub fn is_carp_consistent(xc: &CollectiveType) -> bool {
    extend_hypotheses(xc, HypothesizedRelations::empty(xc.periods())).is_some()
}

/// Exhaustive reference check over all `2^(2T(T-1))` hypothesis pairs.
pub fn is_carp_consistent_exhaustive(xc: &CollectiveType) -> bool {
    let n = xc.periods();
    let bits = pair_count(n);
    assert!(bits <= 12, "exhaustive CARP search is limited to T <= 4");
    (0..1u64 << bits).any(|m| {
        let male = RelationBits::from_code(n, m);
        (0..1u64 << bits).any(|f| {
            let h = HypothesizedRelations::new(male, RelationBits::from_code(n, f));
            first_violation(xc, &h).is_none()
        })
    })
}
