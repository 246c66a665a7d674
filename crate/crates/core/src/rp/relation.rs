//! Direct revealed-preference relations over a handful of budgets, stored as
//! one bit row per budget.

use std::fmt;

/// Largest number of budgets a [`RelationBits`] can hold.
pub const MAX_PERIODS: usize = 8;

/// Number of off-diagonal ordered pairs for `periods` budgets.
pub const fn pair_count(periods: usize) -> usize {
    periods * periods.saturating_sub(1)
}

/// Position of the ordered pair `(s, t)`, `s != t`, in row-major order with
/// the diagonal skipped: `(0,1), (0,2), .., (1,0), (1,2), ..`.
#[inline]
pub const fn pair_index(periods: usize, s: usize, t: usize) -> usize {
    s * (periods - 1) + if t < s { t } else { t - 1 }
}

/// A T×T boolean relation where `get(s, t)` means budget `s`'s choice is
/// weakly directly revealed preferred to budget `t`'s choice.
///
/// The diagonal always reads as `true`; only the `T(T-1)` off-diagonal bits
/// are stored and compared.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationBits {
    periods: u8,
    rows: [u8; MAX_PERIODS],
}

impl RelationBits {
    pub fn empty(periods: usize) -> Self {
        assert!(
            (1..=MAX_PERIODS).contains(&periods),
            "relation supports 1..={MAX_PERIODS} periods, got {periods}"
        );
        RelationBits {
            periods: periods as u8,
            rows: [0; MAX_PERIODS],
        }
    }

    pub fn from_edges(periods: usize, edges: &[(usize, usize)]) -> Self {
        let mut r = Self::empty(periods);
        for &(s, t) in edges {
            r.set(s, t, true);
        }
        r
    }

    /// Decode an LSB-first code over the row-major off-diagonal pairs.
    pub fn from_code(periods: usize, code: u64) -> Self {
        let mut r = Self::empty(periods);
        for s in 0..periods {
            for t in 0..periods {
                if s != t && code >> pair_index(periods, s, t) & 1 == 1 {
                    r.rows[s] |= 1 << t;
                }
            }
        }
        r
    }

    pub fn code(&self) -> u64 {
        let n = self.periods();
        let mut code = 0u64;
        for s in 0..n {
            for t in 0..n {
                if s != t && self.rows[s] >> t & 1 == 1 {
                    code |= 1 << pair_index(n, s, t);
                }
            }
        }
        code
    }

    #[inline]
    pub fn periods(&self) -> usize {
        self.periods as usize
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> bool {
        s == t || self.rows[s] >> t & 1 == 1
    }

    /// Off-diagonal lookup; `false` on the diagonal.
    #[inline]
    pub fn edge(&self, s: usize, t: usize) -> bool {
        s != t && self.rows[s] >> t & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, value: bool) {
        if s == t {
            return;
        }
        if value {
            self.rows[s] |= 1 << t;
        } else {
            self.rows[s] &= !(1 << t);
        }
    }

    /// Row `s` as a bitset of successors, diagonal excluded.
    #[inline]
    pub fn row(&self, s: usize) -> u8 {
        self.rows[s]
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.periods();
        (0..n).flat_map(move |s| (0..n).filter(move |&t| self.edge(s, t)).map(move |t| (s, t)))
    }

    /// `true` when every off-diagonal edge of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &RelationBits) -> bool {
        self.rows
            .iter()
            .zip(other.rows.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &RelationBits) -> RelationBits {
        let mut out = *self;
        for (a, b) in out.rows.iter_mut().zip(other.rows.iter()) {
            *a |= b;
        }
        out
    }

    /// Smallest transitive relation containing `self` (Warshall on bit rows).
    ///
    /// Cycles through a budget are not recorded on the diagonal; use
    /// [`RelationBits::is_acyclic`] for that.
    pub fn transitive_closure(&self) -> RelationBits {
        let n = self.periods();
        let mut rows = self.rows;
        for k in 0..n {
            let via = rows[k];
            for row in rows.iter_mut().take(n) {
                if *row >> k & 1 == 1 {
                    *row |= via;
                }
            }
        }
        for (s, row) in rows.iter_mut().enumerate().take(n) {
            *row &= !(1 << s);
        }
        RelationBits {
            periods: self.periods,
            rows,
        }
    }

    /// `true` when the off-diagonal digraph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        let c = self.transitive_closure();
        // A cycle exists iff some s reaches t and t reaches s.
        let n = self.periods();
        (0..n).all(|s| (0..n).all(|t| !(c.edge(s, t) && c.edge(t, s))))
    }
}

impl fmt::Debug for RelationBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self.edges().collect();
        write!(f, "RelationBits(T={}, {:?})", self.periods, edges)
    }
}
