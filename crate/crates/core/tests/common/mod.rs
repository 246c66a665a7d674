//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use prefstab::cone::{build_cone, ConeMatrix, StabilityConvention};
use prefstab::rp::{CollectiveType, IndividualType};

pub fn cone() -> &'static ConeMatrix {
    static CONE: OnceLock<ConeMatrix> = OnceLock::new();
    CONE.get_or_init(|| build_cone(3, StabilityConvention::FixedClosure).unwrap())
}

// ---------------------------------------------------------------- relations

pub type Rel = Vec<Vec<bool>>;

pub fn rel_of(periods: usize, edge: impl Fn(usize, usize) -> bool) -> Rel {
    (0..periods)
        .map(|s| (0..periods).map(|t| s != t && edge(s, t)).collect())
        .collect()
}

/// Floyd–Warshall reachability, diagonal ignored.
pub fn closure(r: &Rel) -> Rel {
    let n = r.len();
    let mut c = r.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if c[i][k] && c[k][j] {
                    c[i][j] = true;
                }
            }
        }
    }
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = false;
    }
    c
}

/// Boolean matrix powers `R ∨ R² ∨ … ∨ R^(n-1)`, diagonal ignored.
pub fn closure_by_powers(r: &Rel) -> Rel {
    let n = r.len();
    let mul = |a: &Rel, b: &Rel| -> Rel {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
            .collect()
    };
    let mut acc = r.clone();
    let mut power = r.clone();
    for _ in 1..n {
        power = mul(&power, r);
        for i in 0..n {
            for j in 0..n {
                acc[i][j] |= power[i][j];
            }
        }
    }
    for (i, row) in acc.iter_mut().enumerate() {
        row[i] = false;
    }
    acc
}

/// Rational iff the revealed-preference digraph has no cycle, i.e. every
/// strongly connected component is a single budget.
pub fn garp_by_scc(r: &Rel) -> bool {
    let n = r.len();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for s in 0..n {
        for t in 0..n {
            if r[s][t] {
                g.add_edge(nodes[s], nodes[t], ());
            }
        }
    }
    tarjan_scc(&g).iter().all(|c| c.len() == 1)
}

pub fn individual_rel(xi: &IndividualType) -> Rel {
    let r = xi.relation();
    rel_of(xi.periods(), |s, t| r.get(s, t))
}

// --------------------------------------------------------------------- CARP

/// A couple pattern in plain form: pairwise relation plus revealed double
/// sums `(s, a, b)` meaning `p_s · (x_a + x_b) <= 1`.
pub struct Couple {
    pub n: usize,
    pub r: Rel,
    pub sums: Vec<(usize, usize, usize)>,
}

impl Couple {
    pub fn of(c: &CollectiveType) -> Self {
        let rel = c.relation();
        let n = c.periods();
        let mut sums = Vec::new();
        for s in 0..n {
            for a in 0..n {
                for b in a + 1..n {
                    if a != s && b != s && c.sum_revealed(s, a, b) {
                        sums.push((s, a, b));
                    }
                }
            }
        }
        Couple {
            n,
            r: rel_of(n, |s, t| rel.get(s, t)),
            sums,
        }
    }

    /// All six items for member hypotheses `h = [H^m, H^f]`.
    pub fn items_hold(&self, h: [&Rel; 2]) -> bool {
        let n = self.n;
        let c = [closure(h[0]), closure(h[1])];
        for s in 0..n {
            for t in 0..n {
                if self.r[s][t] && !h[0][s][t] && !h[1][s][t] {
                    return false;
                }
            }
        }
        for k in 0..2 {
            let other = h[1 - k];
            for s in 0..n {
                for t in 0..n {
                    if self.r[s][t] && c[k][t][s] && !other[s][t] {
                        return false;
                    }
                }
            }
            for &(s, a, b) in &self.sums {
                for (t1, t2) in [(a, b), (b, a)] {
                    if c[k][t1][s] && !other[s][t2] {
                        return false;
                    }
                }
            }
        }
        for &(t, a, b) in &self.sums {
            for (s1, s2) in [(a, b), (b, a)] {
                if c[0][s1][t] && c[1][s2][t] {
                    return false;
                }
            }
        }
        for s in 0..n {
            for t in 0..n {
                if c[0][s][t] && c[1][s][t] && self.r[t][s] {
                    return false;
                }
            }
        }
        true
    }
}

/// Every transitive off-diagonal relation on `n` budgets.
pub fn transitive_relations(n: usize) -> Vec<Rel> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).filter(move |&t| t != s).map(move |t| (s, t)))
        .collect();
    (0..1u64 << pairs.len())
        .map(|code| {
            let mut r = vec![vec![false; n]; n];
            for (i, &(s, t)) in pairs.iter().enumerate() {
                r[s][t] = code >> i & 1 == 1;
            }
            r
        })
        .filter(|r| closure(r) == *r)
        .collect()
}

/// Consistency by exhaustive search. Closing both hypotheses keeps every
/// item satisfied, so transitive pairs suffice.
pub fn carp_consistent_oracle(c: &Couple, transitive: &[Rel]) -> bool {
    transitive
        .iter()
        .any(|m| transitive.iter().any(|f| c.items_hold([m, f])))
}

// --------------------------------------------------------------------- NNLS

/// Lawson–Hanson active set for `min ||b - A x||²`, `x >= 0`.
pub fn lawson_hanson(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-12;
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let solve = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(idx.iter());
        let z = sub.svd(true, true).solve(b, 1e-12).unwrap();
        let mut full = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = z[k];
        }
        full
    };
    for _ in 0..10 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let pick = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let z = solve(&passive);
            if (0..n).all(|j| !passive[j] || z[j] > tol) {
                x = z;
                break;
            }
            let alpha = (0..n)
                .filter(|&j| passive[j] && z[j] <= tol)
                .map(|j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (z - &x) * alpha;
            for j in 0..n {
                if passive[j] && x[j] <= tol {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    x
}

/// `min_{ν >= lower} (π - Aν)ᵀ diag(ω) (π - Aν)` through the substitution
/// `ν = lower + s` and row scaling by `√ω`.
pub fn weighted_projection_objective(cols: &[Vec<bool>], pi: &[f64], lower: &[f64], omega: &[f64]) -> f64 {
    let rows = pi.len();
    let a = DMatrix::from_fn(rows, cols.len(), |i, j| if cols[j][i] { omega[i].sqrt() } else { 0.0 });
    let shifted: Vec<f64> = (0..rows)
        .map(|i| pi[i] - (0..cols.len()).filter(|&j| cols[j][i]).map(|j| lower[j]).sum::<f64>())
        .collect();
    let b = DVector::from_fn(rows, |i, _| omega[i].sqrt() * shifted[i]);
    let s = lawson_hanson(&a, &b);
    (b - a * s).norm_squared()
}

/// A small dense instance: columns as row sets, and `π` on three stacked
/// simplices.
pub struct SmallInstance {
    pub rows: usize,
    pub columns: Vec<Vec<u32>>,
    pub pi: Vec<f64>,
}

impl SmallInstance {
    pub fn random(rng: &mut impl rand::Rng) -> Self {
        let rows = rng.gen_range(3..=12);
        let cols = rng.gen_range(1..=30);
        let columns = (0..cols)
            .map(|_| {
                let mut c: Vec<u32> = (0..rows as u32).filter(|_| rng.gen_bool(0.3)).collect();
                if c.is_empty() {
                    c.push(rng.gen_range(0..rows as u32));
                }
                c
            })
            .collect();
        // three blocks of sizes b, b, rest
        let b = rows / 3;
        let bounds = [0, b, 2 * b, rows];
        let mut pi = vec![0.0; rows];
        for k in 0..3 {
            let range = bounds[k]..bounds[k + 1];
            let raw: Vec<f64> = range.clone().map(|_| rng.gen::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            for (i, v) in range.zip(raw) {
                pi[i] = v / total;
            }
        }
        SmallInstance { rows, columns, pi }
    }

    pub fn dense(&self) -> Vec<Vec<bool>> {
        self.columns
            .iter()
            .map(|c| (0..self.rows).map(|i| c.contains(&(i as u32))).collect())
            .collect()
    }

    pub fn matrix(&self) -> prefstab::solver::SparseBinary {
        prefstab::solver::SparseBinary::from_columns(
            self.rows,
            self.columns.iter().map(|c| c.iter().map(|&i| i as usize).collect::<Vec<_>>()),
        )
    }
}
