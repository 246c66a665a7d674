//! Weighted projection onto the tightened cone `{Aν : ν >= ν̲}`.
//!
//! Writing `ν = ν̲ + s`, the projection is the non-negative least squares
//! problem `min_{s >= 0} ½ sᵀHs + fᵀs` with `H = AᵀΩA` and
//! `f = -AᵀΩ(π - Aν̲)`, solved by projected coordinate sweeps
//! `s_j <- max(0, s_j - d_j (Hs + f)_j)`.
//!
//! `H` is never formed. The solver keeps the residual `e = π - Aν`, so the
//! gradient entry `(Hs + f)_j = -Σ_{i ∈ col j} ω_i e_i` costs one pass over
//! the column's nonzeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-compressed 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinary {
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
}

impl SparseBinary {
    /// Build from the row sets of each column; duplicates are merged.
    pub fn from_columns<I, C>(rows: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = usize>,
    {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        for col in columns {
            let start = row_idx.len();
            for i in col {
                assert!(i < rows, "row {i} out of range for {rows} rows");
                row_idx.push(i as u32);
            }
            row_idx[start..].sort_unstable();
            let mut w = start;
            for r in start..row_idx.len() {
                if r == start || row_idx[r] != row_idx[w - 1] {
                    row_idx[w] = row_idx[r];
                    w += 1;
                }
            }
            row_idx.truncate(w);
            col_ptr.push(row_idx.len());
        }
        SparseBinary {
            rows,
            col_ptr,
            row_idx,
        }
    }

    /// Build from a dense row-major 0/1 pattern.
    pub fn from_dense(dense: &[Vec<bool>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        Self::from_columns(
            rows,
            (0..cols).map(|j| (0..rows).filter(|&i| dense[i][j]).collect::<Vec<_>>()),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Sorted row indices of column `j`.
    pub fn column(&self, j: usize) -> &[u32] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// `Aν`.
    pub fn mul(&self, nu: &[f64]) -> Vec<f64> {
        assert_eq!(nu.len(), self.cols());
        let mut out = vec![0.0; self.rows];
        for (j, &v) in nu.iter().enumerate() {
            if v != 0.0 {
                for &i in self.column(j) {
                    out[i as usize] += v;
                }
            }
        }
        out
    }

    /// Matrix whose column `k` is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> SparseBinary {
        assert_eq!(perm.len(), self.cols());
        Self::from_columns(
            self.rows,
            perm.iter().map(|&j| self.column(j).iter().map(|&i| i as usize).collect::<Vec<_>>()),
        )
    }

    /// Number of columns with a one in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.rows];
        for &i in &self.row_idx {
            counts[i as usize] += 1;
        }
        counts
    }

    /// Entry `(j, k)` of `AᵀΩA`: the weighted count of rows shared by the
    /// two columns.
    pub fn gram_entry(&self, omega: &[f64], j: usize, k: usize) -> f64 {
        let (a, b) = (self.column(j), self.column(k));
        let (mut p, mut q, mut acc) = (0, 0, 0.0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += omega[a[p] as usize];
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// Nonzero entries of `AᵀΩA` as `(j, k, value)`, row-major.
    ///
    /// Quadratic in the number of columns per row; intended for small
    /// matrices and diagnostics.
    pub fn gram_matrix(&self, omega: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); self.rows];
        for j in 0..self.cols() {
            for &i in self.column(j) {
                by_row[i as usize].push(j);
            }
        }
        let mut out = Vec::new();
        for j in 0..self.cols() {
            let mut partners: Vec<usize> = self
                .column(j)
                .iter()
                .flat_map(|&i| by_row[i as usize].iter().copied())
                .collect();
            partners.sort_unstable();
            partners.dedup();
            out.extend(partners.into_iter().map(|k| (j, k, self.gram_entry(omega, j, k))));
        }
        out
    }
}

/// Positive definite weighting of the projection distance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum WeightMatrix {
    #[default]
    Identity,
    Diagonal(Vec<f64>),
}

impl WeightMatrix {
    /// Per-row weights for a matrix with `rows` rows.
    pub fn row_weights(&self, rows: usize) -> Result<Vec<f64>> {
        match self {
            WeightMatrix::Identity => Ok(vec![1.0; rows]),
            WeightMatrix::Diagonal(w) => {
                if w.len() != rows {
                    return Err(Error::DimensionMismatch {
                        expected: rows,
                        found: w.len(),
                    });
                }
                if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                    return Err(Error::Usage(format!("weight {v} at row {i} is not positive")));
                }
                Ok(w.clone())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightMatrix::Identity => "identity".into(),
            WeightMatrix::Diagonal(_) => "diagonal".into(),
        }
    }
}

/// Step length of the coordinate update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// `d_j = 1 / (Hι)_j`, the row-sum bound.
    Landweber,
    /// `d_j = 1 / H_jj`, exact minimization along each coordinate.
    #[default]
    Coordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on `max_j |min(s_j, (Hs + f)_j)|`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Keep the objective after every sweep.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_sweeps: 200_000,
            record_trace: false,
        }
    }
}

/// `A` together with its row weights and per-column step lengths.
#[derive(Clone, Debug)]
pub struct NnlsProblem<'a> {
    a: &'a SparseBinary,
    omega: Vec<f64>,
    step: Vec<f64>,
}

impl<'a> NnlsProblem<'a> {
    pub fn new(a: &'a SparseBinary, omega: &WeightMatrix, rule: StepRule) -> Result<Self> {
        let omega = omega.row_weights(a.rows())?;
        let counts = a.row_counts();
        let step = (0..a.cols())
            .map(|j| {
                let col = a.column(j);
                let denom: f64 = match rule {
                    StepRule::Landweber => col.iter().map(|&i| omega[i as usize] * counts[i as usize] as f64).sum(),
                    StepRule::Coordinate => col.iter().map(|&i| omega[i as usize]).sum(),
                };
                if denom > 0.0 {
                    Ok(1.0 / denom)
                } else {
                    Err(Error::Usage(format!("column {j} of the cone matrix is empty")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NnlsProblem { a, omega, step })
    }

    pub fn matrix(&self) -> &SparseBinary {
        self.a
    }

    pub fn weights(&self) -> &[f64] {
        &self.omega
    }

    /// The step vector `d`.
    pub fn steps(&self) -> &[f64] {
        &self.step
    }

    fn gradient(&self, e: &[f64], j: usize) -> f64 {
        -self
            .a
            .column(j)
            .iter()
            .map(|&i| self.omega[i as usize] * e[i as usize])
            .sum::<f64>()
    }

    fn objective(&self, e: &[f64]) -> f64 {
        e.iter().zip(&self.omega).map(|(r, w)| w * r * r).sum()
    }

    fn residual(&self, pi: &[f64], nu: &[f64]) -> Vec<f64> {
        let gamma = self.a.mul(nu);
        pi.iter().zip(&gamma).map(|(p, g)| p - g).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeProjection {
    pub slack: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `(π - γ)ᵀΩ(π - γ)`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each sweep, when requested.
    pub objective_trace: Vec<f64>,
}

fn kkt_term(s: f64, g: f64) -> f64 {
    s.min(g).abs()
}

/// Project `pi` onto `{Aν : ν >= nu_lower}`.
///
/// `warm` is an initial slack `s >= 0`. Sweeps run over columns in
/// ascending order; after the first full sweep they are restricted to
/// columns that are positive or have a negative gradient, and every
/// restricted convergence is confirmed by a full sweep.
///
/// A solve that exhausts `max_sweeps` returns `NotConverged` carrying the
/// last iterate.
pub fn project_onto_cone(
    problem: &NnlsProblem<'_>,
    pi: &[f64],
    nu_lower: &[f64],
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<ConeProjection> {
    let a = problem.a;
    let cols = a.cols();
    if pi.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: pi.len(),
        });
    }
    if nu_lower.len() != cols {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: nu_lower.len(),
        });
    }
    if nu_lower.iter().any(|v| !(*v >= 0.0)) || !(opts.tol > 0.0) {
        return Err(Error::Usage("lower bounds must be non-negative and tol positive".into()));
    }

    let mut s = match warm {
        Some(w) if w.len() == cols => w.iter().map(|v| v.max(0.0)).collect(),
        Some(w) => {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: w.len(),
            })
        }
        None => vec![0.0; cols],
    };
    let nu_of = |s: &[f64]| -> Vec<f64> { s.iter().zip(nu_lower).map(|(x, l)| x + l).collect() };
    let mut e = problem.residual(pi, &nu_of(&s));

    let mut trace = Vec::new();
    let mut active: Vec<usize> = (0..cols).collect();
    let mut full = true;
    let mut sweeps = 0;
    let mut kkt = f64::INFINITY;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        let mut sweep_kkt: f64 = 0.0;
        for &j in &active {
            let g = problem.gradient(&e, j);
            let old = s[j];
            sweep_kkt = sweep_kkt.max(kkt_term(old, g));
            let new = (old - problem.step[j] * g).max(0.0);
            if new != old {
                s[j] = new;
                let delta = new - old;
                for &i in a.column(j) {
                    e[i as usize] -= delta;
                }
            }
        }
        sweeps += 1;
        if opts.record_trace {
            trace.push(problem.objective(&e));
        }
        if !full && sweep_kkt > opts.tol {
            continue;
        }
        // Check every column against a freshly computed residual and rebuild
        // the working set.
        e = problem.residual(pi, &nu_of(&s));
        kkt = 0.0;
        active.clear();
        for j in 0..cols {
            let g = problem.gradient(&e, j);
            kkt = kkt.max(kkt_term(s[j], g));
            if s[j] > 0.0 || g < 0.0 {
                active.push(j);
            }
        }
        if kkt <= opts.tol {
            converged = true;
            break;
        }
        full = active.len() == cols;
    }

    let nu = nu_of(&s);
    let gamma = a.mul(&nu);
    let objective = problem.objective(&problem.residual(pi, &nu));
    if !converged {
        let e = problem.residual(pi, &nu);
        kkt = (0..cols)
            .map(|j| kkt_term(s[j], problem.gradient(&e, j)))
            .fold(0.0, f64::max);
    }
    let projection = ConeProjection {
        slack: s,
        nu,
        gamma,
        objective,
        kkt_residual: kkt,
        iterations: sweeps,
        converged,
        objective_trace: trace,
    };
    if converged {
        Ok(projection)
    } else {
        Err(Error::NotConverged(Box::new(projection)))
    }
}

/// `J_n = n · objective`.
pub fn j_statistic(n: usize, projection: &ConeProjection) -> f64 {
    n as f64 * projection.objective
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &SparseBinary, pi: &[f64]) -> ConeProjection {
        let p = NnlsProblem::new(a, &WeightMatrix::Identity, StepRule::Coordinate).unwrap();
        project_onto_cone(&p, pi, &vec![0.0; a.cols()], &SolverOptions::default(), None).unwrap()
    }

    #[test]
    fn point_in_cone_projects_to_itself() {
        let a = SparseBinary::from_columns(4, vec![vec![0, 2], vec![1, 3], vec![0, 3]]);
        let pi = a.mul(&[0.0, 0.0, 1.0]);
        let proj = solve(&a, &pi);
        assert!(proj.objective < 1e-18);
        for (g, p) in proj.gamma.iter().zip(&pi) {
            assert!((g - p).abs() < 1e-9);
        }
    }

    #[test]
    fn single_column_toy() {
        let a = SparseBinary::from_columns(2, vec![vec![0]]);
        let proj = solve(&a, &[0.0, 1.0]);
        assert_eq!(proj.nu, vec![0.0]);
        assert_eq!(proj.gamma, vec![0.0, 0.0]);
        assert!((proj.objective - 1.0).abs() < 1e-15);
    }

    #[test]
    fn j_scales_with_n() {
        let a = SparseBinary::from_columns(2, vec![vec![0]]);
        let proj = solve(&a, &[0.0, 1.0]);
        assert_eq!(j_statistic(1500, &proj), 1500.0);
    }

    #[test]
    fn landweber_steps_use_row_counts() {
        let a = SparseBinary::from_columns(3, vec![vec![0, 1], vec![0, 2], vec![0]]);
        let p = NnlsProblem::new(&a, &WeightMatrix::Identity, StepRule::Landweber).unwrap();
        // (Hι)_0 = 3 + 1, (Hι)_1 = 3 + 1, (Hι)_2 = 3
        assert_eq!(p.steps(), &[0.25, 0.25, 1.0 / 3.0]);
    }

    #[test]
    fn gram_counts_shared_rows() {
        let a = SparseBinary::from_columns(4, vec![vec![0, 1, 2], vec![0, 1, 3], vec![3]]);
        let w = vec![1.0; 4];
        assert_eq!(a.gram_entry(&w, 0, 1), 2.0);
        assert_eq!(a.gram_entry(&w, 0, 2), 0.0);
        let g = a.gram_matrix(&w);
        assert!(g.contains(&(1, 2, 1.0)) && !g.iter().any(|&(j, k, _)| (j, k) == (0, 2)));
    }

    #[test]
    fn exhausted_budget_reports_not_converged() {
        let a = SparseBinary::from_columns(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        let p = NnlsProblem::new(&a, &WeightMatrix::Identity, StepRule::Landweber).unwrap();
        let opts = SolverOptions {
            max_sweeps: 1,
            ..SolverOptions::default()
        };
        match project_onto_cone(&p, &[0.3, 0.9, 0.1], &[0.0; 3], &opts, None) {
            Err(Error::NotConverged(best)) => assert_eq!(best.iterations, 1),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
