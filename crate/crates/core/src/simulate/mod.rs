//! Monte Carlo power curves and worst-case size checks, drawing
//! configurations directly from the type space.

mod panel;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use panel::{
    realize_collective, realize_individual, synthetic_panel, synthetic_prices, Realizations, SyntheticHousehold,
    SyntheticPanel,
};

use crate::cone::{is_preference_stable, ConeMatrix, ConfigurationType};
use crate::error::{Error, Result};
use crate::inference::{bootstrap_test, FrequencyVector, TestConfig};
use crate::rp::{
    enumerate_collective_types, enumerate_individual_types, is_carp_consistent, is_garp_rational,
    DEFAULT_TYPE_CAP,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub samples: usize,
    /// Households per pool.
    pub n_under: usize,
    pub p_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub seed: u64,
    /// Bootstrap and solver settings; `bootstrap_reps` and `seed` are
    /// overridden per replication.
    pub test: TestConfig,
    /// Abort on the first failing replication instead of skipping it.
    pub strict: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            samples: 100,
            n_under: 500,
            p_grid: vec![0.75, 0.85, 0.9, 0.95, 0.975, 0.99, 1.0],
            alpha_grid: vec![0.01, 0.05, 0.10],
            seed: 0,
            test: TestConfig {
                bootstrap_reps: 100,
                ..TestConfig::default()
            },
            strict: false,
        }
    }
}

/// Monte Carlo standard error of a frequency `f` over `s` replications.
pub fn mc_se(f: f64, s: usize) -> f64 {
    if s == 0 {
        return f64::NAN;
    }
    (f * (1.0 - f) / s as f64).sqrt()
}

/// Which non-stable configurations the alternative draws from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlternativeSet {
    /// Consistent couple with any single types, minus the cone.
    #[default]
    ConsistentCouple,
    /// Consistent couple with rational singles only, minus the cone.
    RationalSingles,
}

impl AlternativeSet {
    pub fn label(self) -> &'static str {
        match self {
            AlternativeSet::ConsistentCouple => "consistent-couple",
            AlternativeSet::RationalSingles => "rational-singles",
        }
    }
}

impl std::str::FromStr for AlternativeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent-couple" | "couple" => Ok(AlternativeSet::ConsistentCouple),
            "rational-singles" | "rational" => Ok(AlternativeSet::RationalSingles),
            other => Err(Error::Usage(format!("unknown alternative set `{other}`"))),
        }
    }
}

impl std::fmt::Display for AlternativeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Non-stable configurations with a consistent couple, in ascending code
/// order.
///
/// With rational singles only, almost every marginal mixture of the
/// alternative still lies inside the cone at T = 3, so the test has no
/// power against it.
pub fn alternative_set(cone: &ConeMatrix, kind: AlternativeSet) -> Result<Vec<ConfigurationType>> {
    let t = cone.periods();
    let singles: Vec<_> = enumerate_individual_types(t, DEFAULT_TYPE_CAP)?
        .into_iter()
        .filter(|s| kind == AlternativeSet::ConsistentCouple || is_garp_rational(s))
        .collect();
    let couples: Vec<_> = enumerate_collective_types(t, DEFAULT_TYPE_CAP)?
        .into_par_iter()
        .filter(is_carp_consistent)
        .collect();
    let stable = cone.columns();
    Ok(couples
        .par_iter()
        .flat_map_iter(|&c| {
            let singles = &singles;
            singles
                .iter()
                .flat_map(move |&m| singles.iter().map(move |&f| ConfigurationType::new(c, m, f)))
                .filter(|theta| stable.binary_search(theta).is_err())
        })
        .collect())
}

fn tally(periods: usize, draws: &[ConfigurationType]) -> FrequencyVector {
    let couples: Vec<u64> = draws.iter().map(|d| d.couple.code()).collect();
    let females: Vec<u64> = draws.iter().map(|d| d.female.code()).collect();
    let males: Vec<u64> = draws.iter().map(|d| d.male.code()).collect();
    FrequencyVector::from_codes(periods, &couples, &females, &males)
}

/// Draw `⌊n p⌋` configurations uniformly from `theta0` and the rest from
/// `theta1`, stable draws first.
pub fn draw_configurations(
    p: f64,
    n_under: usize,
    theta0: &[ConfigurationType],
    theta1: &[ConfigurationType],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ConfigurationType>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("stable share {p} outside [0, 1]")));
    }
    let k0 = ((n_under as f64) * p + 1e-9).floor() as usize;
    let k1 = n_under - k0;
    if k0 > 0 && theta0.is_empty() {
        return Err(Error::EmptyThetaSet("stable"));
    }
    if k1 > 0 && theta1.is_empty() {
        return Err(Error::EmptyThetaSet("alternative"));
    }
    let mut draws = Vec::with_capacity(n_under);
    draws.extend((0..k0).map(|_| theta0[rng.gen_range(0..theta0.len())]));
    draws.extend((0..k1).map(|_| theta1[rng.gen_range(0..theta1.len())]));
    Ok(draws)
}

/// Type frequencies of [`draw_configurations`]; each configuration
/// contributes one couple, one man and one woman.
pub fn sample_population(
    p: f64,
    n_under: usize,
    theta0: &[ConfigurationType],
    theta1: &[ConfigurationType],
    rng: &mut ChaCha8Rng,
) -> Result<FrequencyVector> {
    let draws = draw_configurations(p, n_under, theta0, theta1, rng)?;
    let periods = theta0.first().or(theta1.first()).map_or(3, |t| t.periods());
    Ok(tally(periods, &draws))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n_under: usize,
    pub p: f64,
    pub alpha: f64,
    pub rejections: usize,
    #[serde(rename = "S")]
    pub samples: usize,
    pub mc_se: f64,
}

impl PowerRow {
    pub fn frequency(&self) -> f64 {
        self.rejections as f64 / self.samples as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
    /// Replications skipped after an error.
    pub failed: usize,
    /// Share of replications with `J_observed = 0`, per p.
    pub zero_share: Vec<(f64, f64)>,
}

fn cell_rng(seed: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng
}

/// Outcome of one simulated test: `(p_value, j_observed)`.
type Replication = Result<(f64, f64)>;

fn run_cells<F>(count: usize, strict: bool, run: F) -> Result<Vec<Option<(f64, f64)>>>
where
    F: Fn(usize) -> Replication + Sync + Send,
{
    let outcomes: Vec<Replication> = (0..count).into_par_iter().map(&run).collect();
    let mut out = Vec::with_capacity(count);
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => out.push(Some(v)),
            Err(e) if !strict => {
                log::warn!("replication {i} failed: {e}");
                out.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Rejection frequencies over `config.p_grid × config.alpha_grid`.
pub fn power_curve(config: &SimConfig, cone: &ConeMatrix, theta1: &[ConfigurationType]) -> Result<PowerTable> {
    let theta0 = cone.columns();
    let s = config.samples;
    let cells = config.p_grid.len() * s;
    let results = run_cells(cells, config.strict, |cell| {
        let p = config.p_grid[cell / s];
        let mut rng = cell_rng(config.seed, cell as u64);
        let freq = sample_population(p, config.n_under, theta0, theta1, &mut rng)?;
        let test = TestConfig {
            seed: rng.gen(),
            ..config.test.clone()
        };
        let r = bootstrap_test(cone, &freq, &test)?;
        Ok((r.p_value, r.j_observed))
    })?;

    let mut rows = Vec::new();
    let mut zero_share = Vec::new();
    for (pi, &p) in config.p_grid.iter().enumerate() {
        let done: Vec<(f64, f64)> = results[pi * s..(pi + 1) * s].iter().flatten().copied().collect();
        let zeros = done.iter().filter(|r| r.1 == 0.0).count();
        zero_share.push((p, zeros as f64 / done.len().max(1) as f64));
        for &alpha in &config.alpha_grid {
            let rejections = done.iter().filter(|r| r.0 <= alpha).count();
            let f = rejections as f64 / done.len().max(1) as f64;
            rows.push(PowerRow {
                n_under: config.n_under,
                p,
                alpha,
                rejections,
                samples: done.len(),
                mc_se: mc_se(f, done.len()),
            });
        }
    }
    Ok(PowerTable {
        rows,
        failed: results.iter().filter(|r| r.is_none()).count(),
        zero_share,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSpec {
    pub n_similar: usize,
    /// Mixing weights over the similar columns; uniform when `None`.
    pub weights: Option<Vec<f64>>,
    /// Tightening used both for the population and the test.
    pub tau: f64,
}

/// The eight configurations assembled from the components of `a` and `b`.
pub fn component_mixes(a: &ConfigurationType, b: &ConfigurationType) -> [ConfigurationType; 8] {
    let pick = |k: usize| {
        ConfigurationType::new(
            if k & 1 == 0 { a.couple } else { b.couple },
            if k & 2 == 0 { a.male } else { b.male },
            if k & 4 == 0 { a.female } else { b.female },
        )
    };
    std::array::from_fn(pick)
}

/// Two stable configurations are similar when some mix of their components
/// is rational and consistent but not stable.
pub fn are_similar(cone: &ConeMatrix, a: &ConfigurationType, b: &ConfigurationType) -> bool {
    component_mixes(a, b).iter().any(|mix| in_alternative(cone, mix))
}

/// Membership in the alternative: rational singles, consistent couple,
/// and not stable.
pub fn in_alternative(cone: &ConeMatrix, theta: &ConfigurationType) -> bool {
    is_garp_rational(&theta.male)
        && is_garp_rational(&theta.female)
        && is_carp_consistent(&theta.couple)
        && !is_preference_stable(theta, cone.convention())
}

const SIMILAR_ATTEMPTS: usize = 20_000;

/// Indices of `n0` mutually similar cone columns.
///
/// Random greedy scans come first; if they fail, a deterministic scan in
/// column order extends every starting column greedily.
pub fn find_similar(cone: &ConeMatrix, n0: usize, seed: u64) -> Result<Vec<usize>> {
    if n0 < 2 {
        return Err(Error::Usage(format!("need at least 2 similar matches, got {n0}")));
    }
    let cols = cone.columns();
    if cols.len() < n0 {
        return Err(Error::NoSimilarPairFound {
            found: cols.len(),
            wanted: n0,
        });
    }
    let fits = |chosen: &[usize], j: usize| {
        !chosen.contains(&j) && chosen.iter().all(|&i| are_similar(cone, &cols[i], &cols[j]))
    };
    let mut rng = cell_rng(seed, u64::MAX);
    for _ in 0..SIMILAR_ATTEMPTS / n0 {
        let mut chosen = vec![rng.gen_range(0..cols.len())];
        for _ in 0..4 * n0 * n0 {
            if chosen.len() == n0 {
                break;
            }
            let j = rng.gen_range(0..cols.len());
            if fits(&chosen, j) {
                chosen.push(j);
            }
        }
        if chosen.len() == n0 {
            return Ok(chosen);
        }
    }
    let mut best = 1;
    for start in 0..cols.len() {
        let mut chosen = vec![start];
        for j in 0..cols.len() {
            if chosen.len() == n0 {
                return Ok(chosen);
            }
            if fits(&chosen, j) {
                chosen.push(j);
            }
        }
        if chosen.len() == n0 {
            return Ok(chosen);
        }
        best = best.max(chosen.len());
    }
    Err(Error::NoSimilarPairFound {
        found: best,
        wanted: n0,
    })
}

/// Population weights `ν0 = τι + (1 - |Θ0|τ) w` with `w` on `similar`.
pub fn worst_case_nu(cone: &ConeMatrix, similar: &[usize], weights: Option<&[f64]>, tau: f64) -> Result<Vec<f64>> {
    let cols = cone.cols();
    let free = 1.0 - cols as f64 * tau;
    if !(free > 0.0) || tau < 0.0 {
        return Err(Error::Usage(format!(
            "tau {tau} leaves no mass for the similar matches ({cols} columns)"
        )));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() == similar.len() && w.iter().all(|v| *v >= 0.0) => {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Usage("mixing weights sum to zero".into()));
            }
            w.iter().map(|v| v / total).collect()
        }
        Some(w) => {
            return Err(Error::DimensionMismatch {
                expected: similar.len(),
                found: w.len(),
            })
        }
        None => vec![1.0 / similar.len() as f64; similar.len()],
    };
    let mut nu = vec![tau; cols];
    for (&j, wj) in similar.iter().zip(&w) {
        nu[j] += free * wj;
    }
    Ok(nu)
}

/// Draw each pool independently: `n_under` columns from `nu` per pool, of
/// which the pool keeps its own component.
pub fn sample_from_nu(cone: &ConeMatrix, nu: &[f64], n_under: usize, rng: &mut ChaCha8Rng) -> FrequencyVector {
    let mut cumulative = Vec::with_capacity(nu.len());
    let mut acc = 0.0;
    for v in nu {
        acc += v;
        cumulative.push(acc);
    }
    let cols = cone.columns();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<ConfigurationType> {
        (0..n_under)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                cols[cumulative.partition_point(|&c| c <= u).min(cols.len() - 1)]
            })
            .collect()
    };
    let couples: Vec<u64> = draw(rng).iter().map(|d| d.couple.code()).collect();
    let females: Vec<u64> = draw(rng).iter().map(|d| d.female.code()).collect();
    let males: Vec<u64> = draw(rng).iter().map(|d| d.male.code()).collect();
    FrequencyVector::from_codes(cone.periods(), &couples, &females, &males)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub n0: usize,
    pub alpha: f64,
    pub false_positives: usize,
    #[serde(rename = "S")]
    pub samples: usize,
}

impl SizeRow {
    pub fn frequency(&self) -> f64 {
        self.false_positives as f64 / self.samples as f64
    }

    pub fn mc_se(&self) -> f64 {
        mc_se(self.alpha, self.samples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeTable {
    pub rows: Vec<SizeRow>,
    pub similar: Vec<usize>,
    pub failed: usize,
}

/// Type-I error frequencies with the population on the cusp of the
/// tightened cone.
pub fn worst_case_size(spec: &WorstCaseSpec, config: &SimConfig, cone: &ConeMatrix) -> Result<SizeTable> {
    let similar = find_similar(cone, spec.n_similar, config.seed)?;
    let nu = worst_case_nu(cone, &similar, spec.weights.as_deref(), spec.tau)?;
    let results = run_cells(config.samples, config.strict, |cell| {
        let mut rng = cell_rng(config.seed, cell as u64);
        let freq = sample_from_nu(cone, &nu, config.n_under, &mut rng);
        let test = TestConfig {
            seed: rng.gen(),
            tau_override: Some(spec.tau),
            ..config.test.clone()
        };
        let r = bootstrap_test(cone, &freq, &test)?;
        Ok((r.p_value, r.j_observed))
    })?;
    let done: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    let rows = config
        .alpha_grid
        .iter()
        .map(|&alpha| SizeRow {
            n0: spec.n_similar,
            alpha,
            false_positives: done.iter().filter(|r| r.0 <= alpha).count(),
            samples: done.len(),
        })
        .collect();
    Ok(SizeTable {
        rows,
        similar,
        failed: results.len() - done.len(),
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    })?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{build_cone, StabilityConvention};

    #[test]
    fn mc_se_formula() {
        assert!((mc_se(0.05, 500) - (0.05f64 * 0.95 / 500.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn boundary_shares() {
        let cone = build_cone(3, StabilityConvention::FixedClosure).unwrap();
        let theta1 = alternative_set(&cone, AlternativeSet::RationalSingles).unwrap();
        let mut rng = cell_rng(3, 0);
        let all0 = sample_population(1.0, 50, cone.columns(), &theta1, &mut rng).unwrap();
        assert_eq!((all0.n_c(), all0.n_m(), all0.n_f()), (50, 50, 50));
        assert!(sample_population(0.5, 10, cone.columns(), &[], &mut rng).is_err());
        assert!(sample_population(1.0, 10, cone.columns(), &[], &mut rng).is_ok());
        assert!(sample_population(0.0, 10, &[], &theta1, &mut rng).is_ok());
    }
}
