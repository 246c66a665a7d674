//! Type-frequency estimation, the tightened cone test and its centred
//! within-pool bootstrap, demographic conditioning and the expenditure
//! control function.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::ConeMatrix;
use crate::data::{AgeClass, ChoicePath, HouseholdKind, PanelDataset, PoolCounts};
use crate::error::{Error, Result};
use crate::rp::{
    classify_collective, classify_individual, is_carp_consistent, is_garp_rational,
    CollectiveType, IndividualType,
};
use crate::solver::{
    j_statistic, project_onto_cone, ConeProjection, NnlsProblem, SolverOptions, StepRule,
    WeightMatrix,
};

/// Block positions in the stacked layout.
pub const COUPLE: usize = 0;
pub const FEMALE: usize = 1;
pub const MALE: usize = 2;

fn block_of(kind: HouseholdKind) -> usize {
    match kind {
        HouseholdKind::Couple => COUPLE,
        HouseholdKind::SingleFemale => FEMALE,
        HouseholdKind::SingleMale => MALE,
    }
}

/// Stacked type frequencies `[couple, female, male]` with the integer
/// counts they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    pub periods: usize,
    pub block_sizes: [usize; 3],
    /// Observations per type, stacked.
    pub counts: Vec<u32>,
    pub values: Vec<f64>,
    /// Households classified per pool, before any rationality filter.
    pub households: PoolCounts,
    /// Households per pool whose own type is rational.
    pub rational: PoolCounts,
}

impl FrequencyVector {
    pub fn block_sizes_for(periods: usize) -> [usize; 3] {
        let nc = CollectiveType::space_size(periods) as usize;
        let ni = IndividualType::space_size(periods) as usize;
        [nc, ni, ni]
    }

    /// Tally type codes per pool.
    pub fn from_codes(periods: usize, couples: &[u64], females: &[u64], males: &[u64]) -> Self {
        let block_sizes = Self::block_sizes_for(periods);
        let rows: usize = block_sizes.iter().sum();
        let mut counts = vec![0u32; rows];
        let mut offset = 0;
        for (k, codes) in [couples, females, males].into_iter().enumerate() {
            for &c in codes {
                assert!((c as usize) < block_sizes[k], "type code {c} out of range");
                counts[offset + c as usize] += 1;
            }
            offset += block_sizes[k];
        }
        let rational = PoolCounts {
            couples: couples
                .iter()
                .filter(|&&c| is_carp_consistent(&CollectiveType::from_code(periods, c)))
                .count(),
            males: males
                .iter()
                .filter(|&&c| is_garp_rational(&IndividualType::new(periods, c)))
                .count(),
            females: females
                .iter()
                .filter(|&&c| is_garp_rational(&IndividualType::new(periods, c)))
                .count(),
        };
        let households = PoolCounts {
            couples: couples.len(),
            males: males.len(),
            females: females.len(),
        };
        Self::from_counts(periods, counts, households, rational)
    }

    fn from_counts(periods: usize, counts: Vec<u32>, households: PoolCounts, rational: PoolCounts) -> Self {
        let block_sizes = Self::block_sizes_for(periods);
        let mut values = vec![0.0; counts.len()];
        let mut offset = 0;
        for size in block_sizes {
            let n: u32 = counts[offset..offset + size].iter().sum();
            if n > 0 {
                for i in offset..offset + size {
                    values[i] = counts[i] as f64 / n as f64;
                }
            }
            offset += size;
        }
        FrequencyVector {
            periods,
            block_sizes,
            counts,
            values,
            households,
            rational,
        }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.block_sizes[..k].iter().sum();
        start..start + self.block_sizes[k]
    }

    /// Observations in block `k`.
    pub fn block_n(&self, k: usize) -> usize {
        self.counts[self.block_range(k)].iter().map(|&c| c as usize).sum()
    }

    pub fn n_c(&self) -> usize {
        self.block_n(COUPLE)
    }

    pub fn n_f(&self) -> usize {
        self.block_n(FEMALE)
    }

    pub fn n_m(&self) -> usize {
        self.block_n(MALE)
    }

    pub fn n_total(&self) -> usize {
        self.n_c() + self.n_f() + self.n_m()
    }

    pub fn n_min(&self) -> usize {
        self.n_c().min(self.n_f()).min(self.n_m())
    }

    fn check_pools(&self) -> Result<()> {
        for (k, kind) in [
            (COUPLE, HouseholdKind::Couple),
            (FEMALE, HouseholdKind::SingleFemale),
            (MALE, HouseholdKind::SingleMale),
        ] {
            if self.block_n(k) == 0 {
                return Err(Error::EmptyPool(kind));
            }
        }
        Ok(())
    }
}

/// One household's type and whether it passes its own rationality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseholdType {
    pub household_id: String,
    pub kind: HouseholdKind,
    pub code: u64,
    pub rational: bool,
}

pub fn classify_household(path: &ChoicePath, epsilon: f64) -> HouseholdType {
    let (code, rational) = match path.kind {
        HouseholdKind::Couple => {
            let c = classify_collective(path, epsilon);
            (c.code(), is_carp_consistent(&c))
        }
        _ => {
            let x = classify_individual(path, epsilon);
            (x.code(), is_garp_rational(&x))
        }
    };
    HouseholdType {
        household_id: path.household_id.clone(),
        kind: path.kind,
        code,
        rational,
    }
}

pub fn classify_panel(dataset: &PanelDataset, epsilon: f64) -> Vec<HouseholdType> {
    dataset
        .households
        .iter()
        .map(|h| classify_household(h, epsilon))
        .collect()
}

/// Classify every household and tally per-pool type frequencies.
///
/// With `include_irrational = false` households failing their own
/// rationality check are dropped first; both counts are recorded.
pub fn estimate_frequencies(dataset: &PanelDataset, epsilon: f64, config: &TestConfig) -> Result<FrequencyVector> {
    if dataset.periods < 3 {
        return Err(Error::Usage(format!(
            "testing needs at least 3 periods, got {}",
            dataset.periods
        )));
    }
    let periods = dataset.periods;
    let block_sizes = FrequencyVector::block_sizes_for(periods);
    let offsets = [0, block_sizes[0], block_sizes[0] + block_sizes[1]];
    let mut counts = vec![0u32; block_sizes.iter().sum()];
    let mut households = PoolCounts::default();
    let mut rational = PoolCounts::default();
    for t in classify_panel(dataset, epsilon) {
        let slot = match t.kind {
            HouseholdKind::Couple => (&mut households.couples, &mut rational.couples),
            HouseholdKind::SingleMale => (&mut households.males, &mut rational.males),
            HouseholdKind::SingleFemale => (&mut households.females, &mut rational.females),
        };
        *slot.0 += 1;
        if t.rational {
            *slot.1 += 1;
        }
        if t.rational || config.include_irrational {
            counts[offsets[block_of(t.kind)] + t.code as usize] += 1;
        }
    }
    let freq = FrequencyVector::from_counts(periods, counts, households, rational);
    freq.check_pools()?;
    Ok(freq)
}

/// `τ = cols⁻¹ · sqrt(ln n_min / n_min)`.
pub fn tightening(cone_cols: usize, n_min: usize) -> f64 {
    assert!(cone_cols >= 1 && n_min >= 2);
    let n = n_min as f64;
    (n.ln() / n).sqrt() / cone_cols as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub bootstrap_reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tau_override: Option<f64>,
    pub omega: WeightMatrix,
    pub include_irrational: bool,
    pub step: StepRule,
    pub solver: SolverOptions,
    /// Use the last iterate of a non-converged solve instead of failing.
    pub allow_nonconverged: bool,
    /// Objectives at or below this value count as exactly zero.
    pub zero_objective: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            bootstrap_reps: 500,
            alpha: 0.05,
            seed: 0,
            tau_override: None,
            omega: WeightMatrix::Identity,
            include_irrational: true,
            step: StepRule::Coordinate,
            solver: SolverOptions::default(),
            allow_nonconverged: false,
            zero_objective: 1e-10,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_reps == 0 {
            return Err(Error::Usage("bootstrap repetitions must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Usage(format!("alpha {} outside (0, 1/2)", self.alpha)));
        }
        if let Some(t) = self.tau_override {
            if !(t >= 0.0) {
                return Err(Error::Usage(format!("tau {t} is negative")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub j_observed: f64,
    pub tau_n: f64,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub bootstrap_reps: usize,
    pub alpha: f64,
    pub reject: bool,
    pub n_c: usize,
    pub n_m: usize,
    pub n_f: usize,
    pub households: PoolCounts,
    pub rational_counts: PoolCounts,
    pub omega: String,
    pub convention: String,
    pub seed: u64,
    pub converged_fraction: f64,
    pub bootstrap_stats: Vec<f64>,
    pub observed_iterations: usize,
    pub observed_kkt: f64,
}

/// Resampling table for one pool: cumulative counts over its types.
struct PoolDraw {
    rows: Vec<usize>,
    cumulative: Vec<u32>,
    n: u32,
}

impl PoolDraw {
    fn new(freq: &FrequencyVector, k: usize) -> Self {
        let range = freq.block_range(k);
        let mut rows = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0;
        for i in range {
            if freq.counts[i] > 0 {
                acc += freq.counts[i];
                rows.push(i);
                cumulative.push(acc);
            }
        }
        PoolDraw {
            rows,
            cumulative,
            n: acc,
        }
    }

    /// Add `n / n` mass of a with-replacement resample into `out`.
    fn resample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let w = 1.0 / self.n as f64;
        for _ in 0..self.n {
            let u = rng.gen_range(0..self.n);
            let idx = self.cumulative.partition_point(|&c| c <= u);
            out[self.rows[idx]] += w;
        }
    }
}

/// Generator for bootstrap replication `b`: the seed selects the key and
/// the replication index the stream.
pub fn replication_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

fn solve(
    problem: &NnlsProblem<'_>,
    pi: &[f64],
    nu_lower: &[f64],
    config: &TestConfig,
    warm: Option<&[f64]>,
) -> Result<ConeProjection> {
    match project_onto_cone(problem, pi, nu_lower, &config.solver, warm) {
        Err(Error::NotConverged(best)) if config.allow_nonconverged => {
            log::warn!(
                "projection stopped after {} sweeps with KKT residual {:.3e}",
                best.iterations,
                best.kkt_residual
            );
            Ok(*best)
        }
        other => other,
    }
}

fn statistic(n: usize, proj: &ConeProjection, config: &TestConfig) -> f64 {
    if proj.objective <= config.zero_objective {
        0.0
    } else {
        j_statistic(n, proj)
    }
}

/// Tightened cone test with centred within-pool bootstrap.
///
/// Solves the projection of `pi_hat` onto `{Aν : ν >= τι}`, then for each
/// replication resamples every pool at its own size, recentres at the
/// observed projection and solves again. `p = #{J_b >= J_obs} / B`.
pub fn bootstrap_test(cone: &ConeMatrix, pi_hat: &FrequencyVector, config: &TestConfig) -> Result<TestResult> {
    config.validate()?;
    if pi_hat.rows() != cone.rows() {
        return Err(Error::DimensionMismatch {
            expected: cone.rows(),
            found: pi_hat.rows(),
        });
    }
    pi_hat.check_pools()?;
    let tau = match config.tau_override {
        Some(t) => t,
        None if pi_hat.n_min() >= 2 => tightening(cone.cols(), pi_hat.n_min()),
        None => {
            return Err(Error::Usage(
                "every pool needs at least 2 households to set the tightening".into(),
            ))
        }
    };
    let n = pi_hat.n_total();
    let problem = NnlsProblem::new(cone.matrix(), &config.omega, config.step)?;
    let nu_lower = vec![tau; cone.cols()];

    let observed = solve(&problem, &pi_hat.values, &nu_lower, config, None)?;
    let j_observed = statistic(n, &observed, config);
    let centre: Vec<f64> = observed
        .gamma
        .iter()
        .zip(&pi_hat.values)
        .map(|(g, p)| g - p)
        .collect();
    let pools = [
        PoolDraw::new(pi_hat, COUPLE),
        PoolDraw::new(pi_hat, FEMALE),
        PoolDraw::new(pi_hat, MALE),
    ];

    let replications: Vec<(f64, bool)> = (0..config.bootstrap_reps as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replication_rng(config.seed, b);
            let mut pi_b = centre.clone();
            for pool in &pools {
                pool.resample(&mut rng, &mut pi_b);
            }
            let proj = solve(&problem, &pi_b, &nu_lower, config, Some(&observed.slack))?;
            Ok((statistic(n, &proj, config), proj.converged))
        })
        .collect::<Result<Vec<_>>>()?;

    let bootstrap_stats: Vec<f64> = replications.iter().map(|r| r.0).collect();
    let exceed = bootstrap_stats.iter().filter(|&&j| j >= j_observed).count();
    let p_value = exceed as f64 / config.bootstrap_reps as f64;
    let converged = replications.iter().filter(|r| r.1).count() + observed.converged as usize;
    Ok(TestResult {
        j_observed,
        tau_n: tau,
        p_value,
        bootstrap_reps: config.bootstrap_reps,
        alpha: config.alpha,
        reject: p_value <= config.alpha,
        n_c: pi_hat.n_c(),
        n_m: pi_hat.n_m(),
        n_f: pi_hat.n_f(),
        households: pi_hat.households,
        rational_counts: pi_hat.rational,
        omega: config.omega.label(),
        convention: cone.convention().to_string(),
        seed: config.seed,
        converged_fraction: converged as f64 / (config.bootstrap_reps + 1) as f64,
        bootstrap_stats,
        observed_iterations: observed.iterations,
        observed_kkt: observed.kkt_residual,
    })
}

/// Demographic cell: couples must match on both spouses, singles on their
/// own record.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub college: Option<bool>,
    pub age: Option<AgeClass>,
}

impl FromStr for Condition {
    type Err = Error;

    /// Parse `college=1,age=2`; either key may be omitted.
    fn from_str(s: &str) -> Result<Self> {
        let mut cond = Condition::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("condition {part:?} is not key=value")))?;
            match (key.trim(), value.trim()) {
                ("college", "1") => cond.college = Some(true),
                ("college", "0") => cond.college = Some(false),
                ("age", v) => {
                    cond.age = v
                        .parse::<u8>()
                        .ok()
                        .and_then(AgeClass::from_index)
                        .map(Some)
                        .ok_or_else(|| Error::Usage(format!("age class {v:?} is not 0, 1 or 2")))?
                }
                _ => return Err(Error::Usage(format!("unknown condition {part:?}"))),
            }
        }
        Ok(cond)
    }
}

impl Condition {
    pub fn matches(&self, h: &ChoicePath) -> bool {
        let d = h.demographics.unwrap_or_default();
        let sides: &[(Option<bool>, Option<AgeClass>)] = match h.kind {
            HouseholdKind::Couple => &[(d.college_m, d.age_m), (d.college_f, d.age_f)],
            HouseholdKind::SingleMale => &[(d.college_m, d.age_m)],
            HouseholdKind::SingleFemale => &[(d.college_f, d.age_f)],
        };
        sides.iter().all(|&(college, age)| {
            self.college.map_or(true, |c| college == Some(c)) && self.age.map_or(true, |a| age == Some(a))
        })
    }
}

pub fn filter_subsample(dataset: &PanelDataset, condition: &Condition) -> PanelDataset {
    dataset.filtered(|h| condition.matches(h))
}

/// Rule-of-thumb Gaussian bandwidth `1.06 · sd(y) · n^(-1/5)`.
pub fn default_bandwidth(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    if y.len() < 2 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Kernel-smoothed conditional rank of total expenditure given income,
/// computed within each pool.
///
/// `v_i = Σ_j K((y_j - y_i)/h) 1{w_j <= w_i} / Σ_j K((y_j - y_i)/h)` with a
/// Gaussian kernel; `bandwidth = None` uses [`default_bandwidth`] per pool.
/// A zero bandwidth weights every household equally.
pub fn control_function_ranks(dataset: &PanelDataset, bandwidth: Option<f64>) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for kind in HouseholdKind::ALL {
        let pool: Vec<&ChoicePath> = dataset.pool(kind).collect();
        let y = pool
            .iter()
            .map(|h| h.income.ok_or_else(|| Error::MissingIncome(h.household_id.clone())))
            .collect::<Result<Vec<f64>>>()?;
        let w: Vec<f64> = pool.iter().map(|h| h.total_expenditure()).collect();
        let h = bandwidth.unwrap_or_else(|| default_bandwidth(&y));
        for i in 0..pool.len() {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..pool.len() {
                let k = if h > 0.0 {
                    (-0.5 * ((y[j] - y[i]) / h).powi(2)).exp()
                } else {
                    1.0
                };
                den += k;
                if w[j] <= w[i] {
                    num += k;
                }
            }
            out.insert(pool[i].household_id.clone(), num / den);
        }
    }
    Ok(out)
}

/// Window centres `0.05, 0.15, ..., 0.95`.
pub fn control_grid() -> Vec<f64> {
    (0..10).map(|k| 0.05 + 0.1 * k as f64).collect()
}

/// Default half-width of a control-function window.
pub const CONTROL_HALF_WIDTH: f64 = 1.0 / 20.0;

/// Households with `|v_i - v0| <= h`.
pub fn control_window(dataset: &PanelDataset, ranks: &BTreeMap<String, f64>, v0: f64, h: f64) -> PanelDataset {
    dataset.filtered(|hh| {
        ranks
            .get(&hh.household_id)
            .is_some_and(|v| (v - v0).abs() <= h + 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couple_block_proportions() {
        let f = FrequencyVector::from_codes(3, &[5, 5, 7, 9], &[0], &[0]);
        assert_eq!(f.values[5], 0.5);
        assert_eq!(f.values[7], 0.25);
        assert_eq!(f.values[9], 0.25);
        assert_eq!((f.n_c(), f.n_f(), f.n_m()), (4, 1, 1));
    }

    #[test]
    fn identical_males_give_unit_mass() {
        let f = FrequencyVector::from_codes(3, &[1, 2], &[3, 4], &[6, 6, 6]);
        assert_eq!(f.values[576 + 6], 1.0);
        let male: f64 = f.values[576..].iter().sum();
        assert_eq!(male, 1.0);
    }

    #[test]
    fn tightening_values() {
        let tau = tightening(2996, 500);
        assert!((tau - 3.7212e-5).abs() < 1e-8, "{tau}");
        let mut prev = f64::INFINITY;
        for n in 3..2000 {
            let t = tightening(100, n);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn condition_parsing() {
        let c: Condition = "college=1,age=2".parse().unwrap();
        assert_eq!(c.college, Some(true));
        assert_eq!(c.age, Some(AgeClass::Over60));
        assert!("age=4".parse::<Condition>().is_err());
        assert!("height=2".parse::<Condition>().is_err());
    }

    #[test]
    fn resample_preserves_block_mass() {
        let f = FrequencyVector::from_codes(3, &[1, 2, 2, 300], &[3, 4], &[6, 6, 9]);
        let mut out = vec![0.0; f.rows()];
        let mut rng = replication_rng(1, 0);
        for k in 0..3 {
            PoolDraw::new(&f, k).resample(&mut rng, &mut out);
        }
        for k in 0..3 {
            let s: f64 = out[f.block_range(k)].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
