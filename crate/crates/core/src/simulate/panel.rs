//! Synthetic household panels with known configuration types.
//!
//! Every period shares one price vector `p_s = e_s + δι` over `T` goods, so
//! the map `x ↦ (p_1·x, …, p_T·x)` is invertible and a household can hit any
//! chosen pattern of cross-period expenditures. Types whose pattern cannot be
//! met are reported as unrealizable and left out of the draws.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::draw_configurations;
use crate::cone::{ConeMatrix, ConfigurationType};
use crate::data::{AgeClass, ChoicePath, Demographics, HouseholdKind, PricedChoice};
use crate::error::{Error, Result};
use crate::rp::{
    classify_collective, classify_individual, enumerate_collective_types, enumerate_individual_types,
    sum_triples, CollectiveType, IndividualType, RelationBits, DEFAULT_EPSILON, DEFAULT_TYPE_CAP,
};

const PRICE_OFFSET: f64 = 0.01;
const SUM_REVEALED: f64 = 0.4;
const PAIR_REVEALED: f64 = 0.6;
const NOT_REVEALED: f64 = 2.0;

const INFLATION: f64 = 0.03;

// Before inflation: `1 + δ` on the diagonal, `δ` elsewhere.
fn base_prices(periods: usize) -> Vec<Vec<f64>> {
    (0..periods)
        .map(|s| (0..periods).map(|k| if k == s { 1.0 + PRICE_OFFSET } else { PRICE_OFFSET }).collect())
        .collect()
}

/// Price of good `k` in period `s`. A common inflation factor per period
/// leaves every type unchanged.
pub fn synthetic_prices(periods: usize) -> Vec<Vec<f64>> {
    base_prices(periods)
        .into_iter()
        .enumerate()
        .map(|(s, row)| row.into_iter().map(|p| p * (1.0 + INFLATION).powi(s as i32)).collect())
        .collect()
}

// v[s][t] = p_s · x_t
fn target_values(pair: &RelationBits, sums: Option<&CollectiveType>) -> Vec<Vec<f64>> {
    let t_len = pair.periods();
    let mut v = vec![vec![1.0; t_len]; t_len];
    for s in 0..t_len {
        for t in 0..t_len {
            if s == t {
                continue;
            }
            v[s][t] = if !pair.get(s, t) {
                NOT_REVEALED
            } else if sums.is_some_and(|c| {
                sum_triples(t_len)
                    .into_iter()
                    .any(|(anchor, a, b)| anchor == s && (a == t || b == t) && c.sum_revealed(anchor, a, b))
            }) {
                SUM_REVEALED
            } else {
                PAIR_REVEALED
            };
        }
    }
    v
}

// Solve (I + δ11ᵀ) x = v.
fn quantities(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = v.len();
    (0..n)
        .map(|t| {
            let col: Vec<f64> = (0..n).map(|s| v[s][t]).collect();
            let shift = PRICE_OFFSET * col.iter().sum::<f64>() / (1.0 + n as f64 * PRICE_OFFSET);
            col.iter().map(|c| c - shift).collect()
        })
        .collect()
}

fn path_of(kind: HouseholdKind, x: &[Vec<f64>]) -> ChoicePath {
    let prices = base_prices(x.len());
    let obs = x
        .iter()
        .zip(prices)
        .enumerate()
        .map(|(t, (q, p))| PricedChoice::new(t as u32, p, q.clone()))
        .collect();
    ChoicePath::new("synthetic", kind, obs)
}

/// Quantities per period whose classification is `xi`.
pub fn realize_individual(xi: &IndividualType) -> Option<Vec<Vec<f64>>> {
    let x = quantities(&target_values(&xi.relation(), None));
    let ok = x.iter().flatten().all(|q| *q >= 0.0)
        && classify_individual(&path_of(HouseholdKind::SingleMale, &x), DEFAULT_EPSILON) == *xi;
    ok.then_some(x)
}

/// Quantities per period whose collective classification is `c`, if the
/// pattern can be met; a revealed double sum needs both of its pairs
/// revealed, for instance.
pub fn realize_collective(c: &CollectiveType) -> Option<Vec<Vec<f64>>> {
    let x = quantities(&target_values(&c.relation(), Some(c)));
    let ok = x.iter().flatten().all(|q| *q >= 0.0)
        && classify_collective(&path_of(HouseholdKind::Couple, &x), DEFAULT_EPSILON) == *c;
    ok.then_some(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticHousehold {
    pub household_id: String,
    pub kind: HouseholdKind,
    /// Expenditure per good, one row per period.
    pub expenditures: Vec<Vec<f64>>,
    pub income: f64,
    pub demographics: Demographics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPanel {
    pub periods: usize,
    pub prices: Vec<Vec<f64>>,
    pub households: Vec<SyntheticHousehold>,
    /// The drawn configurations, in household order.
    pub configurations: Vec<ConfigurationType>,
}

/// Realizations of every realizable type for `periods` budgets.
pub struct Realizations {
    individual: HashMap<u64, Vec<Vec<f64>>>,
    collective: HashMap<u64, Vec<Vec<f64>>>,
}

impl Realizations {
    pub fn new(periods: usize) -> Result<Self> {
        let individual = enumerate_individual_types(periods, DEFAULT_TYPE_CAP)?
            .iter()
            .filter_map(|xi| realize_individual(xi).map(|x| (xi.code(), x)))
            .collect();
        let collective = enumerate_collective_types(periods, DEFAULT_TYPE_CAP)?
            .iter()
            .filter_map(|c| realize_collective(c).map(|x| (c.code(), x)))
            .collect();
        Ok(Realizations { individual, collective })
    }

    pub fn contains(&self, theta: &ConfigurationType) -> bool {
        self.collective.contains_key(&theta.couple.code())
            && self.individual.contains_key(&theta.male.code())
            && self.individual.contains_key(&theta.female.code())
    }

    pub fn collective_count(&self) -> usize {
        self.collective.len()
    }
}

fn random_demographics(rng: &mut ChaCha8Rng, male: bool, female: bool) -> Demographics {
    let age = |rng: &mut ChaCha8Rng| AgeClass::from_index(rng.gen_range(0..3));
    Demographics {
        college_m: male.then(|| rng.gen_bool(0.4)),
        college_f: female.then(|| rng.gen_bool(0.4)),
        age_m: if male { age(rng) } else { None },
        age_f: if female { age(rng) } else { None },
    }
}

/// A panel of `n_under` couples, men and women whose configurations are
/// drawn as in [`draw_configurations`], restricted to realizable types.
///
/// Budget levels vary by household but not across a household's periods,
/// which would change its type; income is a noisy multiple of mean
/// expenditure.
pub fn synthetic_panel(
    cone: &ConeMatrix,
    theta1: &[ConfigurationType],
    p: f64,
    n_under: usize,
    seed: u64,
) -> Result<SyntheticPanel> {
    let periods = cone.periods();
    let real = Realizations::new(periods)?;
    let theta0: Vec<_> = cone.columns().iter().copied().filter(|t| real.contains(t)).collect();
    let theta1: Vec<_> = theta1.iter().copied().filter(|t| real.contains(t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = draw_configurations(p, n_under, &theta0, &theta1, &mut rng)?;
    draws.shuffle(&mut rng);

    let prices = synthetic_prices(periods);
    let mut households = Vec::with_capacity(3 * draws.len());
    let mut push = |rng: &mut ChaCha8Rng, id: String, kind: HouseholdKind, x: &[Vec<f64>]| {
        let level = rng.gen_range(0.5..2.0);
        let expenditures: Vec<Vec<f64>> = x
            .iter()
            .zip(&prices)
            .map(|(q, p)| q.iter().zip(p).map(|(q, p)| level * q * p).collect())
            .collect();
        let mean: f64 = expenditures.iter().map(|e| e.iter().sum::<f64>()).sum::<f64>() / periods as f64;
        let income = mean * rng.gen_range(1.0..3.0);
        let demographics = match kind {
            HouseholdKind::Couple => random_demographics(rng, true, true),
            HouseholdKind::SingleMale => random_demographics(rng, true, false),
            HouseholdKind::SingleFemale => random_demographics(rng, false, true),
        };
        households.push(SyntheticHousehold {
            household_id: id,
            kind,
            expenditures,
            income,
            demographics,
        });
    };
    for (i, theta) in draws.iter().enumerate() {
        push(&mut rng, format!("c{i:05}"), HouseholdKind::Couple, &real.collective[&theta.couple.code()]);
        push(&mut rng, format!("m{i:05}"), HouseholdKind::SingleMale, &real.individual[&theta.male.code()]);
        push(&mut rng, format!("f{i:05}"), HouseholdKind::SingleFemale, &real.individual[&theta.female.code()]);
    }
    Ok(SyntheticPanel {
        periods,
        prices,
        households,
        configurations: draws,
    })
}

fn flag(v: Option<bool>) -> String {
    v.map_or(String::new(), |b| (b as u8).to_string())
}

impl SyntheticPanel {
    /// Write `households.csv` and `prices.csv` into `dir`; periods are
    /// labelled from 1.
    pub fn write_csv(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let goods = self.prices.first().map_or(0, Vec::len);
        let hh_path = dir.join("households.csv");
        let price_path = dir.join("prices.csv");

        let mut w = csv::Writer::from_path(&price_path)?;
        let mut header = vec!["period".to_string()];
        header.extend((1..=goods).map(|k| format!("p_{k}")));
        w.write_record(&header)?;
        for (s, p) in self.prices.iter().enumerate() {
            let mut rec = vec![(s + 1).to_string()];
            rec.extend(p.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&price_path, e))?;

        let mut w = csv::Writer::from_path(&hh_path)?;
        let mut header = vec!["household_id".to_string(), "kind".into(), "period".into()];
        header.extend((1..=goods).map(|k| format!("e_{k}")));
        header.extend(["college_m", "college_f", "age_m", "age_f", "income"].map(String::from));
        w.write_record(&header)?;
        for h in &self.households {
            let d = &h.demographics;
            for (s, e) in h.expenditures.iter().enumerate() {
                let mut rec = vec![h.household_id.clone(), h.kind.to_string(), (s + 1).to_string()];
                rec.extend(e.iter().map(f64::to_string));
                rec.push(flag(d.college_m));
                rec.push(flag(d.college_f));
                rec.push(d.age_m.map_or(String::new(), |a| a.index().to_string()));
                rec.push(d.age_f.map_or(String::new(), |a| a.index().to_string()));
                rec.push(h.income.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io(&hh_path, e))?;
        Ok((hh_path, price_path))
    }
}
