//! Panel consumption data: unit-budget normalization, the Barten consumption
//! technology for couples, and CSV ingestion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance under which a budget already counts as normalized.
const UNIT_BUDGET_TOL: f64 = 1e-12;

/// One period's prices and quantities, scaled so that `prices · quantities = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricedChoice {
    pub period: u32,
    pub prices: Vec<f64>,
    pub quantities: Vec<f64>,
}

impl PricedChoice {
    /// Wrap already-normalized data without rescaling.
    pub fn new(period: u32, prices: Vec<f64>, quantities: Vec<f64>) -> Self {
        PricedChoice {
            period,
            prices,
            quantities,
        }
    }

    pub fn goods(&self) -> usize {
        self.prices.len()
    }

    pub fn expenditure(&self) -> f64 {
        dot(&self.prices, &self.quantities)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divide prices by total expenditure so the observed budget is one.
///
/// Idempotent: data already within `1e-12` of a unit budget is returned
/// unchanged.
pub fn normalize(period: u32, prices: &[f64], quantities: &[f64]) -> Result<PricedChoice> {
    if prices.len() != quantities.len() {
        return Err(Error::DimensionMismatch {
            expected: prices.len(),
            found: quantities.len(),
        });
    }
    if let Some(&p) = prices.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Schema(format!("price {p} is not strictly positive")));
    }
    if let Some(&q) = quantities.iter().find(|q| !(**q >= 0.0)) {
        return Err(Error::Schema(format!("quantity {q} is negative")));
    }
    let w = dot(prices, quantities);
    if !(w > 0.0) {
        return Err(Error::ZeroExpenditure(w));
    }
    let prices = if (w - 1.0).abs() <= UNIT_BUDGET_TOL {
        prices.to_vec()
    } else {
        prices.iter().map(|p| p / w).collect()
    };
    Ok(PricedChoice::new(period, prices, quantities.to_vec()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HouseholdKind {
    Couple,
    SingleMale,
    SingleFemale,
}

impl HouseholdKind {
    pub const ALL: [HouseholdKind; 3] = [
        HouseholdKind::Couple,
        HouseholdKind::SingleMale,
        HouseholdKind::SingleFemale,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            HouseholdKind::Couple => "couple",
            HouseholdKind::SingleMale => "single_m",
            HouseholdKind::SingleFemale => "single_f",
        }
    }
}

impl FromStr for HouseholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "couple" => Ok(HouseholdKind::Couple),
            "single_m" => Ok(HouseholdKind::SingleMale),
            "single_f" => Ok(HouseholdKind::SingleFemale),
            other => Err(Error::Schema(format!("unknown household kind {other:?}"))),
        }
    }
}

impl fmt::Display for HouseholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeClass {
    Under40,
    From40To60,
    Over60,
}

impl AgeClass {
    pub fn from_index(i: u8) -> Option<AgeClass> {
        match i {
            0 => Some(AgeClass::Under40),
            1 => Some(AgeClass::From40To60),
            2 => Some(AgeClass::Over60),
            _ => None,
        }
    }

    pub fn index(&self) -> u8 {
        *self as u8
    }
}

/// Spouse-level demographics; singles only fill their own side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub college_m: Option<bool>,
    pub college_f: Option<bool>,
    pub age_m: Option<AgeClass>,
    pub age_f: Option<AgeClass>,
}

/// One household's normalized choices over `T` periods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoicePath {
    pub household_id: String,
    pub kind: HouseholdKind,
    pub observations: Vec<PricedChoice>,
    pub demographics: Option<Demographics>,
    pub income: Option<f64>,
    /// Expenditure on the selected goods before normalization, per period.
    pub raw_total_expenditure: Vec<f64>,
}

impl ChoicePath {
    pub fn new(id: impl Into<String>, kind: HouseholdKind, observations: Vec<PricedChoice>) -> Self {
        let raw = vec![1.0; observations.len()];
        ChoicePath {
            household_id: id.into(),
            kind,
            observations,
            demographics: None,
            income: None,
            raw_total_expenditure: raw,
        }
    }

    pub fn periods(&self) -> usize {
        self.observations.len()
    }

    pub fn goods(&self) -> usize {
        self.observations.first().map_or(0, PricedChoice::goods)
    }

    /// Mean raw expenditure across periods.
    pub fn total_expenditure(&self) -> f64 {
        let n = self.raw_total_expenditure.len().max(1) as f64;
        self.raw_total_expenditure.iter().sum::<f64>() / n
    }
}

/// Diagonal consumption technology: market bundles are worth `x / scale` in
/// private-consumption equivalents at prices `scale ∘ p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BartenTechnology {
    scales: Vec<f64>,
}

impl BartenTechnology {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        for (index, &value) in scales.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositiveScale { index, value });
            }
            if !(value > 0.5 && value <= 1.0) {
                log::warn!("technology scale {value} for good {index} lies outside (0.5, 1]");
            }
        }
        Ok(BartenTechnology { scales })
    }

    pub fn identity(goods: usize) -> Self {
        BartenTechnology {
            scales: vec![1.0; goods],
        }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn is_identity(&self) -> bool {
        self.scales.iter().all(|&s| s == 1.0)
    }
}

/// Map a couple's market choices to internal prices `scale ∘ p` and
/// quantities `x / scale`; singles are returned unchanged.
pub fn barten_transform(path: &ChoicePath, tech: &BartenTechnology) -> Result<ChoicePath> {
    if path.kind != HouseholdKind::Couple || tech.is_identity() {
        return Ok(path.clone());
    }
    let scales = tech.scales();
    let observations = path
        .observations
        .iter()
        .map(|obs| {
            if obs.goods() != scales.len() {
                return Err(Error::DimensionMismatch {
                    expected: scales.len(),
                    found: obs.goods(),
                });
            }
            let prices: Vec<f64> = obs.prices.iter().zip(scales).map(|(p, d)| p * d).collect();
            let quantities: Vec<f64> =
                obs.quantities.iter().zip(scales).map(|(x, d)| x / d).collect();
            normalize(obs.period, &prices, &quantities)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChoicePath {
        observations,
        ..path.clone()
    })
}

/// Household counts per pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolCounts {
    pub couples: usize,
    pub males: usize,
    pub females: usize,
}

impl PoolCounts {
    pub fn get(&self, kind: HouseholdKind) -> usize {
        match kind {
            HouseholdKind::Couple => self.couples,
            HouseholdKind::SingleMale => self.males,
            HouseholdKind::SingleFemale => self.females,
        }
    }

    pub fn min(&self) -> usize {
        self.couples.min(self.males).min(self.females)
    }

    pub fn total(&self) -> usize {
        self.couples + self.males + self.females
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    pub households: Vec<ChoicePath>,
    pub periods: usize,
    pub goods: usize,
    pub good_labels: Vec<String>,
    pub period_labels: Vec<String>,
    /// Households dropped for missing one of the selected periods.
    pub dropped_incomplete: usize,
}

impl PanelDataset {
    pub fn counts(&self) -> PoolCounts {
        let mut c = PoolCounts::default();
        for h in &self.households {
            match h.kind {
                HouseholdKind::Couple => c.couples += 1,
                HouseholdKind::SingleMale => c.males += 1,
                HouseholdKind::SingleFemale => c.females += 1,
            }
        }
        c
    }

    pub fn pool(&self, kind: HouseholdKind) -> impl Iterator<Item = &ChoicePath> {
        self.households.iter().filter(move |h| h.kind == kind)
    }

    /// Apply a consumption technology to every couple.
    pub fn with_technology(&self, tech: &BartenTechnology) -> Result<PanelDataset> {
        let households = self
            .households
            .iter()
            .map(|h| barten_transform(h, tech))
            .collect::<Result<Vec<_>>>()?;
        Ok(PanelDataset {
            households,
            ..self.clone()
        })
    }

    /// Keep the households for which `keep` holds.
    pub fn filtered(&self, keep: impl Fn(&ChoicePath) -> bool) -> PanelDataset {
        PanelDataset {
            households: self.households.iter().filter(|h| keep(h)).cloned().collect(),
            ..self.clone()
        }
    }
}

/// Technology entry of a panel configuration file.
#[derive(Clone, Debug, PartialEq)]
pub enum TechnologySpec {
    Identity,
    Scales(Vec<f64>),
}

/// Selection of periods and goods plus the couples' technology.
///
/// Parsed from flat `key = value` text:
///
/// ```text
/// periods = [2011, 2012, 2013]
/// goods = [1, 2, 3]
/// barten = [0.683, 0.692, 0.748]
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PanelSchema {
    /// Period labels to keep, in order; `None` keeps every period.
    pub periods: Option<Vec<i64>>,
    /// 1-based expenditure column indices to keep; `None` keeps all.
    pub goods: Option<Vec<usize>>,
    pub barten: Option<TechnologySpec>,
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let inner = value
        .trim()
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| Error::Schema(format!("{key}: expected a [..] list, got {value:?}")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Schema(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

impl PanelSchema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = PanelSchema::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("config line {}: expected key = value", lineno + 1))
            })?;
            match key.trim() {
                "periods" => schema.periods = Some(parse_list("periods", value)?),
                "goods" => schema.goods = Some(parse_list("goods", value)?),
                "barten" => {
                    schema.barten = Some(if value.trim() == "identity" {
                        TechnologySpec::Identity
                    } else {
                        TechnologySpec::Scales(parse_list("barten", value)?)
                    })
                }
                other => return Err(Error::Schema(format!("unknown config key {other:?}"))),
            }
        }
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The technology for `goods` selected goods.
    pub fn technology(&self, goods: usize) -> Result<BartenTechnology> {
        match &self.barten {
            None | Some(TechnologySpec::Identity) => Ok(BartenTechnology::identity(goods)),
            Some(TechnologySpec::Scales(s)) if s.len() == goods => BartenTechnology::new(s.clone()),
            Some(TechnologySpec::Scales(s)) => Err(Error::DimensionMismatch {
                expected: goods,
                found: s.len(),
            }),
        }
    }
}

fn expenditure_columns(headers: &csv::StringRecord, prefix: &str) -> Vec<(usize, usize)> {
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.trim()
                .strip_prefix(prefix)
                .and_then(|n| n.parse::<usize>().ok())
                .map(|n| (n, i))
        })
        .collect();
    cols.sort();
    cols
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn required(headers: &csv::StringRecord, name: &str, file: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::Schema(format!("{file}: missing column {name:?}")))
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, idx: usize, what: &str) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::Schema(format!("cannot parse {what} from {raw:?}")))
}

fn optional_field(rec: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.and_then(|i| rec.get(i)).map(str::trim).filter(|s| !s.is_empty())
}

fn parse_flag(raw: &str) -> Result<bool> {
    match raw {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(Error::Schema(format!("cannot parse college flag {other:?}"))),
    }
}

fn parse_age(raw: &str) -> Result<AgeClass> {
    raw.parse::<u8>()
        .ok()
        .and_then(AgeClass::from_index)
        .ok_or_else(|| Error::Schema(format!("age class must be 0, 1 or 2, got {raw:?}")))
}

struct HouseholdRows {
    kind: HouseholdKind,
    demographics: Demographics,
    income: Option<f64>,
    by_period: BTreeMap<i64, Vec<f64>>,
}

/// Read a household expenditure CSV and a price CSV into normalized paths.
///
/// Quantities are expenditures divided by the period's price. Households
/// lacking any selected period are dropped and counted, never imputed.
/// The result is sorted by household id, so row order does not matter.
pub fn load_panel(household_file: &Path, price_file: &Path, schema: &PanelSchema) -> Result<PanelDataset> {
    // Prices
    let mut prices_rdr = csv::Reader::from_path(price_file).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(price_file, io),
        other => Error::Schema(format!("{}: {other:?}", price_file.display())),
    })?;
    let price_headers = prices_rdr.headers()?.clone();
    let period_col = required(&price_headers, "period", "price file")?;
    let price_cols = expenditure_columns(&price_headers, "p_");
    if price_cols.is_empty() {
        return Err(Error::Schema("price file: no p_<k> columns".into()));
    }
    let mut price_table: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for rec in prices_rdr.records() {
        let rec = rec?;
        let period: i64 = parse_field(&rec, period_col, "period")?;
        let row = price_cols
            .iter()
            .map(|&(_, i)| parse_field::<f64>(&rec, i, "price"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(p) = row.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::Schema(format!("period {period}: price {p} is not positive")));
        }
        price_table.insert(period, row);
    }

    // Households
    let mut hh_rdr = csv::Reader::from_path(household_file).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(household_file, io),
        other => Error::Schema(format!("{}: {other:?}", household_file.display())),
    })?;
    let headers = hh_rdr.headers()?.clone();
    let id_col = required(&headers, "household_id", "household file")?;
    let kind_col = required(&headers, "kind", "household file")?;
    let hperiod_col = required(&headers, "period", "household file")?;
    let exp_cols = expenditure_columns(&headers, "e_");
    if exp_cols.len() != price_cols.len() {
        return Err(Error::Schema(format!(
            "{} expenditure columns but {} price columns",
            exp_cols.len(),
            price_cols.len()
        )));
    }
    let college_m = column(&headers, "college_m");
    let college_f = column(&headers, "college_f");
    let age_m = column(&headers, "age_m");
    let age_f = column(&headers, "age_f");
    let income_col = column(&headers, "income");

    let all_goods = exp_cols.len();
    let goods: Vec<usize> = match &schema.goods {
        Some(g) => {
            for &k in g {
                if k == 0 || k > all_goods {
                    return Err(Error::Schema(format!("good index {k} out of range 1..={all_goods}")));
                }
            }
            g.iter().map(|k| k - 1).collect()
        }
        None => (0..all_goods).collect(),
    };

    let mut rows: BTreeMap<String, HouseholdRows> = BTreeMap::new();
    let mut seen_periods = BTreeSet::new();
    for rec in hh_rdr.records() {
        let rec = rec?;
        let id = rec.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Schema("empty household_id".into()));
        }
        let kind: HouseholdKind = rec.get(kind_col).unwrap_or("").parse()?;
        let period: i64 = parse_field(&rec, hperiod_col, "period")?;
        let expenditures = exp_cols
            .iter()
            .map(|&(_, i)| parse_field::<f64>(&rec, i, "expenditure"))
            .collect::<Result<Vec<_>>>()?;
        if expenditures.iter().any(|e| *e < 0.0) {
            return Err(Error::NegativeExpenditure { household: id, period });
        }
        let demographics = Demographics {
            college_m: optional_field(&rec, college_m).map(parse_flag).transpose()?,
            college_f: optional_field(&rec, college_f).map(parse_flag).transpose()?,
            age_m: optional_field(&rec, age_m).map(parse_age).transpose()?,
            age_f: optional_field(&rec, age_f).map(parse_age).transpose()?,
        };
        let income = optional_field(&rec, income_col)
            .map(|s| s.parse::<f64>().map_err(|_| Error::Schema(format!("cannot parse income {s:?}"))))
            .transpose()?;
        let entry = rows.entry(id.clone()).or_insert_with(|| HouseholdRows {
            kind,
            demographics,
            income,
            by_period: BTreeMap::new(),
        });
        if entry.kind != kind {
            return Err(Error::Schema(format!("household {id} changes kind across rows")));
        }
        if entry.by_period.insert(period, expenditures).is_some() {
            return Err(Error::Schema(format!("household {id} has two rows for period {period}")));
        }
        seen_periods.insert(period);
    }

    let periods: Vec<i64> = match &schema.periods {
        Some(p) => p.clone(),
        None => seen_periods.into_iter().collect(),
    };
    for p in &periods {
        if !price_table.contains_key(p) {
            return Err(Error::MissingPeriodPrice(*p));
        }
    }

    let mut households = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for (id, hh) in rows {
        if !periods.iter().all(|p| hh.by_period.contains_key(p)) {
            dropped += 1;
            continue;
        }
        let mut observations = Vec::with_capacity(periods.len());
        let mut raw = Vec::with_capacity(periods.len());
        for (t, p) in periods.iter().enumerate() {
            let e = &hh.by_period[p];
            let pr = &price_table[p];
            let prices: Vec<f64> = goods.iter().map(|&k| pr[k]).collect();
            let quantities: Vec<f64> = goods.iter().map(|&k| e[k] / pr[k]).collect();
            raw.push(goods.iter().map(|&k| e[k]).sum());
            observations.push(normalize(t as u32 + 1, &prices, &quantities)?);
        }
        households.push(ChoicePath {
            household_id: id,
            kind: hh.kind,
            observations,
            demographics: Some(hh.demographics),
            income: hh.income,
            raw_total_expenditure: raw,
        });
    }
    if dropped > 0 {
        log::info!("dropped {dropped} households with incomplete periods");
    }
    let good_labels = goods
        .iter()
        .map(|&k| price_headers.get(price_cols[k].1).unwrap_or("").trim().to_string())
        .collect();
    Ok(PanelDataset {
        households,
        periods: periods.len(),
        goods: goods.len(),
        good_labels,
        period_labels: periods.iter().map(|p| p.to_string()).collect(),
        dropped_incomplete: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn normalize_unit_budget_is_unchanged() {
        let c = normalize(1, &[2.0, 2.0, 2.0], &[1.0 / 6.0; 3]).unwrap();
        assert!(close(&c.prices, &[2.0, 2.0, 2.0]));
        assert!((c.expenditure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_divides_by_budget() {
        let c = normalize(1, &[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!(close(&c.prices, &[1.0 / 6.0, 1.0 / 3.0, 0.5]));
    }

    #[test]
    fn normalize_rejects_zero_bundle() {
        assert!(matches!(
            normalize(1, &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]),
            Err(Error::ZeroExpenditure(_))
        ));
    }

    #[test]
    fn normalize_rejects_length_mismatch() {
        assert!(matches!(
            normalize(1, &[1.0, 1.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = normalize(1, &[0.3, 1.7, 2.9], &[0.11, 0.5, 3.0]).unwrap();
        let twice = normalize(1, &once.prices, &once.quantities).unwrap();
        assert_eq!(once, twice);
    }

    fn couple_path() -> ChoicePath {
        let obs = vec![
            normalize(1, &[1.0, 2.0, 3.0], &[0.4, 0.2, 0.1]).unwrap(),
            normalize(2, &[2.0, 1.0, 1.5], &[0.1, 0.6, 0.3]).unwrap(),
            normalize(3, &[1.2, 1.1, 0.7], &[0.3, 0.3, 0.5]).unwrap(),
        ];
        ChoicePath::new("c1", HouseholdKind::Couple, obs)
    }

    #[test]
    fn barten_identity_is_identity() {
        let p = couple_path();
        assert_eq!(barten_transform(&p, &BartenTechnology::identity(3)).unwrap(), p);
    }

    #[test]
    fn barten_keeps_unit_budget() {
        let tech = BartenTechnology::new(vec![0.683, 0.692, 0.748]).unwrap();
        let out = barten_transform(&couple_path(), &tech).unwrap();
        for obs in &out.observations {
            assert!((obs.expenditure() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn barten_half_scales_double_quantities() {
        let p = couple_path();
        let tech = BartenTechnology::new(vec![0.5; 3]).unwrap();
        let out = barten_transform(&p, &tech).unwrap();
        for (a, b) in p.observations.iter().zip(&out.observations) {
            assert!(close(&b.quantities, &a.quantities.iter().map(|x| 2.0 * x).collect::<Vec<_>>()));
            assert!(close(&b.prices, &a.prices.iter().map(|x| 0.5 * x).collect::<Vec<_>>()));
        }
    }

    #[test]
    fn barten_leaves_singles_alone() {
        let mut p = couple_path();
        p.kind = HouseholdKind::SingleFemale;
        let tech = BartenTechnology::new(vec![0.6, 0.7, 0.8]).unwrap();
        assert_eq!(barten_transform(&p, &tech).unwrap(), p);
    }

    #[test]
    fn barten_rejects_non_positive_scale() {
        assert!(matches!(
            BartenTechnology::new(vec![1.0, 0.0, 0.7]),
            Err(Error::NonPositiveScale { index: 1, .. })
        ));
    }

    #[test]
    fn schema_parses_flat_config() {
        let s = PanelSchema::parse("periods = [1, 2, 3]\ngoods = [1,3]\n# c\nbarten = identity\n").unwrap();
        assert_eq!(s.periods, Some(vec![1, 2, 3]));
        assert_eq!(s.goods, Some(vec![1, 3]));
        assert_eq!(s.barten, Some(TechnologySpec::Identity));
        let s = PanelSchema::parse("barten = [0.683, 0.692, 0.748]").unwrap();
        assert_eq!(s.technology(3).unwrap().scales(), &[0.683, 0.692, 0.748]);
        assert!(PanelSchema::parse("colour = blue").is_err());
    }
}
