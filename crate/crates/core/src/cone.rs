//! The cone of preference-stable configurations: a couple type paired with a
//! single man's and a single woman's type whose relations can stand in for
//! the spouses' hypothesized ones.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rp::{
    all_violations, enumerate_collective_types, enumerate_individual_types, extend_hypotheses,
    first_violation, is_carp_consistent, is_data_feasible, is_garp_rational, CarpViolation, CollectiveType,
    HypothesizedRelations, IndividualType, DEFAULT_TYPE_CAP,
};
use crate::solver::SparseBinary;

const CACHE_MAGIC: &[u8; 8] = b"PSTCONE\0";

/// Bumped whenever the bit order of type codes or the record layout changes.
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// How the singles' revealed relations are tied to the spouses' hypothesized
/// relations when checking a configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityConvention {
    /// `H^κ` is exactly the transitive closure of single κ's relation.
    #[default]
    FixedClosure,
    /// `H^κ` may be any superset of single κ's relation.
    Augmentable,
}

impl StabilityConvention {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityConvention::FixedClosure => "fixed-closure",
            StabilityConvention::Augmentable => "augmentable",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            StabilityConvention::FixedClosure => 0,
            StabilityConvention::Augmentable => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(StabilityConvention::FixedClosure),
            1 => Ok(StabilityConvention::Augmentable),
            t => Err(Error::VersionMismatch(format!("unknown convention tag {t}"))),
        }
    }
}

impl fmt::Display for StabilityConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StabilityConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-closure" | "fixed" => Ok(StabilityConvention::FixedClosure),
            "augmentable" => Ok(StabilityConvention::Augmentable),
            other => Err(Error::Usage(format!(
                "unknown convention {other:?} (expected fixed-closure or augmentable)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigurationType {
    pub couple: CollectiveType,
    pub male: IndividualType,
    pub female: IndividualType,
}

impl ConfigurationType {
    pub fn new(couple: CollectiveType, male: IndividualType, female: IndividualType) -> Self {
        assert!(couple.periods() == male.periods() && male.periods() == female.periods());
        ConfigurationType {
            couple,
            male,
            female,
        }
    }

    pub fn periods(&self) -> usize {
        self.couple.periods()
    }

    /// The singles' direct relations as `(H^m, H^f)`.
    pub fn single_relations(&self) -> HypothesizedRelations {
        HypothesizedRelations::new(self.male.relation(), self.female.relation())
    }

    /// Row of each component in the stacked `[couple, female, male]` layout.
    pub fn rows(&self) -> [usize; 3] {
        let t = self.periods();
        let nc = CollectiveType::space_size(t) as usize;
        let ni = IndividualType::space_size(t) as usize;
        [
            self.couple.code() as usize,
            nc + self.female.code() as usize,
            nc + ni + self.male.code() as usize,
        ]
    }
}

/// Hypotheses tied to the singles under `FixedClosure`.
fn fixed_hypotheses(theta: &ConfigurationType) -> HypothesizedRelations {
    HypothesizedRelations::new(
        theta.male.relation().transitive_closure(),
        theta.female.relation().transitive_closure(),
    )
}

/// Stability of the couple once the singles' relations are substituted,
/// ignoring whether the singles are rational or the couple consistent.
fn singles_fit(theta: &ConfigurationType, convention: StabilityConvention) -> bool {
    match convention {
        StabilityConvention::FixedClosure => {
            first_violation(&theta.couple, &fixed_hypotheses(theta)).is_none()
        }
        StabilityConvention::Augmentable => {
            extend_hypotheses(&theta.couple, theta.single_relations()).is_some()
        }
    }
}

/// Both singles GARP-rational, the couple consistent, and the collective
/// conditions satisfied with the singles' relations in place of the
/// spouses'.
pub fn is_preference_stable(theta: &ConfigurationType, convention: StabilityConvention) -> bool {
    is_garp_rational(&theta.male)
        && is_garp_rational(&theta.female)
        && is_carp_consistent(&theta.couple)
        && singles_fit(theta, convention)
}

/// Every collective item violated when `H^κ` is the closure of single κ's
/// relation.
pub fn stability_violations(theta: &ConfigurationType) -> Vec<CarpViolation> {
    all_violations(&theta.couple, &fixed_hypotheses(theta))
}

/// Sizes of the nested configuration sets for one `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeCounts {
    pub individual_types: u64,
    pub rational_individual_types: u64,
    pub collective_types: u64,
    pub consistent_collective_types: u64,
    pub total_configurations: u64,
    /// Configurations whose couple type is consistent, singles unrestricted.
    pub consistent_configurations: u64,
    pub stable_configurations: u64,
}

impl ConeCounts {
    fn to_words(self) -> [u64; 7] {
        [
            self.individual_types,
            self.rational_individual_types,
            self.collective_types,
            self.consistent_collective_types,
            self.total_configurations,
            self.consistent_configurations,
            self.stable_configurations,
        ]
    }

    fn from_words(w: [u64; 7]) -> Self {
        ConeCounts {
            individual_types: w[0],
            rational_individual_types: w[1],
            collective_types: w[2],
            consistent_collective_types: w[3],
            total_configurations: w[4],
            consistent_configurations: w[5],
            stable_configurations: w[6],
        }
    }
}

/// Stable configurations as a 0/1 matrix with one column per configuration
/// and three ones per column.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeMatrix {
    periods: usize,
    convention: StabilityConvention,
    columns: Vec<ConfigurationType>,
    counts: ConeCounts,
    matrix: SparseBinary,
}

impl ConeMatrix {
    fn assemble(
        periods: usize,
        convention: StabilityConvention,
        columns: Vec<ConfigurationType>,
        counts: ConeCounts,
    ) -> Self {
        let rows = (CollectiveType::space_size(periods) + 2 * IndividualType::space_size(periods)) as usize;
        let matrix = SparseBinary::from_columns(rows, columns.iter().map(|c| c.rows().to_vec()));
        ConeMatrix {
            periods,
            convention,
            columns,
            counts,
            matrix,
        }
    }

    /// Build directly from a column list, e.g. a subset of a full cone.
    pub fn from_columns(
        periods: usize,
        convention: StabilityConvention,
        columns: Vec<ConfigurationType>,
    ) -> Self {
        let counts = ConeCounts {
            stable_configurations: columns.len() as u64,
            ..ConeCounts::default()
        };
        Self::assemble(periods, convention, columns, counts)
    }

    /// Columns whose couple pattern some non-negative data can show; the
    /// rest describe cells that are empty in every sample.
    pub fn data_feasible(&self) -> ConeMatrix {
        let columns = self
            .columns
            .iter()
            .copied()
            .filter(|c| is_data_feasible(&c.couple))
            .collect();
        Self::from_columns(self.periods, self.convention, columns)
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn convention(&self) -> StabilityConvention {
        self.convention
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ConfigurationType] {
        &self.columns
    }

    pub fn counts(&self) -> &ConeCounts {
        &self.counts
    }

    pub fn matrix(&self) -> &SparseBinary {
        &self.matrix
    }

    /// Row counts of the couple, female and male blocks.
    pub fn block_sizes(&self) -> [usize; 3] {
        let nc = CollectiveType::space_size(self.periods) as usize;
        let ni = IndividualType::space_size(self.periods) as usize;
        [nc, ni, ni]
    }

    /// SHA-256 of the serialized cache image.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(64 + 24 * self.cols());
        body.extend_from_slice(CACHE_MAGIC);
        body.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
        body.push(self.periods as u8);
        body.push(self.convention.tag());
        body.extend_from_slice(&[0, 0]);
        body.extend_from_slice(&(self.rows() as u64).to_le_bytes());
        body.extend_from_slice(&(self.cols() as u64).to_le_bytes());
        for w in self.counts.to_words() {
            body.extend_from_slice(&w.to_le_bytes());
        }
        let header_len = body.len();
        for c in &self.columns {
            body.extend_from_slice(&c.couple.code().to_le_bytes());
            body.extend_from_slice(&c.male.code().to_le_bytes());
            body.extend_from_slice(&c.female.code().to_le_bytes());
        }
        let checksum = Sha256::digest(&body);
        let mut out = Vec::with_capacity(body.len() + 32);
        out.extend_from_slice(&body[..header_len]);
        out.extend_from_slice(&checksum);
        out.extend_from_slice(&body[header_len..]);
        out
    }
}

/// Scan every configuration for `periods` budgets and keep the stable ones
/// in ascending (couple, male, female) code order.
///
/// Only consistent couples and rational singles can appear, so the scan
/// runs over those and counts the rest arithmetically.
pub fn enumerate_stable(periods: usize, convention: StabilityConvention, cap: u64) -> Result<ConeMatrix> {
    if periods < 3 {
        return Err(Error::Usage(format!(
            "collective testing needs at least 3 periods, got {periods}"
        )));
    }
    let bits = 3 * crate::rp::pair_count(periods) + crate::rp::sum_count(periods);
    if bits >= 64 || 1u64 << bits > cap {
        return Err(Error::SizeLimit {
            what: "configurations",
            requested: 1u128 << bits.min(127),
            cap,
        });
    }
    let singles = enumerate_individual_types(periods, DEFAULT_TYPE_CAP)?;
    let couples = enumerate_collective_types(periods, DEFAULT_TYPE_CAP)?;
    let total = couples.len() as u64 * (singles.len() as u64).pow(2);
    let rational: Vec<IndividualType> = singles.iter().copied().filter(is_garp_rational).collect();
    let consistent: Vec<CollectiveType> = couples
        .par_iter()
        .copied()
        .filter(is_carp_consistent)
        .collect();

    let columns: Vec<ConfigurationType> = consistent
        .par_iter()
        .flat_map_iter(|&couple| {
            let rational = &rational;
            rational.iter().flat_map(move |&male| {
                rational.iter().filter_map(move |&female| {
                    let theta = ConfigurationType::new(couple, male, female);
                    singles_fit(&theta, convention).then_some(theta)
                })
            })
        })
        .collect();
    debug_assert!(columns.windows(2).all(|w| w[0] < w[1]));

    let ni = singles.len() as u64;
    let counts = ConeCounts {
        individual_types: ni,
        rational_individual_types: rational.len() as u64,
        collective_types: couples.len() as u64,
        consistent_collective_types: consistent.len() as u64,
        total_configurations: total,
        consistent_configurations: consistent.len() as u64 * ni * ni,
        stable_configurations: columns.len() as u64,
    };
    log::info!(
        "T={periods} {convention}: {} stable of {} configurations",
        counts.stable_configurations,
        counts.total_configurations
    );
    Ok(ConeMatrix::assemble(periods, convention, columns, counts))
}

/// Default cap on the configuration space an enumeration may scan.
pub const DEFAULT_CONFIG_CAP: u64 = 1 << 32;

/// The stable cone for `periods` under the default size cap.
pub fn build_cone(periods: usize, convention: StabilityConvention) -> Result<ConeMatrix> {
    enumerate_stable(periods, convention, DEFAULT_CONFIG_CAP)
}

pub fn save_cache(m: &ConeMatrix, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&m.to_bytes()).map_err(|e| Error::io(path, e))
}

fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::ChecksumMismatch);
    }
    let (head, rest) = buf.split_at(n);
    *buf = rest;
    Ok(head)
}

fn take_u64(buf: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(take(buf, 8)?.try_into().unwrap()))
}

/// Load a cone cache, verifying the checksum and format version.
///
/// With `expect = Some((T, convention))` the load is strict: a cache built
/// for another `T` or convention is a `VersionMismatch`.
pub fn load_cache(path: &Path, expect: Option<(usize, StabilityConvention)>) -> Result<ConeMatrix> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut buf = bytes.as_slice();
    if take(&mut buf, 8)? != CACHE_MAGIC {
        return Err(Error::VersionMismatch("not a cone cache file".into()));
    }
    let version = u32::from_le_bytes(take(&mut buf, 4)?.try_into().unwrap());
    let periods = take(&mut buf, 1)?[0] as usize;
    let tag = take(&mut buf, 1)?[0];
    take(&mut buf, 2)?;
    let rows = take_u64(&mut buf)?;
    let cols = take_u64(&mut buf)?;
    let mut words = [0u64; 7];
    for w in &mut words {
        *w = take_u64(&mut buf)?;
    }
    let header_len = bytes.len() - buf.len();
    let checksum = take(&mut buf, 32)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes[..header_len]);
    hasher.update(buf);
    if hasher.finalize().as_slice() != checksum {
        return Err(Error::ChecksumMismatch);
    }
    if version != CACHE_FORMAT_VERSION {
        return Err(Error::VersionMismatch(format!(
            "format version {version}, expected {CACHE_FORMAT_VERSION}"
        )));
    }
    let convention = StabilityConvention::from_tag(tag)?;
    if let Some((t, c)) = expect {
        if t != periods || c != convention {
            return Err(Error::VersionMismatch(format!(
                "cache holds T={periods} {convention}, expected T={t} {c}"
            )));
        }
    }
    if !(3..=crate::rp::MAX_PERIODS).contains(&periods) || buf.len() as u64 != 24 * cols {
        return Err(Error::ChecksumMismatch);
    }
    let mut columns = Vec::with_capacity(cols as usize);
    for _ in 0..cols {
        let c = take_u64(&mut buf)?;
        let m = take_u64(&mut buf)?;
        let f = take_u64(&mut buf)?;
        columns.push(ConfigurationType::new(
            CollectiveType::from_code(periods, c),
            IndividualType::new(periods, m),
            IndividualType::new(periods, f),
        ));
    }
    let cone = ConeMatrix::assemble(periods, convention, columns, ConeCounts::from_words(words));
    if cone.rows() as u64 != rows {
        return Err(Error::VersionMismatch(format!("row count {rows} does not match T={periods}")));
    }
    Ok(cone)
}
