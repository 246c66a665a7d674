//! Command-line front end: `classify`, `build-cone`, `test` and `simulate`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cone::{build_cone, load_cache, save_cache, ConeMatrix, StabilityConvention};
use crate::data::{load_panel, BartenTechnology, PanelDataset, PanelSchema, TechnologySpec};
use crate::error::{Error, Result};
use crate::inference::{
    bootstrap_test, classify_panel, control_function_ranks, control_grid, control_window,
    estimate_frequencies, filter_subsample, Condition, TestConfig, TestResult, CONTROL_HALF_WIDTH,
};
use crate::rp::DEFAULT_EPSILON;
use crate::simulate::{
    alternative_set, power_curve, AlternativeSet, worst_case_size, write_csv, PowerRow, SimConfig, SizeRow,
    WorstCaseSpec,
};
use crate::solver::WeightMatrix;

#[derive(Debug, Parser)]
#[command(name = "prefstab", version, about = "Preference-stability test for couples and singles")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump each household's revealed-preference type.
    Classify(ClassifyArgs),
    /// Enumerate the stable cone and cache it.
    BuildCone(BuildConeArgs),
    /// Run the cone test with bootstrap p-value.
    Test(TestArgs),
    /// Monte Carlo power curves or worst-case size.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Household expenditure CSV.
    #[arg(long)]
    pub households: PathBuf,
    /// Period price CSV.
    #[arg(long)]
    pub prices: PathBuf,
    /// Flat key = value config with periods, goods and barten.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Period labels to keep, e.g. 2011,2012,2013.
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<i64>>,
    /// 1-based good columns to keep.
    #[arg(long, value_delimiter = ',')]
    pub goods: Option<Vec<usize>>,
    /// `identity` or comma-separated technology scales.
    #[arg(long)]
    pub barten: Option<String>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildConeArgs {
    #[arg(long, default_value_t = 3)]
    pub periods: usize,
    #[arg(long, default_value = "fixed-closure")]
    pub convention: StabilityConvention,
    #[arg(long, default_value = "cone.bin")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "fixed-closure")]
    pub convention: StabilityConvention,
    /// `identity` or `diagonal:<file>` with one weight per cone row.
    #[arg(long, default_value = "identity")]
    pub omega: String,
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed tightening instead of the sample-size rule.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Drop households failing their own rationality check before tallying.
    #[arg(long)]
    pub drop_irrational: bool,
    /// Demographic cell, e.g. college=1,age=2.
    #[arg(long)]
    pub condition: Option<Condition>,
    /// Run one subtest per expenditure-rank window.
    #[arg(long)]
    pub control_function: bool,
    /// Window centres for the control function.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Income bandwidth for the control function.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Cone cache; built and written when missing.
    #[arg(long)]
    pub cone: Option<PathBuf>,
    /// Cone columns to test against.
    #[arg(long, value_enum, default_value_t = ConeColumns::Feasible)]
    pub columns: ConeColumns,
    /// JSON output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    pub periods: usize,
    #[arg(long, default_value = "fixed-closure")]
    pub convention: StabilityConvention,
    /// Households per pool; one study per value.
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000")]
    pub n_under: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Stable shares p.
    #[arg(long, value_delimiter = ',', default_value = "0.75,0.85,0.9,0.95,0.975,0.99,1.0")]
    pub grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.10")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Size study with `n0=<k>` similar matches instead of power curves.
    #[arg(long)]
    pub worst_case: Option<String>,
    /// Tightening for the worst case (default: the sample-size rule).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Non-stable configurations for power curves: `consistent-couple`
    /// (any singles) or `rational-singles`.
    #[arg(long, default_value = "consistent-couple")]
    pub alternative: AlternativeSet,
    #[arg(long)]
    pub cone: Option<PathBuf>,
    /// Output directory for CSVs and the manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Abort on the first failing replication.
    #[arg(long)]
    pub strict: bool,
}

/// Which stable configurations span the cone in `test`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeColumns {
    /// Drop couple patterns no data can produce. Their cells are always
    /// empty, yet tightening forces mass onto them.
    Feasible,
    All,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<(String, String)>,
    pub cone_digest: Option<String>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            inputs: Vec::new(),
            cone_digest: None,
        }
    }

    fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs
            .push((path.display().to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &serde_json::to_string_pretty(self)?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn manifest_path(out: Option<&Path>, default: &str) -> PathBuf {
    match out {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(default),
    }
}

/// Parse arguments and run; `Err` carries the exit code via
/// [`Error::exit_code`].
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            Error::Usage(String::new())
        }
        _ => Error::Usage(e.to_string()),
    })?;
    if let Some(n) = cli.threads {
        // A global pool can only be set once per process; later calls keep
        // the first.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }
    match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::BuildCone(a) => cmd_build_cone(&a),
        Command::Test(a) => cmd_test(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn load_data(a: &DataArgs) -> Result<(PanelDataset, PanelSchema)> {
    let mut schema = match &a.config {
        Some(p) => PanelSchema::from_file(p)?,
        None => PanelSchema::default(),
    };
    if a.periods.is_some() {
        schema.periods = a.periods.clone();
    }
    if a.goods.is_some() {
        schema.goods = a.goods.clone();
    }
    if let Some(b) = &a.barten {
        schema.barten = Some(if b.trim() == "identity" {
            TechnologySpec::Identity
        } else {
            TechnologySpec::Scales(
                b.split(',')
                    .map(|v| {
                        v.trim()
                            .parse()
                            .map_err(|_| Error::Usage(format!("bad --barten entry {v:?}")))
                    })
                    .collect::<Result<_>>()?,
            )
        });
    }
    let raw = load_panel(&a.households, &a.prices, &schema)?;
    let tech: BartenTechnology = schema.technology(raw.goods)?;
    Ok((raw.with_technology(&tech)?, schema))
}

fn data_config(a: &DataArgs, schema: &PanelSchema) -> serde_json::Value {
    serde_json::json!({
        "periods": schema.periods,
        "goods": schema.goods,
        "barten": match &schema.barten {
            None | Some(TechnologySpec::Identity) => serde_json::json!("identity"),
            Some(TechnologySpec::Scales(s)) => serde_json::json!(s),
        },
        "epsilon": a.epsilon,
    })
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let (data, schema) = load_data(&a.data)?;
    let types = classify_panel(&data, a.data.epsilon);
    let mut out = String::from("household_id,kind,code,rational\n");
    for t in &types {
        let _ = writeln!(out, "{},{},{},{}", t.household_id, t.kind, t.code, t.rational as u8);
    }
    match &a.out {
        Some(p) => write_text(p, &out)?,
        None => print!("{out}"),
    }
    let mut manifest = RunManifest::new("classify", data_config(&a.data, &schema));
    manifest.add_input(&a.data.households)?;
    manifest.add_input(&a.data.prices)?;
    manifest.write(&manifest_path(a.out.as_deref(), "classify.manifest.json"))
}

/// Printable counts of a cone build.
pub fn format_counts(cone: &ConeMatrix) -> String {
    let c = cone.counts();
    format!(
        "individual types: {}\nrational individual types: {}\ncollective types: {}\n\
         consistent collective types: {}\ntotal configurations: {}\n\
         consistent configurations: {}\nstable configurations: {}\n",
        c.individual_types,
        c.rational_individual_types,
        c.collective_types,
        c.consistent_collective_types,
        c.total_configurations,
        c.consistent_configurations,
        c.stable_configurations
    )
}

fn cmd_build_cone(a: &BuildConeArgs) -> Result<()> {
    let cone = build_cone(a.periods, a.convention)?;
    save_cache(&cone, &a.out)?;
    print!("{}", format_counts(&cone));
    println!("rows: {}  cols: {}  digest: {}", cone.rows(), cone.cols(), cone.digest());
    let mut manifest = RunManifest::new(
        "build-cone",
        serde_json::json!({"periods": a.periods, "convention": a.convention}),
    );
    manifest.cone_digest = Some(cone.digest());
    manifest.write(&manifest_path(Some(&a.out), ""))
}

fn obtain_cone(path: Option<&Path>, periods: usize, convention: StabilityConvention) -> Result<ConeMatrix> {
    match path {
        Some(p) if p.exists() => load_cache(p, Some((periods, convention))),
        Some(p) => {
            let cone = build_cone(periods, convention)?;
            save_cache(&cone, p)?;
            Ok(cone)
        }
        None => build_cone(periods, convention),
    }
}

fn parse_omega(spec: &str) -> Result<WeightMatrix> {
    if spec == "identity" {
        return Ok(WeightMatrix::Identity);
    }
    let path = spec
        .strip_prefix("diagonal:")
        .ok_or_else(|| Error::Usage(format!("--omega must be identity or diagonal:<file>, got {spec:?}")))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let w = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Schema(format!("bad weight {s:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightMatrix::Diagonal(w))
}

/// One table row: periods, total/rational counts per pool, p-value.
pub fn format_result_row(label: &str, r: &TestResult) -> String {
    format!(
        "{label:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>10.4e} {:>8.3}",
        r.households.couples,
        r.rational_counts.couples,
        r.households.males,
        r.rational_counts.males,
        r.households.females,
        r.rational_counts.females,
        r.j_observed,
        r.p_value
    )
}

pub fn result_header() -> String {
    format!(
        "{:<16} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>10} {:>8}",
        "periods", "N_c", "R_c", "N_m", "R_m", "N_f", "R_f", "J", "p-value"
    )
}

#[derive(Debug, Serialize)]
struct WindowResult {
    v0: f64,
    result: Option<TestResult>,
    error: Option<String>,
}

/// Min, quartiles, mean and max of `values`.
pub fn summary_quantiles(values: &[f64]) -> serde_json::Value {
    if values.is_empty() {
        return serde_json::Value::Null;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    serde_json::json!({
        "min": v[0],
        "q25": q(0.25),
        "median": q(0.5),
        "mean": v.iter().sum::<f64>() / v.len() as f64,
        "q75": q(0.75),
        "max": v[v.len() - 1],
    })
}

fn cmd_test(a: &TestArgs) -> Result<()> {
    let (mut data, schema) = load_data(&a.data)?;
    if let Some(c) = &a.condition {
        data = filter_subsample(&data, c);
    }
    let config = TestConfig {
        bootstrap_reps: a.bootstrap,
        alpha: a.alpha,
        seed: a.seed,
        tau_override: a.tau,
        omega: parse_omega(&a.omega)?,
        include_irrational: !a.drop_irrational,
        allow_nonconverged: a.allow_nonconverged,
        ..TestConfig::default()
    };
    config.validate()?;
    let cone = obtain_cone(a.cone.as_deref(), data.periods, a.convention)?;
    let cone = match a.columns {
        ConeColumns::Feasible => cone.data_feasible(),
        ConeColumns::All => cone,
    };
    let label = data.period_labels.join("-");

    let mut manifest_config = data_config(&a.data, &schema);
    manifest_config["test"] = serde_json::to_value(&config)?;
    manifest_config["convention"] = serde_json::json!(a.convention);
    manifest_config["columns"] = serde_json::json!(a.columns);
    manifest_config["condition"] = serde_json::to_value(a.condition)?;
    manifest_config["control_function"] = serde_json::json!({
        "enabled": a.control_function,
        "grid": a.grid,
        "bandwidth": a.bandwidth,
        "half_width": CONTROL_HALF_WIDTH,
    });
    let mut manifest = RunManifest::new("test", manifest_config);
    manifest.add_input(&a.data.households)?;
    manifest.add_input(&a.data.prices)?;
    manifest.cone_digest = Some(cone.digest());

    let json = if a.control_function {
        let ranks = control_function_ranks(&data, a.bandwidth)?;
        let grid = a.grid.clone().unwrap_or_else(control_grid);
        let mut windows = Vec::with_capacity(grid.len());
        println!("{}", result_header());
        for v0 in grid {
            let sub = control_window(&data, &ranks, v0, CONTROL_HALF_WIDTH);
            let outcome = estimate_frequencies(&sub, a.data.epsilon, &config)
                .and_then(|f| bootstrap_test(&cone, &f, &config));
            match outcome {
                Ok(r) => {
                    println!("{}", format_result_row(&format!("{label} v={v0:.2}"), &r));
                    windows.push(WindowResult { v0, result: Some(r), error: None });
                }
                Err(e @ Error::NotConverged(_)) => return Err(e),
                Err(e) => {
                    log::warn!("window v0={v0}: {e}");
                    windows.push(WindowResult { v0, result: None, error: Some(e.to_string()) });
                }
            }
        }
        let p_values: Vec<f64> = windows
            .iter()
            .filter_map(|w| w.result.as_ref().map(|r| r.p_value))
            .collect();
        let summary = summary_quantiles(&p_values);
        println!("p-value summary: {summary}");
        serde_json::json!({"windows": windows, "p_value_summary": summary})
    } else {
        let freq = estimate_frequencies(&data, a.data.epsilon, &config)?;
        let r = bootstrap_test(&cone, &freq, &config)?;
        println!("{}", result_header());
        println!("{}", format_result_row(&label, &r));
        serde_json::to_value(&r)?
    };
    let text = serde_json::to_string_pretty(&json)?;
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => println!("{text}"),
    }
    manifest.write(&manifest_path(a.out.as_deref(), "test.manifest.json"))
}

fn parse_worst_case(spec: &str) -> Result<usize> {
    let v = spec.strip_prefix("n0=").unwrap_or(spec);
    v.parse()
        .map_err(|_| Error::Usage(format!("--worst-case expects n0=<k>, got {spec:?}")))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cone = obtain_cone(a.cone.as_deref(), a.periods, a.convention)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let base = SimConfig {
        samples: a.samples,
        p_grid: a.grid.clone(),
        alpha_grid: a.alpha.clone(),
        seed: a.seed,
        test: TestConfig {
            bootstrap_reps: a.bootstrap,
            ..TestConfig::default()
        },
        strict: a.strict,
        ..SimConfig::default()
    };
    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::json!({
            "sim": base,
            "n_under": a.n_under,
            "worst_case": a.worst_case,
            "tau": a.tau,
            "alternative": a.alternative,
            "convention": a.convention,
        }),
    );
    manifest.cone_digest = Some(cone.digest());

    if let Some(wc) = &a.worst_case {
        let n0 = parse_worst_case(wc)?;
        let mut rows: Vec<SizeRow> = Vec::new();
        for &n in &a.n_under {
            let tau = a.tau.unwrap_or_else(|| crate::inference::tightening(cone.cols(), n.max(2)));
            let spec = WorstCaseSpec { n_similar: n0, weights: None, tau };
            let config = SimConfig { n_under: n, ..base.clone() };
            let table = worst_case_size(&spec, &config, &cone)?;
            for r in &table.rows {
                println!(
                    "n_under={n} n0={} alpha={:.3} false_positives={}/{} ({:.3}, mc_se {:.3})",
                    r.n0, r.alpha, r.false_positives, r.samples, r.frequency(), r.mc_se()
                );
            }
            rows.extend(table.rows);
        }
        write_csv(&a.out.join("size.csv"), &rows)?;
    } else {
        let theta1 = alternative_set(&cone, a.alternative)?;
        let mut rows: Vec<PowerRow> = Vec::new();
        for &n in &a.n_under {
            let config = SimConfig { n_under: n, ..base.clone() };
            let table = power_curve(&config, &cone, &theta1)?;
            for r in &table.rows {
                println!(
                    "n_under={} p={:.3} alpha={:.3} rejections={}/{} ({:.3}, mc_se {:.3})",
                    r.n_under, r.p, r.alpha, r.rejections, r.samples, r.frequency(), r.mc_se
                );
            }
            rows.extend(table.rows);
        }
        write_csv(&a.out.join("power.csv"), &rows)?;
    }
    manifest.write(&a.out.join("manifest.json"))
}
