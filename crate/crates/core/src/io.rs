//! Run configuration, CSV ingestion and artifact writing.
//!
//! The configuration is TOML: `key = value` pairs under dotted sections
//! (`[data]`, `[prior]`, `[sampler]`, `[planner]`, `[output]`). The grammar is
//! documented in the repository README.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::SummaryTable;
use crate::ergodicity::{ErgodicityReport, Sigma1Variant, DEFAULT_EPSILONS};
use crate::error::{Error, Result};
use crate::gibbs::{DrawMatrix, SamplerConfig};
use crate::model::{Dataset, GroupStructure, Priors};

pub const DEFAULT_TAU0: f64 = 1e-4;
pub const INTERCEPT_LABEL: &str = "(intercept)";

/// A scalar applied to every group, or one value per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerGroup {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerGroup {
    fn expand(&self, groups: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerGroup::Scalar(v) => Ok(vec![*v; groups]),
            PerGroup::List(v) if v.len() == groups => Ok(v.clone()),
            PerGroup::List(v) => Err(Error::validation(format!(
                "{field}: {} values given for {groups} random-effect groups",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, relative to the configuration file.
    pub path: PathBuf,
    pub y: String,
    /// Trials column; every `n_i = 1` (binary data) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[serde(default)]
    pub intercept: bool,
    #[serde(default)]
    pub fixed: Vec<String>,
    /// Categorical columns, each expanded one-hot into its own group.
    #[serde(default)]
    pub groups: Vec<String>,
    /// Numeric random-effect columns, partitioned by `group_sizes`.
    #[serde(default)]
    pub z: Vec<String>,
    #[serde(default)]
    pub group_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// `Q = precision · I`; ignored when `q` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    /// Prior mean of β; `μ₀ = Q · mean`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<f64>>,
    #[serde(default = "default_shape")]
    pub a: PerGroup,
    #[serde(default = "default_shape")]
    pub b: PerGroup,
    #[serde(default = "default_tau0")]
    pub tau0: f64,
}

fn default_shape() -> PerGroup {
    PerGroup::Scalar(1.0)
}

fn default_tau0() -> f64 {
    DEFAULT_TAU0
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            precision: None,
            q: None,
            mean: None,
            mu0: None,
            a: default_shape(),
            b: default_shape(),
            tau0: DEFAULT_TAU0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub threads: usize,
    pub retain_omega: bool,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burnin: 1_000,
            thin: 1,
            seed: 42,
            chains: 1,
            threads: 1,
            retain_omega: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub epsilon: Vec<f64>,
    pub sigma1: Sigma1Variant,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILONS.to_vec(),
            sigma1: Sigma1Variant::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("config serialization: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::validation(format!("{}: {}", path.display(), e.to_string().trim_start_matches("validation error: "))))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn data_path(&self) -> PathBuf {
        self.resolve_path(&self.data.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve_path(&self.output.dir)
    }

    /// Priors for a model with `p` fixed effects and the given groups.
    pub fn priors(&self, p: usize, groups: &GroupStructure) -> Result<Priors> {
        let pc = &self.prior;
        let q = match (&pc.q, pc.precision) {
            (Some(rows), _) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::validation(format!("prior.q must be {p} x {p}")));
                }
                DMatrix::from_fn(p, p, |i, j| rows[i][j])
            }
            (None, Some(s)) => DMatrix::identity(p, p) * s,
            (None, None) => DMatrix::identity(p, p),
        };
        let r = groups.len();
        let a = pc.a.expand(r, "prior.a")?;
        let b = pc.b.expand(r, "prior.b")?;
        let vector = |v: &Vec<f64>, field: &str| {
            if v.len() == p {
                Ok(DVector::from_column_slice(v))
            } else {
                Err(Error::validation(format!("{field} has {} entries for {p} fixed effects", v.len())))
            }
        };
        let priors = match (&pc.mean, &pc.mu0) {
            (Some(_), Some(_)) => return Err(Error::validation("prior.mean and prior.mu0 are mutually exclusive")),
            (Some(m), None) => Priors::from_mean(q, vector(m, "prior.mean")?, a, b, pc.tau0),
            (None, Some(m)) => Priors::new(q, vector(m, "prior.mu0")?, a, b, pc.tau0),
            (None, None) => Priors::new(q, DVector::zeros(p), a, b, pc.tau0),
        };
        priors.map_err(|e| match e {
            Error::Validation(m) => Error::validation(format!("prior: {m}")),
            other => other,
        })
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let s = &self.sampler;
        if s.chains == 0 {
            return Err(Error::validation("sampler.chains must be at least 1"));
        }
        if s.threads == 0 {
            return Err(Error::validation("sampler.threads must be at least 1"));
        }
        let mut cfg = SamplerConfig::new(s.iterations, s.burnin, s.thin, s.seed);
        cfg.threads = s.threads;
        cfg.retain_omega = s.retain_omega;
        cfg.validate().map_err(|e| match e {
            Error::Validation(m) => Error::validation(format!("sampler: {m}")),
            other => other,
        })?;
        Ok(cfg)
    }
}

/// Data read from CSV together with the labels of the design columns.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub groups: GroupStructure,
    pub fixed_labels: Vec<String>,
    pub random_labels: Vec<String>,
}

impl Ingested {
    /// `(output column, source)` pairs for the draws file.
    pub fn column_labels(&self) -> Vec<(String, String)> {
        let beta = self.fixed_labels.iter().enumerate().map(|(k, l)| (format!("beta.{}", k + 1), l.clone()));
        let u = self.random_labels.iter().enumerate().map(|(k, l)| (format!("u.{}", k + 1), l.clone()));
        beta.chain(u).collect()
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, field: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::validation(format!("{field}: column '{name}' not found in the header")))
}

fn parse_count(text: &str, column: &str, line: u64) -> Result<u32> {
    let bad = || Error::validation(format!("line {line}: column '{column}' value '{text}' is not a non-negative integer"));
    let v: f64 = text.parse().map_err(|_| bad())?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(bad());
    }
    Ok(v as u32)
}

fn parse_real(text: &str, column: &str, line: u64) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::validation(format!("line {line}: column '{column}' value '{text}' is not a finite number")))
}

/// Reads a header-led UTF-8 CSV and builds the design.
///
/// Z holds the explicit `z` columns first, then one one-hot block per
/// categorical grouping column with levels in sorted order.
pub fn ingest_csv(path: &Path, mapping: &DataConfig) -> Result<Ingested> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            }
        } else {
            Error::validation(format!("{} line {line}: {e}", path.display()))
        }
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::validation(format!("{}: empty file", path.display())));
    }
    let y_col = column_index(&headers, &mapping.y, "data.y")?;
    let n_col = mapping.n.as_deref().map(|n| column_index(&headers, n, "data.n")).transpose()?;
    let fixed: Vec<usize> = mapping.fixed.iter().map(|c| column_index(&headers, c, "data.fixed")).collect::<Result<_>>()?;
    let zcols: Vec<usize> = mapping.z.iter().map(|c| column_index(&headers, c, "data.z")).collect::<Result<_>>()?;
    let gcols: Vec<usize> = mapping.groups.iter().map(|c| column_index(&headers, c, "data.groups")).collect::<Result<_>>()?;
    if mapping.group_sizes.iter().sum::<usize>() != zcols.len() {
        return Err(Error::validation(format!(
            "data.group_sizes sum to {} but data.z lists {} columns",
            mapping.group_sizes.iter().sum::<usize>(),
            zcols.len()
        )));
    }
    let p = fixed.len() + usize::from(mapping.intercept);
    if p == 0 {
        return Err(Error::validation("data: no fixed effects (set data.intercept or data.fixed)"));
    }

    let mut y = Vec::new();
    let mut n = Vec::new();
    let mut xrows: Vec<f64> = Vec::new();
    let mut zrows: Vec<f64> = Vec::new();
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); gcols.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let yi = parse_count(field(y_col), &mapping.y, line)?;
        let ni = match n_col {
            Some(c) => parse_count(field(c), mapping.n.as_deref().unwrap_or_default(), line)?,
            None => 1,
        };
        if yi > ni {
            return Err(Error::validation(format!(
                "line {line} (row {}): y = {yi} exceeds n = {ni}",
                y.len() + 1
            )));
        }
        y.push(yi);
        n.push(ni);
        if mapping.intercept {
            xrows.push(1.0);
        }
        for (&c, name) in fixed.iter().zip(&mapping.fixed) {
            xrows.push(parse_real(field(c), name, line)?);
        }
        for (&c, name) in zcols.iter().zip(&mapping.z) {
            zrows.push(parse_real(field(c), name, line)?);
        }
        for (g, &c) in gcols.iter().enumerate() {
            levels[g].push(field(c).to_string());
        }
    }
    let rows = y.len();
    if rows == 0 {
        return Err(Error::validation(format!("{}: no data rows", path.display())));
    }

    let mut fixed_labels = Vec::with_capacity(p);
    if mapping.intercept {
        fixed_labels.push(INTERCEPT_LABEL.to_string());
    }
    fixed_labels.extend(mapping.fixed.iter().cloned());
    let mut random_labels = mapping.z.clone();
    let mut sizes = mapping.group_sizes.clone();
    let sorted_levels: Vec<Vec<String>> = levels
        .iter()
        .map(|v| v.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    for (g, lv) in sorted_levels.iter().enumerate() {
        sizes.push(lv.len());
        random_labels.extend(lv.iter().map(|l| format!("{}={l}", mapping.groups[g])));
    }
    let q = random_labels.len();
    let explicit = zcols.len();
    let mut z = DMatrix::zeros(rows, q);
    for i in 0..rows {
        for k in 0..explicit {
            z[(i, k)] = zrows[i * explicit + k];
        }
        let mut offset = explicit;
        for (g, lv) in sorted_levels.iter().enumerate() {
            let k = lv.binary_search(&levels[g][i]).expect("level present");
            z[(i, offset + k)] = 1.0;
            offset += lv.len();
        }
    }
    let x = DMatrix::from_row_slice(rows, p, &xrows);
    Ok(Ingested {
        dataset: Dataset::new(y, n, x, z)?,
        groups: GroupStructure::new(sizes)?,
        fixed_labels,
        random_labels,
    })
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn draws_csv(draws: &DrawMatrix) -> String {
    let mut out = String::with_capacity(16 * draws.ncols() * (draws.nrows() + 1));
    out.push_str(&draws.names().join(","));
    out.push('\n');
    for row in draws.rows() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    out
}

/// Reads a draws file written by [`draws_csv`].
pub fn read_draws_csv(path: &Path) -> Result<DrawMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let names: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::validation(format!("{}: empty draws file", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut m = DrawMatrix::new(names);
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| parse_real(v, "draw", i as u64 + 2))
            .collect::<Result<_>>()?;
        m.push_row(&row)?;
    }
    Ok(m)
}

/// File name of chain `k` (0-based) out of `chains`.
pub fn draws_file_name(stem: &str, k: usize, chains: usize) -> String {
    if chains == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_chain{}.csv", k + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRecord {
    pub chain: usize,
    pub seed: u64,
    pub draws_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_file: Option<String>,
    pub wall_clock_seconds: f64,
    pub summary: SummaryTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnLabel {
    pub column: String,
    pub source: String,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub software: Software,
    pub seed: u64,
    pub chains: usize,
    pub threads: usize,
    pub observations: usize,
    pub n_total: u64,
    pub columns: Vec<ColumnLabel>,
    pub wall_clock_seconds: f64,
    /// All chains pooled.
    pub summary: SummaryTable,
    pub chain_runs: Vec<ChainRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ergodicity: Option<ErgodicityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ergodicity_unavailable: Option<String>,
    pub config: RunConfig,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::numeric(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
path = "d.csv"
y = "y"
fixed = ["x"]
groups = ["g"]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.prior.tau0, DEFAULT_TAU0);
        assert_eq!(c.sampler.chains, 1);
        assert_eq!(c.planner.epsilon, DEFAULT_EPSILONS.to_vec());
        assert_eq!(c.planner.sigma1, Sigma1Variant::AsPrinted);
        assert!(c.data.n.is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "[data]\npath = \"d.csv\"\ny = \"y\"\n\n[sampler]\niterations = \"many\"\n";
        let e = RunConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(e.contains("line 6"), "{e}");
        let e = RunConfig::from_toml_str("[data]\npath = \"d\"\ny = \"y\"\nwat = 1\n").unwrap_err().to_string();
        assert!(e.contains("wat"), "{e}");
    }

    #[test]
    fn round_trip_is_fixed_point() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.prior.a = PerGroup::List(vec![1.0, 2.5]);
        c.prior.q = Some(vec![vec![2.0]]);
        c.planner.sigma1 = Sigma1Variant::Rederived;
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn per_group_lengths_are_checked() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.prior.a = PerGroup::List(vec![1.0, 2.0]);
        let g = GroupStructure::new(vec![3]).unwrap();
        let e = c.priors(1, &g).unwrap_err().to_string();
        assert!(e.contains("prior.a"), "{e}");
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.25), "0.25");
        assert_eq!(format_real(-3.0), "-3");
        assert_eq!(format_real(1.5e-9), "1.5e-9");
        assert_eq!(format_real(0.0), "0");
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e20] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn file_names() {
        assert_eq!(draws_file_name("draws", 0, 1), "draws.csv");
        assert_eq!(draws_file_name("draws", 1, 2), "draws_chain2.csv");
    }
}
