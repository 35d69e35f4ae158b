//! File-producing entry points behind the command-line tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{self, PoolConfig};
use crate::error::{Error, Result};
use crate::solver::{iterate, FixedPointReport, Pool, SharingRule};
use crate::stochorder::{self, ConjectureReport};

/// Command-line overrides of the `[solver]` section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta: Option<f64>,
    /// Write per-participant CDFs, to this path or to the configured one.
    pub emit_cdf: Option<Option<PathBuf>>,
}

impl Overrides {
    fn apply(&self, cfg: &mut PoolConfig) {
        if let Some(e) = self.epsilon {
            cfg.solver.epsilon = e;
        }
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = m;
        }
        if let Some(d) = self.delta {
            cfg.solver.delta = d;
        }
    }
}

/// Where a solve wrote its results.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub converged: bool,
    pub rule_table: PathBuf,
    pub report: PathBuf,
    pub cdf: Option<PathBuf>,
    pub summary: SolveReport,
}

impl SolveOutcome {
    /// 0 on convergence, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub names: Vec<String>,
    pub alpha: Vec<f64>,
    pub expected_losses: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub distance_trace: Vec<f64>,
    pub hilbert_trace: Vec<f64>,
    pub fairness_residuals: Vec<f64>,
    pub allocation_residual: f64,
    pub eigen_residual: f64,
    pub step: f64,
    pub lattice_points: usize,
    pub max_support: f64,
    pub aggregate_mean: f64,
    pub runtime_seconds: f64,
}

impl SolveReport {
    pub fn new(pool: &Pool, rule: &SharingRule, report: &FixedPointReport, runtime_seconds: f64) -> Self {
        Self {
            names: rule.names.clone(),
            alpha: rule.alpha.as_slice().to_vec(),
            expected_losses: pool.expected_losses(),
            converged: report.converged,
            iterations: report.iterations,
            distance_trace: report.distance_trace.clone(),
            hilbert_trace: report.hilbert_trace.clone(),
            fairness_residuals: rule.fairness_residuals.clone(),
            allocation_residual: rule.allocation_residual,
            eigen_residual: report.eigen_residual,
            step: rule.step,
            lattice_points: rule.lattice_len(),
            max_support: pool.aggregate().max_support(),
            aggregate_mean: pool.aggregate().mean(),
            runtime_seconds,
        }
    }
}

fn resolve(base: &Path, configured: Option<&PathBuf>, fallback: &str) -> PathBuf {
    match configured {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => base.join(p),
        None => base.join(fallback),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.display().to_string(), source: std::io::Error::other(e) }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `s,h_1,…,h_n`, re-checking `Σ h_i = s` within `1e-8` per row.
pub fn write_rule_table(path: &Path, rule: &SharingRule) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["s".to_string()];
    header.extend((1..=rule.h.len()).map(|i| format!("h_{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for k in 0..rule.lattice_len() {
        let s = rule.value(k);
        let total = crate::sum::sum(rule.h.iter().map(|h| h[k]));
        if (total - s).abs() > 1e-8 * s.max(1.0) {
            return Err(Error::Numerical(format!("shares at s = {s} sum to {total}")));
        }
        let mut row = vec![fmt17(s)];
        row.extend(rule.h.iter().map(|h| fmt17(h[k])));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Long-format CDF table `participant,z,cdf` of each `h_i(S)`.
pub fn write_cdf_table(path: &Path, pool: &Pool, rule: &SharingRule) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["participant", "z", "cdf"]).map_err(csv_err(path))?;
    for (name, h) in rule.names.iter().zip(&rule.h) {
        let cdf = stochorder::pushforward_cdf(h, pool.aggregate())?;
        for (z, f) in cdf.points.iter().zip(&cdf.values) {
            w.write_record([name.as_str(), &fmt17(*z), &fmt17(*f)]).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn load(path: &Path, overrides: &Overrides) -> Result<PoolConfig> {
    let mut cfg = PoolConfig::load(path)?;
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "pool".into())
}

/// Solves the pool described by `config_path` and writes the rule table,
/// the JSON report and, when requested, the CDF table.
pub fn run_solve(config_path: &Path, overrides: &Overrides) -> Result<SolveOutcome> {
    let cfg = load(config_path, overrides)?;
    let started = Instant::now();
    let pool = cfg.build_pool()?;
    let (rule, report) = iterate(&pool, &cfg.settings())?;
    let runtime = started.elapsed().as_secs_f64();

    let dir = config_dir(config_path);
    let name = stem(config_path);
    let rule_path = resolve(&dir, cfg.outputs.rule_table.as_ref(), &format!("{name}.rule.csv"));
    let report_path = resolve(&dir, cfg.outputs.report.as_ref(), &format!("{name}.report.json"));
    let cdf_path = match (&overrides.emit_cdf, &cfg.outputs.cdf) {
        (Some(Some(p)), _) => Some(p.clone()),
        (Some(None), configured) => Some(resolve(&dir, configured.as_ref(), &format!("{name}.cdf.csv"))),
        (None, Some(p)) => Some(resolve(&dir, Some(p), "")),
        (None, None) => None,
    };

    write_rule_table(&rule_path, &rule)?;
    let summary = SolveReport::new(&pool, &rule, &report, runtime);
    write_json(&report_path, &summary)?;
    if let Some(p) = &cdf_path {
        write_cdf_table(p, &pool, &rule)?;
    }
    Ok(SolveOutcome { converged: report.converged, rule_table: rule_path, report: report_path, cdf: cdf_path, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOutput {
    pub first: String,
    pub second: String,
    #[serde(flatten)]
    pub report: ConjectureReport,
}

/// Solves two pools and writes the per-participant crossing report to
/// `out`, or to standard output when `out` is `None`.
pub fn run_compare(a: &Path, b: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<CompareOutput> {
    let cfg_a = load(a, overrides)?;
    let cfg_b = load(b, overrides)?;
    if cfg_a.participants.len() != cfg_b.participants.len() {
        return Err(Error::Precondition(format!(
            "{} has {} participants, {} has {}",
            a.display(),
            cfg_a.participants.len(),
            b.display(),
            cfg_b.participants.len()
        )));
    }
    let pool_a = cfg_a.build_pool()?;
    let pool_b = cfg_b.build_pool()?;
    let report = stochorder::check_conjecture(&pool_a, &pool_b, &cfg_a.settings())?;
    let output = CompareOutput { first: a.display().to_string(), second: b.display().to_string(), report };
    match out {
        Some(p) => write_json(p, &output)?,
        None => {
            let text = serde_json::to_string_pretty(&output).map_err(|e| Error::Numerical(e.to_string()))?;
            writeln!(std::io::stdout(), "{text}").map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(output)
}

/// Writes a seeded random pool configuration to `out`.
pub fn run_pool_gen(seed: u64, n: usize, out: &Path) -> Result<()> {
    let text = config::generate_pool(seed, n)?.to_toml()?;
    fs::write(out, text).map_err(io_err(out))
}
