//! TOML pool definitions.
//!
//! ```toml
//! [solver]
//! epsilon = 1e-14
//! max_iter = 200
//! delta = 1.0
//!
//! [outputs]
//! rule_table = "rule.csv"
//! report = "report.json"
//!
//! [[participants]]
//! name = "north"
//! loss = { type = "compound_poisson", lambda = 0.13, severity = { type = "negbinom", r = 1, q = 0.41 } }
//! disutility = { type = "crra", sigma = 2.0 }
//! ```
//!
//! Loss types: `compound_poisson` (severity `negbinom {r, q}` or `pmf {pmf}`),
//! `pmf {pmf}`, `gamma {shape, rate}`. Disutility types: `crra {sigma}`,
//! `exp {gamma}`, `tabulated {knots, values}`. Every lattice has step `delta`;
//! relative output paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::dist::{self, CompoundPoissonSpec, LatticeDistribution, KMAX_CAP};
use crate::error::{Error, Result};
use crate::preferences::DisutilityModel;
use crate::solver::{Pool, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeveritySpec {
    Negbinom { r: u32, q: f64 },
    Pmf { pmf: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    CompoundPoisson { lambda: f64, severity: SeveritySpec },
    Pmf { pmf: Vec<f64> },
    Gamma { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisutilitySpec {
    Crra { sigma: f64 },
    Exp { gamma: f64 },
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantSpec {
    pub name: String,
    pub loss: LossSpec,
    pub disutility: DisutilitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    pub max_iter: usize,
    pub delta: f64,
    pub kmax_cap: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { epsilon: 1e-14, max_iter: 200, delta: 1.0, kmax_cap: KMAX_CAP }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdf: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub outputs: OutputSection,
    pub participants: Vec<ParticipantSpec>,
}

impl PoolConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings { epsilon: self.solver.epsilon, max_iter: self.solver.max_iter, initial: None }
    }

    fn check_solver(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.epsilon > 0.0) {
            return Err(Error::config(format!("solver.epsilon = {} must be positive", s.epsilon)));
        }
        if !(s.delta > 0.0 && s.delta.is_finite()) {
            return Err(Error::config(format!("solver.delta = {} must be positive", s.delta)));
        }
        if s.kmax_cap < 2 {
            return Err(Error::config("solver.kmax_cap must be at least 2"));
        }
        Ok(())
    }

    /// Resolves every loss specification and builds the pool.
    pub fn build_pool(&self) -> Result<Pool> {
        self.check_solver()?;
        let members = self
            .participants
            .iter()
            .map(|p| {
                let tag = |e: Error| match e {
                    Error::Config(m) => Error::Config(format!("participant {}: {m}", p.name)),
                    Error::Truncation(m) => Error::Truncation(format!("participant {}: {m}", p.name)),
                    Error::Domain(m) => Error::Config(format!("participant {}: {m}", p.name)),
                    other => other,
                };
                let loss = self.build_loss(&p.loss).map_err(tag)?.with_name(p.name.clone());
                let model = build_disutility(&p.disutility).map_err(tag)?;
                Ok((p.name.clone(), loss, model))
            })
            .collect::<Result<Vec<_>>>()?;
        Pool::new(members)
    }

    fn build_loss(&self, spec: &LossSpec) -> Result<LatticeDistribution> {
        let delta = self.solver.delta;
        let cap = self.solver.kmax_cap;
        match spec {
            LossSpec::CompoundPoisson { lambda, severity } => {
                let sev = match severity {
                    SeveritySpec::Negbinom { r, q } => {
                        if *r == 0 || !(*q > 0.0 && *q < 1.0) {
                            return Err(Error::config(format!("negbinom needs r >= 1 and 0 < q < 1, got r = {r}, q = {q}")));
                        }
                        rescale(dist::negbinom_pmf(*r, *q, cap)?, delta)?
                    }
                    SeveritySpec::Pmf { pmf } => LatticeDistribution::from_weights(delta, pmf.clone(), "severity")?,
                };
                dist::compound_poisson_auto(&CompoundPoissonSpec::new(*lambda, sev)?, cap)
            }
            LossSpec::Pmf { pmf } => LatticeDistribution::from_weights(delta, pmf.clone(), "loss"),
            LossSpec::Gamma { shape, rate } => dist::discretize_gamma(*shape, *rate, delta, cap),
        }
    }
}

fn rescale(d: LatticeDistribution, delta: f64) -> Result<LatticeDistribution> {
    if d.step() == delta {
        return Ok(d);
    }
    let name = d.name().to_string();
    LatticeDistribution::new(delta, d.pmf().to_vec(), name)
}

pub fn build_disutility(spec: &DisutilitySpec) -> Result<DisutilityModel> {
    match spec {
        DisutilitySpec::Crra { sigma } => DisutilityModel::crra(*sigma),
        DisutilitySpec::Exp { gamma } => DisutilityModel::exp_type(*gamma),
        DisutilitySpec::Tabulated { knots, values } => DisutilityModel::tabulated(knots.clone(), values.clone()),
    }
}

/// Random pool with compound-Poisson negative-binomial losses and
/// exponential-type disutilities:
/// `λ ~ Exp(10)`, `r ~ U{1..6}`, `q ~ U[0.4, 0.5]`, `γ ~ U{1..10}`.
pub fn generate_pool(seed: u64, n: usize) -> Result<PoolConfig> {
    if n < 2 {
        return Err(Error::DegeneratePool(format!("a pool needs at least 2 participants, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freq = Exp::new(10.0).expect("positive rate");
    let width = n.to_string().len();
    let participants = (1..=n)
        .map(|i| {
            let lambda: f64 = freq.sample(&mut rng);
            let r: u32 = rng.random_range(1..=6);
            let q: f64 = rng.random_range(0.4..=0.5);
            let gamma: u32 = rng.random_range(1..=10);
            ParticipantSpec {
                name: format!("p{i:0width$}"),
                loss: LossSpec::CompoundPoisson { lambda, severity: SeveritySpec::Negbinom { r, q } },
                disutility: DisutilitySpec::Exp { gamma: gamma as f64 },
            }
        })
        .collect();
    Ok(PoolConfig { solver: SolverSection::default(), outputs: OutputSection::default(), participants })
}
