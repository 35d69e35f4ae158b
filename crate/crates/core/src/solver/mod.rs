//! Fixed-point computation of the actuarially fair Pareto optimal rule.
//!
//! Weights `α` determine the multiplier curve `J` through full allocation
//! ([`phi1`]); the curve determines new weights through fairness ([`phi2`]).
//! The normalized composite [`psi`] is iterated from a point of the open unit
//! simplex until successive weights agree to `ε` in Euclidean distance.
//! The rule is `h_i(s) = I_i(J(s)/α_i)` on every point of the aggregate lattice.

mod hilbert;
mod maps;

pub use hilbert::{hilbert_distance, verify_contraction, ContractionReport, ContractionViolation};
pub use maps::{multiplier_at, phi, phi1, phi2, psi};

use serde::Serialize;

use crate::dist::{aggregate, LatticeDistribution, TAIL_MASS};
use crate::error::{Error, Result};
use crate::preferences::DisutilityModel;
use crate::sum;

/// Disutility weights `α ∈ ℝⁿ₊`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts finite non-negative entries. Positivity is checked where the
    /// maps require it.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::config("empty weight vector"));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::domain(format!("weight {a} is not a finite non-negative number")));
        }
        Ok(Self(alpha))
    }

    /// `(1/n, …, 1/n)`.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|a| *a > 0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        sum::sum(self.0.iter().map(|a| a.abs()))
    }

    /// Projection `α/‖α‖₁` onto the unit simplex.
    pub fn normalized(&self) -> Self {
        let n = self.l1_norm();
        Self(self.0.iter().map(|a| a / n).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|a| a * c).collect())
    }

    /// `‖self − other‖₂`.
    pub fn euclidean_distance(&self, other: &Self) -> f64 {
        sum::sum(self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b))).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// The multiplier `J(kδ)`, `k = 0..K`, on the aggregate lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierCurve {
    pub step: f64,
    pub values: Vec<f64>,
}

impl MultiplierCurve {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `J(0) = 0` and `J` strictly increasing.
    pub fn in_cone(&self) -> bool {
        self.values.first() == Some(&0.0) && self.values.windows(2).all(|w| w[1] > w[0])
    }
}

/// One member of a pool: their loss, their preferences and `E[X_i]`.
#[derive(Debug, Clone)]
pub struct Participant {
    pub name: String,
    pub loss: LatticeDistribution,
    pub model: DisutilityModel,
    pub expected_loss: f64,
}

/// Independent participants together with the law of their aggregate loss.
#[derive(Debug, Clone)]
pub struct Pool {
    participants: Vec<Participant>,
    aggregate: LatticeDistribution,
}

impl Pool {
    /// Builds a pool and its aggregate `S = Σ X_i`.
    ///
    /// Requires at least two participants sharing a lattice step, rejects
    /// constant losses and checks `E[X_i] < max[X_i]`. Each disutility model
    /// is bound to its participant's `max[X_i]`. The aggregate is cut by the
    /// common tail rule, which keeps `Σ E[X_i] = E[S]` to about `1e-12` relative.
    pub fn new(members: Vec<(String, LatticeDistribution, DisutilityModel)>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::DegeneratePool(format!(
                "a pool needs at least two participants, got {}",
                members.len()
            )));
        }
        let participants = members
            .into_iter()
            .map(|(name, loss, model)| {
                if loss.is_degenerate() {
                    return Err(Error::Infeasible {
                        participant: name,
                        reason: "constant losses cannot be pooled".into(),
                    });
                }
                let expected_loss = loss.mean();
                let max = loss.max_support();
                if !(expected_loss < max) {
                    return Err(Error::Infeasible {
                        participant: name,
                        reason: format!("E[X] = {expected_loss} is not below max[X] = {max}"),
                    });
                }
                let model = model.with_domain_bound(max);
                Ok(Participant { name, loss, model, expected_loss })
            })
            .collect::<Result<Vec<_>>>()?;
        let losses: Vec<LatticeDistribution> = participants.iter().map(|p| p.loss.clone()).collect();
        let aggregate = aggregate(&losses)?.truncate_tail(TAIL_MASS);
        if !(aggregate.mean() > 0.0) {
            return Err(Error::DegeneratePool("E[S] = 0".into()));
        }
        Ok(Self { participants, aggregate })
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    /// Law of `S`.
    pub fn aggregate(&self) -> &LatticeDistribution {
        &self.aggregate
    }

    pub fn step(&self) -> f64 {
        self.aggregate.step()
    }

    /// Number of aggregate lattice points.
    pub fn lattice_len(&self) -> usize {
        self.aggregate.len()
    }

    pub fn expected_losses(&self) -> Vec<f64> {
        self.participants.iter().map(|p| p.expected_loss).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.participants.iter().map(|p| p.name.clone()).collect()
    }
}

/// Stopping rule and starting point of the iteration.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Starting weights on the simplex; uniform when `None`.
    pub initial: Option<WeightVector>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { epsilon: 1e-14, max_iter: 200, initial: None }
    }
}

/// Diagnostics of a fixed-point run.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub converged: bool,
    pub iterations: usize,
    /// `‖α^{(m+1)} − α^{(m)}‖₂` per iteration.
    pub distance_trace: Vec<f64>,
    /// Hilbert distance `d(α^{(m+1)}, α^{(m)})` per iteration.
    pub hilbert_trace: Vec<f64>,
    /// `‖φ(α*) − α*‖∞ / ‖α*‖∞`.
    pub eigen_residual: f64,
}

/// The shares `h_i(kδ)` on the aggregate lattice with their checks.
#[derive(Debug, Clone, Serialize)]
pub struct SharingRule {
    pub step: f64,
    pub names: Vec<String>,
    /// `h[i][k] = h_i(kδ)`.
    pub h: Vec<Vec<f64>>,
    pub alpha: WeightVector,
    pub iterations: usize,
    /// `E[h_i(S)] − E[X_i]`.
    pub fairness_residuals: Vec<f64>,
    /// `max_k |Σ_i h_i(kδ) − kδ|`.
    pub allocation_residual: f64,
}

impl SharingRule {
    pub fn lattice_len(&self) -> usize {
        self.h.first().map_or(0, |h| h.len())
    }

    /// Monetary value of lattice point `k`.
    pub fn value(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Lists violated rule invariants (empty when all hold).
    ///
    /// Checks full allocation within `1e-8·max_support(S)`, non-negativity,
    /// `h_i(0) = 0`, monotonicity, and `h_i < max[X_i]` for Inada-compliant
    /// participants.
    pub fn invariant_violations(&self, pool: &Pool) -> Vec<String> {
        let mut out = Vec::new();
        let max_s = pool.aggregate().max_support();
        if self.allocation_residual > 1e-8 * max_s.max(1.0) {
            out.push(format!("allocation residual {:e}", self.allocation_residual));
        }
        for (i, h) in self.h.iter().enumerate() {
            let who = &self.names[i];
            if h[0] != 0.0 {
                out.push(format!("{who}: h(0) = {}", h[0]));
            }
            if let Some(v) = h.iter().find(|v| !(**v >= 0.0)) {
                out.push(format!("{who}: negative share {v}"));
            }
            if let Some(k) = h.windows(2).position(|w| w[1] < w[0]) {
                out.push(format!("{who}: decreasing at k = {k}"));
            }
            let model = &pool.participants()[i].model;
            if model.inada_compliant() {
                if let Some(v) = h.iter().find(|v| **v >= model.domain_bound()) {
                    out.push(format!("{who}: share {v} reaches max[X]"));
                }
            }
        }
        out
    }
}

fn lattice_expectation(pmf: &[f64], values: &[f64]) -> f64 {
    sum::sum(pmf.iter().zip(values).filter(|(p, _)| **p > 0.0).map(|(p, v)| p * v))
}

/// Assembles `h_i(kδ) = I_i(J(kδ)/α_i)` and its residuals.
pub fn assemble_rule(pool: &Pool, alpha: &WeightVector, curve: &MultiplierCurve, iterations: usize) -> SharingRule {
    let pmf = pool.aggregate().pmf();
    let h: Vec<Vec<f64>> = pool
        .participants()
        .iter()
        .zip(alpha.as_slice())
        .map(|(p, a)| curve.values.iter().map(|j| p.model.inverse_marginal(j / a)).collect())
        .collect();
    let fairness_residuals = pool
        .participants()
        .iter()
        .zip(&h)
        .map(|(p, hi)| lattice_expectation(pmf, hi) - p.expected_loss)
        .collect();
    let allocation_residual = (0..curve.values.len())
        .map(|k| (sum::sum(h.iter().map(|hi| hi[k])) - k as f64 * curve.step).abs())
        .fold(0.0, f64::max);
    SharingRule {
        step: curve.step,
        names: pool.names(),
        h,
        alpha: alpha.clone(),
        iterations,
        fairness_residuals,
        allocation_residual,
    }
}

/// Runs `α^{(m+1)} = ψ(α^{(m)})` until `‖α^{(m+1)} − α^{(m)}‖₂ < ε` or
/// `max_iter` iterations, then assembles the rule from the last weights.
///
/// Non-convergence is reported through `converged = false`, not an error.
/// A zero or negative weight at any step is a numerical fault.
pub fn iterate(pool: &Pool, settings: &SolverSettings) -> Result<(SharingRule, FixedPointReport)> {
    if !(settings.epsilon > 0.0) {
        return Err(Error::config("epsilon must be positive"));
    }
    let n = pool.len();
    let mut alpha = match &settings.initial {
        Some(a) if a.len() != n => {
            return Err(Error::config(format!("initial weights have length {}, pool has {n}", a.len())))
        }
        Some(a) if !a.is_positive() => return Err(Error::domain("initial weights must be positive")),
        Some(a) => a.normalized(),
        None => WeightVector::uniform(n),
    };

    let mut curve = phi1(&alpha, pool)?;
    let mut distance_trace = Vec::new();
    let mut hilbert_trace = Vec::new();
    let mut converged = false;

    for _ in 0..settings.max_iter {
        let raw = phi2(&curve, pool)?;
        if !raw.is_positive() {
            return Err(Error::Numerical(format!(
                "iteration {} produced a non-positive weight: {:?}",
                distance_trace.len() + 1,
                raw.as_slice()
            )));
        }
        let next = raw.normalized();
        distance_trace.push(next.euclidean_distance(&alpha));
        hilbert_trace.push(hilbert_distance(&next, &alpha)?);
        alpha = next;
        curve = phi1(&alpha, pool)?;
        if *distance_trace.last().unwrap() < settings.epsilon {
            converged = true;
            break;
        }
    }

    let image = phi2(&curve, pool)?;
    let eigen_residual = image.max_abs_diff(&alpha) / alpha.max_abs();
    let iterations = distance_trace.len();
    let rule = assemble_rule(pool, &alpha, &curve, iterations);
    let report = FixedPointReport { converged, iterations, distance_trace, hilbert_trace, eigen_residual };
    Ok((rule, report))
}

/// Shares `h_i(s)` at an arbitrary loss level `s ≥ 0` for fixed weights.
pub fn shares_at(pool: &Pool, alpha: &WeightVector, s: f64) -> Result<Vec<f64>> {
    let j = multiplier_at(pool, alpha, s, None)?;
    Ok(pool
        .participants()
        .iter()
        .zip(alpha.as_slice())
        .map(|(p, a)| p.model.inverse_marginal(j / a))
        .collect())
}
