//! Closed-form sharing rules used as ground truth for the iterative solver.

use serde::Serialize;

use crate::dist::LatticeDistribution;
use crate::error::{Error, Result};
use crate::roots;

/// A sharing rule with constant slopes, `h_i(s) = c_i·s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRule {
    pub slopes: Vec<f64>,
}

impl LinearRule {
    pub fn shares(&self, s: f64) -> Vec<f64> {
        self.slopes.iter().map(|c| c * s).collect()
    }

    /// `h[i][k] = c_i·kδ` for `k < len`.
    pub fn table(&self, step: f64, len: usize) -> Vec<Vec<f64>> {
        self.slopes
            .iter()
            .map(|c| (0..len).map(|k| c * (k as f64 * step)).collect())
            .collect()
    }
}

/// `h_i(s) = s/n`, the AFPO rule of an exchangeable pool.
pub fn uniform_rule(n: usize) -> Result<LinearRule> {
    if n == 0 {
        return Err(Error::DegeneratePool("uniform rule needs at least one participant".into()));
    }
    Ok(LinearRule { slopes: vec![1.0 / n as f64; n] })
}

/// `h_i(s) = (E[X_i]/E[S])·s`, the AFPO rule of an equicautious CRRA pool.
pub fn proportional_rule(expected_losses: &[f64]) -> Result<LinearRule> {
    if expected_losses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::domain("expected losses must be finite and non-negative"));
    }
    let total = crate::sum::sum(expected_losses.iter().copied());
    if !(total > 0.0) {
        return Err(Error::DegeneratePool("E[S] = 0".into()));
    }
    Ok(LinearRule { slopes: expected_losses.iter().map(|m| m / total).collect() })
}

/// Closed-form AFPO rule for two CRRA participants with `σ₂ = 2σ₁`.
///
/// With `a = (α₁/α₂)^{1/σ₁}` the shares are `h₂(s) = √(as + a²/4) − a/2`
/// and `h₁(s) = s − h₂(s) = h₂(s)²/a`, and `a` is fixed by fairness of
/// participant 2: `E[h₂(S)] = E[X₂]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoCrraSolution {
    pub a: f64,
    pub sigma1: f64,
    /// `(ã₁, ã₂)` on the simplex.
    pub alpha_tilde: [f64; 2],
    /// `|E[h₂(S)] − E[X₂]|` at the returned `a`.
    pub residual: f64,
}

/// `√(as + a²/4) − a/2` without cancellation.
fn concave_share(a: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let as_ = a * s;
    as_ / ((as_ + 0.25 * a * a).sqrt() + 0.5 * a)
}

impl TwoCrraSolution {
    /// Share of the more risk-averse participant (`σ₂ = 2σ₁`); concave.
    pub fn h2(&self, s: f64) -> f64 {
        concave_share(self.a, s)
    }

    /// Share of participant 1; convex.
    pub fn h1(&self, s: f64) -> f64 {
        let h2 = self.h2(s);
        h2 * h2 / self.a
    }

    /// `F_{h₂(S)}(z) = F_S(z²/a + z)`: the loss level whose share is `z`.
    pub fn h2_preimage(&self, z: f64) -> f64 {
        z * z / self.a + z
    }

    /// `F_{h₁(S)}(z) = F_S(z + √(az))`.
    pub fn h1_preimage(&self, z: f64) -> f64 {
        z + (self.a * z).sqrt()
    }
}

/// Solves `E[h₂(S)] = E[X₂]` for `a` by bisection against the lattice law of `S`.
pub fn two_crra_solution(sigma1: f64, s: &LatticeDistribution, ex2: f64) -> Result<TwoCrraSolution> {
    if !(sigma1.is_finite() && sigma1 > 0.0) {
        return Err(Error::config(format!("sigma1 = {sigma1} must be positive")));
    }
    let es = s.mean();
    if !(ex2 > 0.0 && ex2 < es) {
        return Err(Error::Infeasible {
            participant: "2".into(),
            reason: format!("E[X2] = {ex2} must lie in (0, E[S] = {es})"),
        });
    }
    let f = |a: f64| s.expect(|x| concave_share(a, x)) - ex2;
    let root = roots::bisect_increasing(f).map_err(|e| Error::Solver { participant: "2".into(), reason: e.to_string() })?;
    let a = root.x;
    let p = a.powf(sigma1);
    let alpha_tilde = if p.is_finite() { [p / (1.0 + p), 1.0 / (1.0 + p)] } else { [1.0, 0.0] };
    Ok(TwoCrraSolution { a, sigma1, alpha_tilde, residual: f(a).abs() })
}
