//! Loss-side preferences: disutility `v`, marginal `v′`, its inverse `I`, and
//! risk tolerance `T = v′/v″`.

use crate::error::{Error, Result};
use crate::roots;

/// Piecewise-linear marginal disutility through `(s_k, v′(s_k))`.
///
/// The first knot must be `(0, 0)`; knots and values strictly increase.
/// Beyond the last knot the last slope is extended, so `v′` is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMarginal {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedMarginal {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::config("tabulated marginal needs at least two (s, v') pairs of equal length"));
        }
        if knots[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::config("tabulated marginal must start at (0, 0)"));
        }
        let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0] && w[1].is_finite());
        if !increasing(&knots) || !increasing(&values) {
            return Err(Error::config("tabulated marginal knots and values must strictly increase"));
        }
        Ok(Self { knots, values })
    }

    fn segment(&self, s: f64) -> usize {
        match self.knots.partition_point(|k| *k <= s) {
            0 => 0,
            i => (i - 1).min(self.knots.len() - 2),
        }
    }

    fn slope(&self, j: usize) -> f64 {
        (self.values[j + 1] - self.values[j]) / (self.knots[j + 1] - self.knots[j])
    }

    fn marginal(&self, s: f64) -> f64 {
        let j = self.segment(s);
        self.values[j] + self.slope(j) * (s - self.knots[j])
    }

    fn curvature(&self, s: f64) -> f64 {
        self.slope(self.segment(s))
    }

    fn disutility(&self, s: f64) -> f64 {
        // exact integral of the piecewise-linear marginal
        let mut total = 0.0;
        let j_end = self.segment(s);
        for j in 0..j_end {
            total += 0.5 * (self.values[j] + self.values[j + 1]) * (self.knots[j + 1] - self.knots[j]);
        }
        let a = self.knots[j_end];
        total + 0.5 * (self.values[j_end] + self.marginal(s)) * (s - a)
    }
}

/// Parametric family of a disutility model.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `v(s) = s^{1+σ}/(1+σ)`, `v′(s) = s^σ`, `I(z) = z^{1/σ}`.
    Crra { sigma: f64 },
    /// `v(s) = γ·exp(s/γ) − s`, `v′(s) = exp(s/γ) − 1`, `I(z) = γ·ln(1+z)`.
    ExpType { gamma: f64 },
    /// Piecewise-linear marginal, inverted numerically.
    Tabulated(TabulatedMarginal),
}

/// A participant's preferences over losses.
///
/// `domain_bound` is the participant's maximal loss `max[X_i]` (infinite until
/// the model joins a pool). A model is Inada compliant when `v′(0) = 0` and
/// `v′` diverges at the domain bound; none of the families here diverge at a
/// finite bound, so a model bound to a finite `max[X_i]` is flagged
/// non-compliant and its shares are not capped at `max[X_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisutilityModel {
    family: Family,
    domain_bound: f64,
}

impl DisutilityModel {
    pub fn crra(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::config(format!("CRRA: sigma = {sigma} must be positive")));
        }
        Ok(Self::from_family(Family::Crra { sigma }))
    }

    pub fn exp_type(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::config(format!("exponential-type: gamma = {gamma} must be positive")));
        }
        Ok(Self::from_family(Family::ExpType { gamma }))
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::from_family(Family::Tabulated(TabulatedMarginal::new(knots, values)?)))
    }

    fn from_family(family: Family) -> Self {
        Self { family, domain_bound: f64::INFINITY }
    }

    /// Binds the model to a participant's maximal loss.
    pub fn with_domain_bound(mut self, bound: f64) -> Self {
        self.domain_bound = bound;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    pub fn inada_compliant(&self) -> bool {
        self.domain_bound.is_infinite()
    }

    fn check_loss(&self, s: f64) -> Result<()> {
        if !(s >= 0.0) || s.is_infinite() {
            return Err(Error::domain(format!("loss {s} outside [0, ∞)")));
        }
        if self.inada_compliant() && s >= self.domain_bound {
            return Err(Error::domain(format!("loss {s} at or beyond max[X] = {}", self.domain_bound)));
        }
        Ok(())
    }

    /// `v(s)`.
    pub fn disutility(&self, s: f64) -> Result<f64> {
        self.check_loss(s)?;
        Ok(match &self.family {
            Family::Crra { sigma } => s.powf(1.0 + sigma) / (1.0 + sigma),
            Family::ExpType { gamma } => gamma * (s / gamma).exp() - s,
            Family::Tabulated(t) => t.disutility(s),
        })
    }

    /// Marginal disutility `v′(s)`.
    pub fn marginal(&self, s: f64) -> Result<f64> {
        self.check_loss(s)?;
        Ok(self.marginal_unchecked(s))
    }

    fn marginal_unchecked(&self, s: f64) -> f64 {
        match &self.family {
            Family::Crra { sigma } => s.powf(*sigma),
            Family::ExpType { gamma } => (s / gamma).exp_m1(),
            Family::Tabulated(t) => t.marginal(s),
        }
    }

    /// `v″(s)`.
    pub fn curvature(&self, s: f64) -> Result<f64> {
        self.check_loss(s)?;
        Ok(match &self.family {
            Family::Crra { sigma } => sigma * s.powf(sigma - 1.0),
            Family::ExpType { gamma } => (s / gamma).exp() / gamma,
            Family::Tabulated(t) => t.curvature(s),
        })
    }

    /// Inverse marginal `I(z)`, the unique `s ≥ 0` with `v′(s) = z`.
    ///
    /// Negative or NaN `z` maps to NaN; callers only pass `z ≥ 0`.
    pub fn inverse_marginal(&self, z: f64) -> f64 {
        if z == 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Crra { sigma } => z.powf(1.0 / sigma),
            Family::ExpType { gamma } => gamma * z.ln_1p(),
            Family::Tabulated(t) => {
                if !(z > 0.0) {
                    return f64::NAN;
                }
                roots::bisect_increasing(|s| t.marginal(s) - z).map(|r| r.x).unwrap_or(f64::NAN)
            }
        }
    }

    /// `I′(z) = 1 / v″(I(z))`.
    pub fn inverse_marginal_derivative(&self, z: f64) -> f64 {
        match &self.family {
            Family::Crra { sigma } => z.powf(1.0 / sigma - 1.0) / sigma,
            Family::ExpType { gamma } => gamma / (1.0 + z),
            Family::Tabulated(t) => 1.0 / t.curvature(self.inverse_marginal(z)),
        }
    }

    /// Exponent `d` with `I(c·z) = c^d·I(z)` for all `c, z > 0`, when the
    /// inverse marginal is a power function.
    pub fn homogeneity(&self) -> Option<f64> {
        match &self.family {
            Family::Crra { sigma } => Some(1.0 / sigma),
            _ => None,
        }
    }

    /// Risk tolerance `T(s) = v′(s)/v″(s)`; `T(0) = 0`.
    pub fn risk_tolerance(&self, s: f64) -> Result<f64> {
        self.check_loss(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.family {
            Family::Crra { sigma } => s / sigma,
            Family::ExpType { gamma } => -gamma * (-s / gamma).exp_m1(),
            Family::Tabulated(t) => t.marginal(s) / t.curvature(s),
        })
    }

    /// Short label used in reports.
    pub fn describe(&self) -> String {
        match &self.family {
            Family::Crra { sigma } => format!("crra(sigma={sigma})"),
            Family::ExpType { gamma } => format!("exp(gamma={gamma})"),
            Family::Tabulated(t) => format!("tabulated({} knots)", t.knots.len()),
        }
    }
}
