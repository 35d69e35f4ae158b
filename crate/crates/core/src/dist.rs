//! Probability mass functions on the monetary lattice `{0, δ, 2δ, …}`.
//!
//! Individual losses `X_i` and the aggregate `S` are all represented as a
//! [`LatticeDistribution`]. Compound sums and convolutions go through the FFT;
//! continuous laws enter through [`discretize_gamma`].

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::sum::{self, Compensated};

/// Probability mass left beyond the last lattice point after truncation.
pub const TAIL_MASS: f64 = 1e-12;
/// Allowed deviation of the total mass from one.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Hard cap on the number of lattice points when grids auto-grow.
pub const KMAX_CAP: usize = 1 << 24;

/// A probability mass function on `{0, δ, …, k_max·δ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDistribution {
    step: f64,
    pmf: Vec<f64>,
    name: String,
}

impl LatticeDistribution {
    /// Validates and wraps a pmf. Entries must be finite and non-negative and
    /// sum to one within [`NORMALIZATION_TOL`].
    pub fn new(step: f64, pmf: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::config(format!("{name}: lattice step must be positive, got {step}")));
        }
        if pmf.is_empty() {
            return Err(Error::config(format!("{name}: empty pmf")));
        }
        if let Some((k, p)) = pmf.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::config(format!("{name}: pmf[{k}] = {p} is not a probability")));
        }
        let total = sum::sum(pmf.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::config(format!("{name}: pmf sums to {total}, not 1")));
        }
        Ok(Self { step, pmf, name })
    }

    /// Normalizes arbitrary non-negative weights into a pmf.
    pub fn from_weights(step: f64, weights: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config(format!("{name}: weights must be finite and non-negative")));
        }
        let total = sum::sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::config(format!("{name}: weights sum to zero")));
        }
        let pmf = weights.into_iter().map(|w| w / total).collect();
        Self::new(step, pmf, name)
    }

    /// Point mass at `k·δ`.
    pub fn point_mass(step: f64, k: usize, name: impl Into<String>) -> Result<Self> {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        Self::new(step, pmf, name)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of lattice points, `k_max + 1`.
    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn k_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Monetary value of lattice point `k`.
    pub fn value(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// `max[X] = k_max·δ`.
    pub fn max_support(&self) -> f64 {
        self.value(self.k_max())
    }

    /// Cumulative sums of the pmf.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = Compensated::new();
        self.pmf
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.value()
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        sum::sum(self.pmf.iter().enumerate().map(|(k, p)| p * self.value(k)))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        sum::sum(self.pmf.iter().enumerate().map(|(k, p)| {
            let d = self.value(k) - m;
            p * d * d
        }))
    }

    /// `E[g(X)]` with compensated summation in lattice order.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        sum::sum(
            self.pmf
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(k, p)| p * g(self.value(k))),
        )
    }

    /// True when all mass sits on one lattice point.
    pub fn is_degenerate(&self) -> bool {
        self.pmf.iter().filter(|p| **p > 0.0).count() <= 1
    }

    /// Drops the longest tail carrying less than `tail` mass and renormalizes.
    pub fn truncate_tail(mut self, tail: f64) -> Self {
        let k = tail_cut(&self.pmf, tail);
        self.pmf.truncate(k + 1);
        let total = sum::sum(self.pmf.iter().copied());
        if total > 0.0 && total != 1.0 {
            for p in &mut self.pmf {
                *p /= total;
            }
        }
        self
    }
}

/// Smallest index `K` such that the mass strictly beyond `K` is below `tail`.
fn tail_cut(pmf: &[f64], tail: f64) -> usize {
    let mut acc = Compensated::new();
    for k in (1..pmf.len()).rev() {
        acc.add(pmf[k]);
        if acc.value() >= tail {
            return k;
        }
    }
    0
}

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Negative binomial claim counts `C ~ NB(r, q)` on `{0, 1, 2, …}`:
/// `P(C = k) = C(k+r−1, k)·qʳ·(1−q)ᵏ`, mean `r(1−q)/q`.
///
/// Terms are generated until the remaining tail mass drops below
/// [`TAIL_MASS`]; the kept pmf is renormalized. Fails if that needs more than
/// `k_max` points. The lattice step is one monetary unit.
pub fn negbinom_pmf(r: u32, q: f64, k_max: usize) -> Result<LatticeDistribution> {
    if r == 0 {
        return Err(Error::config("negative binomial: r must be at least 1"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::config(format!("negative binomial: q = {q} not in (0, 1)")));
    }
    let name = format!("NB({r}, {q})");
    let mut pmf = Vec::new();
    let mut term = q.powi(r as i32);
    let mut acc = Compensated::new();
    let mut k = 0usize;
    loop {
        pmf.push(term);
        acc.add(term);
        if 1.0 - acc.value() < TAIL_MASS {
            break;
        }
        if k >= k_max {
            return Err(Error::Truncation(format!(
                "{name}: tail mass {:e} remains beyond k_max = {k_max}",
                1.0 - acc.value()
            )));
        }
        term *= (k as f64 + r as f64) / (k as f64 + 1.0) * (1.0 - q);
        k += 1;
    }
    LatticeDistribution::from_weights(1.0, pmf, name)
}

/// Frequency/severity description of a compound Poisson loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSpec {
    pub frequency_lambda: f64,
    pub severity: LatticeDistribution,
}

impl CompoundPoissonSpec {
    pub fn new(frequency_lambda: f64, severity: LatticeDistribution) -> Result<Self> {
        if !(frequency_lambda.is_finite() && frequency_lambda > 0.0) {
            return Err(Error::config(format!(
                "compound Poisson: lambda = {frequency_lambda} must be positive"
            )));
        }
        Ok(Self { frequency_lambda, severity })
    }

    pub fn mean(&self) -> f64 {
        self.frequency_lambda * self.severity.mean()
    }

    fn variance(&self) -> f64 {
        // λ·E[C²]
        self.frequency_lambda * self.severity.expect(|c| c * c)
    }
}

fn fft_forward(planner: &mut FftPlanner<f64>, data: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

fn fft_inverse_real(planner: &mut FftPlanner<f64>, mut spectrum: Vec<Complex64>, len: usize) -> Vec<f64> {
    let n = spectrum.len();
    planner.plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    spectrum
        .iter()
        .take(len)
        .map(|c| (c.re * scale).max(0.0))
        .collect()
}

/// Law of `Σ_{k=1}^{N} C_k`, `N ~ Poisson(λ)`, on the grid `{0, …, k_max}`.
///
/// Evaluates `exp(λ(ĉ − 1))` on the size-`k_max + 1` FFT grid. Mass that
/// wraps around the circular grid is detected by looking at the top quarter
/// of the result; if it carries at least [`TAIL_MASS`] the grid is too small.
/// The returned pmf is truncated by the tail rule.
pub fn compound_poisson(spec: &CompoundPoissonSpec, k_max: usize) -> Result<LatticeDistribution> {
    let n = k_max + 1;
    let sev = &spec.severity;
    if sev.len() > n {
        return Err(Error::config(format!(
            "compound Poisson: k_max = {k_max} is below the severity support {}",
            sev.k_max()
        )));
    }
    let mut planner = FftPlanner::new();
    let lambda = spec.frequency_lambda;
    let spectrum: Vec<Complex64> = fft_forward(&mut planner, sev.pmf(), n)
        .into_iter()
        .map(|c| ((c - 1.0) * lambda).exp())
        .collect();
    let pmf = fft_inverse_real(&mut planner, spectrum, n);

    let top = sum::sum(pmf[(3 * n) / 4..].iter().copied());
    if n < 4 || top >= TAIL_MASS {
        return Err(Error::Truncation(format!(
            "compound Poisson (lambda = {lambda}, severity {}): {top:e} mass near k_max = {k_max}; \
             increase k_max",
            sev.name()
        )));
    }
    let name = format!("CP({lambda}, {})", sev.name());
    Ok(LatticeDistribution::from_weights(sev.step(), pmf, name)?.truncate_tail(TAIL_MASS))
}

/// [`compound_poisson`] with the grid doubled until no aliasing is detected,
/// up to `cap` points.
pub fn compound_poisson_auto(spec: &CompoundPoissonSpec, cap: usize) -> Result<LatticeDistribution> {
    let step = spec.severity.step();
    let mean = spec.mean() / step;
    let sd = spec.variance().sqrt() / step;
    let guess = (mean + 12.0 * sd) as usize + 4 * spec.severity.len();
    let mut n = guess.max(64).next_power_of_two();
    loop {
        match compound_poisson(spec, n - 1) {
            Err(Error::Truncation(_)) if n < cap => n = (2 * n).min(cap),
            other => return other,
        }
    }
}

/// Law of the independent sum `A + B`, computed by zero-padded FFT.
pub fn convolve(a: &LatticeDistribution, b: &LatticeDistribution) -> Result<LatticeDistribution> {
    aggregate_named(&[a.clone(), b.clone()], format!("{}+{}", a.name(), b.name()))
}

/// Law of `S = Σ X_i` for independent `X_i`; support runs to `Σ max[X_i]`.
pub fn aggregate(pool: &[LatticeDistribution]) -> Result<LatticeDistribution> {
    if pool.len() < 2 {
        return Err(Error::DegeneratePool(format!(
            "aggregation needs at least two risks, got {}",
            pool.len()
        )));
    }
    aggregate_named(pool, "S".to_string())
}

fn aggregate_named(pool: &[LatticeDistribution], name: String) -> Result<LatticeDistribution> {
    let step = pool[0].step();
    if let Some(d) = pool.iter().find(|d| !same_step(d.step(), step)) {
        return Err(Error::config(format!(
            "mismatched lattice steps: {} has {} but {} has {step}",
            d.name(),
            d.step(),
            pool[0].name()
        )));
    }
    let len: usize = pool.iter().map(|d| d.k_max()).sum::<usize>() + 1;
    if len > KMAX_CAP {
        return Err(Error::Truncation(format!(
            "aggregate support of {len} points exceeds the cap of {KMAX_CAP}"
        )));
    }
    let n = len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut acc = fft_forward(&mut planner, pool[0].pmf(), n);
    for d in &pool[1..] {
        let spec = fft_forward(&mut planner, d.pmf(), n);
        for (x, y) in acc.iter_mut().zip(&spec) {
            *x *= y;
        }
    }
    let pmf = fft_inverse_real(&mut planner, acc, len);
    LatticeDistribution::from_weights(step, pmf, name)
}

/// How continuous probability mass is moved onto the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// First-order local moment matching; preserves the mean.
    #[default]
    MeanPreserving,
    /// Mass of `[kδ, (k+1)δ)` placed at `kδ` (stochastically smaller).
    Lower,
    /// Mass of `((k−1)δ, kδ]` placed at `kδ` (stochastically larger).
    Upper,
}

/// Mean-preserving discretization of `Γ(shape, rate)` on step `delta`.
pub fn discretize_gamma(shape: f64, rate: f64, delta: f64, k_max: usize) -> Result<LatticeDistribution> {
    discretize_gamma_with(shape, rate, delta, k_max, Discretization::MeanPreserving)
}

pub fn discretize_gamma_with(
    shape: f64,
    rate: f64,
    delta: f64,
    k_max: usize,
    method: Discretization,
) -> Result<LatticeDistribution> {
    let name = format!("Gamma({shape}, {rate})");
    if !(shape > 0.0 && rate > 0.0 && delta > 0.0) || !(shape.is_finite() && rate.is_finite() && delta.is_finite()) {
        return Err(Error::config(format!("{name}: shape, rate and delta must be positive")));
    }
    let law = Gamma::new(shape, rate).map_err(|e| Error::config(format!("{name}: {e}")))?;
    let shifted = Gamma::new(shape + 1.0, rate).map_err(|e| Error::config(format!("{name}: {e}")))?;
    let surv = |x: f64| law.sf(x);

    // first lattice point whose survival drops below the tail rule
    let mut hi = ((shape / rate) / delta).ceil().max(1.0) as usize;
    while surv(hi as f64 * delta) >= TAIL_MASS {
        if hi > k_max {
            return Err(Error::Truncation(format!(
                "{name}: tail mass {:e} remains beyond k_max = {k_max} at delta = {delta}",
                surv(k_max as f64 * delta)
            )));
        }
        hi = (hi * 2).min(k_max + 1);
    }
    let mut lo = 0usize;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if surv(mid as f64 * delta) < TAIL_MASS {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > k_max {
        return Err(Error::Truncation(format!("{name}: needs {hi} lattice points beyond k_max = {k_max}")));
    }
    let big_k = hi.max(1);
    let x = |k: usize| k as f64 * delta;

    let pmf: Vec<f64> = match method {
        Discretization::Lower => (0..=big_k)
            .map(|k| if k == big_k { surv(x(k)) } else { surv(x(k)) - surv(x(k + 1)) })
            .collect(),
        Discretization::Upper => (0..=big_k)
            .map(|k| if k == 0 { 0.0 } else if k == big_k { surv(x(k - 1)) } else { surv(x(k - 1)) - surv(x(k)) })
            .collect(),
        Discretization::MeanPreserving => {
            let mean = shape / rate;
            // ∫_a^b S(t) dt = [t S(t)]_a^b + mean·(S₁(a) − S₁(b)), S₁ the survival of Γ(shape+1, rate)
            let layer = |a: f64, b: f64| b * surv(b) - a * surv(a) + mean * (shifted.sf(a) - shifted.sf(b));
            (0..=big_k)
                .map(|k| {
                    let p = if k == 0 {
                        1.0 - layer(0.0, delta) / delta
                    } else if k == big_k {
                        layer(x(k - 1), x(k)) / delta
                    } else {
                        (layer(x(k - 1), x(k)) - layer(x(k), x(k + 1))) / delta
                    };
                    p.max(0.0)
                })
                .collect()
        }
    };
    LatticeDistribution::from_weights(delta, pmf, name)
}
