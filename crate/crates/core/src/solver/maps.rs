use rayon::prelude::*;

use super::{MultiplierCurve, Pool, WeightVector};
use crate::error::{Error, Result};
use crate::roots::{self, RootError};
use crate::sum::Compensated;

/// Lattice points solved sequentially (with warm starts) per parallel task.
/// Fixed so results do not depend on the thread count.
const CHUNK: usize = 256;

fn solver_error(participant: impl Into<String>, err: RootError) -> Error {
    Error::Solver { participant: participant.into(), reason: err.to_string() }
}

/// `J(s)` for weights `α`: the root of `z ↦ Σ I_i(z/α_i) − s`.
pub fn multiplier_at(pool: &Pool, alpha: &WeightVector, s: f64, guess: Option<f64>) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    if !(s > 0.0) {
        return Err(Error::domain(format!("aggregate loss {s} is negative")));
    }
    let members = pool.participants();
    let a = alpha.as_slice();
    let fdf = |z: f64| {
        let mut value = Compensated::new();
        let mut slope = 0.0;
        for (p, ai) in members.iter().zip(a) {
            let x = z / ai;
            value.add(p.model.inverse_marginal(x));
            slope += p.model.inverse_marginal_derivative(x) / ai;
        }
        value.add(-s);
        (value.value(), slope)
    };
    let root = roots::increasing_root(fdf, guess).map_err(|e| {
        // the family whose share saturates first is the one that cannot absorb s
        let z = match e {
            RootError::NoUpperBracket { last, .. } => last,
            _ => 1.0,
        };
        let culprit = members
            .iter()
            .zip(a)
            .min_by(|(p, ai), (q, bi)| {
                p.model.inverse_marginal(z / **ai).total_cmp(&q.model.inverse_marginal(z / **bi))
            })
            .map(|(p, _)| p.name.clone())
            .unwrap_or_default();
        solver_error(culprit, e)
    })?;
    if root.residual > 1e-10 * s.max(1.0) {
        return Err(Error::Solver {
            participant: "pool".into(),
            reason: format!("feasibility residual {:e} at s = {s}", root.residual),
        });
    }
    Ok(root.x)
}

/// `φ₁(α) = J` on every aggregate lattice point.
pub fn phi1(alpha: &WeightVector, pool: &Pool) -> Result<MultiplierCurve> {
    if alpha.len() != pool.len() {
        return Err(Error::config(format!("{} weights for {} participants", alpha.len(), pool.len())));
    }
    if !alpha.is_positive() {
        return Err(Error::domain("phi1 needs strictly positive weights"));
    }
    let step = pool.step();
    let len = pool.lattice_len();
    let starts: Vec<usize> = (0..len).step_by(CHUNK).collect();
    let chunks: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(len);
            let mut out = Vec::with_capacity(end - start);
            let mut guess = None;
            for k in start..end {
                let j = multiplier_at(pool, alpha, k as f64 * step, guess)?;
                if j > 0.0 {
                    guess = Some(j);
                }
                out.push(j);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(MultiplierCurve { step, values: chunks.concat() })
}

/// `φ₂(J)`: for each participant the weight `α_i` with `E[I_i(J(S)/α_i)] = E[X_i]`.
///
/// `J ≡ 0` maps to the zero vector.
pub fn phi2(curve: &MultiplierCurve, pool: &Pool) -> Result<WeightVector> {
    let pmf = pool.aggregate().pmf();
    if curve.values.len() != pmf.len() {
        return Err(Error::config("multiplier curve does not match the aggregate lattice"));
    }
    if curve.is_zero() {
        return WeightVector::new(vec![0.0; pool.len()]);
    }
    let support: Vec<(f64, f64)> = pmf
        .iter()
        .zip(&curve.values)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, j)| (*p, *j))
        .collect();

    let alpha = pool
        .participants()
        .par_iter()
        .map(|p| {
            let target = p.expected_loss;
            let max = p.loss.max_support();
            if !(target < max) {
                return Err(Error::Infeasible {
                    participant: p.name.clone(),
                    reason: format!("E[X] = {target} is not below max[X] = {max}"),
                });
            }
            let expect = |g: &dyn Fn(f64) -> f64| {
                let mut acc = Compensated::new();
                for (pk, j) in &support {
                    acc.add(pk * g(*j));
                }
                acc.value()
            };
            let alpha = match p.model.homogeneity() {
                // E[I(J/α)] = α^{-d}·E[I(J)]
                Some(d) => (expect(&|j| p.model.inverse_marginal(j)) / target).powf(1.0 / d),
                None => {
                    // increasing in the inverse weight b = 1/α
                    let fdf = |b: f64| {
                        let value = expect(&|j| p.model.inverse_marginal(j * b)) - target;
                        let slope = expect(&|j| p.model.inverse_marginal_derivative(j * b) * j);
                        (value, slope)
                    };
                    let root = roots::increasing_root(fdf, None).map_err(|e| solver_error(&p.name, e))?;
                    if root.residual > 1e-12 * target.max(1.0) {
                        return Err(Error::Solver {
                            participant: p.name.clone(),
                            reason: format!("fairness residual {:e}", root.residual),
                        });
                    }
                    1.0 / root.x
                }
            };
            Ok(alpha)
        })
        .collect::<Result<Vec<f64>>>()?;
    WeightVector::new(alpha)
}

/// `φ(α) = φ₂(φ₁(α))`.
pub fn phi(alpha: &WeightVector, pool: &Pool) -> Result<WeightVector> {
    phi2(&phi1(alpha, pool)?, pool)
}

/// `ψ(α) = φ(α)/‖φ(α)‖₁`.
pub fn psi(alpha: &WeightVector, pool: &Pool) -> Result<WeightVector> {
    Ok(phi(alpha, pool)?.normalized())
}
