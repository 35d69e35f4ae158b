use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{psi, Pool, WeightVector};
use crate::error::{Error, Result};

/// Hilbert projective distance `log(max_i(w_i/y_i) / min_i(w_i/y_i))`.
pub fn hilbert_distance(w: &WeightVector, y: &WeightVector) -> Result<f64> {
    if w.len() != y.len() {
        return Err(Error::domain(format!("lengths differ: {} vs {}", w.len(), y.len())));
    }
    if !w.is_positive() || !y.is_positive() {
        return Err(Error::domain("Hilbert distance needs strictly positive vectors"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, b) in w.as_slice().iter().zip(y.as_slice()) {
        let r = a / b;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((hi / lo).ln().max(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionViolation {
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub ratio: f64,
}

/// Outcome of sampling `d(ψ(w), ψ(y)) / d(w, y)` over random simplex pairs.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub holds: bool,
    pub worst_ratio: f64,
    /// Pairs with `d(w, y) > 0` that were evaluated.
    pub evaluated: usize,
    pub violations: Vec<ContractionViolation>,
}

fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    // flat Dirichlet via normalized exponentials
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    WeightVector(raw).normalized()
}

/// Samples `samples` pairs on the open simplex and checks strict Hilbert
/// contraction of `ψ` on each pair with positive distance.
pub fn verify_contraction(pool: &Pool, samples: usize, seed: u64) -> Result<ContractionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pool.len();
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    let mut violations = Vec::new();
    for _ in 0..samples {
        let w = random_simplex_point(&mut rng, n);
        let y = random_simplex_point(&mut rng, n);
        if !w.is_positive() || !y.is_positive() {
            continue;
        }
        let d = hilbert_distance(&w, &y)?;
        if d == 0.0 {
            continue;
        }
        evaluated += 1;
        let ratio = hilbert_distance(&psi(&w, pool)?, &psi(&y, pool)?)? / d;
        worst = worst.max(ratio);
        if !(ratio < 1.0) {
            violations.push(ContractionViolation { w: w.into_vec(), y: y.into_vec(), ratio });
        }
    }
    Ok(ContractionReport { holds: violations.is_empty(), worst_ratio: worst, evaluated, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let w = wv(&[0.2, 0.3, 0.5]);
        assert_eq!(hilbert_distance(&w, &w).unwrap(), 0.0);
        let d = hilbert_distance(&wv(&[2.0, 1.0]), &wv(&[1.0, 1.0])).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        assert!(hilbert_distance(&wv(&[0.0, 1.0]), &wv(&[1.0, 1.0])).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_ray_scaling(
            w in proptest::collection::vec(1e-3f64..10.0, 4),
            y in proptest::collection::vec(1e-3f64..10.0, 4),
            a in 1e-3f64..1e3,
            b in 1e-3f64..1e3,
        ) {
            let (w, y) = (wv(&w), wv(&y));
            let d = hilbert_distance(&w, &y).unwrap();
            let ds = hilbert_distance(&w.scaled(a), &y.scaled(b)).unwrap();
            prop_assert!((d - ds).abs() <= 1e-12 * d.max(1.0));
        }

        #[test]
        fn symmetric_and_triangle(
            w in proptest::collection::vec(1e-3f64..10.0, 3),
            y in proptest::collection::vec(1e-3f64..10.0, 3),
            z in proptest::collection::vec(1e-3f64..10.0, 3),
        ) {
            let (w, y, z) = (wv(&w), wv(&y), wv(&z));
            let dwy = hilbert_distance(&w, &y).unwrap();
            prop_assert!((dwy - hilbert_distance(&y, &w).unwrap()).abs() < 1e-12);
            prop_assert!(dwy <= hilbert_distance(&w, &z).unwrap() + hilbert_distance(&z, &y).unwrap() + 1e-12);
        }
    }
}
