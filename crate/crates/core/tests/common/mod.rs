#![allow(dead_code)]

use afpo_core::dist::{compound_poisson_auto, negbinom_pmf, CompoundPoissonSpec, KMAX_CAP};
use afpo_core::{DisutilityModel, LatticeDistribution, Pool};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn compound(lambda: f64, r: u32, q: f64) -> LatticeDistribution {
    let sev = negbinom_pmf(r, q, KMAX_CAP).unwrap();
    compound_poisson_auto(&CompoundPoissonSpec::new(lambda, sev).unwrap(), KMAX_CAP).unwrap()
}

pub fn crra(sigma: f64) -> DisutilityModel {
    DisutilityModel::crra(sigma).unwrap()
}

/// Random non-degenerate pmf on `{0, …, len − 1}` with every entry positive.
pub fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> LatticeDistribution {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    LatticeDistribution::from_weights(1.0, w, "x").unwrap()
}

pub fn pool(members: Vec<(LatticeDistribution, DisutilityModel)>) -> Pool {
    Pool::new(members.into_iter().enumerate().map(|(i, (d, m))| (format!("p{}", i + 1), d, m)).collect()).unwrap()
}

/// Four compound-Poisson participants with equicautious CRRA, sigma = 2.
pub fn equicautious_pool() -> Pool {
    let spec = [(0.13, 1, 0.41), (1.97, 4, 0.47), (0.26, 4, 0.41), (0.01, 4, 0.45)];
    pool(spec.iter().map(|&(l, r, q)| (compound(l, r, q), crra(2.0))).collect())
}

/// Identical losses, CRRA sigma = 1, 2, 3, 4.
pub fn mixed_crra_pool() -> Pool {
    pool((1..=4).map(|s| (compound(0.26, 4, 0.47), crra(s as f64))).collect())
}

/// Three participants; participant 2 has negative-binomial severity `(r2, q2)`.
pub fn convex_pool(r2: u32, q2: f64) -> Pool {
    let spec = [(0.1, 2, 0.42), (0.4, r2, q2), (0.2, 6, 0.45)];
    pool(spec.iter().map(|&(l, r, q)| (compound(l, r, q), crra(2.0))).collect())
}

/// Severity parameters of the baseline and the three variations.
pub const CONVEX_CASES: [(u32, f64); 4] = [(7, 0.5), (3, 0.3), (2, 2.0 / 9.0), (13, 0.65)];

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
