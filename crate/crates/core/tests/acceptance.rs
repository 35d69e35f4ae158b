//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always
//! printed; exits non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use afpo_core::config::{generate_pool, DisutilitySpec, LossSpec, SeveritySpec};
use afpo_core::dist::{aggregate, convolve, discretize_gamma};
use afpo_core::oracles::{proportional_rule, two_crra_solution};
use afpo_core::solver::{hilbert_distance, psi, shares_at, verify_contraction};
use afpo_core::stochorder::{check_conjecture, ConjectureOutcome, Verdict};
use afpo_core::{iterate, FixedPointReport, LatticeDistribution, Pool, SharingRule, SolverSettings, WeightVector};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Residuals of every converged solve in the suite.
#[derive(Default)]
struct Audit {
    solves: usize,
    worst_fairness: f64,
    worst_fairness_at: String,
    worst_eigen: f64,
    worst_eigen_at: String,
    unconverged: Vec<String>,
}

impl Audit {
    fn solve(&mut self, label: &str, pool: &Pool, settings: &SolverSettings) -> (SharingRule, FixedPointReport) {
        let (rule, report) = iterate(pool, settings).unwrap_or_else(|e| panic!("{label}: {e}"));
        if !report.converged {
            self.unconverged.push(label.to_string());
            return (rule, report);
        }
        self.solves += 1;
        for (r, ex) in rule.fairness_residuals.iter().zip(pool.expected_losses()) {
            let scaled = r.abs() / ex.max(1.0);
            if scaled > self.worst_fairness {
                self.worst_fairness = scaled;
                self.worst_fairness_at = label.to_string();
            }
        }
        if report.eigen_residual > self.worst_eigen {
            self.worst_eigen = report.eigen_residual;
            self.worst_eigen_at = label.to_string();
        }
        (rule, report)
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn defaults() -> SolverSettings {
    SolverSettings::default()
}

fn mean_proportional(audit: &mut Audit) -> Outcome {
    let started = Instant::now();
    let pool = equicautious_pool();
    let (rule, report) = audit.solve("equicautious", &pool, &defaults());
    let elapsed = started.elapsed();
    let slopes = proportional_rule(&pool.expected_losses()).unwrap();
    let exact = slopes.table(rule.step, rule.lattice_len());
    let err = rule.h.iter().zip(&exact).map(|(h, e)| max_abs_diff(h, e)).fold(0.0, f64::max);
    let bound = 1e-6 * pool.aggregate().max_support();
    let last = report.distance_trace.last().copied().unwrap_or(f64::NAN);
    outcome(
        report.converged && last < 1e-14 && report.iterations <= 2 && err <= bound && elapsed < Duration::from_secs(5),
        format!(
            "iterations {}, final distance {last:.1e}, max |h - c s| {err:.1e} (bound {bound:.1e}), {:.2}s",
            report.iterations,
            elapsed.as_secs_f64()
        ),
    )
}

fn one_step(_: &mut Audit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(2..=10);
        let sigma = rng.random_range(0.5..4.0);
        let members = (0..n).map(|_| {
            let len = rng.random_range(3..=8);
            (random_pmf(&mut rng, len), crra(sigma))
        });
        let pool = pool(members.collect());
        let a1 = psi(&WeightVector::uniform(n), &pool).unwrap();
        let a2 = psi(&a1, &pool).unwrap();
        worst = worst.max(a2.euclidean_distance(&a1));
    }
    outcome(worst < 1e-10, format!("max ||psi(a1) - a1||_2 = {worst:.1e} over 10 pools"))
}

fn two_crra_oracle(audit: &mut Audit) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut alpha_gap, mut h_gap_scaled): (f64, f64) = (0.0, 0.0);
    let mut max_iter = 0;
    for trial in 0..20 {
        let sigma1 = rng.random_range(0.5..3.0);
        let (l1, l2) = (rng.random_range(3..=7), rng.random_range(3..=7));
        let pool = pool(vec![(random_pmf(&mut rng, l1), crra(sigma1)), (random_pmf(&mut rng, l2), crra(2.0 * sigma1))]);
        let (rule, report) = audit.solve(&format!("two-crra #{trial}"), &pool, &defaults());
        max_iter = max_iter.max(report.iterations);
        let sol = two_crra_solution(sigma1, pool.aggregate(), pool.expected_losses()[1]).unwrap();
        alpha_gap = alpha_gap.max(max_abs_diff(rule.alpha.as_slice(), &sol.alpha_tilde));
        let h1: Vec<f64> = (0..rule.lattice_len()).map(|k| sol.h1(rule.value(k))).collect();
        let h2: Vec<f64> = (0..rule.lattice_len()).map(|k| sol.h2(rule.value(k))).collect();
        let gap = max_abs_diff(&rule.h[0], &h1).max(max_abs_diff(&rule.h[1], &h2));
        h_gap_scaled = h_gap_scaled.max(gap / pool.aggregate().max_support());
    }
    let elapsed = started.elapsed();
    outcome(
        alpha_gap <= 1e-8 && h_gap_scaled <= 1e-6 && elapsed < Duration::from_secs(10) && audit.unconverged.is_empty(),
        format!(
            "max alpha gap {alpha_gap:.1e}, max h gap / max S {h_gap_scaled:.1e}, up to {max_iter} iterations, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn listed_eight_pool(seed: u64) -> Pool {
    let mut cfg = generate_pool(seed, 1000).unwrap();
    let lambda = [0.090, 0.430, 0.045, 0.003, 0.009, 0.041, 0.029, 0.147];
    let q = [0.419, 0.493, 0.480, 0.401, 0.491, 0.441, 0.430, 0.418];
    let r = [1, 4, 4, 4, 5, 2, 2, 4];
    let gamma = [3.0, 2.0, 5.0, 9.0, 8.0, 4.0, 1.0, 9.0];
    for i in 0..8 {
        let p = &mut cfg.participants[i];
        p.loss = LossSpec::CompoundPoisson { lambda: lambda[i], severity: SeveritySpec::Negbinom { r: r[i], q: q[i] } };
        p.disutility = DisutilitySpec::Exp { gamma: gamma[i] };
    }
    cfg.build_pool().unwrap()
}

fn large_pool(audit: &mut Audit) -> Outcome {
    let started = Instant::now();
    let pool = listed_eight_pool(1);
    let (rule, report) = audit.solve("n = 1000", &pool, &defaults());
    let elapsed = started.elapsed();
    let ex = &pool.expected_losses()[..8];
    let alpha = &rule.alpha.as_slice()[..8];
    let argmax_ex = (0..8).max_by(|a, b| ex[*a].total_cmp(&ex[*b])).unwrap();
    let argmin_alpha = (0..8).min_by(|a, b| alpha[*a].total_cmp(&alpha[*b])).unwrap();
    let last = report.distance_trace.last().copied().unwrap_or(f64::NAN);
    outcome(
        report.converged
            && last < 1e-14
            && report.iterations <= 5
            && elapsed < Duration::from_secs(120)
            && argmax_ex == argmin_alpha
            && argmin_alpha == 1,
        format!(
            "iterations {}, final distance {last:.1e}, {:.1}s; largest E[X] among first 8: p{}, smallest alpha: p{} ({:.1e})",
            report.iterations,
            elapsed.as_secs_f64(),
            argmax_ex + 1,
            argmin_alpha + 1,
            alpha[argmin_alpha]
        ),
    )
}

fn mixed_pool(rng: &mut ChaCha8Rng) -> Pool {
    let n = rng.random_range(2..=5);
    let members = (0..n)
        .map(|_| {
            let loss = if rng.random_bool(0.5) {
                compound(rng.random_range(0.05..1.0), rng.random_range(1..=6), rng.random_range(0.4..0.5))
            } else {
                let len = rng.random_range(3..=10);
                random_pmf(rng, len)
            };
            let model = if rng.random_bool(0.5) {
                crra(rng.random_range(0.5..4.0))
            } else {
                afpo_core::DisutilityModel::exp_type(rng.random_range(1.0..10.0)).unwrap()
            };
            (loss, model)
        })
        .collect();
    pool(members)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    WeightVector::new((0..n).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap().normalized()
}

fn uniqueness(audit: &mut Audit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for p in 0..5 {
        let pool = mixed_pool(&mut rng);
        let fixed: Vec<WeightVector> = (0..3)
            .map(|s| {
                let settings = SolverSettings { initial: Some(random_simplex(&mut rng, pool.len())), ..defaults() };
                audit.solve(&format!("uniqueness pool {p} start {s}"), &pool, &settings).0.alpha
            })
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max(hilbert_distance(&fixed[i], &fixed[j]).unwrap());
            }
        }
    }
    outcome(worst <= 1e-8, format!("max Hilbert distance between fixed points {worst:.1e} (5 pools x 3 starts)"))
}

fn contraction(_: &mut Audit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let pools = [mixed_crra_pool(), mixed_pool(&mut rng), mixed_pool(&mut rng)];
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    let mut holds = true;
    for (i, p) in pools.iter().enumerate() {
        let r = verify_contraction(p, 200, 100 + i as u64).unwrap();
        worst = worst.max(r.worst_ratio);
        evaluated += r.evaluated;
        holds &= r.holds;
    }
    outcome(holds && worst < 1.0, format!("{evaluated} pairs, worst ratio {worst:.4}"))
}

fn eigenvalue(audit: &mut Audit) -> Outcome {
    outcome(
        audit.solves > 0 && audit.worst_eigen <= 1e-8,
        format!(
            "worst ||phi(a*) - a*||_inf / ||a*||_inf = {:.1e} ({}) over {} fixed points",
            audit.worst_eigen, audit.worst_eigen_at, audit.solves
        ),
    )
}

fn fairness(audit: &mut Audit) -> Outcome {
    outcome(
        audit.solves > 0 && audit.worst_fairness <= 1e-10 && audit.unconverged.is_empty(),
        format!(
            "worst |E[h(S)] - E[X]| / max(1, E[X]) = {:.1e} ({}) over {} solves{}",
            audit.worst_fairness,
            audit.worst_fairness_at,
            audit.solves,
            if audit.unconverged.is_empty() { String::new() } else { format!("; unconverged: {:?}", audit.unconverged) }
        ),
    )
}

fn ode(audit: &mut Audit) -> Outcome {
    let pool = mixed_crra_pool();
    let (rule, _) = audit.solve("mixed crra", &pool, &defaults());
    let models: Vec<_> = pool.participants().iter().map(|p| p.model.clone()).collect();
    let pmf = pool.aggregate().pmf();
    let mut worst: f64 = 0.0;
    let mut lattice_worst: f64 = 0.0;
    let mut points = 0;
    for k in 1..rule.lattice_len() - 1 {
        if pmf[k] <= 0.0 {
            continue;
        }
        points += 1;
        let s = rule.value(k);
        let eta = 1e-4 * rule.step;
        let up = shares_at(&pool, &rule.alpha, s + eta).unwrap();
        let down = shares_at(&pool, &rule.alpha, s - eta).unwrap();
        let t: Vec<f64> = models.iter().zip(&rule.h).map(|(m, h)| m.risk_tolerance(h[k]).unwrap()).collect();
        let total: f64 = t.iter().sum();
        for i in 0..models.len() {
            let rhs = t[i] / total;
            let fd = (up[i] - down[i]) / (2.0 * eta);
            worst = worst.max((fd - rhs).abs() / rhs);
            let lattice = (rule.h[i][k + 1] - rule.h[i][k - 1]) / (2.0 * rule.step);
            lattice_worst = lattice_worst.max((lattice - rhs).abs() / rhs);
        }
    }
    outcome(
        worst <= 1e-3,
        format!("max relative slope error {worst:.1e} at {points} interior points (lattice central differences: {lattice_worst:.1e})"),
    )
}

fn convex_order(_: &mut Audit) -> Outcome {
    let pools: Vec<Pool> = CONVEX_CASES.iter().map(|&(r, q)| convex_pool(r, q)).collect();
    // (first, second, crossing in S, verdict for the first)
    let expected = [
        (0, 1, 9.0, Verdict::CxSmaller),
        (0, 2, 9.0, Verdict::CxSmaller),
        (0, 3, 8.0, Verdict::CxLarger),
        (1, 2, 10.0, Verdict::CxSmaller),
        (1, 3, 8.0, Verdict::CxLarger),
        (2, 3, 9.0, Verdict::CxLarger),
    ];
    let names = ["base", "c1", "c2", "c3"];
    let mut pass = true;
    let mut found = Vec::new();
    for (a, b, at, verdict) in expected {
        let rep = check_conjecture(&pools[a], &pools[b], &defaults()).unwrap();
        let mut locs = Vec::new();
        for p in &rep.participants {
            let ok = p.report.sign_changes == 1
                && p.report.verdict == verdict
                && p.aggregate_locations.len() == 1
                && (p.aggregate_locations[0] - at).abs() <= pools[a].step();
            pass &= ok;
            locs.push(p.aggregate_locations.first().copied().unwrap_or(f64::NAN));
        }
        pass &= rep.outcome == ConjectureOutcome::Consistent;
        let uniform = locs.iter().all(|l| *l == locs[0]);
        found.push(format!("{}-{}: S={}{}", names[a], names[b], if uniform { locs[0] } else { f64::NAN }, if uniform { "" } else { "*" }));
    }
    outcome(pass, format!("one crossing per participant, {}", found.join(", ")))
}

fn brute_force(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn fft(_: &mut Audit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (la, lb) = (rng.random_range(1..=64), rng.random_range(1..=64));
        let a = LatticeDistribution::from_weights(1.0, (0..la).map(|_| rng.random::<f64>() + 1e-3).collect(), "a").unwrap();
        let b = LatticeDistribution::from_weights(1.0, (0..lb).map(|_| rng.random::<f64>() + 1e-3).collect(), "b").unwrap();
        let c = convolve(&a, &b).unwrap();
        let exact = brute_force(a.pmf(), b.pmf());
        worst = worst.max(max_abs_diff(c.pmf(), &exact)).max((c.len() as f64 - exact.len() as f64).abs());
    }
    let unit = LatticeDistribution::point_mass(1.0, 1, "d").unwrap();
    let agg = aggregate(&[unit.clone(), unit.clone(), unit]).unwrap();
    outcome(worst <= 1e-12 && agg.pmf()[3] == 1.0, format!("max entrywise error {worst:.1e} over 100 pairs"))
}

fn gamma_instance(_: &mut Audit) -> Outcome {
    let delta = 0.1;
    let law = |shape: f64, rate: f64| discretize_gamma(shape, rate, delta, 1 << 20).unwrap();
    let sigma1 = 1.0;
    // S ~ Gamma(6, 2) and S~ ~ Gamma(3, 1): same mean, larger shape is less variable
    let narrow = pool(vec![(law(2.0, 2.0), crra(sigma1)), (law(4.0, 2.0), crra(2.0 * sigma1))]);
    let wide = pool(vec![(law(1.0, 1.0), crra(sigma1)), (law(2.0, 1.0), crra(2.0 * sigma1))]);
    let rep = check_conjecture(&narrow, &wide, &defaults()).unwrap();
    let verdicts: Vec<Verdict> = rep.participants.iter().map(|p| p.report.verdict).collect();
    outcome(
        rep.aggregate.verdict == Verdict::CxSmaller && verdicts.iter().all(|v| *v == Verdict::CxSmaller),
        format!("aggregate {:?}, participants {:?}", rep.aggregate.verdict, verdicts),
    )
}

fn main() -> ExitCode {
    type Criterion = fn(&mut Audit) -> Outcome;
    // fairness and eigenvalue checks audit every solve, so they run last
    let criteria: [(usize, &str, Criterion); 12] = [
        (1, "mean-proportional reproduction", mean_proportional),
        (2, "one-step convergence", one_step),
        (3, "two-participant closed form", two_crra_oracle),
        (5, "large-pool scale", large_pool),
        (6, "uniqueness of the fixed point", uniqueness),
        (7, "Hilbert contraction", contraction),
        (9, "risk-tolerance ODE", ode),
        (10, "convex-order illustration", convex_order),
        (11, "FFT correctness", fft),
        (12, "gamma convex-order instance", gamma_instance),
        (4, "fairness at machine precision", fairness),
        (8, "eigenvalue one", eigenvalue),
    ];
    let mut audit = Audit::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = criteria
        .iter()
        .map(|(id, name, run)| {
            let started = Instant::now();
            let out = run(&mut audit);
            (*id, *name, out, started.elapsed().as_secs_f64())
        })
        .collect();
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, out, secs) in &results {
        println!("criterion {id:>2} {:<4} {name}: {} [{secs:.2}s]", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
