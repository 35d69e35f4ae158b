//! Convex-order diagnostics: CDFs of shared risks, sign changes of CDF
//! differences, and single-crossing verdicts.

use serde::Serialize;

use crate::dist::LatticeDistribution;
use crate::error::{Error, Result};
use crate::solver::{iterate, Pool, SharingRule, SolverSettings};
use crate::sum::Compensated;

/// Default tie tolerance for `|G − F|`.
pub const TIE_TOL: f64 = 1e-10;

/// Relative gap below which two jump points count as the same value.
const SNAP: f64 = 1e-9;

/// Right-continuous step CDF given by its jump points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCdf {
    /// Strictly increasing jump locations.
    pub points: Vec<f64>,
    /// `F(points[j])`.
    pub values: Vec<f64>,
}

impl DiscreteCdf {
    /// Builds a CDF from `(value, mass)` pairs sorted by value.
    fn from_sorted(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut points: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for (z, p) in atoms {
            if p == 0.0 {
                continue;
            }
            match points.last() {
                Some(&last) if z - last <= SNAP * last.abs().max(1.0) => *masses.last_mut().unwrap() += p,
                _ => {
                    points.push(z);
                    masses.push(p);
                }
            }
        }
        let mut acc = Compensated::new();
        let values = masses
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.value()
            })
            .collect();
        Self { points, values }
    }

    /// CDF of a lattice distribution.
    pub fn of(d: &LatticeDistribution) -> Self {
        Self::from_sorted(d.pmf().iter().enumerate().map(|(k, p)| (d.value(k), *p)))
    }

    /// `F(z)`, with `z` snapped onto a jump point within a relative `1e-9`.
    pub fn eval(&self, z: f64) -> f64 {
        let i = self.points.partition_point(|p| *p <= z + SNAP * z.abs().max(1.0));
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// Piecewise-linear interpolation of `F` between consecutive jump points.
    pub fn eval_linear(&self, z: f64) -> f64 {
        let i = self.points.partition_point(|p| *p <= z + SNAP * z.abs().max(1.0));
        if i == 0 {
            return 0.0;
        }
        if i == self.points.len() {
            return self.total_mass();
        }
        let (z0, z1) = (self.points[i - 1], self.points[i]);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        f0 + (f1 - f0) * ((z - z0) / (z1 - z0)).clamp(0.0, 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Σ z_j (F(z_j) − F(z_{j−1}))`.
    pub fn mean(&self) -> f64 {
        let mut acc = Compensated::new();
        let mut prev = 0.0;
        for (z, f) in self.points.iter().zip(&self.values) {
            acc.add(z * (f - prev));
            prev = *f;
        }
        acc.value()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let mut acc = Compensated::new();
        let mut prev = 0.0;
        for (z, f) in self.points.iter().zip(&self.values) {
            acc.add((z - m) * (z - m) * (f - prev));
            prev = *f;
        }
        acc.value()
    }
}

/// `F_{h(S)}(z) = Σ_{k: h(kδ) ≤ z} P(S = kδ)`.
///
/// `h[k]` is the share at lattice point `k` of `s`; it must be non-decreasing.
pub fn pushforward_cdf(h: &[f64], s: &LatticeDistribution) -> Result<DiscreteCdf> {
    if h.len() != s.len() {
        return Err(Error::domain(format!("share table has {} points, distribution {}", h.len(), s.len())));
    }
    if let Some(k) = h.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::domain(format!("share function decreases at lattice point {}", k + 1)));
    }
    Ok(DiscreteCdf::from_sorted(h.iter().copied().zip(s.pmf().iter().copied())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The first law is smaller in convex order.
    CxSmaller,
    /// The first law is larger in convex order.
    CxLarger,
    Inconclusive,
    Equal,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    /// Number of strict sign changes of `G − F`.
    pub sign_changes: usize,
    /// Last grid value before each sign change, i.e. the left end of the
    /// interval on which the curves cross.
    pub crossing_locations: Vec<f64>,
    /// `[last value with the old sign, first value with the new sign]`.
    pub crossing_intervals: Vec<[f64; 2]>,
    /// Strict signs of `G − F` in order of appearance, `+1` or `-1`.
    pub sign_sequence: Vec<i8>,
    /// Verdict about the law of `F` relative to the law of `G`.
    pub verdict: Verdict,
    /// `|E_F − E_G|`.
    pub mean_gap: f64,
    pub max_abs_difference: f64,
}

/// How CDFs are read between their jump points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Right-continuous step functions.
    Step,
    /// Linear interpolation between jump points, for laws whose atoms sit on
    /// different grids (shares of a discretized continuous loss).
    Linear,
}

#[derive(Debug, Clone, Copy)]
pub struct CrossingOptions {
    /// Ties: `|G − F| <= tol`.
    pub tol: f64,
    /// Largest mean gap for which a verdict is issued.
    pub mean_tol: f64,
    pub evaluation: Evaluation,
}

/// Counts sign changes of `G − F` between step CDFs.
///
/// Grid values with `|G − F| <= tol` are ties; a change is counted only
/// between strict signs on either side of a tie region. The verdict follows
/// the single-crossing criterion when the means agree within `mean_tol`.
pub fn count_sign_changes(f: &DiscreteCdf, g: &DiscreteCdf, tol: f64, mean_tol: f64) -> CrossingReport {
    count_sign_changes_with(f, g, &CrossingOptions { tol, mean_tol, evaluation: Evaluation::Step })
}

/// [`count_sign_changes`] on the union of both jump grids, reading the CDFs
/// as `options.evaluation` prescribes.
pub fn count_sign_changes_with(f: &DiscreteCdf, g: &DiscreteCdf, options: &CrossingOptions) -> CrossingReport {
    let CrossingOptions { tol, mean_tol, evaluation } = *options;
    let read = |c: &DiscreteCdf, z: f64| match evaluation {
        Evaluation::Step => c.eval(z),
        Evaluation::Linear => c.eval_linear(z),
    };
    let mut grid: Vec<f64> = f.points.iter().chain(&g.points).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|b, a| *b - *a <= SNAP * a.abs().max(1.0));

    let mut sign_sequence: Vec<i8> = Vec::new();
    let mut crossing_intervals = Vec::new();
    let mut last_strict = f64::NAN;
    let mut max_abs: f64 = 0.0;
    for z in &grid {
        let d = read(g, *z) - read(f, *z);
        max_abs = max_abs.max(d.abs());
        if d.abs() <= tol {
            continue;
        }
        let sign = if d > 0.0 { 1 } else { -1 };
        match sign_sequence.last() {
            Some(&last) if last == sign => {}
            Some(_) => {
                sign_sequence.push(sign);
                crossing_intervals.push([last_strict, *z]);
            }
            None => sign_sequence.push(sign),
        }
        last_strict = *z;
    }
    let crossing_locations = crossing_intervals.iter().map(|iv| iv[0]).collect();
    let sign_changes = sign_sequence.len().saturating_sub(1);
    let mean_gap = (f.mean() - g.mean()).abs();
    let verdict = if sign_sequence.is_empty() {
        Verdict::Equal
    } else if mean_gap > mean_tol || sign_changes != 1 {
        Verdict::Inconclusive
    } else if sign_sequence[0] > 0 {
        Verdict::CxSmaller
    } else {
        Verdict::CxLarger
    };
    CrossingReport { sign_changes, crossing_locations, crossing_intervals, sign_sequence, verdict, mean_gap, max_abs_difference: max_abs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjectureOutcome {
    /// Every participant's verdict matches the aggregate verdict.
    Consistent,
    /// Some participant's verdict contradicts a cx-comparable aggregate.
    Violated,
    /// The aggregates are not cx-comparable, or some participant verdict is inconclusive.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticipantCrossing {
    pub name: String,
    pub report: CrossingReport,
    /// Crossing locations mapped back to aggregate-loss values of the first
    /// pool: the smallest lattice value whose share reaches the crossing.
    pub aggregate_locations: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    pub aggregate: CrossingReport,
    pub participants: Vec<ParticipantCrossing>,
    pub outcome: ConjectureOutcome,
    pub converged: [bool; 2],
}

fn preimage_on_lattice(h: &[f64], step: f64, z: f64) -> f64 {
    let k = h.partition_point(|v| *v < z - SNAP * z.abs().max(1.0));
    k.min(h.len().saturating_sub(1)) as f64 * step
}

/// Compares the shared risks of two solved pools participant by participant.
///
/// Aggregates share one lattice and are compared as step CDFs; shared risks
/// are compared through their linearly interpolated CDFs.
pub fn compare_rules(a: (&Pool, &SharingRule), b: (&Pool, &SharingRule)) -> Result<(CrossingReport, Vec<ParticipantCrossing>)> {
    let (pool_a, rule_a) = a;
    let (pool_b, rule_b) = b;
    let mean_tol = 10.0 * pool_a.step();
    let aggregate = count_sign_changes(
        &DiscreteCdf::of(pool_a.aggregate()),
        &DiscreteCdf::of(pool_b.aggregate()),
        TIE_TOL,
        mean_tol,
    );
    // shares of the two pools put their atoms on different grids
    let shares = CrossingOptions { tol: TIE_TOL, mean_tol, evaluation: Evaluation::Linear };
    let participants = (0..pool_a.len())
        .map(|i| {
            let fa = pushforward_cdf(&rule_a.h[i], pool_a.aggregate())?;
            let fb = pushforward_cdf(&rule_b.h[i], pool_b.aggregate())?;
            let report = count_sign_changes_with(&fa, &fb, &shares);
            let aggregate_locations =
                report.crossing_locations.iter().map(|z| preimage_on_lattice(&rule_a.h[i], rule_a.step, *z)).collect();
            Ok(ParticipantCrossing { name: rule_a.names[i].clone(), report, aggregate_locations })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((aggregate, participants))
}

/// Solves both pools and checks whether each shared risk inherits the
/// convex order of the aggregates.
///
/// A falsifier: it reports what it sees on the given instance.
pub fn check_conjecture(pool_a: &Pool, pool_b: &Pool, settings: &SolverSettings) -> Result<ConjectureReport> {
    if pool_a.len() != pool_b.len() {
        return Err(Error::Precondition(format!("pools have {} and {} participants", pool_a.len(), pool_b.len())));
    }
    if pool_a.step() != pool_b.step() {
        return Err(Error::Precondition("pools use different lattice steps".into()));
    }
    let tol = 10.0 * pool_a.step();
    for (pa, pb) in pool_a.participants().iter().zip(pool_b.participants()) {
        if (pa.expected_loss - pb.expected_loss).abs() > tol {
            return Err(Error::Precondition(format!(
                "expected losses differ for {}: {} vs {}",
                pa.name, pa.expected_loss, pb.expected_loss
            )));
        }
    }
    let (rule_a, report_a) = iterate(pool_a, settings)?;
    let (rule_b, report_b) = iterate(pool_b, settings)?;
    let (aggregate, participants) = compare_rules((pool_a, &rule_a), (pool_b, &rule_b))?;

    let outcome = match aggregate.verdict {
        Verdict::Inconclusive => ConjectureOutcome::Inconclusive,
        expected => {
            if participants.iter().any(|p| p.report.verdict == Verdict::Inconclusive) {
                ConjectureOutcome::Inconclusive
            } else if participants.iter().all(|p| p.report.verdict == expected) {
                ConjectureOutcome::Consistent
            } else {
                ConjectureOutcome::Violated
            }
        }
    };
    Ok(ConjectureReport { aggregate, participants, outcome, converged: [report_a.converged, report_b.converged] })
}
