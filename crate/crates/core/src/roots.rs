//! Scalar root finding for monotone functions on the half line.
//!
//! Every root the solver needs is the zero of a continuous, strictly
//! increasing function on `[0, ∞)`: the feasibility residual in the
//! multiplier, the fairness residual in an inverse weight, and the
//! fixed-point equation of the two-participant closed form. Brackets are
//! grown geometrically from `[0, 1]` (or from a warm-start guess) and the
//! iteration is Newton safeguarded by bisection inside the bracket.

const MAX_BRACKET_STEPS: usize = 2200;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    /// `f` stayed negative while the upper end grew past `f64::MAX`.
    NoUpperBracket { last: f64, value: f64 },
    /// Evaluation produced a NaN.
    NotFinite { x: f64 },
    /// Iteration limit reached before the bracket collapsed.
    IterationLimit { x: f64, residual: f64 },
}

impl std::fmt::Display for RootError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootError::NoUpperBracket { last, value } => write!(
                f,
                "no sign change found: residual still {value:e} at {last:e}"
            ),
            RootError::NotFinite { x } => write!(f, "residual is not finite at {x:e}"),
            RootError::IterationLimit { x, residual } => {
                write!(f, "iteration limit at {x:e} (residual {residual:e})")
            }
        }
    }
}

/// Converged root with its residual.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: f64,
    f_lo: f64,
    hi: f64,
    f_hi: f64,
}

impl Bracket {
    fn midpoint(&self) -> f64 {
        if self.lo > 0.0 && self.hi / self.lo > 4.0 {
            (self.lo * self.hi).sqrt()
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    fn collapsed(&self) -> bool {
        self.hi - self.lo <= 4.0 * f64::EPSILON * self.hi.abs()
            || self.midpoint() <= self.lo
            || self.midpoint() >= self.hi
    }
}

fn check(x: f64, v: f64) -> Result<f64, RootError> {
    if v.is_nan() {
        Err(RootError::NotFinite { x })
    } else {
        Ok(v)
    }
}

/// Grows a bracket `[lo, hi]` with `f(lo) <= 0 <= f(hi)` geometrically from `start`.
///
/// `f(0)` is assumed non-positive; the lower end shrinks towards zero and
/// falls back to `0` when it underflows.
fn bracket<F: Fn(f64) -> f64>(f: &F, start: f64) -> Result<Bracket, RootError> {
    let start = if start.is_finite() && start > 0.0 { start } else { 1.0 };
    let v = check(start, f(start))?;
    if v <= 0.0 {
        let (mut lo, mut f_lo) = (start, v);
        let mut hi = start * 2.0;
        for _ in 0..MAX_BRACKET_STEPS {
            if !hi.is_finite() {
                break;
            }
            let f_hi = check(hi, f(hi))?;
            if f_hi >= 0.0 {
                return Ok(Bracket { lo, f_lo, hi, f_hi });
            }
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
        }
        Err(RootError::NoUpperBracket { last: lo, value: f_lo })
    } else {
        let (mut hi, mut f_hi) = (start, v);
        let mut lo = start * 0.5;
        for _ in 0..MAX_BRACKET_STEPS {
            if lo == 0.0 {
                let f_lo = check(0.0, f(0.0))?;
                return Ok(Bracket { lo, f_lo, hi, f_hi });
            }
            let f_lo = check(lo, f(lo))?;
            if f_lo <= 0.0 {
                return Ok(Bracket { lo, f_lo, hi, f_hi });
            }
            hi = lo;
            f_hi = f_lo;
            lo *= 0.5;
        }
        let f_lo = check(0.0, f(0.0))?;
        Ok(Bracket { lo: 0.0, f_lo, hi, f_hi })
    }
}

/// Root of a strictly increasing `f` on `[0, ∞)` with `f(0) <= 0`.
///
/// `fdf` returns `(f(x), f'(x))`. Iterates until the Newton correction is
/// below a few ulps or the bracket collapses, so the result is accurate to
/// machine precision rather than to a caller tolerance; callers check the
/// returned residual against their own acceptance threshold.
pub fn increasing_root<F>(fdf: F, guess: Option<f64>) -> Result<Root, RootError>
where
    F: Fn(f64) -> (f64, f64),
{
    let f = |x: f64| fdf(x).0;
    let mut b = bracket(&f, guess.unwrap_or(1.0))?;
    if b.f_lo == 0.0 {
        return Ok(Root { x: b.lo, residual: 0.0, iterations: 0 });
    }
    if b.f_hi == 0.0 {
        return Ok(Root { x: b.hi, residual: 0.0, iterations: 0 });
    }

    let mut x = match guess {
        Some(g) if g > b.lo && g < b.hi => g,
        _ => {
            // secant start inside the bracket
            let t = b.lo - b.f_lo * (b.hi - b.lo) / (b.f_hi - b.f_lo);
            if t > b.lo && t < b.hi && t.is_finite() {
                t
            } else {
                b.midpoint()
            }
        }
    };
    let mut best = (x, f64::INFINITY);

    for it in 1..=MAX_ITER {
        let (v, dv) = fdf(x);
        check(x, v)?;
        if v.abs() < best.1 {
            best = (x, v.abs());
        }
        if v == 0.0 {
            return Ok(Root { x, residual: 0.0, iterations: it });
        }
        if v < 0.0 {
            b.lo = x;
            b.f_lo = v;
        } else {
            b.hi = x;
            b.f_hi = v;
        }
        if b.collapsed() {
            return Ok(Root { x: best.0, residual: best.1, iterations: it });
        }

        let newton = x - v / dv;
        let next = if dv > 0.0 && newton.is_finite() && newton > b.lo && newton < b.hi {
            newton
        } else {
            b.midpoint()
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * next.abs() {
            let (vn, _) = fdf(next);
            let (x_out, r_out) = if vn.abs() < best.1 { (next, vn.abs()) } else { best };
            return Ok(Root { x: x_out, residual: r_out, iterations: it + 1 });
        }
        x = next;
    }
    Err(RootError::IterationLimit { x: best.0, residual: best.1 })
}

/// Plain bisection for a strictly increasing `f` on `[0, ∞)` with `f(0) <= 0`.
///
/// Runs until the bracket cannot be split further in floating point.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F) -> Result<Root, RootError> {
    let mut b = bracket(&f, 1.0)?;
    let mut iterations = 0;
    while !b.collapsed() && iterations < 4 * MAX_ITER {
        iterations += 1;
        let m = b.midpoint();
        let v = check(m, f(m))?;
        if v == 0.0 {
            return Ok(Root { x: m, residual: 0.0, iterations });
        }
        if v < 0.0 {
            b.lo = m;
            b.f_lo = v;
        } else {
            b.hi = m;
            b.f_hi = v;
        }
    }
    let (x, residual) = if b.f_lo.abs() <= b.f_hi.abs() {
        (b.lo, b.f_lo.abs())
    } else {
        (b.hi, b.f_hi.abs())
    };
    Ok(Root { x, residual, iterations })
}
