//! Intersections of envelope curves and certification of their periodicity.
//!
//! Where `E_n^{b1}(r) = E_m^{b2}(r)` the common ordinate lies on a cycle of
//! `h_r`: of period `p = m - n` for equal branches and `2p` for mixed ones.
//! [`find_intersections`] locates the crossings and touchings of the two
//! curves; [`verify_periodicity`] checks the cycle directly by refining a
//! fixed point of `h_r^q`.

use rayon::prelude::*;

use crate::diagram::{sample_unchecked_for, DiagramSpec};
use crate::envelope::{envelope_value, envelope_value_and_derivative, uniform_grid};
use crate::error::{invalid, Error, Result};
use crate::map::{Branch, MapFamily};

/// Scan points per unit of parameter length used by default.
pub const DEFAULT_GRID_DENSITY: f64 = 4096.0;
/// Default refinement tolerance on the parameter.
pub const DEFAULT_REFINE_TOL: f64 = 1e-12;
/// Default tolerance on `|h^q(b) - b|`.
pub const DEFAULT_CERT_TOL: f64 = 1e-8;

const MAX_NEWTON_STEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntersectionRecord {
    pub n: usize,
    pub m: usize,
    pub branches: (Branch, Branch),
    pub r_star: f64,
    /// Common ordinate `E_n^{b1}(r_star)`.
    pub b: f64,
    pub expected_period: usize,
    pub tangential: bool,
    pub delta_residual: f64,
}

impl IntersectionRecord {
    /// Record with `b`, the expected period and the residual filled in from the curves.
    pub fn at(
        family: &MapFamily,
        n: usize,
        m: usize,
        branches: (Branch, Branch),
        r_star: f64,
        tangential: bool,
    ) -> Result<Self> {
        if n >= m {
            return invalid(format!("need n < m, got n = {n}, m = {m}"));
        }
        let b = envelope_value(family, n, branches.0, r_star)?;
        let other = envelope_value(family, m, branches.1, r_star)?;
        Ok(IntersectionRecord {
            n,
            m,
            branches,
            r_star,
            b,
            expected_period: expected_period(n, m, branches),
            tangential,
            delta_residual: (b - other).abs(),
        })
    }
}

/// `m - n` for equal branches, `2 (m - n)` otherwise.
pub fn expected_period(n: usize, m: usize, branches: (Branch, Branch)) -> usize {
    let p = m - n;
    if branches.0 == branches.1 {
        p
    } else {
        2 * p
    }
}

/// Scan points for a window at the default density.
pub fn default_grid(r_min: f64, r_max: f64) -> usize {
    ((r_max - r_min) * DEFAULT_GRID_DENSITY).ceil().max(16.0) as usize
}

#[derive(Clone, Copy)]
struct Delta<'a> {
    family: &'a MapFamily,
    n: usize,
    m: usize,
    branches: (Branch, Branch),
}

impl Delta<'_> {
    /// `(Δ(r), Δ'(r))`.
    fn eval(&self, r: f64) -> (f64, f64) {
        let (a, da) = envelope_value_and_derivative(self.family, self.n, self.branches.0, r)
            .expect("checked");
        let (b, db) = envelope_value_and_derivative(self.family, self.m, self.branches.1, r)
            .expect("checked");
        (a - b, da - db)
    }

    fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Safeguarded Newton on a bracket `[lo, hi]` whose endpoints have opposite signs.
///
/// Returns the evaluated point with the smallest `|Δ|`.
fn refine_crossing(delta: Delta<'_>, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = delta.value(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let neg_lo = f_lo < 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    let mut last_step = hi - lo;
    for _ in 0..200 {
        let (f, df) = delta.eval(x);
        if f.abs() < best.1 {
            best = (x, f.abs());
        }
        if f == 0.0 {
            break;
        }
        if (f < 0.0) == neg_lo {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let inside = df != 0.0 && newton > lo.min(hi) && newton < lo.max(hi);
        let contracting = (2.0 * f).abs() <= (last_step * df).abs();
        let next = if inside && contracting {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = next - x;
        let done = last_step.abs() < 0.25 * tol || (hi - lo).abs() < tol;
        x = next;
        if done {
            let f = delta.value(x);
            if f.abs() < best.1 {
                best = (x, f.abs());
            }
            break;
        }
    }
    best.0
}

/// Bisection for a sign change of `Δ'` on `[lo, hi]`.
fn refine_extremum(delta: Delta<'_>, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let d_lo = delta.eval(lo).1;
    let d_hi = delta.eval(hi).1;
    if d_lo == 0.0 {
        return Some(lo);
    }
    if d_hi == 0.0 {
        return Some(hi);
    }
    if (d_lo < 0.0) == (d_hi < 0.0) {
        return None;
    }
    let neg_lo = d_lo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = delta.eval(mid).1;
        if d == 0.0 {
            return Some(mid);
        }
        if (d < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Clone, Copy)]
struct Candidate {
    r: f64,
    tangential: bool,
}

/// Locates the intersections of `E_n^{b1}` and `E_m^{b2}` on `[r_min, r_max]`.
///
/// Sign changes of `Δ = E_n^{b1} - E_m^{b2}` on a uniform grid of `grid`
/// points are refined by safeguarded Newton to a bracket below `tol`.
/// Interior minima of `|Δ|` without a sign change are refined by bisection on
/// `Δ'`; they are reported as tangential when `|Δ|` there is below `√tol`, or
/// split into two crossings when `Δ` turns out to change sign. Records within
/// `10 tol` of each other are merged, those within `√tol` of `r = 0` (where
/// every curve passes through the origin) are dropped, and the list is sorted
/// by `r_star`.
#[allow(clippy::too_many_arguments)]
pub fn find_intersections(
    family: &MapFamily,
    n: usize,
    m: usize,
    branches: (Branch, Branch),
    r_min: f64,
    r_max: f64,
    grid: usize,
    tol: f64,
) -> Result<Vec<IntersectionRecord>> {
    family.factor_fns("find_intersections")?;
    if n >= m {
        return invalid(format!("need n < m, got n = {n}, m = {m}"));
    }
    if grid < 16 {
        return invalid("scan grid needs at least 16 points");
    }
    if !(r_min < r_max) || !r_min.is_finite() || !r_max.is_finite() {
        return invalid(format!("bad parameter window [{r_min}, {r_max}]"));
    }
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    let delta = Delta {
        family,
        n,
        m,
        branches,
    };
    let sqrt_tol = tol.sqrt();
    let rs = uniform_grid(r_min, r_max, grid);
    let ds: Vec<f64> = rs.par_iter().map(|&r| delta.value(r)).collect();

    let crossings = (0..grid - 1).into_par_iter().filter_map(|i| {
        if ds[i] == 0.0 {
            Some(vec![Candidate {
                r: rs[i],
                tangential: false,
            }])
        } else if (ds[i] < 0.0) != (ds[i + 1] < 0.0) && ds[i + 1] != 0.0 {
            let r = refine_crossing(delta, rs[i], rs[i + 1], tol);
            Some(vec![Candidate {
                r,
                tangential: false,
            }])
        } else {
            None
        }
    });

    let touchings = (1..grid - 1).into_par_iter().filter_map(|i| {
        let (a, c, e) = (ds[i - 1], ds[i], ds[i + 1]);
        let same_sign = (a < 0.0) == (c < 0.0) && (c < 0.0) == (e < 0.0) && c != 0.0 && e != 0.0;
        if !same_sign || c.abs() > a.abs() || c.abs() > e.abs() {
            return None;
        }
        // a parabola sampled at spacing h rises by at least c h^2 at one
        // neighbour while the sampled minimum sits at most c h^2 / 4 above its floor
        let rise = (a.abs() - c.abs()).max(e.abs() - c.abs());
        if c.abs() > sqrt_tol + rise {
            return None;
        }
        let r = refine_extremum(delta, rs[i - 1], rs[i + 1], tol)?;
        let v = delta.value(r);
        if v != 0.0 && (v < 0.0) != (c < 0.0) {
            Some(vec![
                Candidate {
                    r: refine_crossing(delta, rs[i - 1], r, tol),
                    tangential: false,
                },
                Candidate {
                    r: refine_crossing(delta, r, rs[i + 1], tol),
                    tangential: false,
                },
            ])
        } else if v.abs() < sqrt_tol {
            Some(vec![Candidate {
                r,
                tangential: true,
            }])
        } else {
            None
        }
    });

    let mut found: Vec<Candidate> = crossings.flatten().collect();
    found.extend(touchings.flatten().collect::<Vec<_>>());
    if ds[grid - 1] == 0.0 {
        found.push(Candidate {
            r: rs[grid - 1],
            tangential: false,
        });
    }
    found.retain(|c| c.r.abs() >= sqrt_tol);
    found.sort_by(|a, b| a.r.total_cmp(&b.r));

    let mut records: Vec<IntersectionRecord> = Vec::with_capacity(found.len());
    for c in found {
        let rec = IntersectionRecord::at(family, n, m, branches, c.r, c.tangential)?;
        match records.last_mut() {
            Some(last) if (rec.r_star - last.r_star).abs() <= 10.0 * tol => {
                let better = (last.tangential && !rec.tangential)
                    || (last.tangential == rec.tangential
                        && rec.delta_residual < last.delta_residual);
                if better {
                    *last = rec;
                }
            }
            _ => records.push(rec),
        }
    }
    Ok(records)
}

/// Outcome of refining and checking the cycle through a record's ordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicityReport {
    pub record: IntersectionRecord,
    pub refined_b: f64,
    /// `|h^q(refined_b) - refined_b|` at `q = expected_period`.
    pub period_residual: f64,
    /// `|h^q(b) - b|` before refinement.
    pub initial_residual: f64,
    /// `|refined_b - b|`.
    pub shift: f64,
    pub newton_converged: bool,
    /// Smallest divisor `d` of `q` with `|h^d(refined_b) - refined_b| < tol`.
    pub minimal_period: Option<usize>,
}

impl PeriodicityReport {
    pub fn certified(&self) -> bool {
        self.newton_converged
            && self
                .minimal_period
                .is_some_and(|d| self.record.expected_period.is_multiple_of(d))
    }
}

fn divisors(q: usize) -> impl Iterator<Item = usize> {
    (1..=q).filter(move |&d| q.is_multiple_of(d))
}

/// Runs Newton on `F(y) = h^q(y) - y` from the record's ordinate, with `h = h_{r_star}`.
///
/// Convergence requires a residual below `tol`, the iterate staying inside
/// `[-|r| - 1, |r| + 1]`, and a total move of at most `√tol` from `b`, so a
/// run that wanders off to some other cycle is not accepted.
pub fn verify_periodicity(
    family: &MapFamily,
    record: &IntersectionRecord,
    tol: f64,
) -> Result<PeriodicityReport> {
    family.factor_fns("verify_periodicity")?;
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    let q = record.expected_period;
    if q == 0 {
        return invalid("expected period must be >= 1");
    }
    let (r, b) = (record.r_star, record.b);
    if !r.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite { r, y: b });
    }
    let residual = |y: f64| (family.iterate(r, y, q) - y).abs();
    let initial_residual = residual(b);
    let bound = r.abs() + 1.0;

    let mut y = b;
    let mut best = (b, initial_residual);
    let mut diverged = false;
    for _ in 0..MAX_NEWTON_STEPS {
        let (hq, dq) = family.iterate_with_derivative(r, y, q);
        let f = hq - y;
        if f.abs() < best.1 {
            best = (y, f.abs());
        }
        let fp = dq - 1.0;
        if f == 0.0 || fp == 0.0 || !fp.is_finite() {
            break;
        }
        let step = f / fp;
        y -= step;
        if !(y.abs() <= bound) {
            diverged = true;
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
            let res = residual(y);
            if res < best.1 {
                best = (y, res);
            }
            break;
        }
    }

    let (refined_b, period_residual) = best;
    let shift = (refined_b - b).abs();
    let newton_converged = !diverged && period_residual < tol && shift <= tol.sqrt();
    if !newton_converged {
        return Ok(PeriodicityReport {
            record: *record,
            refined_b: b,
            period_residual: initial_residual,
            initial_residual,
            shift: 0.0,
            newton_converged: false,
            minimal_period: None,
        });
    }
    let minimal_period = divisors(q).find(|&d| residual_at(family, r, refined_b, d) < tol);
    Ok(PeriodicityReport {
        record: *record,
        refined_b,
        period_residual,
        initial_residual,
        shift,
        newton_converged,
        minimal_period,
    })
}

fn residual_at(family: &MapFamily, r: f64, y: f64, d: usize) -> f64 {
    (family.iterate(r, y, d) - y).abs()
}

/// Distance from `E_{n_large}^+(r)` to the nearest attractor sample at `r`.
///
/// The samples follow `spec`'s iteration counts and seed policy, with
/// `family` substituted for the spec's own family.
pub fn limit_proximity(
    family: &MapFamily,
    n_large: usize,
    r: f64,
    spec: &DiagramSpec,
) -> Result<f64> {
    if n_large < spec.transient {
        return invalid(format!(
            "n_large = {n_large} must be at least the transient {}",
            spec.transient
        ));
    }
    let e = envelope_value(family, n_large, Branch::Plus, r)?;
    let samples = sample_unchecked_for(family, spec, r)?;
    samples
        .samples
        .iter()
        .map(|s| (s - e).abs())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Invalid("no attractor samples".into()))
}
