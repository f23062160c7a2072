//! Parameterized one-dimensional map families and orbit iteration.
//!
//! A family is either of bounded-factor form `g(r, y) = r * f(y)` with
//! `|f| <= 1`, or a general map `g(r, y)` that orbits must not leave a
//! domain interval for (the logistic map lives on `[0, 1]`).

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Slack allowed around a general family's domain before an orbit counts as escaped.
pub const ESCAPE_TOL: f64 = 1e-12;

/// Sign selecting one of the two curves of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// `±x`, using negation rather than multiplication so `Minus` is exact.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Branch::Plus => x,
            Branch::Minus => -x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    pub fn parse(s: &str) -> Option<Branch> {
        match s {
            "plus" | "+" => Some(Branch::Plus),
            "minus" | "-" => Some(Branch::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    BoundedFactor,
    General1d,
}

type ScalarFn = fn(f64) -> f64;

#[derive(Clone, Copy, Debug)]
enum Law {
    Factor {
        f: ScalarFn,
        df: ScalarFn,
    },
    General {
        g: fn(f64, f64) -> f64,
        dg: fn(f64, f64) -> f64,
    },
}

/// A one-parameter family of maps `y -> g(r, y)`.
#[derive(Clone, Copy, Debug)]
pub struct MapFamily {
    name: &'static str,
    law: Law,
    factor_odd: bool,
    domain: (f64, f64),
    critical_point: Option<f64>,
}

// sin evaluated on |y| so that oddness holds bit-for-bit, signed zeros included.
fn odd_sin(y: f64) -> f64 {
    if y.is_sign_negative() {
        -(-y).sin()
    } else {
        y.sin()
    }
}

fn rational_odd(y: f64) -> f64 {
    2.0 * y / (1.0 + y * y)
}

fn rational_odd_deriv(y: f64) -> f64 {
    let d = 1.0 + y * y;
    2.0 * (1.0 - y * y) / (d * d)
}

fn logistic(r: f64, y: f64) -> f64 {
    r * y * (1.0 - y)
}

fn logistic_deriv(r: f64, y: f64) -> f64 {
    r * (1.0 - 2.0 * y)
}

impl MapFamily {
    /// `g(r, y) = r sin y`.
    pub fn sine() -> Self {
        Self::bounded_factor("sine", odd_sin, f64::cos, true)
    }

    /// `g(r, y) = r * 2y / (1 + y^2)`, an odd factor onto `[-1, 1]` peaking at `y = 1`.
    pub fn rational_odd() -> Self {
        Self::bounded_factor("rational-odd", rational_odd, rational_odd_deriv, true)
    }

    /// `g(r, y) = r y (1 - y)` on `[0, 1]`.
    pub fn logistic() -> Self {
        Self::general("logistic", logistic, logistic_deriv, (0.0, 1.0), Some(0.5))
    }

    /// Bounded-factor family `g(r, y) = r * f(y)`.
    ///
    /// `f` must map onto `[-1, 1]`; `odd` must only be set when `f(-y) == -f(y)`
    /// holds exactly in floating point, since the raster symmetry relies on it.
    pub fn bounded_factor(
        name: &'static str,
        f: fn(f64) -> f64,
        df: fn(f64) -> f64,
        odd: bool,
    ) -> Self {
        MapFamily {
            name,
            law: Law::Factor { f, df },
            factor_odd: odd,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            critical_point: None,
        }
    }

    /// General family whose orbits must stay inside `domain`.
    pub fn general(
        name: &'static str,
        g: fn(f64, f64) -> f64,
        dg: fn(f64, f64) -> f64,
        domain: (f64, f64),
        critical_point: Option<f64>,
    ) -> Self {
        MapFamily {
            name,
            law: Law::General { g, dg },
            factor_odd: false,
            domain,
            critical_point,
        }
    }

    /// Looks up one of the builtin families.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sine" => Some(Self::sine()),
            "logistic" => Some(Self::logistic()),
            "rational-odd" => Some(Self::rational_odd()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn kind(&self) -> FamilyKind {
        match self.law {
            Law::Factor { .. } => FamilyKind::BoundedFactor,
            Law::General { .. } => FamilyKind::General1d,
        }
    }

    pub fn is_bounded_factor(&self) -> bool {
        self.kind() == FamilyKind::BoundedFactor
    }

    pub fn factor_odd(&self) -> bool {
        self.factor_odd
    }

    pub fn domain_hint(&self) -> (f64, f64) {
        self.domain
    }

    pub fn critical_point(&self) -> Option<f64> {
        self.critical_point
    }

    /// `g(r, y)`, unchecked.
    #[inline]
    pub fn eval(&self, r: f64, y: f64) -> f64 {
        match self.law {
            Law::Factor { f, .. } => r * f(y),
            Law::General { g, .. } => g(r, y),
        }
    }

    /// `∂g/∂y (r, y)`.
    #[inline]
    pub fn deriv_y(&self, r: f64, y: f64) -> f64 {
        match self.law {
            Law::Factor { df, .. } => r * df(y),
            Law::General { dg, .. } => dg(r, y),
        }
    }

    /// The factor `f` and its derivative, for bounded-factor families.
    pub(crate) fn factor_fns(&self, op: &'static str) -> Result<(ScalarFn, ScalarFn)> {
        match self.law {
            Law::Factor { f, df } => Ok((f, df)),
            Law::General { .. } => Err(Error::Unsupported {
                op,
                family: self.name.to_string(),
            }),
        }
    }

    pub(crate) fn in_domain(&self, y: f64) -> bool {
        y.is_finite() && y >= self.domain.0 - ESCAPE_TOL && y <= self.domain.1 + ESCAPE_TOL
    }

    /// The value whose orbit traces the envelope: `r` for bounded-factor
    /// families, `g(r, c)` at the critical point `c` otherwise.
    pub fn critical_value(&self, r: f64) -> f64 {
        match self.law {
            Law::Factor { .. } => r,
            Law::General { .. } => match self.critical_point {
                Some(c) => self.eval(r, c),
                None => 0.5 * (self.domain.0 + self.domain.1),
            },
        }
    }

    /// `h_r^steps(y)` with strictly sequential evaluation.
    pub fn iterate(&self, r: f64, y: f64, steps: usize) -> f64 {
        (0..steps).fold(y, |y, _| self.eval(r, y))
    }

    /// `(h_r^q(y), d/dy h_r^q(y))`, the derivative by the chain rule along the orbit.
    pub fn iterate_with_derivative(&self, r: f64, y: f64, q: usize) -> (f64, f64) {
        let mut y = y;
        let mut d = 1.0;
        for _ in 0..q {
            d *= self.deriv_y(r, y);
            y = self.eval(r, y);
        }
        (y, d)
    }
}

/// Result of a single checked step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub value: f64,
    /// The input lay outside a general family's domain.
    pub escaped: bool,
}

pub fn eval_step(family: &MapFamily, r: f64, y: f64) -> Result<Step> {
    if !r.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite { r, y });
    }
    let escaped = !family.is_bounded_factor() && !family.in_domain(y);
    Ok(Step {
        value: family.eval(r, y),
        escaped,
    })
}

/// Post-transient samples of a single forward orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub r: f64,
    pub samples: Vec<f64>,
    pub transient_len: usize,
    pub kept_len: usize,
    /// Index of the first iterate (`0` is the seed) outside the domain.
    pub escaped_at: Option<usize>,
}

impl Orbit {
    pub fn escaped(&self) -> bool {
        self.escaped_at.is_some()
    }
}

/// Iterates `transient` times from `y0`, then records `keep` further iterates.
///
/// General families stop at the first iterate that leaves the domain; the
/// orbit is returned with the samples gathered so far and `escaped_at` set.
pub fn orbit(family: &MapFamily, r: f64, y0: f64, transient: usize, keep: usize) -> Result<Orbit> {
    if keep == 0 {
        return invalid("orbit needs keep >= 1");
    }
    if !r.is_finite() || !y0.is_finite() {
        return Err(Error::NonFinite { r, y: y0 });
    }
    let checked = !family.is_bounded_factor();
    let mut samples = Vec::with_capacity(keep);
    let mut escaped_at = None;
    if checked && !family.in_domain(y0) {
        escaped_at = Some(0);
    } else {
        let mut y = y0;
        for step in 1..=transient + keep {
            y = family.eval(r, y);
            if checked && !family.in_domain(y) {
                escaped_at = Some(step);
                break;
            }
            if step > transient {
                samples.push(y);
            }
        }
    }
    Ok(Orbit {
        r,
        kept_len: samples.len(),
        samples,
        transient_len: transient,
        escaped_at,
    })
}

/// `ψ^n_±(x, x)`: returns `(±x, u_n)` with `u_0 = x`, `u_{k+1} = (±x) f(u_k)`.
pub fn psi_n(family: &MapFamily, branch: Branch, x: f64, n: usize) -> Result<(f64, f64)> {
    family.factor_fns("psi_n")?;
    let a = branch.apply(x);
    Ok((a, family.iterate(a, x, n)))
}

/// Smallest `q <= max_period` with `|h^q(y) - y| < tol`, where `y` is the
/// orbit point reached after `transient` steps.
///
/// Scanning upward from `q = 1` makes the result minimal: no proper divisor
/// of a returned `q` passes the same test.
pub fn detect_period(
    family: &MapFamily,
    r: f64,
    y0: f64,
    transient: usize,
    max_period: usize,
    tol: f64,
) -> Result<Option<usize>> {
    if max_period == 0 {
        return invalid("max_period must be >= 1");
    }
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    let start = orbit(family, r, y0, transient, max_period)?;
    if let Some(step) = start.escaped_at {
        return Err(Error::Escaped { step });
    }
    // samples[k] = h^(k+1)(reference), reference = h^transient(y0)
    let reference = if transient == 0 {
        y0
    } else {
        family.iterate(r, y0, transient)
    };
    Ok(start
        .samples
        .iter()
        .position(|&z| (z - reference).abs() < tol)
        .map(|k| k + 1))
}
