//! Envelope curves: iterates of the critical value plotted over the parameter axis.
//!
//! The branch-`b` curve of order `n` is `E(r) = h_r^n(b r)`, so both branches
//! are functions of the same abscissa and `n = 0` gives the lines `±r`.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::map::{Branch, MapFamily};

/// Sampled envelope polyline with its derivative channel.
#[derive(Clone, Debug)]
pub struct EnvelopeCurve {
    pub family: MapFamily,
    pub order: usize,
    pub branch: Branch,
    pub r_samples: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl EnvelopeCurve {
    pub fn len(&self) -> usize {
        self.r_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_samples.is_empty()
    }

    /// `(r_min, r_max)` of the samples.
    pub fn r_range(&self) -> (f64, f64) {
        (self.r_samples[0], self.r_samples[self.r_samples.len() - 1])
    }
}

/// `E_n^branch(r)`.
pub fn envelope_value(family: &MapFamily, n: usize, branch: Branch, r: f64) -> Result<f64> {
    let (f, _) = family.factor_fns("envelope_value")?;
    Ok((0..n).fold(branch.apply(r), |u, _| r * f(u)))
}

/// `dE_n^branch/dr` via `d_{k+1} = f(u_k) + r f'(u_k) d_k`, `d_0 = ±1`.
pub fn envelope_derivative(family: &MapFamily, n: usize, branch: Branch, r: f64) -> Result<f64> {
    envelope_value_and_derivative(family, n, branch, r).map(|(_, d)| d)
}

/// Value and derivative in one forward pass; the value is bit-identical to
/// [`envelope_value`].
pub fn envelope_value_and_derivative(
    family: &MapFamily,
    n: usize,
    branch: Branch,
    r: f64,
) -> Result<(f64, f64)> {
    let (f, df) = family.factor_fns("envelope_derivative")?;
    let mut u = branch.apply(r);
    let mut d = branch.sign();
    for _ in 0..n {
        let fu = f(u);
        d = fu + r * df(u) * d;
        u = r * fu;
    }
    Ok((u, d))
}

/// Uniform grid of `points` samples, endpoints included.
pub(crate) fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + i as f64 * step
            }
        })
        .collect()
}

pub fn envelope_polyline(
    family: &MapFamily,
    n: usize,
    branch: Branch,
    r_min: f64,
    r_max: f64,
    points: usize,
) -> Result<EnvelopeCurve> {
    if points < 2 {
        return invalid("a polyline needs at least 2 points");
    }
    if !(r_min < r_max) || !r_min.is_finite() || !r_max.is_finite() {
        return invalid(format!("bad parameter window [{r_min}, {r_max}]"));
    }
    family.factor_fns("envelope_polyline")?;
    let r_samples = uniform_grid(r_min, r_max, points);
    let (values, derivs): (Vec<f64>, Vec<f64>) = r_samples
        .par_iter()
        .map(|&r| envelope_value_and_derivative(family, n, branch, r).expect("bounded-factor"))
        .unzip();
    Ok(EnvelopeCurve {
        family: *family,
        order: n,
        branch,
        r_samples,
        values,
        derivs,
    })
}
