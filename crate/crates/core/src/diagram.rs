//! Bifurcation-diagram density rasters.
//!
//! Every column of the raster is one parameter value; its attractor samples
//! are binned along the state axis. Columns are computed independently and
//! merged by index, so the result does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::map::{orbit, MapFamily};

/// How initial conditions are chosen for every column.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPolicy {
    /// `{+r, -r}` for bounded-factor families; the single critical value otherwise.
    CriticalValuePair,
    /// Only the critical value (`+r` for bounded-factor families).
    CriticalValue,
    /// The same seeds in every column.
    Explicit(Vec<f64>),
    /// `count` uniform seeds per column, from `[-|r|, |r|]` or the family domain.
    Random { count: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct DiagramSpec {
    pub family: MapFamily,
    pub r_min: f64,
    pub r_max: f64,
    pub columns: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub rows: usize,
    pub transient: usize,
    pub keep: usize,
    pub init_policy: InitPolicy,
    /// Bin by `|x|` so that negation maps row `j` to row `rows - 1 - j` exactly.
    pub symmetric_bins: bool,
}

impl DiagramSpec {
    /// Spec over the given windows, with transient 1000, keep 500, paired
    /// critical-value seeds, and symmetric bins whenever the state window allows.
    pub fn new(
        family: MapFamily,
        (r_min, r_max): (f64, f64),
        columns: usize,
        (x_min, x_max): (f64, f64),
        rows: usize,
    ) -> Self {
        DiagramSpec {
            family,
            r_min,
            r_max,
            columns,
            x_min,
            x_max,
            rows,
            transient: 1000,
            keep: 500,
            init_policy: InitPolicy::CriticalValuePair,
            symmetric_bins: x_min == -x_max && rows.is_multiple_of(2),
        }
    }

    /// The sine diagram over `r, x ∈ [-2π, 2π]` at 2000×1200.
    pub fn sine_default() -> Self {
        use std::f64::consts::TAU;
        Self::new(MapFamily::sine(), (-TAU, TAU), 2000, (-TAU, TAU), 1200)
    }

    /// The logistic diagram over `r ∈ [2.5, 4]`, `x ∈ [0, 1]`.
    pub fn logistic_default() -> Self {
        Self::new(MapFamily::logistic(), (2.5, 4.0), 2000, (0.0, 1.0), 1200)
    }

    pub fn with_iterations(mut self, transient: usize, keep: usize) -> Self {
        self.transient = transient;
        self.keep = keep;
        self
    }

    pub fn with_init_policy(mut self, policy: InitPolicy) -> Self {
        self.init_policy = policy;
        self
    }

    pub fn with_symmetric_bins(mut self, on: bool) -> Self {
        self.symmetric_bins = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_min, self.r_max, self.x_min, self.x_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return invalid("diagram window must be finite");
        }
        if !(self.r_min < self.r_max) {
            return invalid(format!(
                "need r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            ));
        }
        if !(self.x_min < self.x_max) {
            return invalid(format!(
                "need x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            ));
        }
        if self.columns == 0 || self.rows == 0 {
            return invalid("raster needs at least one row and one column");
        }
        if self.keep == 0 {
            return invalid("keep must be >= 1");
        }
        if self.symmetric_bins && (self.x_min != -self.x_max || !self.rows.is_multiple_of(2)) {
            return invalid("symmetric bins need x_min = -x_max and an even row count");
        }
        match &self.init_policy {
            InitPolicy::Explicit(v) if v.is_empty() => invalid("explicit init list is empty"),
            InitPolicy::Random { count: 0, .. } => invalid("random init count must be >= 1"),
            _ => Ok(()),
        }
    }

    /// Centre of column `c`; antisymmetric about the window midpoint, exactly so
    /// when `r_min = -r_max`.
    pub fn column_parameter(&self, c: usize) -> f64 {
        let n = self.columns as f64;
        let mid = 0.5 * (self.r_min + self.r_max);
        let half_step = (self.r_max - self.r_min) / (2.0 * n);
        mid + (2.0 * c as f64 + 1.0 - n) * half_step
    }

    /// Centre of row (bin) `j`, bin 0 sitting at `x_min`.
    pub fn row_center(&self, j: usize) -> f64 {
        let n = self.rows as f64;
        let mid = 0.5 * (self.x_min + self.x_max);
        let half_step = (self.x_max - self.x_min) / (2.0 * n);
        mid + (2.0 * j as f64 + 1.0 - n) * half_step
    }

    /// Bin of a sample, or `None` when it falls outside the state window.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if self.symmetric_bins {
            let half = self.rows / 2;
            let t = x.abs() / self.x_max * half as f64;
            if !(t <= half as f64) {
                return None;
            }
            let k = (t as usize).min(half - 1);
            Some(if x.is_sign_negative() {
                half - 1 - k
            } else {
                half + k
            })
        } else {
            let t = (x - self.x_min) / (self.x_max - self.x_min) * self.rows as f64;
            if !(t >= 0.0 && t <= self.rows as f64) {
                return None;
            }
            Some((t as usize).min(self.rows - 1))
        }
    }

    /// Initial conditions used at parameter `r`.
    pub fn initial_conditions(&self, r: f64) -> Vec<f64> {
        let fam = &self.family;
        match &self.init_policy {
            InitPolicy::CriticalValuePair if fam.is_bounded_factor() => vec![r, -r],
            InitPolicy::CriticalValuePair | InitPolicy::CriticalValue => {
                vec![fam.critical_value(r)]
            }
            InitPolicy::Explicit(v) => v.clone(),
            InitPolicy::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r.to_bits().rotate_left(29));
                let (lo, hi) = if fam.is_bounded_factor() {
                    (-r.abs(), r.abs())
                } else {
                    fam.domain_hint()
                };
                (0..*count).map(|_| rng.gen_range(lo..=hi)).collect()
            }
        }
    }

    pub fn inits_per_column(&self) -> usize {
        match &self.init_policy {
            InitPolicy::CriticalValuePair if self.family.is_bounded_factor() => 2,
            InitPolicy::CriticalValuePair | InitPolicy::CriticalValue => 1,
            InitPolicy::Explicit(v) => v.len(),
            InitPolicy::Random { count, .. } => *count,
        }
    }
}

/// Post-transient samples at one parameter value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttractorSample {
    pub samples: Vec<f64>,
    /// Some orbit left the family's domain; its samples up to that point are kept.
    pub escaped: bool,
}

/// Concatenated post-transient samples for every initial condition of the spec.
pub fn sample_attractor(spec: &DiagramSpec, r: f64) -> Result<AttractorSample> {
    if !(r >= spec.r_min && r <= spec.r_max) {
        return invalid(format!("r = {r} outside [{}, {}]", spec.r_min, spec.r_max));
    }
    sample_unchecked(spec, r)
}

fn sample_unchecked(spec: &DiagramSpec, r: f64) -> Result<AttractorSample> {
    sample_unchecked_for(&spec.family, spec, r)
}

/// Samples at any `r` with `family` iterated under `spec`'s seed policy.
pub(crate) fn sample_unchecked_for(
    family: &MapFamily,
    spec: &DiagramSpec,
    r: f64,
) -> Result<AttractorSample> {
    let mut out = AttractorSample::default();
    for y0 in spec.initial_conditions(r) {
        let o = orbit(family, r, y0, spec.transient, spec.keep)?;
        out.escaped |= o.escaped();
        out.samples.extend_from_slice(&o.samples);
    }
    Ok(out)
}

/// Row-major `rows × columns` count grid; row 0 is the bin at `x_min`.
#[derive(Clone, Debug)]
pub struct Raster {
    pub spec: DiagramSpec,
    pub counts: Vec<u64>,
    pub escaped_columns: Vec<usize>,
}

impl Raster {
    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn columns(&self) -> usize {
        self.spec.columns
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.spec.columns + col]
    }

    pub fn column_total(&self, col: usize) -> u64 {
        (0..self.rows()).map(|j| self.get(j, col)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Counts mirrored along the state axis.
    pub fn flipped_x(&self) -> Vec<u64> {
        let cols = self.columns();
        self.counts
            .chunks(cols)
            .rev()
            .flat_map(|row| row.iter().copied())
            .collect()
    }

    /// Counts mirrored along the parameter axis.
    pub fn flipped_r(&self) -> Vec<u64> {
        self.counts
            .chunks(self.columns())
            .flat_map(|row| row.iter().rev().copied())
            .collect()
    }
}

fn column_counts(spec: &DiagramSpec, c: usize) -> Result<(Vec<u64>, bool)> {
    let r = spec.column_parameter(c);
    let sample = sample_unchecked(spec, r)?;
    let mut col = vec![0u64; spec.rows];
    for x in sample.samples {
        if let Some(j) = spec.bin_of(x) {
            col[j] += 1;
        }
    }
    Ok((col, sample.escaped))
}

/// Builds the raster on the current rayon pool.
pub fn build_diagram(spec: &DiagramSpec) -> Result<Raster> {
    spec.validate()?;
    let columns: Vec<(Vec<u64>, bool)> = (0..spec.columns)
        .into_par_iter()
        .map(|c| column_counts(spec, c))
        .collect::<Result<_>>()?;

    let mut counts = vec![0u64; spec.rows * spec.columns];
    let mut escaped_columns = Vec::new();
    for (c, (col, escaped)) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            counts[j * spec.columns + c] = v;
        }
        if escaped {
            escaped_columns.push(c);
        }
    }
    Ok(Raster {
        spec: spec.clone(),
        counts,
        escaped_columns,
    })
}

/// Builds the raster on a dedicated pool of `threads` workers.
pub fn build_diagram_with_threads(spec: &DiagramSpec, threads: usize) -> Result<Raster> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| build_diagram(spec))
}

/// L1 mismatch of the raster against its state-axis and parameter-axis flips,
/// each normalized by the total count.
pub fn symmetry_report(raster: &Raster) -> Result<(f64, f64)> {
    let spec = &raster.spec;
    if !spec.symmetric_bins || spec.r_min != -spec.r_max {
        return invalid(
            "symmetry report needs symmetric bins and a parameter window symmetric about 0",
        );
    }
    let total = raster.total();
    if total == 0 {
        return Ok((0.0, 0.0));
    }
    let l1 = |other: Vec<u64>| -> f64 {
        let diff: u64 = raster
            .counts
            .iter()
            .zip(other)
            .map(|(&a, b)| a.abs_diff(b))
            .sum();
        diff as f64 / total as f64
    };
    Ok((l1(raster.flipped_x()), l1(raster.flipped_r())))
}
