//! Bifurcation diagrams of one-parameter maps, the envelope curves traced by
//! iterates of the critical value, and numerical certification that the
//! points where two envelopes meet lie on cycles of the map.
//!
//! The central family is the sine map `y -> r sin y`; any bounded-factor
//! family `y -> r f(y)` with `f` onto `[-1, 1]` plugs into the same
//! machinery through [`MapFamily::bounded_factor`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` also rejects NaN

pub mod diagram;
pub mod envelope;
pub mod error;
pub mod export;
pub mod intersect;
pub mod map;
pub mod render;

pub use diagram::{build_diagram, build_diagram_with_threads, sample_attractor, symmetry_report};
pub use diagram::{AttractorSample, DiagramSpec, InitPolicy, Raster};
pub use envelope::{envelope_derivative, envelope_polyline, envelope_value, EnvelopeCurve};
pub use error::{Error, Result};
pub use intersect::{find_intersections, limit_proximity, verify_periodicity};
pub use intersect::{IntersectionRecord, PeriodicityReport};
pub use map::{detect_period, eval_step, orbit, psi_n, Branch, FamilyKind, MapFamily, Orbit};
