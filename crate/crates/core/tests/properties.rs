mod common;

use std::f64::consts::TAU;

use bifurc::intersect::{default_grid, DEFAULT_CERT_TOL};
use bifurc::{
    build_diagram, build_diagram_with_threads, detect_period, envelope_derivative, envelope_value,
    find_intersections, orbit, psi_n, symmetry_report, verify_periodicity, Branch, DiagramSpec,
    MapFamily,
};
use proptest::prelude::*;

fn bounded_family() -> impl Strategy<Value = MapFamily> {
    prop_oneof![Just(MapFamily::sine()), Just(MapFamily::rational_odd())]
}

fn branch() -> impl Strategy<Value = Branch> {
    prop_oneof![Just(Branch::Plus), Just(Branch::Minus)]
}

/// Central difference with a step small enough for a single map step.
fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

proptest! {
    #[test]
    fn bounded_factor_is_bounded(fam in bounded_family(), r in -10.0f64..10.0, y in -1e3f64..1e3) {
        prop_assert!(fam.eval(r, y).abs() <= r.abs());
    }

    #[test]
    fn odd_factor_is_exactly_odd(fam in bounded_family(), r in -10.0f64..10.0, y in -50.0f64..50.0) {
        prop_assert_eq!(fam.eval(r, -y), -fam.eval(r, y));
    }

    #[test]
    fn step_derivative_matches_differences(
        fam in prop_oneof![
            Just(MapFamily::sine()),
            Just(MapFamily::rational_odd()),
            Just(MapFamily::logistic()),
        ],
        r in 0.5f64..6.0,
        y in -3.0f64..3.0,
    ) {
        let d = fam.deriv_y(r, y);
        prop_assume!(d.abs() > 1e-3);
        let fd = central(|y| fam.eval(r, y), y);
        prop_assert!(((d - fd) / fd).abs() < 1e-6, "{} vs {}", d, fd);
    }

    #[test]
    fn orbits_stay_bounded(fam in bounded_family(), r in -7.0f64..7.0, y0 in -100.0f64..100.0) {
        let o = orbit(&fam, r, y0, 5, 64).unwrap();
        prop_assert_eq!(o.kept_len, 64);
        prop_assert!(o.samples.iter().all(|s| s.abs() <= r.abs()));
    }

    #[test]
    fn odd_conjugacy(r in -7.0f64..7.0, y0 in -7.0f64..7.0, k in 0usize..=50) {
        let sine = MapFamily::sine();
        let a = sine.iterate(r, y0, k);
        let b = sine.iterate(r, -y0, k);
        prop_assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn psi_composes(fam in bounded_family(), b in branch(), x in -7.0f64..7.0, n in 0usize..20, m in 0usize..20) {
        let (a, u) = psi_n(&fam, b, x, n).unwrap();
        let (a2, w) = psi_n(&fam, b, x, n + m).unwrap();
        prop_assert_eq!(a, a2);
        prop_assert_eq!(fam.iterate(a, u, m), w);
    }

    #[test]
    fn psi_matches_envelope_abscissa(fam in bounded_family(), b in branch(), x in -7.0f64..7.0, n in 0usize..12) {
        // ψ^n(±x, x) is the point (r, E_n^±(r)) with r = ±x
        let (a, u) = psi_n(&fam, b, x, n).unwrap();
        prop_assert_eq!(u, envelope_value(&fam, n, b, a).unwrap());
    }

    #[test]
    fn detected_period_is_minimal(r in 0.2f64..3.0, y0 in 0.1f64..3.0) {
        let sine = MapFamily::sine();
        if let Some(q) = detect_period(&sine, r, y0, 500, 32, 1e-9).unwrap() {
            let start = sine.iterate(r, y0, 500);
            prop_assert!((sine.iterate(r, start, q) - start).abs() < 1e-9);
            for d in (1..q).filter(|d| q % d == 0) {
                prop_assert!((sine.iterate(r, start, d) - start).abs() >= 1e-9);
            }
        }
    }

    #[test]
    fn envelope_semigroup(fam in bounded_family(), b in branch(), r in -7.0f64..7.0, n in 0usize..30) {
        let e = envelope_value(&fam, n, b, r).unwrap();
        prop_assert_eq!(envelope_value(&fam, n + 1, b, r).unwrap(), fam.eval(r, e));
    }

    #[test]
    fn envelope_branches_are_negatives(b_r in -7.0f64..7.0, n in 0usize..30) {
        let sine = MapFamily::sine();
        let p = envelope_value(&sine, n, Branch::Plus, b_r).unwrap();
        let m = envelope_value(&sine, n, Branch::Minus, b_r).unwrap();
        prop_assert!((p + m).abs() < 1e-12);
    }

    #[test]
    fn envelope_derivative_high_orders(b in branch(), r in -TAU..TAU, n in 0usize..=8) {
        let sine = MapFamily::sine();
        let d = envelope_derivative(&sine, n, b, r).unwrap();
        prop_assume!(d.abs() > 1e-3);
        let fd = common::ridders(|r| envelope_value(&sine, n, b, r).unwrap(), r);
        prop_assert!(((d - fd) / fd).abs() < 1e-6, "n={} r={} {} vs {}", n, r, d, fd);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raster_flips_and_threads(
        fam in bounded_family(),
        half_cols in 1usize..40,
        half_rows in 1usize..30,
        r_max in 0.5f64..7.0,
        x_max in 0.5f64..7.0,
        threads in 1usize..5,
    ) {
        let spec = DiagramSpec::new(fam, (-r_max, r_max), 2 * half_cols, (-x_max, x_max), 2 * half_rows)
            .with_iterations(50, 40);
        let a = build_diagram_with_threads(&spec, 1).unwrap();
        let b = build_diagram_with_threads(&spec, threads).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        prop_assert_eq!(&a.counts, &a.flipped_x());
        prop_assert_eq!(&a.counts, &a.flipped_r());
        prop_assert_eq!(symmetry_report(&a).unwrap(), (0.0, 0.0));
        // every column keeps 2 * keep samples minus those outside the window
        for c in 0..spec.columns {
            prop_assert!(a.column_total(c) <= 80);
            if x_max >= r_max {
                prop_assert_eq!(a.column_total(c), 80);
            }
        }
    }

    #[test]
    fn intersection_records_are_sound(
        n in 0usize..4,
        gap in 1usize..3,
        br in (branch(), branch()),
        lo in 0.2f64..5.0,
        width in 0.3f64..1.2,
    ) {
        let sine = MapFamily::sine();
        let m = n + gap;
        let tol = 1e-12;
        let hi = lo + width;
        let recs = find_intersections(&sine, n, m, br, lo, hi, default_grid(lo, hi), tol).unwrap();
        for w in recs.windows(2) {
            prop_assert!(w[0].r_star < w[1].r_star);
        }
        for rec in &recs {
            let dd = envelope_derivative(&sine, n, br.0, rec.r_star).unwrap()
                - envelope_derivative(&sine, m, br.1, rec.r_star).unwrap();
            if rec.tangential {
                prop_assert!(rec.delta_residual < tol.sqrt());
                // Δ' changes sign across r_star
                let h = 1e-7;
                let d = |r: f64| {
                    envelope_derivative(&sine, n, br.0, r).unwrap()
                        - envelope_derivative(&sine, m, br.1, r).unwrap()
                };
                prop_assert!(d(rec.r_star - h) * d(rec.r_star + h) <= 0.0);
            } else {
                prop_assert!(rec.delta_residual <= tol * dd.abs().max(1.0), "{:?} Δ'={}", rec, dd);
            }
            let rep = verify_periodicity(&sine, rec, DEFAULT_CERT_TOL).unwrap();
            if rep.newton_converged {
                prop_assert!(rep.period_residual < DEFAULT_CERT_TOL);
                let q = rec.expected_period;
                prop_assert!(rep.minimal_period.is_some_and(|d| q % d == 0));
            }
        }
    }
}

#[test]
fn build_is_repeatable() {
    let spec = DiagramSpec::sine_default().with_iterations(200, 100);
    let a = build_diagram(&spec).unwrap();
    let b = build_diagram(&spec).unwrap();
    assert_eq!(a.counts, b.counts);
}
