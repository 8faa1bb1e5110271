mod common;

use hetlock::cylinder::eval_g;
use hetlock::diagram::{find_folds, trace_diagram, Criticality, Region, TraceOptions};
use hetlock::{MapParams, Tolerances};

use common::{brute_force_fold_brackets, zeros_on_row};

const SAMPLES: &[(Region, f64, f64, f64)] = &[
    (Region::A, 1.5, 0.3, 2.0),
    (Region::A, 1.5, 0.6, 2.0),
    (Region::A, 1.3, 1.0, 1.5),
    (Region::B, 1.5, 0.1, 2.0),
    (Region::B, 1.5, 0.15, 2.0),
    (Region::B, 1.4, 0.1, 3.0),
    (Region::C, 2.0, 0.2, 2.0),
    (Region::C, 2.0, 0.05, 2.0),
    (Region::C, 1.8, 0.3, 1.5),
    (Region::W, 1.5, 1.5, 0.5),
    (Region::W, 1.5, 3.0, 0.5),
    (Region::W, 1.3, 2.0, 0.7),
    (Region::X, 1.5, 0.6, 0.5),
    (Region::X, 1.5, 0.45, 0.5),
    (Region::X, 1.5, 1.0, 0.5),
    (Region::Y, 1.5, 0.2, 0.5),
    (Region::Y, 1.5, 0.1, 0.5),
    (Region::Y, 1.4, 0.3, 0.3),
    (Region::Z, 2.0, 0.5, 0.5),
    (Region::Z, 2.0, 0.2, 0.5),
    (Region::Z, 1.8, 0.4, 0.8),
];

fn mp(d: f64, g: f64, k: f64) -> MapParams {
    MapParams::new(d, g, k, 0.5625).unwrap()
}

#[test]
fn traced_topology_matches_region_rows() {
    let tol = Tolerances::default();
    for &(region, d, g, k) in SAMPLES {
        let p = mp(d, g, k);
        let dg = trace_diagram(&p, &TraceOptions::default(), &tol)
            .unwrap_or_else(|e| panic!("{region} ({d},{g},{k}): {e}"));
        assert_eq!(dg.label.region, region, "({d},{g},{k})");
        assert_eq!(dg.topology(), region.expected_topology().unwrap(), "({d},{g},{k})");
        for c in &dg.curves {
            for &(t, s) in &c.points {
                let r = eval_g(&p, t, s).unwrap().value;
                assert!(r.abs() < 1e-10, "{region}: |g|={r} at ({t},{s})");
            }
        }
    }
}

#[test]
fn folds_agree_with_brute_force_grid() {
    let tol = Tolerances::default();
    let tau_min = 1e-9;
    for &(region, d, g, k) in SAMPLES {
        let folds = find_folds(&mp(d, g, k), &tol).unwrap();
        let brackets = brute_force_fold_brackets(d, g, k, tau_min, 2000, 2000);
        assert_eq!(folds.len(), brackets.len(), "{region} ({d},{g},{k})");
        for (f, (lo, hi)) in folds.iter().zip(&brackets) {
            assert!(f.tau >= lo * (1.0 - 1e-12) && f.tau <= hi * (1.0 + 1e-12), "{region}: fold {} not in [{lo},{hi}]", f.tau);
        }
    }
}

#[test]
fn criticality_matches_slice_counts() {
    let tol = Tolerances::default();
    for &(region, d, g, k) in SAMPLES {
        for f in find_folds(&mp(d, g, k), &tol).unwrap() {
            let w = 1e-3 * f.tau;
            let above = zeros_on_row(d, g, k, f.tau + w, 20000);
            let below = zeros_on_row(d, g, k, f.tau - w, 20000);
            match f.criticality {
                Criticality::Supercritical => assert_eq!(above, below + 2, "{region} fold {}", f.tau),
                Criticality::Subcritical => assert_eq!(below, above + 2, "{region} fold {}", f.tau),
                Criticality::Degenerate => panic!("degenerate fold in open region {region}"),
            }
        }
    }
}

#[test]
fn open_curves_touch_the_boundary() {
    let tol = Tolerances::default();
    let a = trace_diagram(&mp(1.5, 0.6, 2.0), &TraceOptions::default(), &tol).unwrap();
    assert!(a.curves.iter().all(|c| c.touches_tau0 && c.touches_tau1));
    let c = trace_diagram(&mp(2.0, 0.2, 2.0), &TraceOptions::default(), &tol).unwrap();
    assert!(!c.curves[0].touches_tau0 && c.curves[0].touches_tau1);
}

#[test]
fn unit_shape_rows() {
    let tol = Tolerances::default();
    for (region, d, g) in [(Region::UnitA, 1.5, 0.5), (Region::UnitB, 1.5, 0.1), (Region::UnitC, 2.0, 0.2)] {
        let dg = trace_diagram(&mp(d, g, 1.0), &TraceOptions::default(), &tol).unwrap();
        assert_eq!(dg.label.region, region);
        assert_eq!(dg.topology(), region.expected_topology().unwrap(), "{region}");
    }
}

#[test]
fn small_grid_reports_degenerate_instead_of_wrong_topology() {
    // two folds squeezed between grid points of a coarse grid
    let tol = Tolerances::default();
    let th = hetlock::diagram::transition_thresholds(1.5, 0.5).unwrap();
    let g = th.gamma_minus.unwrap() * (1.0 - 1e-6);
    let r = trace_diagram(&mp(1.5, g, 0.5), &TraceOptions::with_n_tau(128), &tol);
    assert!(matches!(r, Err(hetlock::Error::DegenerateGrid { .. })), "{r:?}");
}
