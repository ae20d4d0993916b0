use std::f64::consts::{FRAC_PI_2, PI};

use pinchlab::profiles::{
    build_model, doubling_point, family_limit, ManifoldWithDensity, ModelParams, Topology, C2_TOL,
};
use proptest::prelude::*;

fn family(n: usize, eps: f64, delta: f64) -> ManifoldWithDensity {
    build_model(&ModelParams::family(n, eps, delta)).unwrap()
}

// Oracle: 2L = pi/eps - 2 delta - 4 delta (1 - eps)/eps, from summing the
// cap, band and cylinder lengths by hand.
fn diameter_oracle(eps: f64, delta: f64) -> f64 {
    PI / eps - 2.0 * delta - 4.0 * delta * (1.0 - eps) / eps
}

#[test]
fn reference_family_lengths() {
    for delta in [0.08, 0.04, 0.02, 0.01] {
        let m = family(10, 0.8, delta);
        let l = m.half_length().unwrap();
        assert!((2.0 * l - diameter_oracle(0.8, delta)).abs() < 1e-13);
        assert!((family_limit(0.8) - 2.0 * l - 3.0 * delta).abs() < 1e-12);
    }
    assert!((family(10, 0.8, 0.02).half_length().unwrap() - 1.933_495_408_493_62).abs() < 1e-12);
}

#[test]
fn diameter_gap_decreases_with_delta() {
    let gaps: Vec<f64> = [0.08, 0.04, 0.02, 0.01]
        .iter()
        .map(|&d| (2.0 * family(10, 0.8, d).half_length().unwrap() - PI / 0.8).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn sphere_and_gaussian_shapes() {
    let s = build_model(&ModelParams::round_sphere(4)).unwrap();
    assert_eq!(s.topology(), Topology::DoubledSphere);
    assert!((s.r_end() - PI).abs() < 1e-15);
    for k in 0..=50 {
        let r = PI * k as f64 / 50.0;
        assert!((s.phi_at(r, 0).unwrap() - r.sin()).abs() < 1e-14);
    }
    let g = build_model(&ModelParams::gaussian(3, 0.5)).unwrap();
    assert_eq!(g.topology(), Topology::Cap);
    assert!((g.f_at(3.0, 0).unwrap() - 4.5).abs() < 1e-14);
}

#[test]
fn doubling_inside_cap_is_rejected() {
    assert!(doubling_point(10, 1.0, 0.02).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_invariants(n in 3usize..=12, eps in 0.5f64..0.95, delta in 0.005f64..0.08) {
        let m = family(n, eps, delta);
        // A = phi(pi/2) stays within 3 delta² of 1.
        let a = m.phi_at(FRAC_PI_2, 0).unwrap();
        prop_assert!((a - 1.0).abs() <= 3.0 * delta * delta, "A = {a}");
        prop_assert!(m.phi().check_c2().iter().all(|j| j.max_abs() <= C2_TOL));
        prop_assert!(m.f().check_c2().iter().all(|j| j.max_abs() <= C2_TOL));
        prop_assert!(m.reflection_asymmetry(400).unwrap() <= 1e-12);
        let l = m.half_length().unwrap();
        prop_assert!((2.0 * l - diameter_oracle(eps, delta)).abs() <= 1e-12);
        prop_assert!(m.f_at(l, 1).unwrap().abs() <= 1e-10);
        prop_assert!((2.0 * l - PI / eps).abs() <= 7.0 * delta);
        for k in 0..=200 {
            let r = m.r_end() * k as f64 / 200.0;
            prop_assert!(m.phi_at(r, 0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn json_round_trip_is_exact(n in 3usize..=12, eps in 0.5f64..0.95, delta in 0.005f64..0.08) {
        let m = family(n, eps, delta);
        let text = serde_json::to_string(&m).unwrap();
        let back = ManifoldWithDensity::from_json_str(&text).unwrap();
        prop_assert_eq!(back, m);
    }
}
