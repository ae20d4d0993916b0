use std::f64::consts::PI;

use pinchlab::curvature::{curvature_sample, sec_plane, uniform_grid};
use pinchlab::profiles::{build_model, ManifoldWithDensity, ModelParams, ScaleMode};
use proptest::prelude::*;

fn family(n: usize, eps: f64, delta: f64) -> ManifoldWithDensity {
    build_model(&ModelParams::family(n, eps, delta)).unwrap()
}

#[test]
fn gaussian_identity_on_a_fine_grid() {
    let m = build_model(&ModelParams::gaussian(3, 0.5)).unwrap();
    let mut worst = 0.0f64;
    for r in uniform_grid(&m, 10_000) {
        let c = curvature_sample(&m, r).unwrap();
        worst = worst
            .max((c.bakry_rr - 1.0).abs())
            .max((c.bakry_tt - 1.0).abs())
            .max(c.ric_rr.abs())
            .max(c.ric_tt.abs());
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn round_sphere_is_einstein() {
    let m = build_model(&ModelParams::round_sphere(5)).unwrap();
    for r in uniform_grid(&m, 1001) {
        let c = curvature_sample(&m, r).unwrap();
        assert!((c.sec_rad - 1.0).abs() < 1e-12 && (c.sec_tan - 1.0).abs() < 1e-12, "{c:?}");
        assert!((c.ric_rr - 4.0).abs() < 1e-11);
    }
}

#[test]
fn family_cap_reference_value() {
    let m = family(10, 0.8, 0.02);
    let c = curvature_sample(&m, 0.5).unwrap();
    let oracle = 9.0 - 0.9 / 0.5f64.tan();
    assert!((c.bakry_tt - oracle).abs() < 1e-12);
    assert!((c.bakry_tt - 7.352561050458792).abs() < 1e-12);
}

#[test]
fn sec_mode_scales_the_field() {
    let ricci = family(10, 0.8, 0.02);
    let sec = build_model(&ModelParams::family(10, 0.8, 0.02).with_scale(ScaleMode::Sec)).unwrap();
    let (a, b) = (curvature_sample(&ricci, 0.7).unwrap(), curvature_sample(&sec, 0.7).unwrap());
    assert!((b.xnorm * 9.0 - a.xnorm).abs() < 1e-12);
    assert_eq!(a.bakry_rr, b.bakry_rr);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Oracle: central differences of phi and f on smooth pieces.
    #[test]
    fn closed_forms_match_finite_differences(
        eps in 0.5f64..0.95, delta in 0.01f64..0.08, u in 0.02f64..0.98,
    ) {
        let m = family(6, eps, delta);
        let r = u * m.r_end();
        let h = 1e-4;
        let breaks = m.radial_breakpoints();
        prop_assume!(breaks.iter().all(|b| (b - r).abs() > 3.0 * h));
        let phi = |x: f64| m.phi_at(x, 0).unwrap();
        let f = |x: f64| m.f_at(x, 0).unwrap();
        let p0 = phi(r);
        let p1 = (phi(r + h) - phi(r - h)) / (2.0 * h);
        let p2 = (phi(r + h) - 2.0 * p0 + phi(r - h)) / (h * h);
        let f1 = (f(r + h) - f(r - h)) / (2.0 * h);
        let f2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        let c = curvature_sample(&m, r).unwrap();
        let tol = 1e-4 * (1.0 + c.bakry_rr.abs() + c.bakry_tt.abs());
        prop_assert!((c.sec_rad - (-p2 / p0)).abs() <= tol);
        prop_assert!((c.sec_tan - (1.0 - p1 * p1) / (p0 * p0)).abs() <= tol);
        prop_assert!((c.bakry_rr - (5.0 * -p2 / p0 + f2)).abs() <= tol);
        let tt = -p2 / p0 + 4.0 * (1.0 - p1 * p1) / (p0 * p0) + f1 * p1 / p0;
        prop_assert!((c.bakry_tt - tt).abs() <= tol);
    }

    #[test]
    fn mixed_planes_interpolate(u in 0.0f64..1.0, w in 0.0f64..=1.0) {
        let m = family(10, 0.8, 0.02);
        let r = u * m.r_end();
        let c = curvature_sample(&m, r).unwrap();
        let s = sec_plane(&m, r, w).unwrap();
        prop_assert!((s - (w * c.sec_rad + (1.0 - w) * c.sec_tan)).abs() <= 1e-12 * (1.0 + s.abs()));
    }
}

#[test]
fn mixed_plane_rejects_bad_weights() {
    let m = family(10, 0.8, 0.02);
    assert!(sec_plane(&m, 1.0, 1.5).is_err());
    assert!(sec_plane(&m, PI, -0.1).is_err());
}
