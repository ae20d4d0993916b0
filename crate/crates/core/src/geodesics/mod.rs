//! Geodesics of the `(r, theta)` slice: shooting, distances, and the
//! injectivity radius at the pole.
//!
//! Rotational symmetry makes every geodesic lie in a totally geodesic
//! two-dimensional slice, so one fiber angle suffices in any dimension.

mod distance;
mod hermite;
mod path;

pub use distance::{
    distance, distance_with, DistanceOptions, DistanceResult, DEFAULT_DISTANCE_TOL,
    DEFAULT_LAUNCHES,
};
pub use path::{
    shoot, shoot_from, GeodesicPath, GeodesicSample, Point, ShootOptions, DEFAULT_MAX_STEP,
    DEFAULT_ODE_TOL,
};

use crate::error::{domain, Result};
use crate::profiles::ManifoldWithDensity;

/// Bisection tolerance for the conjugate distance at the pole.
pub const INJ_TOL: f64 = 1e-8;

/// First conjugate distance along a meridian from the pole, which equals
/// the injectivity radius there. The tangential Jacobi field from the pole
/// is proportional to the doubled `phi`, continued oddly past the far pole.
/// Caps return `+inf`.
pub fn inj_at_pole(m: &ManifoldWithDensity) -> Result<f64> {
    if !m.is_compact() {
        return Ok(f64::INFINITY);
    }
    let d = m.r_end();
    let jacobi = |t: f64| -> Result<f64> {
        if t <= d {
            m.phi_at(t, 0)
        } else {
            Ok(-m.phi_at((2.0 * d - t).max(0.0), 0)?)
        }
    };
    let grid = 4096;
    let h = 2.0 * d / grid as f64;
    let mut prev_t = h;
    let mut prev = jacobi(prev_t)?;
    for k in 2..grid {
        let t = h * k as f64;
        let v = jacobi(t)?;
        if v == 0.0 {
            return Ok(t);
        }
        if v * prev < 0.0 {
            let (mut lo, mut hi) = (prev_t, t);
            while hi - lo > INJ_TOL * 1e-3 {
                let mid = 0.5 * (lo + hi);
                let vm = jacobi(mid)?;
                if vm == 0.0 {
                    return Ok(mid);
                }
                if vm * prev > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_t = t;
        prev = v;
    }
    Err(domain("no conjugate point found along the meridian"))
}

/// The point farthest from the pole and its distance: the far pole at `2L`.
pub fn farthest_from_pole(m: &ManifoldWithDensity) -> Result<(Point, f64)> {
    if !m.is_compact() {
        return Err(domain("a complete cap has no farthest point from the pole"));
    }
    // Distances from a pole are meridian lengths, so the maximum over a
    // radial grid is attained at the grid end.
    let end = m.r_end();
    let best = (0..=1000)
        .map(|k| end * k as f64 / 1000.0)
        .fold(0.0f64, f64::max);
    Ok((Point::new(best, 0.0), best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_model, ModelParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn equator_stays_put() {
        let m = build_model(&ModelParams::round_sphere(3)).unwrap();
        let g = shoot(&m, FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
        assert!((g.clairaut_c - 1.0).abs() < 1e-15);
        for s in &g.samples {
            assert!((s.r - FRAC_PI_2).abs() < 1e-12);
        }
        assert!((g.end().theta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_plane_line() {
        let m = build_model(&ModelParams::gaussian(3, 0.5)).unwrap();
        let g = shoot(&m, 1.0, FRAC_PI_2, 2.0).unwrap();
        assert!((g.end().r - 5f64.sqrt()).abs() < 1e-8);
        assert!((g.end().r - 2.236068).abs() < 1e-6);
        assert!(g.speed_residual < 1e-8 && g.clairaut_residual < 1e-8, "{} {}", g.speed_residual, g.clairaut_residual);
        let mid = g.state_at(1.3);
        assert!((mid.r - (1.0f64 + 1.69).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn meridian_from_pole() {
        let m = build_model(&ModelParams::family(10, 0.8, 0.02)).unwrap();
        let g = shoot(&m, 0.0, 0.0, 1.0).unwrap();
        assert!(g.is_meridian());
        assert_eq!(g.clairaut_c, 0.0);
        assert_eq!(g.end().r, 1.0);
        let l = m.r_end();
        let g = shoot(&m, 0.5, 0.0, l).unwrap();
        let e = g.end();
        assert!((e.r - (l - 0.5)).abs() < 1e-12);
        assert!((e.theta - PI).abs() < 1e-15);
        assert!((e.rdot + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pole_distances() {
        let m = build_model(&ModelParams::family(10, 0.8, 0.02)).unwrap();
        let d = distance(&m, Point::pole(), Point::new(1.2, 0.4)).unwrap();
        assert_eq!(d.distance, 1.2);
        assert!(d.paths[0].is_meridian());
        let far = Point::new(m.r_end(), 0.0);
        let d = distance(&m, Point::pole(), far).unwrap();
        assert!((d.distance - 3.866991).abs() < 1e-6);
    }

    #[test]
    fn round_sphere_equator_distance() {
        let m = build_model(&ModelParams::round_sphere(3)).unwrap();
        let d = distance(&m, Point::new(FRAC_PI_2, 0.0), Point::new(FRAC_PI_2, 1.0)).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-6, "{}", d.distance);
    }

    #[test]
    fn round_sphere_generic_distance() {
        let m = build_model(&ModelParams::round_sphere(3)).unwrap();
        for &(r1, r2, dt) in &[(0.4, 2.5, 2.0), (1.0, 1.3, -0.7), (2.9, 0.2, 3.0), (0.3, 0.3, PI)] {
            let d = distance(&m, Point::new(r1, 0.1), Point::new(r2, 0.1 + dt)).unwrap();
            let oracle = (r1.cos() * r2.cos() + r1.sin() * r2.sin() * f64::cos(dt)).clamp(-1.0, 1.0).acos();
            assert!((d.distance - oracle).abs() < 1e-6, "{r1} {r2} {dt}: {} vs {oracle}", d.distance);
            let e = d.paths[0].end();
            assert!((e.r - r2).abs() < 1e-8);
        }
    }

    #[test]
    fn injectivity_radius() {
        let m = build_model(&ModelParams::round_sphere(3)).unwrap();
        assert!((inj_at_pole(&m).unwrap() - PI).abs() < 1e-8);
        let m = build_model(&ModelParams::family(10, 0.8, 0.02)).unwrap();
        let inj = inj_at_pole(&m).unwrap();
        assert!((inj - 3.866991).abs() < 1e-6);
        assert!((farthest_from_pole(&m).unwrap().1 - inj).abs() < 1e-6);
        let g = build_model(&ModelParams::gaussian(3, 0.5)).unwrap();
        assert_eq!(inj_at_pole(&g).unwrap(), f64::INFINITY);
        assert!(farthest_from_pole(&g).is_err());
    }
}
