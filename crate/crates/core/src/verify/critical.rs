use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::curvature::x_field_norm;
use crate::error::{domain, Error, Result};
use crate::geodesics::{
    distance_with, farthest_from_pole, inj_at_pole, DistanceOptions, DistanceResult, Point,
};
use crate::profiles::ManifoldWithDensity;

/// Inner products at or below this count as non-positive.
pub const BERGER_TOL: f64 = 1e-12;

/// Allowed excess of the farthest distance over the diameter bound.
pub const GAP_TOL: f64 = 1e-6;

/// Injectivity radii within this of the threshold are boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Largest accepted growth violation.
pub const GROWTH_TOL: f64 = 1e-8;

/// Radial samples used to locate the farthest point from a non-pole base.
pub const FARTHEST_RADII: usize = 33;

/// Angular offsets used to locate the farthest point from a non-pole base.
pub const FARTHEST_ANGLES: usize = 9;

/// The model's `eps` unless one is supplied.
pub fn resolve_eps(m: &ManifoldWithDensity, eps: Option<f64>) -> Result<f64> {
    let eps = eps
        .or(m.eps())
        .ok_or_else(|| Error::InvalidArgument("no eps supplied and none recorded in the model".into()))?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(domain(format!("eps = {eps} must be positive")));
    }
    Ok(eps)
}

fn check_point(m: &ManifoldWithDensity, p: Point) -> Result<()> {
    if !(p.r >= 0.0 && p.r <= m.r_end()) || !p.theta.is_finite() {
        return Err(domain(format!("point ({}, {}) outside the manifold", p.r, p.theta)));
    }
    Ok(())
}

/// `((n-1) pi + |X(p)|) / ((n-1) eps)`: beyond this distance from `p` no
/// point is critical.
pub fn critical_radius(m: &ManifoldWithDensity, p: Point, eps: Option<f64>) -> Result<f64> {
    let eps = resolve_eps(m, eps)?;
    check_point(m, p)?;
    let nm1 = m.nf() - 1.0;
    Ok((nm1 * PI + x_field_norm(m, p.r)?) / (nm1 * eps))
}

/// Lower bound on `g(X(q), gamma'(d))` along a minimal geodesic of length `d`.
pub fn inner_product_lower_bound(m: &ManifoldWithDensity, xnorm_p: f64, eps: f64, d: f64) -> f64 {
    let nm1 = m.nf() - 1.0;
    -nm1 * PI - xnorm_p + nm1 * eps * d
}

/// `g(X(q), gamma'(d))` for each minimal geodesic in `res`.
pub fn end_inner_products(m: &ManifoldWithDensity, res: &DistanceResult) -> Result<Vec<f64>> {
    res.paths
        .iter()
        .map(|g| {
            let end = g.end();
            Ok(m.potential_scale() * m.f_at(end.r, 1)? * end.rdot)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityCertificate {
    pub p: Point,
    pub q: Point,
    pub eps: f64,
    pub distance: f64,
    pub inner_products: Vec<f64>,
    pub min_inner: f64,
    pub threshold: f64,
    pub beyond_threshold: bool,
    pub noncritical: bool,
    /// The lower bound for `g(X(q), gamma')`, hence also for `|X(q)|`.
    pub xnorm_lower: f64,
    /// `min_inner - xnorm_lower`.
    pub bound_residual: f64,
    pub geodesics_found: usize,
    pub launches: usize,
}

/// Whether `q` is certified non-critical for the distance from `p`, via the
/// sign of `X(q)` against every minimal geodesic found.
pub fn criticality_certificate(
    m: &ManifoldWithDensity,
    p: Point,
    q: Point,
    eps: Option<f64>,
    opts: &DistanceOptions,
) -> Result<CriticalityCertificate> {
    let eps = resolve_eps(m, eps)?;
    let threshold = critical_radius(m, p, Some(eps))?;
    let res = distance_with(m, p, q, opts)?;
    let inner = end_inner_products(m, &res)?;
    let min_inner = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let lower = inner_product_lower_bound(m, x_field_norm(m, p.r)?, eps, res.distance);
    Ok(CriticalityCertificate {
        p,
        q,
        eps,
        distance: res.distance,
        min_inner,
        threshold,
        beyond_threshold: res.distance > threshold,
        noncritical: min_inner > 0.0,
        xnorm_lower: lower,
        bound_residual: min_inner - lower,
        geodesics_found: inner.len(),
        inner_products: inner,
        launches: res.launches,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BergerCheck {
    pub inner_products: Vec<f64>,
    pub min_inner: f64,
    /// Some minimal geodesic to the farthest point meets `X` at a
    /// non-acute angle.
    pub nonpositive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub p: Point,
    pub eps: f64,
    pub farthest_point: Point,
    pub farthest: f64,
    /// `((n-1) pi + |X(p)|) / ((n-1) eps)`.
    pub diameter_bound: f64,
    /// `2 pi / eps` when `X(p) = 0`.
    pub zero_bound: Option<f64>,
    /// `farthest / (2 pi / eps)`.
    pub gap_ratio: f64,
    pub inj_p: Option<f64>,
    /// Injectivity threshold, equal to the diameter bound.
    pub inj_threshold: f64,
    pub berger_check: BergerCheck,
    pub margin: f64,
    pub search: String,
    pub pass: bool,
}

fn farthest_point(
    m: &ManifoldWithDensity,
    p: Point,
    opts: &DistanceOptions,
) -> Result<(Point, DistanceResult, String)> {
    let pole = p.r <= 1e-14 || (m.r_end() - p.r).abs() <= 1e-14;
    if pole {
        let (far, _) = farthest_from_pole(m)?;
        let q = if p.r <= 1e-14 {
            Point::new(far.r, p.theta)
        } else {
            Point::pole()
        };
        let res = distance_with(m, p, q, opts)?;
        return Ok((q, res, "opposite pole".into()));
    }
    let mut best: Option<(Point, DistanceResult)> = None;
    for i in 0..FARTHEST_RADII {
        let r = m.r_end() * i as f64 / (FARTHEST_RADII - 1) as f64;
        for j in 0..FARTHEST_ANGLES {
            let dtheta = PI * j as f64 / (FARTHEST_ANGLES - 1) as f64;
            let q = Point::new(r, (p.theta + dtheta).rem_euclid(TAU));
            let res = distance_with(m, p, q, opts)?;
            if best.as_ref().is_none_or(|(_, b)| res.distance > b.distance) {
                best = Some((q, res));
            }
        }
    }
    let (q, res) = best.expect("non-empty search grid");
    Ok((
        q,
        res,
        format!("grid of {FARTHEST_RADII} radii by {FARTHEST_ANGLES} angles"),
    ))
}

/// Farthest point from `p` against the diameter bounds, with the sign of
/// `X` against a minimal geodesic there.
pub fn diameter_gap(
    m: &ManifoldWithDensity,
    p: Point,
    eps: Option<f64>,
    opts: &DistanceOptions,
) -> Result<GapReport> {
    if !m.is_compact() {
        return Err(domain("diameter gap needs a compact (doubled) model"));
    }
    let eps = resolve_eps(m, eps)?;
    let bound = critical_radius(m, p, Some(eps))?;
    let xp = x_field_norm(m, p.r)?;
    let (q, res, search) = farthest_point(m, p, opts)?;
    let inner = end_inner_products(m, &res)?;
    let min_inner = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let nonpositive = min_inner <= BERGER_TOL;
    let pole = p.r <= 1e-14 || (m.r_end() - p.r).abs() <= 1e-14;
    let farthest = res.distance;
    Ok(GapReport {
        p,
        eps,
        farthest_point: q,
        farthest,
        diameter_bound: bound,
        zero_bound: (xp == 0.0).then_some(TAU / eps),
        gap_ratio: farthest / (TAU / eps),
        inj_p: if pole { Some(inj_at_pole(m)?) } else { None },
        inj_threshold: bound,
        berger_check: BergerCheck {
            inner_products: inner,
            min_inner,
            nonpositive,
        },
        margin: bound - farthest,
        search,
        pass: farthest <= bound + GAP_TOL && nonpositive,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InjGap {
    pub inj_p: f64,
    pub threshold: f64,
    pub hypothesis_met: bool,
    /// `|inj_p - threshold| <= BOUNDARY_TOL`.
    pub boundary_case: bool,
}

/// Compare the injectivity radius at the pole with the critical radius.
pub fn inj_gap_hypothesis(m: &ManifoldWithDensity, eps: Option<f64>) -> Result<InjGap> {
    let threshold = critical_radius(m, Point::pole(), eps)?;
    let inj = inj_at_pole(m)?;
    let boundary = (inj - threshold).abs() <= BOUNDARY_TOL;
    Ok(InjGap {
        inj_p: inj,
        threshold,
        hypothesis_met: inj >= threshold || boundary,
        boundary_case: boundary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub p: Point,
    pub eps: f64,
    /// Max over samples of `bound(t) - s f(gamma(t))`.
    pub max_violation: f64,
    pub worst_t: f64,
    pub worst_direction: String,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Check `s f(gamma(t)) >= s f(p) - ((n-1) pi + |X(p)|) t + (n-1) eps t²/2`
/// along both radial geodesics from `p`, up to the point where they stop
/// minimizing (the pole or the far end).
pub fn verify_quadratic_growth(
    m: &ManifoldWithDensity,
    p: Point,
    grid: usize,
    eps: Option<f64>,
) -> Result<GrowthReport> {
    let eps = resolve_eps(m, eps)?;
    check_point(m, p)?;
    if grid < 2 {
        return Err(Error::InvalidArgument("growth grid needs at least 2 points".into()));
    }
    let s = m.potential_scale();
    let nm1 = m.nf() - 1.0;
    let xp = x_field_norm(m, p.r)?;
    let fp = s * m.f_at(p.r, 0)?;
    let mut worst = (f64::NEG_INFINITY, 0.0, "outward");
    let mut samples = 0;
    for (dir, span) in [("outward", m.r_end() - p.r), ("inward", p.r)] {
        if span <= 0.0 {
            continue;
        }
        for k in 0..grid {
            let t = span * k as f64 / (grid - 1) as f64;
            let r = if dir == "outward" { p.r + t } else { p.r - t };
            let bound = fp - (nm1 * PI + xp) * t + nm1 * eps * t * t / 2.0;
            let v = bound - s * m.f_at(r.clamp(0.0, m.r_end()), 0)?;
            samples += 1;
            if v > worst.0 {
                worst = (v, t, dir);
            }
        }
    }
    Ok(GrowthReport {
        p,
        eps,
        max_violation: worst.0,
        worst_t: worst.1,
        worst_direction: worst.2.into(),
        samples,
        tol: GROWTH_TOL,
        pass: worst.0 <= GROWTH_TOL,
    })
}
