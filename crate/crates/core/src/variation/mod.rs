//! Second variation, curvature line integrals, Jacobi fields and the Morse
//! index of geodesics.

mod curvature_along;
mod field;

pub use curvature_along::{path_curvature, DirectionClass, Integrand, PathCurvature};
pub use field::{berger_test_field, sine_field, FnField, TestField, VariationField};

use std::f64::consts::PI;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::curvature::x_field_norm;
use crate::error::{Error, Result};
use crate::geodesics::GeodesicPath;
use crate::ode::Dopri5;
use crate::profiles::ManifoldWithDensity;
use crate::quadrature::{integrate_piecewise_nodes, merge_breaks};

use curvature_along::{integrand_value, path_breaks};

/// Minimum number of quadrature nodes along a path.
pub const MIN_QUADRATURE_NODES: usize = 1024;

/// Quadrature refinement tolerance.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Conjugate points are located to this accuracy.
pub const JACOBI_TOL: f64 = 1e-8;

/// Zeros closer than this to the end of a geodesic are endpoint conjugate
/// points and do not count towards the index.
pub const ENDPOINT_TOL: f64 = 1e-6;

/// Eigenvalues of the discretized index form below `-EIGEN_SHIFT` count as
/// negative. An endpoint conjugate point gives a zero eigenvalue whose
/// discretization is `O(h²)` and of either sign; the shift keeps it out.
pub const EIGEN_SHIFT: f64 = 1e-5;

/// Largest grid spacing of the eigenvalue count.
pub const EIGEN_MAX_SPACING: f64 = 1e-3;

/// Smallest number of interior grid nodes of the eigenvalue count.
pub const EIGEN_MIN_NODES: usize = 2000;

/// `∫ psi'² - K psi²` over the geodesic.
pub fn second_variation(k: &PathCurvature<'_>, psi: &dyn VariationField) -> f64 {
    let mut breaks = k.breaks.clone();
    breaks.extend(psi.breaks());
    let f = |t: f64| {
        let (p, dp) = psi.eval(t);
        dp * dp - k.at(t) * p * p
    };
    integrate_piecewise_nodes(&f, 0.0, k.length, &breaks, QUADRATURE_TOL, MIN_QUADRATURE_NODES)
}

/// `∫ integrand dt` along `path`, split at profile breakpoint crossings.
pub fn line_integral(m: &ManifoldWithDensity, path: &GeodesicPath, which: Integrand) -> Result<f64> {
    if path.length == 0.0 {
        return Ok(0.0);
    }
    let breaks = path_breaks(m, path);
    let f = |t: f64| integrand_value(m, path, which, t).unwrap_or(f64::NAN);
    let v = integrate_piecewise_nodes(&f, 0.0, path.length, &breaks, QUADRATURE_TOL, MIN_QUADRATURE_NODES);
    if !v.is_finite() {
        // surface the underlying evaluation error
        for t in merge_breaks(0.0, path.length, &breaks) {
            integrand_value(m, path, which, t)?;
        }
        return Err(Error::Domain("non-finite curvature along the path".into()));
    }
    Ok(v)
}

/// Every sign change in `(0, t_end]` of the solution of
/// `psi'' + K psi = 0`, `psi(0) = 0`, `psi'(0) = 1`. `K` may be evaluated
/// past its nominal length when `t_end` exceeds it.
pub fn jacobi_zeros(k: &PathCurvature<'_>, t_end: f64) -> Result<Vec<f64>> {
    let ode = Dopri5 {
        h_max: 0.05,
        ..Dopri5::with_tolerance(1e-12)
    };
    let sys = |t: f64, y: &[f64; 2]| -> Option<[f64; 2]> {
        let kv = k.at(t);
        kv.is_finite().then_some([y[1], -kv * y[0]])
    };
    let nodes = merge_breaks(0.0, t_end, &k.breaks);
    let mut y = [0.0, 1.0];
    let mut zeros = Vec::new();
    for w in nodes.windows(2) {
        let (t, yn) = ode.integrate(&sys, w[0], y, w[1], |st| {
            let (p0, p1) = (st.y0[0], st.y1[0]);
            if p1 == 0.0 {
                zeros.push(st.t1);
            } else if p0 != 0.0 && p0 * p1 < 0.0 {
                let (mut lo, mut hi) = (0.0, st.t1 - st.t0);
                while hi - lo > JACOBI_TOL * 1e-3 {
                    let mid = 0.5 * (lo + hi);
                    match ode.step_once(&sys, st.t0, st.y0, mid) {
                        Some(ym) if ym[0] * p0 > 0.0 => lo = mid,
                        Some(_) => hi = mid,
                        None => break,
                    }
                }
                zeros.push(st.t0 + 0.5 * (lo + hi));
            }
            ControlFlow::Continue(())
        })?;
        debug_assert!((t - w[1]).abs() < 1e-12);
        y = yn;
    }
    Ok(zeros)
}

/// Interior conjugate points along a geodesic of length `k.length`.
pub fn jacobi_conjugate_points(k: &PathCurvature<'_>) -> Result<Vec<f64>> {
    let mut zeros = jacobi_zeros(k, k.length)?;
    zeros.retain(|&t| t < k.length - ENDPOINT_TOL);
    Ok(zeros)
}

/// Number of eigenvalues below `-EIGEN_SHIFT` of the second-difference
/// discretization of `-psi'' - K psi` with Dirichlet ends, by Sturm
/// counting of the LDLᵀ pivots.
///
/// The diagonal uses the mean of `K` over each node's cell, so thin
/// smoothing layers contribute their true weight however they fall
/// relative to the grid.
pub fn eigen_count(k: &PathCurvature<'_>) -> usize {
    let nodes = EIGEN_MIN_NODES.max((k.length / EIGEN_MAX_SPACING).ceil() as usize);
    let h = k.length / (nodes + 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let off2 = inv_h2 * inv_h2;
    let mut breaks = k.breaks.clone();
    breaks.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut d_prev = f64::INFINITY;
    for i in 1..=nodes {
        let t = h * i as f64;
        let a = 2.0 * inv_h2 - cell_mean(k, &breaks, t - 0.5 * h, t + 0.5 * h) + EIGEN_SHIFT;
        let mut d = if i == 1 { a } else { a - off2 / d_prev };
        if d == 0.0 {
            d = -f64::EPSILON * inv_h2;
        }
        if d < 0.0 {
            count += 1;
        }
        d_prev = d;
    }
    count
}

/// Mean of `K` over `[a, b]`, Simpson on each smooth piece.
fn cell_mean(k: &PathCurvature<'_>, sorted_breaks: &[f64], a: f64, b: f64) -> f64 {
    let lo = sorted_breaks.partition_point(|&x| x <= a);
    let hi = sorted_breaks.partition_point(|&x| x < b);
    let mut sum = 0.0;
    let mut left = a;
    for &x in sorted_breaks[lo..hi].iter().chain(std::iter::once(&b)) {
        if x > left {
            let mid = 0.5 * (left + x);
            let q1 = 0.5 * (left + mid);
            let q3 = 0.5 * (mid + x);
            let w = (x - left) / 12.0;
            sum += w * (k.at(left) + 4.0 * k.at(q1) + 2.0 * k.at(mid) + 4.0 * k.at(q3) + k.at(x));
            left = x;
        }
    }
    sum / (b - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    JacobiZeros,
    EigenCount,
}

/// Normal directions sharing one scalar Jacobi equation.
#[derive(Debug, Clone, Serialize)]
pub struct ClassIndex {
    /// `None` along meridians, where every normal direction is equivalent.
    pub class: Option<DirectionClass>,
    pub multiplicity: usize,
    pub conjugate_points: Vec<f64>,
    pub jacobi_count: usize,
    pub eigen_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexResult {
    pub length: f64,
    /// Number of normal directions, `n - 1`.
    pub multiplicity: usize,
    pub conjugate_points: Vec<f64>,
    pub index: usize,
    pub method: IndexMethod,
    pub eigen_index: usize,
    pub cross_check_agree: bool,
    pub classes: Vec<ClassIndex>,
}

/// Index of a scalar Jacobi problem by both methods.
pub fn scalar_index(k: &PathCurvature<'_>) -> Result<(Vec<f64>, usize)> {
    Ok((jacobi_conjugate_points(k)?, eigen_count(k)))
}

/// Morse index of `path`, by interior conjugate points counted with
/// multiplicity, cross-checked against a negative eigenvalue count.
pub fn geodesic_index(m: &ManifoldWithDensity, path: &GeodesicPath) -> Result<IndexResult> {
    let n = m.n();
    let classes: Vec<(Option<DirectionClass>, usize)> = if path.is_meridian() {
        vec![(None, n - 1)]
    } else {
        [DirectionClass::InSlice, DirectionClass::Fiber]
            .into_iter()
            .map(|c| (Some(c), c.multiplicity(n)))
            .filter(|(_, mult)| *mult > 0)
            .collect()
    };
    let mut out = Vec::new();
    for (class, mult) in classes {
        let k = path_curvature(m, path, class.unwrap_or(DirectionClass::InSlice));
        let (cps, eig) = scalar_index(&k)?;
        out.push(ClassIndex {
            class,
            multiplicity: mult,
            jacobi_count: cps.len(),
            conjugate_points: cps,
            eigen_count: eig,
        });
    }
    let index = out.iter().map(|c| c.multiplicity * c.jacobi_count).sum();
    let eigen_index = out.iter().map(|c| c.multiplicity * c.eigen_count).sum();
    let mut cps: Vec<f64> = out.iter().flat_map(|c| c.conjugate_points.clone()).collect();
    cps.sort_by(f64::total_cmp);
    cps.dedup_by(|a, b| (*a - *b).abs() < JACOBI_TOL);
    Ok(IndexResult {
        length: path.length,
        multiplicity: n - 1,
        conjugate_points: cps,
        index,
        method: IndexMethod::JacobiZeros,
        eigen_index,
        cross_check_agree: out.iter().all(|c| c.jacobi_count == c.eigen_count),
        classes: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopStatus {
    Satisfied,
    Violated,
    /// The loop is not longer than `pi/eps`; the implication holds vacuously.
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionIntegral {
    pub class: Option<DirectionClass>,
    /// `∫ sec_X(gamma', E)`.
    pub weighted: f64,
    /// `∫ sec(gamma', E)`.
    pub unweighted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopReport {
    pub length: f64,
    pub eps: f64,
    /// `pi / eps`.
    pub threshold: f64,
    pub integrals: Vec<DirectionIntegral>,
    pub index: IndexResult,
    /// `n - 1`.
    pub required_index: usize,
    pub status: LoopStatus,
    pub loop_check_satisfied: bool,
}

/// For a geodesic loop at a zero of `X`: if its length exceeds `pi/eps`,
/// its index is at least `n - 1`.
pub fn loop_index_check(m: &ManifoldWithDensity, path: &GeodesicPath, eps: f64) -> Result<LoopReport> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let start = path.start.r;
    let end = path.end().r;
    if start.abs() > 1e-12 || end.abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "loop must start and end at the pole (r = {start} and {end})"
        )));
    }
    let x0 = x_field_norm(m, 0.0)?;
    if x0 > 1e-12 {
        return Err(Error::Precondition(format!(
            "base point is not a zero of X (|X| = {x0})"
        )));
    }
    let index = geodesic_index(m, path)?;
    let mut integrals = Vec::new();
    for c in &index.classes {
        let class = c.class.unwrap_or(DirectionClass::InSlice);
        integrals.push(DirectionIntegral {
            class: c.class,
            weighted: line_integral(m, path, Integrand::WeightedSecPerp(class))?,
            unweighted: line_integral(m, path, Integrand::SecPerp(class))?,
        });
    }
    let threshold = PI / eps;
    let required = m.n() - 1;
    let status = if path.length <= threshold {
        LoopStatus::NotApplicable
    } else if index.index >= required {
        LoopStatus::Satisfied
    } else {
        LoopStatus::Violated
    };
    Ok(LoopReport {
        length: path.length,
        eps,
        threshold,
        integrals,
        index,
        required_index: required,
        loop_check_satisfied: status != LoopStatus::Violated,
        status,
    })
}
