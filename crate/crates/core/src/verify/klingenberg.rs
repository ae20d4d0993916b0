use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::curvature::x_field_norm;
use crate::error::{invalid, Error, Result};
use crate::geodesics::{inj_at_pole, shoot};
use crate::profiles::ManifoldWithDensity;
use crate::variation::{jacobi_zeros, path_curvature, DirectionClass, ENDPOINT_TOL};

/// Bisection stops once the bracket on a cap is this narrow.
pub const CAP_TOL: f64 = 1e-13;

/// Samples of `|X|` used for `N(delta)` on `[0, 2 delta]`.
pub const N_SAMPLES: usize = 256;

/// Halvings allowed while searching for a non-conjugate `delta`.
pub const MAX_HALVINGS: usize = 60;

/// `N(delta) = max |X|` on the ball of radius `2 delta` about the pole.
pub fn ball_field_max(m: &ManifoldWithDensity, delta: f64) -> Result<f64> {
    let rad = (2.0 * delta).min(m.r_end());
    let mut best = 0.0f64;
    for k in 0..=N_SAMPLES {
        best = best.max(x_field_norm(m, rad * k as f64 / N_SAMPLES as f64)?);
    }
    for r in m.radial_breakpoints() {
        if r <= rad {
            best = best.max(x_field_norm(m, r)?);
        }
    }
    Ok(best)
}

/// Supremum of `delta > 0` with `holds(delta)`, for `holds` true near 0
/// and false beyond the cap. `None` when no cap is found below `1e6`.
fn bisect_cap(mut holds: impl FnMut(f64) -> Result<bool>) -> Result<Option<f64>> {
    let mut lo = 0.0;
    let mut hi = 1e-3;
    while holds(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(None);
        }
    }
    while hi - lo > CAP_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaCondition {
    pub id: u8,
    pub statement: String,
    /// Supremum of admissible `delta`; `None` if unbounded.
    pub cap: Option<f64>,
    /// `rhs - lhs` at the chosen `delta`.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonConjugacy {
    pub delta: f64,
    pub halvings: usize,
    pub jacobi_zeros: Vec<f64>,
    /// Distance from `l - delta` to the nearest zero.
    pub clearance: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KlingenbergReport {
    pub eps: f64,
    pub loop_length: f64,
    pub delta_max: f64,
    pub delta: f64,
    pub binding: u8,
    pub conditions: Vec<DeltaCondition>,
    pub non_conjugacy: NonConjugacy,
    pub assumptions: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KlingenbergOutcome {
    Feasible(KlingenbergReport),
    Infeasible { eps: f64, reason: String },
}

impl KlingenbergOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible(_))
    }
}

/// Largest `delta` meeting the arithmetic conditions for a geodesic loop of
/// length `l` at the pole, then the chosen `delta = delta_max / 2`, shrunk
/// further if `gamma(l - delta)` is conjugate to the pole.
pub fn klingenberg_delta_search(
    m: &ManifoldWithDensity,
    eps: f64,
    l: f64,
) -> Result<KlingenbergOutcome> {
    if !eps.is_finite() || !(eps > 0.0) {
        return Err(crate::error::domain(format!("eps = {eps} must be positive")));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(invalid(format!("loop length {l} must be positive")));
    }
    let rhs3 = PI * (2.0 * eps - 1.0);
    if eps <= 0.5 {
        return Ok(KlingenbergOutcome::Infeasible {
            eps,
            reason: format!("pi (2 eps - 1) = {rhs3} leaves no room for 3 eps delta + N(delta)"),
        });
    }
    if l >= TAU {
        return Ok(KlingenbergOutcome::Infeasible {
            eps,
            reason: format!("loop length {l} leaves no room for 3 delta < 2 pi - l"),
        });
    }
    let x0 = x_field_norm(m, 0.0)?;
    if x0 > 1e-12 {
        return Err(Error::Precondition(format!("the pole is not a zero of X (|X| = {x0})")));
    }
    let inj = inj_at_pole(m)?;

    let lhs3 = |d: f64| -> Result<f64> { Ok(3.0 * eps * d + ball_field_max(m, d)?) };
    let caps = [
        (3u8, "3 eps delta + N(delta) < pi (2 eps - 1)", bisect_cap(|d| Ok(lhs3(d)? < rhs3))?),
        (4, "3 delta < 2 pi - l", bisect_cap(|d| Ok(3.0 * d < TAU - l))?),
        (5, "5 delta < 2 pi", bisect_cap(|d| Ok(5.0 * d < TAU))?),
        (2, "2 delta < inj_p", bisect_cap(|d| Ok(2.0 * d < inj))?),
    ];
    let (binding, delta_max) = caps
        .iter()
        .filter_map(|(id, _, c)| c.map(|c| (*id, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("condition (5) is always bounded");

    // Condition (1): gamma(l - delta) is not conjugate to the pole along the
    // meridian loop. All normal directions share the same Jacobi equation.
    let path = shoot(m, 0.0, 0.0, l)?;
    let k = path_curvature(m, &path, DirectionClass::InSlice);
    let zeros = jacobi_zeros(&k, l)?;
    let clearance = |d: f64| {
        zeros
            .iter()
            .map(|z| (z - (l - d)).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut delta = delta_max / 2.0;
    let mut halvings = 0;
    while clearance(delta) <= ENDPOINT_TOL && halvings < MAX_HALVINGS {
        delta /= 2.0;
        halvings += 1;
    }
    let nc_ok = clearance(delta) > ENDPOINT_TOL;

    let margins = [
        rhs3 - lhs3(delta)?,
        TAU - l - 3.0 * delta,
        TAU - 5.0 * delta,
        inj - 2.0 * delta,
    ];
    let conditions: Vec<DeltaCondition> = caps
        .iter()
        .zip(margins)
        .map(|((id, st, cap), margin)| DeltaCondition {
            id: *id,
            statement: (*st).into(),
            cap: *cap,
            margin,
            satisfied: margin > 0.0,
        })
        .collect();
    let pass = nc_ok && conditions.iter().all(|c| c.satisfied);
    Ok(KlingenbergOutcome::Feasible(KlingenbergReport {
        eps,
        loop_length: l,
        delta_max,
        delta,
        binding,
        conditions,
        non_conjugacy: NonConjugacy {
            delta,
            halvings,
            clearance: clearance(delta),
            jacobi_zeros: zeros,
            satisfied: nc_ok,
        },
        assumptions: vec![
            "the loop is a meridian through the pole".into(),
            "genericity conditions beyond non-conjugacy are assumed".into(),
        ],
        pass,
    }))
}
