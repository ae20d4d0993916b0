use serde::Serialize;

use crate::curvature::{curvature_sample, uniform_grid, CurvatureSample};
use crate::error::{invalid, Result};
use crate::profiles::{ManifoldWithDensity, ModelKind, ScaleMode};

use super::Violation;

/// Absolute tolerance on pinch lower bounds.
pub const TOL_LOWER: f64 = 1e-6;

/// Absolute tolerance on upper bounds away from smoothing bands.
pub const TOL_UPPER_DEFAULT: f64 = 1e-6;

/// Grid refinement factor inside smoothing bands.
pub const BAND_REFINEMENT: usize = 8;

/// At most this many violations are listed; the count is always exact.
pub const MAX_LISTED_VIOLATIONS: usize = 1000;

pub const DEFAULT_GRID: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct PinchGrid {
    pub points: usize,
    pub evaluated: usize,
    pub domain: [f64; 2],
    pub band_refinement: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchReport {
    pub mode: ScaleMode,
    pub eps_target: f64,
    /// `(n-1) eps` in Ricci mode, `eps` in sec mode.
    pub lower_target: f64,
    /// `(n-1) upper` in Ricci mode, `upper` in sec mode.
    pub upper_target: f64,
    pub achieved_lower: f64,
    pub achieved_lower_at: f64,
    pub achieved_lower_quantity: String,
    pub achieved_upper: f64,
    pub achieved_upper_at: f64,
    pub achieved_upper_quantity: String,
    /// `achieved_lower / (n-1)` in Ricci mode, `achieved_lower` in sec mode.
    pub achieved_eps: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub tol_lower: f64,
    pub tol_upper: f64,
    pub grid: PinchGrid,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub pass: bool,
}

/// Upper-bound tolerance: the family's smoothing bands overshoot the
/// curvature bounds by `O(delta²)`.
pub fn tol_upper(m: &ManifoldWithDensity, mode: ScaleMode) -> f64 {
    match (m.meta().model, m.meta().delta) {
        (Some(ModelKind::Family), Some(delta)) => {
            let per = 5.0 * delta * delta;
            match mode {
                ScaleMode::Ricci => (m.nf() - 1.0) * per,
                ScaleMode::Sec => per,
            }
        }
        _ => TOL_UPPER_DEFAULT,
    }
}

/// Evaluation radii: a uniform grid, refined inside bands, plus every
/// profile breakpoint.
pub fn pinch_grid(m: &ManifoldWithDensity, points: usize) -> Vec<f64> {
    let mut rs = uniform_grid(m, points);
    let h = m.r_end() / (points.max(2) - 1) as f64;
    let fine = h / BAND_REFINEMENT as f64;
    for [a, b] in m.band_intervals() {
        let count = ((b - a) / fine).ceil() as usize;
        for k in 0..=count {
            rs.push(a + (b - a) * k as f64 / count.max(1) as f64);
        }
    }
    rs.extend(m.radial_breakpoints());
    rs.retain(|&r| r >= 0.0 && r <= m.r_end());
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    rs
}

type Named = (&'static str, f64);

fn quantities(mode: ScaleMode, c: &CurvatureSample) -> (Vec<Named>, Vec<Named>) {
    match mode {
        ScaleMode::Ricci => (
            vec![("bakry_rr", c.bakry_rr), ("bakry_tt", c.bakry_tt)],
            vec![("ric_rr", c.ric_rr), ("ric_tt", c.ric_tt)],
        ),
        ScaleMode::Sec => (
            vec![("wsec_rT", c.wsec_rT), ("wsec_Tr", c.wsec_Tr), ("wsec_TT", c.wsec_TT)],
            vec![("sec_rad", c.sec_rad), ("sec_tan", c.sec_tan)],
        ),
    }
}

/// Check `Ric_X >= (n-1) eps` and `Ric <= (n-1) upper` (Ricci mode), or
/// `sec_X >= eps` and `sec <= upper` (sec mode), on a radial grid.
pub fn verify_pinch(
    m: &ManifoldWithDensity,
    mode: ScaleMode,
    eps: f64,
    upper: f64,
    grid_size: usize,
) -> Result<PinchReport> {
    if grid_size < 100 {
        return Err(invalid(format!("grid size {grid_size} must be at least 100")));
    }
    if !eps.is_finite() || !upper.is_finite() {
        return Err(invalid("eps and upper must be finite"));
    }
    let nm1 = m.nf() - 1.0;
    let (lower_target, upper_target) = match mode {
        ScaleMode::Ricci => (nm1 * eps, nm1 * upper),
        ScaleMode::Sec => (eps, upper),
    };
    let tol_up = tol_upper(m, mode);
    let rs = pinch_grid(m, grid_size);
    let mut lo = (f64::INFINITY, 0.0, "");
    let mut hi = (f64::NEG_INFINITY, 0.0, "");
    let mut violations = Vec::new();
    let mut count = 0usize;
    for &r in &rs {
        let c = curvature_sample(m, r)?;
        let (lows, ups) = quantities(mode, &c);
        for (name, v) in lows {
            if v < lo.0 {
                lo = (v, r, name);
            }
            if v < lower_target - TOL_LOWER {
                count += 1;
                if violations.len() < MAX_LISTED_VIOLATIONS {
                    violations.push(Violation::new(r, name, v, lower_target));
                }
            }
        }
        for (name, v) in ups {
            if v > hi.0 {
                hi = (v, r, name);
            }
            if v > upper_target + tol_up {
                count += 1;
                if violations.len() < MAX_LISTED_VIOLATIONS {
                    violations.push(Violation::new(r, name, v, upper_target));
                }
            }
        }
    }
    let pass = lo.0 >= lower_target - TOL_LOWER && hi.0 <= upper_target + tol_up;
    Ok(PinchReport {
        mode,
        eps_target: eps,
        lower_target,
        upper_target,
        achieved_lower: lo.0,
        achieved_lower_at: lo.1,
        achieved_lower_quantity: lo.2.into(),
        achieved_upper: hi.0,
        achieved_upper_at: hi.1,
        achieved_upper_quantity: hi.2.into(),
        achieved_eps: match mode {
            ScaleMode::Ricci => lo.0 / nm1,
            ScaleMode::Sec => lo.0,
        },
        lower_margin: lo.0 - lower_target,
        upper_margin: upper_target - hi.0,
        tol_lower: TOL_LOWER,
        tol_upper: tol_up,
        grid: PinchGrid {
            points: grid_size,
            evaluated: rs.len(),
            domain: [0.0, m.r_end()],
            band_refinement: BAND_REFINEMENT,
        },
        violations,
        violation_count: count,
        pass,
    })
}
