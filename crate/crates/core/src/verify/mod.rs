//! Verification suites: pinching, criticality, diameter and injectivity
//! gaps, quadratic growth of the potential, and the Klingenberg `delta`
//! search. Each produces a typed report and a uniform [`SuiteReport`].

mod critical;
mod klingenberg;
mod pinch;

pub use critical::{
    critical_radius, criticality_certificate, diameter_gap, end_inner_products,
    inj_gap_hypothesis, inner_product_lower_bound, resolve_eps, verify_quadratic_growth,
    BergerCheck, CriticalityCertificate, GapReport, GrowthReport, InjGap, BERGER_TOL,
    BOUNDARY_TOL, GAP_TOL, GROWTH_TOL,
};
pub use klingenberg::{
    ball_field_max, klingenberg_delta_search, DeltaCondition, KlingenbergOutcome,
    KlingenbergReport, NonConjugacy,
};
pub use pinch::{
    pinch_grid, tol_upper, verify_pinch, PinchGrid, PinchReport, BAND_REFINEMENT, DEFAULT_GRID,
    MAX_LISTED_VIOLATIONS, TOL_LOWER, TOL_UPPER_DEFAULT,
};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::profiles::ManifoldWithDensity;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub r: f64,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
}

impl Violation {
    pub fn new(r: f64, quantity: &str, value: f64, bound: f64) -> Self {
        Self {
            r,
            quantity: quantity.into(),
            value,
            bound,
        }
    }
}

/// One machine-readable document per suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub model: Value,
    pub params: Value,
    pub pass: bool,
    pub margins: Value,
    pub violations: Vec<Violation>,
    pub resolution: Value,
    pub tolerances: Value,
    pub details: Value,
}

impl SuiteReport {
    pub fn pinch(m: &ManifoldWithDensity, r: &PinchReport) -> Result<Self> {
        Ok(Self {
            suite: "pinch".into(),
            model: m.to_json()?,
            params: json!({
                "mode": r.mode,
                "eps": r.eps_target,
                "lower_target": r.lower_target,
                "upper_target": r.upper_target,
            }),
            pass: r.pass,
            margins: json!({
                "lower": r.lower_margin,
                "upper": r.upper_margin,
                "achieved_lower": r.achieved_lower,
                "achieved_upper": r.achieved_upper,
                "achieved_eps": r.achieved_eps,
            }),
            violations: r.violations.clone(),
            resolution: serde_json::to_value(&r.grid)?,
            tolerances: json!({ "lower": r.tol_lower, "upper": r.tol_upper }),
            details: serde_json::to_value(r)?,
        })
    }

    /// Gap suite; a violation is recorded when the farthest distance exceeds
    /// the bound or the Berger check fails.
    pub fn gap(
        m: &ManifoldWithDensity,
        g: &GapReport,
        inj: &InjGap,
        opts: &crate::geodesics::DistanceOptions,
    ) -> Result<Self> {
        let mut violations = Vec::new();
        if g.farthest > g.diameter_bound + GAP_TOL {
            violations.push(Violation::new(g.farthest_point.r, "farthest", g.farthest, g.diameter_bound));
        }
        if !g.berger_check.nonpositive {
            violations.push(Violation::new(
                g.farthest_point.r,
                "berger_inner",
                g.berger_check.min_inner,
                0.0,
            ));
        }
        Ok(Self {
            suite: "gap".into(),
            model: m.to_json()?,
            params: json!({ "p": g.p, "eps": g.eps }),
            pass: violations.is_empty(),
            margins: json!({
                "diameter": g.margin,
                "gap_ratio": g.gap_ratio,
                "inj_minus_threshold": inj.inj_p - inj.threshold,
            }),
            violations,
            resolution: json!({ "farthest_search": g.search, "distance": opts }),
            tolerances: json!({ "gap": GAP_TOL, "berger": BERGER_TOL, "boundary": BOUNDARY_TOL }),
            details: json!({ "gap": g, "inj_hypothesis": inj }),
        })
    }

    pub fn klingenberg(m: &ManifoldWithDensity, k: &KlingenbergOutcome) -> Result<Self> {
        let (pass, margins, violations, params) = match k {
            KlingenbergOutcome::Feasible(r) => {
                let margins: serde_json::Map<String, Value> = r
                    .conditions
                    .iter()
                    .map(|c| (format!("condition_{}", c.id), json!(c.margin)))
                    .chain([(
                        "condition_1_clearance".to_string(),
                        json!(r.non_conjugacy.clearance),
                    )])
                    .collect();
                let mut violations: Vec<Violation> = r
                    .conditions
                    .iter()
                    .filter(|c| !c.satisfied)
                    .map(|c| Violation::new(0.0, &format!("condition_{}", c.id), -c.margin, 0.0))
                    .collect();
                if !r.non_conjugacy.satisfied {
                    violations.push(Violation::new(
                        r.loop_length - r.delta,
                        "condition_1",
                        r.non_conjugacy.clearance,
                        crate::variation::ENDPOINT_TOL,
                    ));
                }
                (
                    r.pass,
                    Value::Object(margins),
                    violations,
                    json!({ "eps": r.eps, "loop_length": r.loop_length }),
                )
            }
            KlingenbergOutcome::Infeasible { eps, .. } => (
                false,
                json!({}),
                vec![Violation::new(0.0, "condition_3", 0.0, std::f64::consts::PI * (2.0 * eps - 1.0))],
                json!({ "eps": eps }),
            ),
        };
        Ok(Self {
            suite: "klingenberg".into(),
            model: m.to_json()?,
            params,
            pass,
            margins,
            violations,
            resolution: json!({
                "field_samples": klingenberg::N_SAMPLES,
                "cap_tol": klingenberg::CAP_TOL,
            }),
            tolerances: json!({ "non_conjugacy": crate::variation::ENDPOINT_TOL }),
            details: serde_json::to_value(k)?,
        })
    }
}
