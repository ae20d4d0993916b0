//! Closed-form curvatures of `dr² + phi(r)² g_{S^{n-1}}` with a radial
//! potential.
//!
//! For `X = s·∇f` the symmetrized Lie derivative is diagonal in the
//! radial/tangential frame: `½L_X g(∂r,∂r) = s·f''` and
//! `½L_X g(T,T) = s·f'·phi'/phi` for unit tangential `T`.

use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::profiles::{CapShape, ManifoldWithDensity, POLE_EPS};
use crate::report::csv_row;

/// Every curvature quantity at one radius.
///
/// `bakry_*` always use the unscaled potential; `wsec_*` and `xnorm` use
/// the manifold's `potential_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CurvatureSample {
    pub r: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub sec_rad: f64,
    pub sec_tan: f64,
    pub ric_rr: f64,
    pub ric_tt: f64,
    pub bakry_rr: f64,
    pub bakry_tt: f64,
    pub wsec_rT: f64,
    pub wsec_Tr: f64,
    pub wsec_TT: f64,
    pub xnorm: f64,
}

pub const CSV_HEADER: &str = "r,phi,dphi,ddphi,f,df,ddf,sec_rad,sec_tan,ric_rr,ric_tt,bakry_rr,bakry_tt,wsec_rT,wsec_Tr,wsec_TT,xnorm";

impl CurvatureSample {
    pub fn csv_values(&self) -> [f64; 17] {
        [
            self.r,
            self.phi,
            self.dphi,
            self.ddphi,
            self.f,
            self.df,
            self.ddf,
            self.sec_rad,
            self.sec_tan,
            self.ric_rr,
            self.ric_tt,
            self.bakry_rr,
            self.bakry_tt,
            self.wsec_rT,
            self.wsec_Tr,
            self.wsec_TT,
            self.xnorm,
        ]
    }

    /// `½L_∇f g(T,T) = f'·phi'/phi`, unscaled.
    pub fn hess_tan(&self) -> f64 {
        self.bakry_tt - self.ric_tt
    }
}

/// Radial and tangential sectional curvature and the unscaled tangential
/// Hessian term `f'phi'/phi` at `r`.
fn sectional(m: &ManifoldWithDensity, r: f64) -> Result<(crate::profiles::RadialJets, f64, f64, f64)> {
    let j = m.jets(r)?;
    let rho = j.pole_distance;
    let (sec_rad, sec_tan) = match j.analytic_cap {
        Some(cap) if rho < POLE_EPS => match cap {
            CapShape::Sine => (1.0, 1.0),
            CapShape::Linear => (0.0, 0.0),
        },
        _ => {
            if rho == 0.0 {
                return Err(domain(format!(
                    "r = {r} is a pole of a non-analytic segment; curvature undefined"
                )));
            }
            let p = j.phi.value;
            (-j.phi.d2 / p, j.phi.one_minus_d1_sq / (p * p))
        }
    };
    // f'/phi -> f''(0)/phi'(0) = f''(0) at a pole.
    let hess_tan = if rho == 0.0 {
        j.f.d2
    } else {
        j.f.d1 * j.phi.d1 / j.phi.value
    };
    Ok((j, sec_rad, sec_tan, hess_tan))
}

pub fn curvature_sample(m: &ManifoldWithDensity, r: f64) -> Result<CurvatureSample> {
    let (j, sec_rad, sec_tan, hess_tan) = sectional(m, r)?;
    let nm1 = m.nf() - 1.0;
    let s = m.potential_scale();
    let ric_rr = nm1 * sec_rad;
    let ric_tt = sec_rad + (nm1 - 1.0) * sec_tan;
    Ok(CurvatureSample {
        r,
        phi: j.phi.value,
        dphi: j.phi.d1,
        ddphi: j.phi.d2,
        f: j.f.value,
        df: j.f.d1,
        ddf: j.f.d2,
        sec_rad,
        sec_tan,
        ric_rr,
        ric_tt,
        bakry_rr: ric_rr + j.f.d2,
        bakry_tt: ric_tt + hess_tan,
        wsec_rT: sec_rad + s * j.f.d2,
        wsec_Tr: sec_rad + s * hess_tan,
        wsec_TT: sec_tan + s * hess_tan,
        xnorm: s * j.f.d1.abs(),
    })
}

/// Sectional curvature of a plane whose radial-wedge weight is `w`:
/// `w·sec_rad + (1 - w)·sec_tan`.
pub fn sec_plane(m: &ManifoldWithDensity, r: f64, w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(domain(format!("plane weight w = {w} outside [0, 1]")));
    }
    let (_, sec_rad, sec_tan, _) = sectional(m, r)?;
    Ok(w * sec_rad + (1.0 - w) * sec_tan)
}

/// `|X| = s·|f'(r)|`.
pub fn x_field_norm(m: &ManifoldWithDensity, r: f64) -> Result<f64> {
    Ok(m.potential_scale() * m.f_at(r, 1)?.abs())
}

/// Uniform grid of `points` radii over the whole manifold.
pub fn uniform_grid(m: &ManifoldWithDensity, points: usize) -> Vec<f64> {
    let end = m.r_end();
    let points = points.max(2);
    (0..points)
        .map(|k| end * k as f64 / (points - 1) as f64)
        .collect()
}

/// Write the 17-column curvature table over a uniform grid.
pub fn write_curvature_csv<W: Write>(m: &ManifoldWithDensity, points: usize, out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in uniform_grid(m, points) {
        let s = curvature_sample(m, r)?;
        writeln!(out, "{}", csv_row(&s.csv_values()))?;
    }
    Ok(())
}
