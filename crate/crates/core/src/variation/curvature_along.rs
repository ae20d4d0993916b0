use serde::Serialize;

use crate::curvature::curvature_sample;
use crate::error::Result;
use crate::geodesics::GeodesicPath;
use crate::profiles::ManifoldWithDensity;

/// Class of unit normal directions `E` along a geodesic in the `(r, theta)`
/// slice. The curvature operator is diagonal in the radial/tangential
/// frame, so the Jacobi equation decouples per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionClass {
    /// `E` in the slice: the plane `(gamma', E)` is a radial plane.
    InSlice,
    /// `E` orthogonal to the slice (`n - 2` directions): weight `r'²` on
    /// the radial curvature.
    Fiber,
}

impl DirectionClass {
    pub fn multiplicity(self, n: usize) -> usize {
        match self {
            DirectionClass::InSlice => 1,
            DirectionClass::Fiber => n - 2,
        }
    }
}

/// Scalar curvature `K(t)` along a geodesic, with points where it is only
/// piecewise smooth.
pub struct PathCurvature<'a> {
    pub length: f64,
    pub breaks: Vec<f64>,
    k: Box<dyn Fn(f64) -> f64 + 'a>,
}

impl<'a> PathCurvature<'a> {
    pub fn new(length: f64, breaks: Vec<f64>, k: impl Fn(f64) -> f64 + 'a) -> Self {
        Self {
            length,
            breaks,
            k: Box::new(k),
        }
    }

    pub fn constant(k: f64, length: f64) -> Self {
        Self::new(length, Vec::new(), move |_| k)
    }

    pub fn at(&self, t: f64) -> f64 {
        (self.k)(t)
    }
}

/// Integrand of [`line_integral`](super::line_integral).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `Ric(gamma', gamma')`.
    Ricci,
    /// `sec(gamma', E)` for `E` in the class.
    SecPerp(DirectionClass),
    /// `sec(gamma', E) + ½L_X g(gamma', gamma')`.
    WeightedSecPerp(DirectionClass),
}

/// Arclengths at which the path crosses a profile breakpoint.
pub(crate) fn path_breaks(m: &ManifoldWithDensity, path: &GeodesicPath) -> Vec<f64> {
    let mut radii = m.radial_breakpoints();
    radii.retain(|&b| b > 0.0 && b < m.r_end());
    path.radial_crossings(&radii)
}

pub(crate) fn integrand_value(m: &ManifoldWithDensity, path: &GeodesicPath, which: Integrand, t: f64) -> Result<f64> {
    let st = path.state_at(t);
    let r = st.r.clamp(0.0, m.r_end());
    let c = curvature_sample(m, r)?;
    let a2 = (st.rdot * st.rdot).min(1.0);
    let plane = |class: DirectionClass| match class {
        DirectionClass::InSlice => c.sec_rad,
        DirectionClass::Fiber => a2 * c.sec_rad + (1.0 - a2) * c.sec_tan,
    };
    Ok(match which {
        Integrand::Ricci => a2 * c.ric_rr + (1.0 - a2) * c.ric_tt,
        Integrand::SecPerp(class) => plane(class),
        Integrand::WeightedSecPerp(class) => {
            let s = m.potential_scale();
            plane(class) + s * (a2 * c.ddf + (1.0 - a2) * c.hess_tan())
        }
    })
}

/// `K(t)` for the Jacobi equation of a direction class along `path`.
pub fn path_curvature<'a>(
    m: &'a ManifoldWithDensity,
    path: &'a GeodesicPath,
    class: DirectionClass,
) -> PathCurvature<'a> {
    PathCurvature::new(path.length, path_breaks(m, path), move |t| {
        integrand_value(m, path, Integrand::SecPerp(class), t).unwrap_or(f64::NAN)
    })
}
