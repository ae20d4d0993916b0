use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::band::solve_smoothing_band;
use super::segment::{Jet, RadialProfile, SegmentKind, SegmentSpec, C2_TOL};

/// Default evaluation radius for complete (cap) models.
pub const DEFAULT_R_MAX: f64 = 50.0;

/// Radii closer than this to a pole use the cap's closed-form limits.
pub const POLE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Complete, rotationally symmetric about a single pole; evaluated on `[0, r_max]`.
    Cap,
    /// Half profile on `[0, L]` reflected about `L` onto `[0, 2L]`.
    DoubledSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gaussian,
    RoundSphere,
    Family,
}

/// Whether a quantity uses the unscaled potential (Bakry–Émery Ricci) or
/// the manifold's potential scale (weighted sectional curvature).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    Ricci,
    Sec,
}

impl ScaleMode {
    pub fn potential_scale(self, n: usize) -> f64 {
        match self {
            ScaleMode::Ricci => 1.0,
            ScaleMode::Sec => 1.0 / (n as f64 - 1.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Warping profile `phi`, potential `f`, and how they cover the manifold.
///
/// The metric is `dr² + phi(r)² g_{S^{n-1}}` and the field is
/// `X = potential_scale · ∇f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldDoc", into = "ManifoldDoc")]
pub struct ManifoldWithDensity {
    n: usize,
    phi: RadialProfile,
    f: RadialProfile,
    topology: Topology,
    potential_scale: f64,
    meta: Meta,
}

#[derive(Serialize, Deserialize)]
struct ManifoldDoc {
    n: usize,
    topology: Topology,
    #[serde(rename = "L")]
    l: Option<f64>,
    potential_scale: f64,
    phi: RadialProfile,
    f: RadialProfile,
    #[serde(default)]
    meta: Meta,
}

impl TryFrom<ManifoldDoc> for ManifoldWithDensity {
    type Error = Error;
    fn try_from(doc: ManifoldDoc) -> Result<Self> {
        let m = ManifoldWithDensity::new(
            doc.n,
            doc.phi,
            doc.f,
            doc.topology,
            doc.potential_scale,
            doc.meta,
        )?;
        if let (Some(l), Some(half)) = (doc.l, m.half_length()) {
            if l != half {
                return Err(invalid(format!(
                    "L = {l} disagrees with profile domain end {half}"
                )));
            }
        }
        Ok(m)
    }
}

impl From<ManifoldWithDensity> for ManifoldDoc {
    fn from(m: ManifoldWithDensity) -> Self {
        ManifoldDoc {
            n: m.n,
            topology: m.topology,
            l: m.half_length(),
            potential_scale: m.potential_scale,
            phi: m.phi,
            f: m.f,
            meta: m.meta,
        }
    }
}

/// Profile data at a radius of the full (possibly doubled) manifold.
#[derive(Debug, Clone, Copy)]
pub struct RadialJets {
    pub phi: Jet,
    pub f: Jet,
    /// Distance to the nearest pole.
    pub pole_distance: f64,
    /// Shape of the segment containing the nearest pole, when it is a
    /// sine or linear cap.
    pub analytic_cap: Option<CapShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapShape {
    Sine,
    Linear,
}

impl ManifoldWithDensity {
    pub fn new(
        n: usize,
        phi: RadialProfile,
        f: RadialProfile,
        topology: Topology,
        potential_scale: f64,
        meta: Meta,
    ) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("dimension n = {n} must be at least 2")));
        }
        let allowed = [1.0, 1.0 / (n as f64 - 1.0)];
        if !allowed.iter().any(|s| (s - potential_scale).abs() <= 1e-15) {
            return Err(invalid(format!(
                "potential_scale {potential_scale} must be 1 or 1/(n-1)"
            )));
        }
        let [lo, hi] = phi.domain();
        if lo != 0.0 || f.domain() != [lo, hi] {
            return Err(invalid(
                "phi and f must share a domain starting at the pole r = 0",
            ));
        }
        let start = phi.jet(0.0)?;
        if start.value.abs() > 1e-12 || (start.d1 - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "warping profile must satisfy phi(0) = 0 and phi'(0) = 1",
            ));
        }
        let fs = f.jet(0.0)?;
        if fs.d1.abs() > 1e-12 {
            return Err(invalid("potential must satisfy f'(0) = 0 at the pole"));
        }
        for k in 1..=1000 {
            let r = hi * k as f64 / 1000.0;
            if (k < 1000 || topology == Topology::Cap) && phi.eval(r, 0)? <= 0.0 {
                return Err(invalid(format!("warping profile not positive at r = {r}")));
            }
        }
        if topology == Topology::DoubledSphere {
            let pe = phi.jet(hi)?;
            let fe = f.jet(hi)?;
            if pe.d1.abs() > C2_TOL || fe.d1.abs() > C2_TOL {
                return Err(invalid(format!(
                    "doubling at L = {hi} needs phi'(L) = f'(L) = 0, got {} and {}",
                    pe.d1, fe.d1
                )));
            }
        }
        Ok(Self {
            n,
            phi,
            f,
            topology,
            potential_scale,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn phi(&self) -> &RadialProfile {
        &self.phi
    }

    pub fn f(&self) -> &RadialProfile {
        &self.f
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn potential_scale(&self) -> f64 {
        self.potential_scale
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn eps(&self) -> Option<f64> {
        self.meta.eps
    }

    pub fn is_compact(&self) -> bool {
        self.topology == Topology::DoubledSphere
    }

    /// `L` for doubled spheres.
    pub fn half_length(&self) -> Option<f64> {
        match self.topology {
            Topology::DoubledSphere => Some(self.phi.domain()[1]),
            Topology::Cap => None,
        }
    }

    /// Largest radial coordinate: `2L` for doubled spheres, `r_max` for caps.
    pub fn r_end(&self) -> f64 {
        let hi = self.phi.domain()[1];
        match self.topology {
            Topology::DoubledSphere => 2.0 * hi,
            Topology::Cap => hi,
        }
    }

    /// Map `r` onto the half profile; returns `(r_half, reflected)`.
    pub fn fold(&self, r: f64) -> Result<(f64, bool)> {
        let end = self.r_end();
        if !(r >= -1e-12 && r <= end + 1e-12) {
            return Err(crate::error::domain(format!(
                "r = {r} outside manifold domain [0, {end}]"
            )));
        }
        let r = r.clamp(0.0, end);
        match self.half_length() {
            Some(l) if r > l => Ok(((2.0 * l - r).max(0.0), true)),
            _ => Ok((r, false)),
        }
    }

    pub fn jets(&self, r: f64) -> Result<RadialJets> {
        let (rh, reflected) = self.fold(r)?;
        let mut phi = self.phi.jet(rh)?;
        let mut f = self.f.jet(rh)?;
        if reflected {
            phi = phi.reflected();
            f = f.reflected();
        }
        let cap = self.phi.segment_at(rh)?;
        let analytic_cap = match (cap.lo() == 0.0, &cap.kind) {
            (true, SegmentKind::Sine) => Some(CapShape::Sine),
            (true, SegmentKind::Linear) => Some(CapShape::Linear),
            _ => None,
        };
        Ok(RadialJets {
            phi,
            f,
            pole_distance: rh,
            analytic_cap,
        })
    }

    /// Warping function (or derivative) on the full manifold.
    pub fn phi_at(&self, r: f64, order: u8) -> Result<f64> {
        Ok(self.jets(r)?.phi.order(order))
    }

    /// Potential (or derivative) on the full manifold.
    pub fn f_at(&self, r: f64, order: u8) -> Result<f64> {
        Ok(self.jets(r)?.f.order(order))
    }

    /// Breakpoints of both profiles on the full domain, including their
    /// mirror images for doubled spheres.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut b = self.phi.breakpoints();
        b.extend(self.f.breakpoints());
        if let Some(l) = self.half_length() {
            let mirrored: Vec<f64> = b.iter().map(|x| 2.0 * l - x).collect();
            b.extend(mirrored);
            b.push(l);
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        b
    }

    /// Smoothing band intervals on the full domain.
    pub fn band_intervals(&self) -> Vec<[f64; 2]> {
        let mut bands = self.phi.band_intervals();
        bands.extend(self.f.band_intervals());
        if let Some(l) = self.half_length() {
            let mirrored: Vec<[f64; 2]> =
                bands.iter().map(|[a, b]| [2.0 * l - b, 2.0 * l - a]).collect();
            bands.extend(mirrored);
        }
        bands.sort_by(|a, b| a[0].total_cmp(&b[0]));
        bands
    }

    /// Largest mismatch of `phi`, `f` between `L - s` and `L + s` on a grid.
    pub fn reflection_asymmetry(&self, samples: usize) -> Result<f64> {
        let Some(l) = self.half_length() else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let s = l * k as f64 / samples as f64;
            let a = self.jets(l - s)?;
            let b = self.jets(l + s)?;
            worst = worst
                .max((a.phi.value - b.phi.value).abs())
                .max((a.f.value - b.f.value).abs())
                .max((a.phi.d1 + b.phi.d1).abs())
                .max((a.f.d1 + b.f.d1).abs())
                .max((a.phi.d2 - b.phi.d2).abs())
                .max((a.f.d2 - b.f.d2).abs());
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Parameters of [`build_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub scale: ScaleMode,
    pub r_max: f64,
}

impl ModelParams {
    pub fn gaussian(n: usize, eps: f64) -> Self {
        Self {
            kind: ModelKind::Gaussian,
            n,
            eps,
            delta: 0.0,
            scale: ScaleMode::Ricci,
            r_max: DEFAULT_R_MAX,
        }
    }

    pub fn round_sphere(n: usize) -> Self {
        Self {
            kind: ModelKind::RoundSphere,
            n,
            eps: 1.0,
            delta: 0.0,
            scale: ScaleMode::Ricci,
            r_max: DEFAULT_R_MAX,
        }
    }

    pub fn family(n: usize, eps: f64, delta: f64) -> Self {
        Self {
            kind: ModelKind::Family,
            n,
            eps,
            delta,
            scale: ScaleMode::Ricci,
            r_max: DEFAULT_R_MAX,
        }
    }

    pub fn with_scale(mut self, scale: ScaleMode) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// Zero of `f'` on the third potential branch:
/// `L = pi/2 - delta + (1 - eps)(pi/2 - 2 delta)/eps`.
///
/// Fails with [`Error::DoublingInsideCap`] (carrying the computed value)
/// when `L <= pi/2`.
pub fn doubling_point(n: usize, eps: f64, delta: f64) -> Result<f64> {
    if n < 2 || !(eps > 0.0) || !(delta > 0.0) {
        return Err(invalid(format!(
            "doubling point needs n >= 2, eps > 0, delta > 0 (got {n}, {eps}, {delta})"
        )));
    }
    let nm1 = n as f64 - 1.0;
    let r1 = FRAC_PI_2 - delta;
    let q1 = FRAC_PI_2 - 2.0 * delta;
    let l = r1 + (1.0 - eps) * q1 / eps;
    // f' on the third branch, evaluated at the root
    let slope = nm1 * eps * (l - r1) - nm1 * (1.0 - eps) * q1;
    debug_assert!(slope.abs() <= 1e-12 * nm1 * (1.0 + l), "f'(L) = {slope}");
    if l <= FRAC_PI_2 {
        return Err(Error::DoublingInsideCap { l });
    }
    Ok(l)
}

/// Build one of the builtin models.
pub fn build_model(p: &ModelParams) -> Result<ManifoldWithDensity> {
    let n = p.n;
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    if !(p.eps > 0.0 && p.eps.is_finite()) {
        return Err(invalid(format!("eps = {} must be positive", p.eps)));
    }
    let scale = p.scale.potential_scale(n);
    match p.kind {
        ModelKind::Gaussian => {
            if !(p.r_max > 0.0 && p.r_max.is_finite()) {
                return Err(invalid(format!("r_max = {} must be positive", p.r_max)));
            }
            let phi = RadialProfile::new(vec![SegmentSpec::new(0.0, p.r_max, SegmentKind::Linear)])?;
            let f = RadialProfile::new(vec![SegmentSpec::new(
                0.0,
                p.r_max,
                SegmentKind::Parabola {
                    c0: 0.0,
                    c1: 0.0,
                    c2: 0.5,
                },
            )])?;
            let meta = Meta {
                model: Some(ModelKind::Gaussian),
                eps: Some(p.eps),
                ..Meta::default()
            };
            ManifoldWithDensity::new(n, phi, f, Topology::Cap, scale, meta)
        }
        ModelKind::RoundSphere => {
            let phi = RadialProfile::new(vec![SegmentSpec::new(0.0, FRAC_PI_2, SegmentKind::Sine)])?;
            let f = RadialProfile::new(vec![SegmentSpec::new(
                0.0,
                FRAC_PI_2,
                SegmentKind::Constant { value: 0.0 },
            )])?;
            let meta = Meta {
                model: Some(ModelKind::RoundSphere),
                eps: Some(p.eps),
                ..Meta::default()
            };
            ManifoldWithDensity::new(n, phi, f, Topology::DoubledSphere, scale, meta)
        }
        ModelKind::Family => build_family(n, p.eps, p.delta, scale),
    }
}

fn build_family(n: usize, eps: f64, delta: f64, scale: f64) -> Result<ManifoldWithDensity> {
    if n < 3 {
        return Err(invalid(format!("family needs n >= 3, got {n}")));
    }
    if !(delta > 0.0) || FRAC_PI_2 - 2.0 * delta <= 0.0 {
        return Err(Error::Construction(format!(
            "delta = {delta} must lie in (0, pi/4)"
        )));
    }
    let l = doubling_point(n, eps, delta)?;
    let nm1 = n as f64 - 1.0;
    let r1 = FRAC_PI_2 - delta;
    let q1 = FRAC_PI_2 - 2.0 * delta;

    // Warping: sine cap, boundary-layer band, flat cylinder of radius A.
    let (s1, c1) = r1.sin_cos();
    let phi_nodes = solve_smoothing_band(-s1, 0.0, delta, -c1)
        .map_err(|e| Error::Construction(format!("phi smoothing band: {e}")))?;
    let phi_band = SegmentSpec::new(
        r1,
        FRAC_PI_2,
        SegmentKind::Pl2Band {
            left_value: s1,
            left_slope: c1,
            nodes: phi_nodes,
        },
    );
    let band_only = RadialProfile::new(vec![phi_band.clone()])?;
    let end = band_only.jet(FRAC_PI_2)?;
    if end.d1.abs() > 1e-12 {
        return Err(Error::Construction(format!(
            "phi band leaves slope {} at pi/2",
            end.d1
        )));
    }
    let a_radius = end.value;
    let phi = RadialProfile::new(vec![
        SegmentSpec::new(0.0, r1, SegmentKind::Sine),
        phi_band,
        SegmentSpec::new(FRAC_PI_2, l, SegmentKind::Constant { value: a_radius }),
    ])?;

    // Potential: concave parabola, monotone band, convex parabola. Branch
    // constants come from exact integration starting at f(0) = 0.
    let lower = -nm1 * (1.0 - eps);
    let upper = nm1 * eps;
    if !(lower < 0.0) {
        return Err(Error::Construction(format!(
            "f smoothing band needs f'' < 0 on the cap (eps = {eps} must be < 1)"
        )));
    }
    let cap = SegmentKind::Parabola {
        c0: 0.0,
        c1: 0.0,
        c2: 0.5 * lower,
    };
    let f_nodes = solve_smoothing_band(lower, upper, delta, 0.0)
        .map_err(|e| Error::Construction(format!("f smoothing band: {e}")))?;
    let cap_profile = RadialProfile::new(vec![SegmentSpec::new(0.0, q1, cap.clone())])?;
    let at_q1 = cap_profile.jet(q1)?;
    let f_band = SegmentSpec::new(
        q1,
        r1,
        SegmentKind::Pl2Band {
            left_value: at_q1.value,
            left_slope: at_q1.d1,
            nodes: f_nodes,
        },
    );
    let at_r1 = RadialProfile::new(vec![f_band.clone()])?.jet(r1)?;
    let f = RadialProfile::new(vec![
        SegmentSpec::new(0.0, q1, cap),
        f_band,
        SegmentSpec::new(
            r1,
            l,
            SegmentKind::Parabola {
                c0: at_r1.value,
                c1: at_r1.d1,
                c2: 0.5 * upper,
            },
        ),
    ])?;

    let mut warnings = Vec::new();
    for (name, prof) in [("phi", &phi), ("f", &f)] {
        if !prof.is_c2() {
            return Err(Error::Construction(format!("{name} is not C2 at a junction")));
        }
    }
    let cyl_bakry = (n as f64 - 2.0) / (a_radius * a_radius);
    if cyl_bakry < nm1 * eps {
        warnings.push(format!(
            "cylinder tangential Bakry-Emery curvature (n-2)/A^2 = {cyl_bakry:.6} is below (n-1)eps = {:.6}",
            nm1 * eps
        ));
    }
    if scale != 1.0 {
        warnings.push(
            "sec-mode: the tangential-radial weighted curvature vanishes on the cylinder".into(),
        );
    }
    let meta = Meta {
        model: Some(ModelKind::Family),
        eps: Some(eps),
        delta: Some(delta),
        warnings,
    };
    ManifoldWithDensity::new(n, phi, f, Topology::DoubledSphere, scale, meta)
}

/// `A = phi(pi/2)` of a family member.
pub fn cylinder_radius(m: &ManifoldWithDensity) -> Result<f64> {
    m.phi().eval(FRAC_PI_2, 0)
}

/// `pi / eps`, the limit of the family diameter.
pub fn family_limit(eps: f64) -> f64 {
    PI / eps
}
