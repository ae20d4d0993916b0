use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};

/// Junction residuals above this are C² failures.
pub const C2_TOL: f64 = 1e-9;

/// Slack allowed when a radius sits a rounding error outside the profile domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Closed-form shape of one profile piece.
///
/// `Parabola` and `Pl2Band` use the shifted coordinate `x = r - r_lo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Sine,
    Linear,
    Constant {
        value: f64,
    },
    Parabola {
        c0: f64,
        c1: f64,
        c2: f64,
    },
    /// Second derivative is the continuous piecewise-linear interpolant of
    /// `nodes = [(offset, second_derivative), ...]`; value and slope are its
    /// exact double integral from `(left_value, left_slope)`.
    #[serde(rename = "pl2_band")]
    Pl2Band {
        left_value: f64,
        left_slope: f64,
        nodes: Vec<[f64; 2]>,
    },
}

impl SegmentKind {
    /// Sine and linear pieces are the analytic caps; their pole limits are
    /// known in closed form.
    pub fn is_analytic_cap(&self) -> bool {
        matches!(self, SegmentKind::Sine | SegmentKind::Linear)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    /// Half-open interval `[lo, hi)` in radians (the last segment is closed).
    pub domain: [f64; 2],
    #[serde(flatten)]
    pub kind: SegmentKind,
}

impl SegmentSpec {
    pub fn new(lo: f64, hi: f64, kind: SegmentKind) -> Self {
        Self {
            domain: [lo, hi],
            kind,
        }
    }

    pub fn lo(&self) -> f64 {
        self.domain[0]
    }

    pub fn hi(&self) -> f64 {
        self.domain[1]
    }
}

/// Value and first two derivatives at a radius.
///
/// `one_minus_d1_sq` is `1 - d1²` computed without cancellation where the
/// segment allows it (`sin² r` on a sine cap).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub one_minus_d1_sq: f64,
}

impl Jet {
    pub fn order(&self, order: u8) -> f64 {
        match order {
            0 => self.value,
            1 => self.d1,
            _ => self.d2,
        }
    }

    /// Mirror image `r -> 2L - r`: odd derivatives flip sign.
    pub fn reflected(self) -> Self {
        Self {
            d1: -self.d1,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CompiledBand {
    offsets: Vec<f64>,
    d2: Vec<f64>,
    slope: Vec<f64>,
    value: Vec<f64>,
}

impl CompiledBand {
    fn new(left_value: f64, left_slope: f64, nodes: &[[f64; 2]]) -> Self {
        let offsets: Vec<f64> = nodes.iter().map(|n| n[0]).collect();
        let d2: Vec<f64> = nodes.iter().map(|n| n[1]).collect();
        let mut slope = vec![left_slope];
        let mut value = vec![left_value];
        for i in 0..nodes.len() - 1 {
            let dx = offsets[i + 1] - offsets[i];
            let (s, v) = (slope[i], value[i]);
            slope.push(s + 0.5 * (d2[i] + d2[i + 1]) * dx);
            value.push(v + s * dx + dx * dx * (d2[i] / 3.0 + d2[i + 1] / 6.0));
        }
        Self {
            offsets,
            d2,
            slope,
            value,
        }
    }

    fn jet(&self, x: f64) -> Jet {
        let last = self.offsets.len() - 1;
        let i = self.offsets[1..last]
            .partition_point(|&o| o <= x)
            .min(last - 1);
        let dx = self.offsets[i + 1] - self.offsets[i];
        let m = (self.d2[i + 1] - self.d2[i]) / dx;
        let u = x - self.offsets[i];
        let d2 = self.d2[i] + m * u;
        let d1 = self.slope[i] + self.d2[i] * u + 0.5 * m * u * u;
        let value = self.value[i] + self.slope[i] * u + 0.5 * self.d2[i] * u * u + m * u * u * u / 6.0;
        Jet {
            value,
            d1,
            d2,
            one_minus_d1_sq: 1.0 - d1 * d1,
        }
    }
}

/// Piecewise-C² scalar function of the radial coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct RadialProfile {
    segments: Vec<SegmentSpec>,
    bands: Vec<Option<CompiledBand>>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    segments: Vec<SegmentSpec>,
}

impl TryFrom<ProfileDoc> for RadialProfile {
    type Error = Error;
    fn try_from(doc: ProfileDoc) -> Result<Self> {
        RadialProfile::new(doc.segments)
    }
}

impl From<RadialProfile> for ProfileDoc {
    fn from(p: RadialProfile) -> Self {
        ProfileDoc {
            segments: p.segments,
        }
    }
}

/// Value/slope/curvature jumps at one junction between consecutive segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionResidual {
    pub r: f64,
    pub value_jump: f64,
    pub slope_jump: f64,
    pub curvature_jump: f64,
}

impl JunctionResidual {
    pub fn max_abs(&self) -> f64 {
        self.value_jump
            .abs()
            .max(self.slope_jump.abs())
            .max(self.curvature_jump.abs())
    }
}

impl RadialProfile {
    pub fn new(segments: Vec<SegmentSpec>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("profile needs at least one segment"));
        }
        for s in &segments {
            if !(s.lo().is_finite() && s.hi().is_finite() && s.lo() < s.hi()) {
                return Err(invalid(format!("bad segment domain {:?}", s.domain)));
            }
        }
        for w in segments.windows(2) {
            if w[0].hi() != w[1].lo() {
                return Err(invalid(format!(
                    "segments do not abut: {} vs {}",
                    w[0].hi(),
                    w[1].lo()
                )));
            }
        }
        let mut bands = Vec::with_capacity(segments.len());
        for s in &segments {
            bands.push(match &s.kind {
                SegmentKind::Pl2Band {
                    left_value,
                    left_slope,
                    nodes,
                } => {
                    validate_band_nodes(nodes, s.hi() - s.lo())?;
                    Some(CompiledBand::new(*left_value, *left_slope, nodes))
                }
                _ => None,
            });
        }
        Ok(Self { segments, bands })
    }

    pub fn segments(&self) -> &[SegmentSpec] {
        &self.segments
    }

    pub fn domain(&self) -> [f64; 2] {
        [self.segments[0].lo(), self.segments[self.segments.len() - 1].hi()]
    }

    fn index_at(&self, r: f64) -> Result<usize> {
        let [lo, hi] = self.domain();
        if !(r >= lo - DOMAIN_SLACK && r <= hi + DOMAIN_SLACK) {
            return Err(domain(format!("r = {r} outside profile domain [{lo}, {hi}]")));
        }
        Ok(self
            .segments
            .partition_point(|s| s.hi() <= r)
            .min(self.segments.len() - 1))
    }

    pub fn segment_at(&self, r: f64) -> Result<&SegmentSpec> {
        Ok(&self.segments[self.index_at(r)?])
    }

    fn segment_jet(&self, i: usize, r: f64) -> Jet {
        let seg = &self.segments[i];
        let x = r - seg.lo();
        match &seg.kind {
            SegmentKind::Sine => {
                let (s, c) = r.sin_cos();
                Jet {
                    value: s,
                    d1: c,
                    d2: -s,
                    one_minus_d1_sq: s * s,
                }
            }
            SegmentKind::Linear => Jet {
                value: r,
                d1: 1.0,
                d2: 0.0,
                one_minus_d1_sq: 0.0,
            },
            SegmentKind::Constant { value } => Jet {
                value: *value,
                d1: 0.0,
                d2: 0.0,
                one_minus_d1_sq: 1.0,
            },
            SegmentKind::Parabola { c0, c1, c2 } => {
                let d1 = c1 + 2.0 * c2 * x;
                Jet {
                    value: c0 + x * (c1 + c2 * x),
                    d1,
                    d2: 2.0 * c2,
                    one_minus_d1_sq: 1.0 - d1 * d1,
                }
            }
            SegmentKind::Pl2Band { .. } => self.bands[i]
                .as_ref()
                .expect("band compiled at construction")
                .jet(x),
        }
    }

    pub fn jet(&self, r: f64) -> Result<Jet> {
        let i = self.index_at(r)?;
        Ok(self.segment_jet(i, r))
    }

    /// Value (`order = 0`), slope (`1`) or second derivative (`2`) at `r`.
    pub fn eval(&self, r: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(invalid(format!("derivative order {order} not in {{0,1,2}}")));
        }
        Ok(self.jet(r)?.order(order))
    }

    /// Segment boundaries and interior band nodes, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                out.push(s.lo());
            }
            if let SegmentKind::Pl2Band { nodes, .. } = &s.kind {
                for n in &nodes[1..nodes.len() - 1] {
                    out.push(s.lo() + n[0]);
                }
            }
        }
        out
    }

    /// Intervals occupied by smoothing bands.
    pub fn band_intervals(&self) -> Vec<[f64; 2]> {
        self.segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::Pl2Band { .. }))
            .map(|s| s.domain)
            .collect()
    }

    /// Jumps in value, slope and second derivative at every junction.
    pub fn check_c2(&self) -> Vec<JunctionResidual> {
        (1..self.segments.len())
            .map(|i| {
                let r = self.segments[i].lo();
                let left = self.segment_jet(i - 1, r);
                let right = self.segment_jet(i, r);
                JunctionResidual {
                    r,
                    value_jump: right.value - left.value,
                    slope_jump: right.d1 - left.d1,
                    curvature_jump: right.d2 - left.d2,
                }
            })
            .collect()
    }

    pub fn is_c2(&self) -> bool {
        self.check_c2().iter().all(|j| j.max_abs() <= C2_TOL)
    }
}

fn validate_band_nodes(nodes: &[[f64; 2]], width: f64) -> Result<()> {
    if nodes.len() < 2 {
        return Err(invalid("band needs at least two nodes"));
    }
    if nodes[0][0] != 0.0 {
        return Err(invalid("first band node must sit at offset 0"));
    }
    if nodes.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(invalid("band node offsets must increase strictly"));
    }
    let end = nodes[nodes.len() - 1][0];
    if (end - width).abs() > 1e-12 * width.max(1.0) {
        return Err(invalid(format!(
            "last band node at offset {end} does not match band width {width}"
        )));
    }
    if nodes.iter().any(|n| !n[1].is_finite()) {
        return Err(invalid("non-finite band second derivative"));
    }
    Ok(())
}

/// Exact integral of the piecewise-linear second derivative over the band.
pub fn band_integral(nodes: &[[f64; 2]]) -> f64 {
    nodes
        .windows(2)
        .map(|w| 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn sine_profile(hi: f64) -> RadialProfile {
        RadialProfile::new(vec![SegmentSpec::new(0.0, hi, SegmentKind::Sine)]).unwrap()
    }

    #[test]
    fn sine_segment_values() {
        let p = sine_profile(FRAC_PI_2);
        assert!((p.eval(FRAC_PI_6, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((p.eval(FRAC_PI_6, 2).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn band_constant_second_derivative() {
        let p = RadialProfile::new(vec![SegmentSpec::new(
            0.0,
            1.0,
            SegmentKind::Pl2Band {
                left_value: 1.0,
                left_slope: 0.0,
                nodes: vec![[0.0, 2.0], [1.0, 2.0]],
            },
        )])
        .unwrap();
        assert_eq!(p.eval(1.0, 0).unwrap(), 2.0);
        assert_eq!(p.eval(1.0, 1).unwrap(), 2.0);
        assert_eq!(p.eval(0.5, 2).unwrap(), 2.0);
    }

    #[test]
    fn band_matches_cubic_on_linear_ramp() {
        // d2 = x on [0, 2]  =>  d1 = x²/2 + 1, value = x³/6 + x
        let p = RadialProfile::new(vec![SegmentSpec::new(
            3.0,
            5.0,
            SegmentKind::Pl2Band {
                left_value: 0.0,
                left_slope: 1.0,
                nodes: vec![[0.0, 0.0], [0.5, 0.5], [2.0, 2.0]],
            },
        )])
        .unwrap();
        for x in [0.1, 0.5, 1.3, 2.0] {
            let j = p.jet(3.0 + x).unwrap();
            assert!((j.value - (x * x * x / 6.0 + x)).abs() < 1e-14);
            assert!((j.d1 - (x * x / 2.0 + 1.0)).abs() < 1e-14);
            assert!((j.d2 - x).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let p = sine_profile(1.0);
        assert!(matches!(p.eval(1.5, 0), Err(Error::Domain(_))));
        assert!(matches!(p.eval(-0.1, 0), Err(Error::Domain(_))));
        assert!(p.eval(1.0 + 1e-13, 0).is_ok());
    }

    #[test]
    fn single_segment_has_no_junctions() {
        assert!(sine_profile(1.0).check_c2().is_empty());
    }

    #[test]
    fn broken_profile_reports_value_jump() {
        let j = FRAC_PI_2 - 0.1;
        let p = RadialProfile::new(vec![
            SegmentSpec::new(0.0, j, SegmentKind::Sine),
            SegmentSpec::new(j, 3.0, SegmentKind::Constant { value: 0.9 }),
        ])
        .unwrap();
        let res = p.check_c2();
        assert_eq!(res.len(), 1);
        // sin(pi/2 - 0.1) - 0.9 = 0.0950042...
        assert!((res[0].value_jump + (j.sin() - 0.9)).abs() < 1e-15);
        assert!((res[0].value_jump.abs() - 0.0950).abs() < 1e-4);
        assert!(!p.is_c2());
    }

    #[test]
    fn rejects_gaps_between_segments() {
        let err = RadialProfile::new(vec![
            SegmentSpec::new(0.0, 1.0, SegmentKind::Sine),
            SegmentSpec::new(1.1, 2.0, SegmentKind::Linear),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = RadialProfile::new(vec![
            SegmentSpec::new(0.0, 0.3, SegmentKind::Parabola { c0: 0.1, c1: -1.0 / 3.0, c2: std::f64::consts::E }),
            SegmentSpec::new(
                0.3,
                0.7,
                SegmentKind::Pl2Band {
                    left_value: 0.1 + 0.3 * (-1.0 / 3.0 + std::f64::consts::E * 0.3),
                    left_slope: 1.0 / 7.0,
                    nodes: vec![[0.0, 0.1], [0.1 + 1e-17, 0.2], [0.4, 0.3]],
                },
            ),
        ])
        .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: RadialProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }
}
