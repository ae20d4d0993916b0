use std::f64::consts::PI;
use std::io::Write;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::ode::Dopri5;
use crate::profiles::ManifoldWithDensity;
use crate::report::csv_row;

use super::hermite::quintic;

/// Default local error tolerance for geodesic integration.
pub const DEFAULT_ODE_TOL: f64 = 1e-10;

/// Longest accepted step; keeps the sample spacing fine enough for
/// interpolation and plotting.
pub const DEFAULT_MAX_STEP: f64 = 0.05;

/// A point of the two-dimensional slice `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub r: f64,
    pub theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn pole() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub rdot: f64,
    pub thetadot: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub tol: f64,
    pub max_step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_ODE_TOL,
            max_step: DEFAULT_MAX_STEP,
        }
    }
}

#[derive(Debug, Clone)]
enum PathKind {
    /// Unfolded arclength coordinate `s = s0 + dir·t`; `period` is the
    /// pole-to-pole length of a doubled sphere.
    Meridian { s0: f64, dir: f64, period: Option<f64> },
    /// Accelerations `(r'', theta'')` at each sample, for interpolation.
    Integrated { acc: Vec<[f64; 2]> },
}

/// Unit-speed geodesic in the `(r, theta)` slice.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub start: Point,
    /// Launch angle measured from `∂r`.
    pub alpha: f64,
    /// `phi² theta'`, conserved.
    pub clairaut_c: f64,
    pub length: f64,
    pub samples: Vec<GeodesicSample>,
    /// Max `|phi² theta' - c|` over samples.
    pub clairaut_residual: f64,
    /// Max `|r'² + phi² theta'² - 1|` over samples.
    pub speed_residual: f64,
    kind: PathKind,
}

/// The geodesic equations `r'' = phi phi' theta'²`,
/// `theta'' = -2 (phi'/phi) r' theta'` on state `[r, r', theta, theta']`.
pub(crate) struct GeodesicSystem<'a> {
    pub m: &'a ManifoldWithDensity,
    /// Interior radii where `phi` changes segment, sorted.
    breaks: Vec<f64>,
}

impl<'a> GeodesicSystem<'a> {
    pub(crate) fn new(m: &'a ManifoldWithDensity) -> Self {
        let mut breaks = m.phi().breakpoints();
        if let Some(l) = m.half_length() {
            let mirrored: Vec<f64> = breaks.iter().map(|x| 2.0 * l - x).collect();
            breaks.extend(mirrored);
            breaks.push(l);
        }
        let end = m.r_end();
        breaks.retain(|&b| b > 0.0 && b < end);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Self { m, breaks }
    }

    pub(crate) fn accel(&self, y: &[f64; 4]) -> Option<[f64; 4]> {
        let j = self.m.jets(y[0]).ok()?;
        let (p, dp) = (j.phi.value, j.phi.d1);
        if !(p > 0.0) {
            return None;
        }
        Some([y[1], p * dp * y[3] * y[3], y[3], -2.0 * dp / p * y[1] * y[3]])
    }
}

impl crate::ode::OdeSystem<4> for GeodesicSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 4]) -> Option<[f64; 4]> {
        self.accel(y)
    }

    /// The first breakpoint strictly past `y0` in the direction of travel.
    fn switching(&self, y0: &[f64; 4], y1: &[f64; 4]) -> Option<(usize, f64)> {
        let (a, b) = (y0[0], y1[0]);
        if a < b {
            let i = self.breaks.partition_point(|&x| x <= a);
            self.breaks.get(i).filter(|&&x| x < b).map(|&x| (0, x))
        } else {
            let i = self.breaks.partition_point(|&x| x < a);
            i.checked_sub(1)
                .map(|i| self.breaks[i])
                .filter(|&x| x > b)
                .map(|x| (0, x))
        }
    }
}

pub(crate) fn is_pole(m: &ManifoldWithDensity, r: f64) -> bool {
    r.abs() <= 1e-14 || (m.is_compact() && (m.r_end() - r).abs() <= 1e-14)
}

fn check_radius(m: &ManifoldWithDensity, r: f64) -> Result<()> {
    let end = m.r_end();
    if !(r >= 0.0 && r <= end) {
        return Err(domain(format!("r = {r} outside manifold domain [0, {end}]")));
    }
    Ok(())
}

/// Shoot from `(r0, theta = 0)` at angle `alpha` for arclength `length`.
pub fn shoot(m: &ManifoldWithDensity, r0: f64, alpha: f64, length: f64) -> Result<GeodesicPath> {
    shoot_from(m, Point::new(r0, 0.0), alpha, length, &ShootOptions::default())
}

/// Shoot from `start`. From a pole every geodesic is a meridian and arrives
/// at points with `theta = start.theta`; `alpha` is then ignored.
pub fn shoot_from(
    m: &ManifoldWithDensity,
    start: Point,
    alpha: f64,
    length: f64,
    opts: &ShootOptions,
) -> Result<GeodesicPath> {
    check_radius(m, start.r)?;
    if !(length >= 0.0 && length.is_finite()) {
        return Err(invalid(format!("geodesic length {length} must be finite and non-negative")));
    }
    if !alpha.is_finite() {
        return Err(invalid("launch angle must be finite"));
    }
    let (sa, ca) = alpha.sin_cos();
    if is_pole(m, start.r) {
        return meridian(m, start, alpha, 1.0, length);
    }
    if sa.abs() < 1e-15 {
        return meridian(m, start, alpha, ca.signum(), length);
    }
    integrated(m, start, alpha, length, opts)
}

fn meridian(m: &ManifoldWithDensity, start: Point, alpha: f64, dir: f64, length: f64) -> Result<GeodesicPath> {
    let period = m.half_length().map(|_| m.r_end());
    let s0 = if m.is_compact() && (m.r_end() - start.r).abs() <= 1e-14 {
        m.r_end()
    } else if start.r <= 1e-14 {
        0.0
    } else {
        start.r
    };
    if period.is_none() {
        let far = (s0 + dir * length).abs().max(s0);
        if far > m.r_end() {
            return Err(domain(format!(
                "meridian reaches r = {far} beyond the evaluation radius {}",
                m.r_end()
            )));
        }
    }
    let mut path = GeodesicPath {
        start,
        alpha,
        clairaut_c: 0.0,
        length,
        samples: Vec::new(),
        clairaut_residual: 0.0,
        speed_residual: 0.0,
        kind: PathKind::Meridian { s0, dir, period },
    };
    let count = ((length / 0.01).ceil() as usize).max(1);
    path.samples = (0..=count)
        .map(|k| path.state_at(length * k as f64 / count as f64))
        .collect();
    Ok(path)
}

fn integrated(
    m: &ManifoldWithDensity,
    start: Point,
    alpha: f64,
    length: f64,
    opts: &ShootOptions,
) -> Result<GeodesicPath> {
    let sys = GeodesicSystem::new(m);
    let phi0 = m.phi_at(start.r, 0)?;
    let (sa, ca) = alpha.sin_cos();
    let y0 = [start.r, ca, start.theta, sa / phi0];
    let c = phi0 * sa;
    let ode = Dopri5 {
        h_max: opts.max_step,
        ..Dopri5::with_tolerance(opts.tol)
    };
    let mut samples = vec![sample(0.0, &y0)];
    let mut acc = vec![accel_pair(&sys, &y0)?];
    let mut failure = None;
    ode.integrate(&sys, 0.0, y0, length, |st| {
        samples.push(sample(st.t1, st.y1));
        match accel_pair(&sys, st.y1) {
            Ok(a) => {
                acc.push(a);
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut path = GeodesicPath {
        start,
        alpha,
        clairaut_c: c,
        length,
        samples,
        clairaut_residual: 0.0,
        speed_residual: 0.0,
        kind: PathKind::Integrated { acc },
    };
    path.measure_residuals(m)?;
    Ok(path)
}

fn sample(t: f64, y: &[f64; 4]) -> GeodesicSample {
    GeodesicSample {
        t,
        r: y[0],
        rdot: y[1],
        theta: y[2],
        thetadot: y[3],
    }
}

fn accel_pair(sys: &GeodesicSystem<'_>, y: &[f64; 4]) -> Result<[f64; 2]> {
    let d = sys
        .accel(y)
        .ok_or_else(|| domain(format!("geodesic left the manifold at r = {}", y[0])))?;
    Ok([d[1], d[3]])
}

impl GeodesicPath {
    pub fn is_meridian(&self) -> bool {
        matches!(self.kind, PathKind::Meridian { .. })
    }

    pub fn end(&self) -> GeodesicSample {
        *self.samples.last().expect("paths have at least one sample")
    }

    /// State at arclength `t ∈ [0, length]`; exact for meridians, quintic
    /// Hermite between integrator steps otherwise.
    pub fn state_at(&self, t: f64) -> GeodesicSample {
        let t = t.clamp(0.0, self.length);
        match &self.kind {
            PathKind::Meridian { s0, dir, period } => {
                let s = s0 + dir * t;
                let (r, rdot, flips) = match period {
                    Some(d) => {
                        let u = s.rem_euclid(2.0 * d);
                        let (r, rd) = if u <= *d { (u, *dir) } else { (2.0 * d - u, -dir) };
                        (r, rd, (s / d).floor() - (s0 / d).floor())
                    }
                    None => {
                        if s >= 0.0 {
                            (s, *dir, 0.0)
                        } else {
                            (-s, -dir, 1.0)
                        }
                    }
                };
                GeodesicSample {
                    t,
                    r,
                    theta: self.start.theta + PI * flips.abs(),
                    rdot,
                    thetadot: 0.0,
                }
            }
            PathKind::Integrated { acc } => {
                let k = match self.samples.partition_point(|s| s.t <= t) {
                    0 => 0,
                    i if i >= self.samples.len() => self.samples.len().saturating_sub(2),
                    i => i - 1,
                };
                if self.samples.len() < 2 {
                    return self.samples[0];
                }
                let (a, b) = (&self.samples[k], &self.samples[k + 1]);
                let h = b.t - a.t;
                let s = if h > 0.0 { (t - a.t) / h } else { 0.0 };
                let (r, rdot) = quintic(h, s, a.r, a.rdot, acc[k][0], b.r, b.rdot, acc[k + 1][0]);
                let (theta, thetadot) =
                    quintic(h, s, a.theta, a.thetadot, acc[k][1], b.theta, b.thetadot, acc[k + 1][1]);
                GeodesicSample {
                    t,
                    r,
                    theta,
                    rdot,
                    thetadot,
                }
            }
        }
    }

    /// Arclengths in `(0, length)` at which `r` crosses any of `radii`.
    pub fn radial_crossings(&self, radii: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.kind {
            PathKind::Meridian { s0, dir, period } => {
                let s1 = s0 + dir * self.length;
                let (lo, hi) = if s1 >= *s0 { (*s0, s1) } else { (s1, *s0) };
                let mut push = |s: f64| {
                    if s > lo && s < hi {
                        out.push((s - s0) / dir);
                    }
                };
                for &b in radii {
                    match period {
                        Some(d) => {
                            let p = 2.0 * d;
                            let k0 = (lo / p).floor() as i64 - 1;
                            let k1 = (hi / p).ceil() as i64 + 1;
                            for k in k0..=k1 {
                                push(b + p * k as f64);
                                push(-b + p * k as f64);
                            }
                        }
                        None => {
                            push(b);
                            push(-b);
                        }
                    }
                }
            }
            PathKind::Integrated { .. } => {
                for &b in radii {
                    for w in self.samples.windows(2) {
                        let (ga, gb) = (w[0].r - b, w[1].r - b);
                        if ga == 0.0 || ga * gb >= 0.0 {
                            if gb == 0.0 && w[1].t < self.length {
                                out.push(w[1].t);
                            }
                            continue;
                        }
                        let (mut lo, mut hi) = (w[0].t, w[1].t);
                        for _ in 0..100 {
                            let mid = 0.5 * (lo + hi);
                            if mid <= lo || mid >= hi {
                                break;
                            }
                            if (self.state_at(mid).r - b) * ga > 0.0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        out.push(0.5 * (lo + hi));
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        out
    }

    fn measure_residuals(&mut self, m: &ManifoldWithDensity) -> Result<()> {
        let mut cres = 0.0f64;
        let mut sres = 0.0f64;
        for s in &self.samples {
            let p = m.phi_at(s.r, 0)?;
            let ang = p * p * s.thetadot;
            cres = cres.max((ang - self.clairaut_c).abs());
            sres = sres.max((s.rdot * s.rdot + ang * s.thetadot - 1.0).abs());
        }
        self.clairaut_residual = cres;
        self.speed_residual = sres;
        Ok(())
    }

    /// Per-sample Clairaut and speed residuals.
    pub fn residual_rows(&self, m: &ManifoldWithDensity) -> Result<Vec<[f64; 6]>> {
        self.samples
            .iter()
            .map(|s| {
                let p = m.phi_at(s.r, 0)?;
                let ang = p * p * s.thetadot;
                Ok([
                    s.t,
                    s.r,
                    s.theta,
                    s.rdot,
                    ang - self.clairaut_c,
                    s.rdot * s.rdot + ang * s.thetadot - 1.0,
                ])
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, m: &ManifoldWithDensity, out: &mut W) -> Result<()> {
        writeln!(out, "t,r,theta,rdot,clairaut_residual,speed_residual")?;
        for row in self.residual_rows(m)? {
            writeln!(out, "{}", csv_row(&row))?;
        }
        Ok(())
    }
}
