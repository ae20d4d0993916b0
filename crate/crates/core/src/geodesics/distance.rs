use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ode::Dopri5;
use crate::profiles::ManifoldWithDensity;

use super::path::{is_pole, shoot_from, GeodesicPath, GeodesicSystem, Point, ShootOptions};

/// Launch-angle bracket width at which refinement stops.
const ALPHA_TOL: f64 = 1e-12;

/// Largest miss accepted once the bracket has collapsed; the residual is
/// then dominated by integrator noise. The miss is measured perpendicular
/// to the geodesic, since the radial residual of a nearly radial geodesic
/// amplifies noise in `theta` by `1/(phi theta')`.
const RESIDUAL_ACCEPT: f64 = 1e-7;

/// The scan integrates past the length bound by this factor so that both
/// sides of a minimizer near the bound are bracketed.
const SCAN_HORIZON: f64 = 1.5;

/// Largest `theta` displacement searched.
const MAX_WINDING: f64 = TAU * 64.0;

/// Number of interior launch angles in the distance scan.
pub const DEFAULT_LAUNCHES: usize = 256;

/// Candidates within this of the shortest one are reported as minimizers.
pub const DEFAULT_DISTANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistanceOptions {
    pub launches: usize,
    pub tol: f64,
    pub ode_tol: f64,
    /// Looser tolerance used for the coarse launch-angle scan.
    pub scan_tol: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            launches: DEFAULT_LAUNCHES,
            tol: DEFAULT_DISTANCE_TOL,
            ode_tol: 1e-10,
            scan_tol: 1e-8,
        }
    }
}

/// Distance and every minimal geodesic found.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub distance: f64,
    pub paths: Vec<GeodesicPath>,
    /// Launch angles of `paths`.
    pub launch_angles: Vec<f64>,
    pub launches: usize,
}

/// Wrap to `(-pi, pi]`.
fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

pub fn distance(m: &ManifoldWithDensity, p: Point, q: Point) -> Result<DistanceResult> {
    distance_with(m, p, q, &DistanceOptions::default())
}

pub fn distance_with(
    m: &ManifoldWithDensity,
    p: Point,
    q: Point,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    let end = m.r_end();
    for x in [p, q] {
        if !(x.r >= 0.0 && x.r <= end) || !x.theta.is_finite() {
            return Err(domain(format!("point ({}, {}) outside the manifold", x.r, x.theta)));
        }
    }
    let shoot_opts = ShootOptions {
        tol: opts.ode_tol,
        ..ShootOptions::default()
    };
    let single = |alpha: f64, start: Point, len: f64| -> Result<DistanceResult> {
        let path = shoot_from(m, start, alpha, len, &shoot_opts)?;
        Ok(DistanceResult {
            distance: len,
            paths: vec![path],
            launch_angles: vec![alpha],
            launches: 0,
        })
    };

    // Pole endpoints: the meridian through the other point is the unique
    // minimizer (or one of a sphere's worth when both are poles).
    if is_pole(m, p.r) {
        let d = if p.r <= 1e-14 { q.r } else { end - q.r };
        return single(0.0, Point::new(p.r, q.theta), d);
    }
    if is_pole(m, q.r) {
        let toward_origin = q.r <= 1e-14;
        let d = if toward_origin { p.r } else { end - p.r };
        return single(if toward_origin { PI } else { 0.0 }, p, d);
    }

    let delta = wrap_angle(q.theta - p.theta);
    let sigma = if delta < 0.0 { -1.0 } else { 1.0 };
    let da = delta.abs();
    if da <= 1e-15 {
        let d = (q.r - p.r).abs();
        return single(if q.r >= p.r { 0.0 } else { PI }, p, d);
    }

    let t_max = if m.is_compact() {
        (p.r + q.r).min(2.0 * end - p.r - q.r)
    } else {
        p.r + q.r
    };
    let t_lim = SCAN_HORIZON * t_max + 1e-9;

    // (t, launch angle in the actual orientation)
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    if (da - PI).abs() <= 1e-15 {
        candidates.push((p.r + q.r, PI));
        if m.is_compact() {
            candidates.push((2.0 * end - p.r - q.r, 0.0));
        }
    }

    let scanner = Scanner {
        m,
        r0: p.r,
        rq: q.r,
        da,
        t_lim,
        skip_mirror: (da - PI).abs() <= 1e-15,
    };
    let scan_ode = Dopri5::with_tolerance(opts.scan_tol);
    let fine_ode = Dopri5::with_tolerance(opts.ode_tol);

    let n = opts.launches.max(4);
    let a1 = PI / (n as f64 + 1.0);
    let mut alphas: Vec<f64> = (1..=n).map(|k| PI * k as f64 / (n as f64 + 1.0)).collect();
    for j in 1..=12 {
        let a = a1 * 0.5f64.powi(j);
        alphas.push(a);
        alphas.push(PI - a);
    }
    alphas.sort_by(f64::total_cmp);

    // key -> per-alpha residual of r at theta = tau
    let mut table: BTreeMap<Key, Vec<(f64, Val)>> = BTreeMap::new();
    for (key, g) in scanner.limits(0.0) {
        table.entry(key).or_default().push((0.0, Val::limit(g)));
    }
    let mut scans = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        scans.push((a, scanner.events(&scan_ode, a, None)?));
    }
    for (_, scan) in &scans {
        for (key, _) in &scan.events {
            table.entry(*key).or_default();
        }
    }
    let keys: Vec<Key> = table.keys().copied().collect();
    for (a, scan) in &scans {
        for key in &keys {
            let val = match scan.events.iter().find(|(k, _)| k == key) {
                Some((_, ev)) => Some(ev.val(q.r)),
                None => scan.end_r.map(|r| Val::Sign((r - q.r).signum())),
            };
            if let Some(v) = val {
                table.get_mut(key).unwrap().push((*a, v));
            }
        }
    }
    for (key, g) in scanner.limits(PI) {
        table.entry(key).or_default().push((PI, Val::limit(g)));
    }

    let mut best_unconverged: Option<f64> = None;
    for (key, series) in &table {
        for w in series.windows(2) {
            let ((aa, va), (ab, vb)) = (w[0], w[1]);
            if matches!((va, vb), (Val::Sign(_), Val::Sign(_))) || va.sign() * vb.sign() > 0.0 {
                continue;
            }
            if !is_adjacent(&alphas, aa, ab) {
                continue;
            }
            match scanner.refine(&fine_ode, *key, (aa, va), (ab, vb))? {
                Refined::Converged { alpha, t } => {
                    let act = if key.mirror == (sigma > 0.0) { TAU - alpha } else { alpha };
                    candidates.push((t, act));
                }
                Refined::Failed { t } => {
                    if t.is_finite() {
                        best_unconverged = Some(best_unconverged.map_or(t, |b: f64| b.min(t)));
                    }
                }
            }
        }
    }

    if candidates.is_empty() {
        return Err(Error::Search {
            reason: format!(
                "no geodesic from ({}, {}) to ({}, {}) found within length {t_max}",
                p.r, p.theta, q.r, q.theta
            ),
            best_candidate: best_unconverged,
        });
    }
    let d = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut angles: Vec<f64> = Vec::new();
    let mut paths = Vec::new();
    for &(t, act) in &candidates {
        if t > d + opts.tol {
            continue;
        }
        let act = act.rem_euclid(TAU);
        if angles.iter().any(|a| wrap_angle(a - act).abs() < 1e-7) {
            continue;
        }
        angles.push(act);
        paths.push(shoot_from(m, p, act, t, &shoot_opts)?);
    }
    Ok(DistanceResult {
        distance: d,
        paths,
        launch_angles: angles,
        launches: n,
    })
}

fn is_adjacent(alphas: &[f64], a: f64, b: f64) -> bool {
    if a == 0.0 {
        return alphas.first() == Some(&b);
    }
    if b == PI {
        return alphas.last() == Some(&a);
    }
    match alphas.binary_search_by(|x| x.total_cmp(&a)) {
        Ok(i) => alphas.get(i + 1) == Some(&b),
        Err(_) => false,
    }
}

/// Target `theta` displacement: `da + 2 pi k`, or for mirrored geodesics
/// `2 pi - da + 2 pi k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    mirror: bool,
    k: u32,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    r: f64,
    rdot: f64,
    /// `phi theta'`, the sine of the angle to the meridian.
    w: f64,
}

impl Event {
    fn val(&self, rq: f64) -> Val {
        Val::Real {
            g: self.r - rq,
            t: self.t,
            rdot: self.rdot,
            w: self.w,
        }
    }
}

/// Residual `r(theta = tau) - r_q` at one launch angle, or only the sign
/// of `r - r_q` at the scan horizon when `theta` never reached `tau`.
#[derive(Debug, Clone, Copy)]
enum Val {
    Real { g: f64, t: f64, rdot: f64, w: f64 },
    Sign(f64),
}

impl Val {
    fn limit(g: f64) -> Self {
        Val::Real { g, t: f64::NAN, rdot: 0.0, w: 1.0 }
    }
}

impl Val {
    fn sign(self) -> f64 {
        match self {
            Val::Real { g, .. } => {
                if g == 0.0 {
                    0.0
                } else {
                    g.signum()
                }
            }
            Val::Sign(s) => s,
        }
    }
}

struct Scan {
    events: Vec<(Key, Event)>,
    /// `r` at the horizon, when the integration reached it.
    end_r: Option<f64>,
}

enum Refined {
    Converged { alpha: f64, t: f64 },
    Failed { t: f64 },
}

struct Scanner<'a> {
    m: &'a ManifoldWithDensity,
    r0: f64,
    rq: f64,
    da: f64,
    t_lim: f64,
    skip_mirror: bool,
}

impl Scanner<'_> {
    fn tau(&self, key: Key) -> f64 {
        let base = if key.mirror { TAU - self.da } else { self.da };
        base + TAU * key.k as f64
    }

    /// Targets in increasing order of `tau` not exceeding `limit`.
    fn keys_upto(&self, limit: f64) -> Vec<Key> {
        let mut keys = Vec::new();
        let mut k = 0;
        loop {
            let mut any = false;
            for mirror in [false, true] {
                if mirror && self.skip_mirror {
                    continue;
                }
                let key = Key { mirror, k };
                if self.tau(key) <= limit {
                    keys.push(key);
                    any = true;
                }
            }
            if !any {
                break;
            }
            k += 1;
        }
        keys.sort_by(|a, b| self.tau(*a).total_cmp(&self.tau(*b)));
        keys
    }

    /// Residuals in the meridian limits `alpha -> 0+` and `alpha -> pi-`:
    /// `theta` jumps by `pi` at each pole passage.
    fn limits(&self, alpha: f64) -> Vec<(Key, f64)> {
        let mut out = Vec::new();
        let outward = alpha == 0.0;
        if !self.m.is_compact() {
            // A cap has one pole passage, on inward launches.
            if !outward {
                for key in self.keys_upto(PI) {
                    if self.tau(key) < PI - 1e-12 {
                        out.push((key, -self.rq));
                    }
                }
            }
            return out;
        }
        let d = self.m.r_end();
        for key in self.keys_upto(MAX_WINDING) {
            let tau = self.tau(key);
            let pass = (tau / PI).ceil();
            if (tau / PI - (tau / PI).round()).abs() < 1e-12 {
                continue;
            }
            let kpass = pass as i64;
            let t = if outward {
                kpass as f64 * d - self.r0
            } else {
                self.r0 + (kpass - 1) as f64 * d
            };
            if t > self.t_lim {
                break;
            }
            let at_far = if outward { kpass % 2 == 1 } else { kpass % 2 == 0 };
            let r = if at_far { d } else { 0.0 };
            out.push((key, r - self.rq));
        }
        out
    }

    /// Integrate at launch angle `alpha ∈ (0, pi)` and record where `theta`
    /// passes each target. With `only = Some(key)` the integration stops at
    /// that target.
    fn events(&self, ode: &Dopri5, alpha: f64, only: Option<Key>) -> Result<Scan> {
        let sys = GeodesicSystem::new(self.m);
        let phi0 = self.m.phi_at(self.r0, 0)?;
        let (sa, ca) = alpha.sin_cos();
        let y0 = [self.r0, ca, 0.0, sa / phi0];
        let keys = match only {
            Some(k) => vec![k],
            None => self.keys_upto(MAX_WINDING),
        };
        let mut next = 0usize;
        let mut events = Vec::new();
        let result = ode.integrate(&sys, 0.0, y0, self.t_lim, |st| {
            while next < keys.len() && st.y1[2] >= self.tau(keys[next]) {
                let tau = self.tau(keys[next]);
                if let Some(ev) = locate(ode, &sys, st.t0, st.y0, st.t1, tau) {
                    events.push((keys[next], ev));
                }
                next += 1;
            }
            if next >= keys.len() {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        match result {
            Ok((t, y)) => Ok(Scan {
                events,
                end_r: (t >= self.t_lim).then_some(y[0]),
            }),
            // Near-pole passages at tiny Clairaut constants can exhaust the
            // step size; events found so far stay valid.
            Err(Error::Integration { .. }) => Ok(Scan { events, end_r: None }),
            Err(e) => Err(e),
        }
    }

    fn eval(&self, ode: &Dopri5, key: Key, alpha: f64) -> Result<Option<Val>> {
        let scan = self.events(ode, alpha, Some(key))?;
        Ok(match scan.events.into_iter().find(|(k, _)| *k == key) {
            Some((_, ev)) => Some(ev.val(self.rq)),
            None => scan.end_r.map(|r| Val::Sign((r - self.rq).signum())),
        })
    }

    /// Illinois iteration on the residual over a sign-change bracket;
    /// falls back to bisection while an endpoint carries only a sign.
    fn refine(&self, ode: &Dopri5, key: Key, a: (f64, Val), b: (f64, Val)) -> Result<Refined> {
        let (mut a0, mut va) = a;
        let (mut b0, mut vb) = b;
        let mut last_t = f64::NAN;
        let mut side = 0i8;
        for _ in 0..300 {
            for (x, v) in [(a0, va), (b0, vb)] {
                if let Val::Real { g, .. } = v {
                    if g == 0.0 && x > 0.0 && x < PI {
                        return self.finish(ode, key, x);
                    }
                }
            }
            let lo = a0.min(b0);
            let hi = a0.max(b0);
            let mut c = match (va, vb) {
                (Val::Real { g: ga, .. }, Val::Real { g: gb, .. }) if ga != gb => {
                    b0 - gb * (b0 - a0) / (gb - ga)
                }
                _ => 0.5 * (a0 + b0),
            };
            if !(c > lo && c < hi) || !c.is_finite() {
                c = 0.5 * (a0 + b0);
            }
            if !(c > 0.0 && c < PI) || hi - lo <= ALPHA_TOL {
                break;
            }
            let Some(vc) = self.eval(ode, key, c)? else {
                return Ok(Refined::Failed { t: last_t });
            };
            if let Val::Real { g, t, rdot, w } = vc {
                last_t = t;
                if g.abs() * w.min(1.0) <= 1e-11 * (1.0 + self.rq) {
                    return Ok(Refined::Converged { alpha: c, t: t - g * rdot });
                }
            }
            if vc.sign() * vb.sign() < 0.0 {
                a0 = b0;
                va = vb;
                side = 0;
            } else {
                if side == -1 {
                    if let Val::Real { g, t, rdot, w } = va {
                        va = Val::Real { g: 0.5 * g, t, rdot, w };
                    }
                }
                side = -1;
            }
            b0 = c;
            vb = vc;
        }
        let mid = 0.5 * (a0 + b0);
        if mid > 0.0 && mid < PI {
            if let Some(Val::Real { g, t, rdot, w }) = self.eval(ode, key, mid)? {
                if g.abs() * w.min(1.0) <= RESIDUAL_ACCEPT {
                    return Ok(Refined::Converged { alpha: mid, t: t - g * rdot });
                }
                last_t = t;
            }
        }
        Ok(Refined::Failed { t: last_t })
    }

    fn finish(&self, ode: &Dopri5, key: Key, alpha: f64) -> Result<Refined> {
        match self.eval(ode, key, alpha)? {
            Some(Val::Real { g, t, rdot, .. }) => Ok(Refined::Converged { alpha, t: t - g * rdot }),
            _ => Ok(Refined::Failed { t: f64::NAN }),
        }
    }
}

/// Find the time in `[t0, t1]` at which `theta = tau` by re-stepping from
/// the step start; `theta` is increasing.
fn locate(ode: &Dopri5, sys: &GeodesicSystem<'_>, t0: f64, y0: &[f64; 4], t1: f64, tau: f64) -> Option<Event> {
    let (mut lo, mut hi) = (0.0, t1 - t0);
    let mut glo = y0[2] - tau;
    let mut ghi = ode.step_once(sys, t0, y0, hi)?[2] - tau;
    if glo > 0.0 {
        return None;
    }
    let mut best = None;
    let mut side = 0i8;
    for _ in 0..100 {
        let mut h = if ghi > glo { lo - glo * (hi - lo) / (ghi - glo) } else { 0.5 * (lo + hi) };
        if !(h > lo && h < hi) {
            h = 0.5 * (lo + hi);
        }
        let y = ode.step_once(sys, t0, y0, h)?;
        let g = y[2] - tau;
        let w = sys.m.phi_at(y[0], 0).map_or(1.0, |p| p * y[3].abs());
        best = Some(Event {
            t: t0 + h,
            r: y[0],
            rdot: y[1],
            w,
        });
        if g.abs() <= 1e-14 * (1.0 + tau.abs()) || hi - lo <= 1e-15 {
            break;
        }
        if g < 0.0 {
            lo = h;
            glo = g;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = h;
            ghi = g;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    best
}
