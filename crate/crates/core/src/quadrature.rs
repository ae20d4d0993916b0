//! Composite Simpson quadrature over piecewise-smooth integrands.

/// Refinement stops once successive Simpson sums agree to this tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

const MIN_PANELS: usize = 16;
const MAX_PANELS: usize = 1 << 20;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let x = a + h * i as f64;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson on `[a, b]` with panel doubling until successive sums differ by
/// less than `tol`, followed by one Richardson correction.
pub fn simpson_refined<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    simpson_refined_from(f, a, b, tol, MIN_PANELS)
}

fn simpson_refined_from<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, start: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut panels = (start.max(MIN_PANELS) + 1) & !1;
    let mut prev = simpson(f, a, b, panels);
    loop {
        panels *= 2;
        let next = simpson(f, a, b, panels);
        if (next - prev).abs() < tol || panels >= MAX_PANELS {
            return next + (next - prev) / 15.0;
        }
        prev = next;
    }
}

/// Integrate `f` over `[a, b]` with forced nodes at every breakpoint inside
/// the interval; each smooth piece is integrated by [`simpson_refined`].
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    integrate_piecewise_nodes(f, a, b, breaks, tol, 0)
}

/// As [`integrate_piecewise`], with at least `min_nodes` Simpson nodes over
/// the whole interval, distributed by piece length.
pub fn integrate_piecewise_nodes<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
    min_nodes: usize,
) -> f64 {
    let nodes = merge_breaks(a, b, breaks);
    let span = (b - a).max(f64::MIN_POSITIVE);
    nodes
        .windows(2)
        .map(|w| {
            let frac = (w[1] - w[0]) / span;
            let start = (min_nodes as f64 * frac).ceil() as usize;
            simpson_refined_from(f, w[0], w[1], tol * frac.max(1e-3), start)
        })
        .sum()
}

/// Sorted, deduplicated node list `a, (breaks within (a, b)), b`.
pub fn merge_breaks(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(breaks.len() + 2);
    nodes.push(a);
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    for x in inner {
        if x - nodes[nodes.len() - 1] > 1e-14 {
            nodes.push(x);
        }
    }
    if b - nodes[nodes.len() - 1] > 1e-14 || nodes.len() == 1 {
        nodes.push(b);
    } else {
        let last = nodes.len() - 1;
        nodes[last] = b;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_over_half_period() {
        let v = simpson_refined(&f64::sin, 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_needs_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        let v = integrate_piecewise(&f, 0.0, 1.0, &[0.3], 1e-12);
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn merge_breaks_drops_outside_and_duplicates() {
        let n = merge_breaks(0.0, 1.0, &[0.5, -1.0, 0.5, 2.0, 0.25]);
        assert_eq!(n, vec![0.0, 0.25, 0.5, 1.0]);
    }
}
