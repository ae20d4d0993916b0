//! Second-derivative profiles for the smoothing bands.
//!
//! A band of width `W` must start at second derivative `a`, end at `b`, and
//! have a prescribed integral `target` so the slope lands where the next
//! segment expects it. When `target` lies strictly between `a·W` and `b·W` a
//! monotone plateau-plus-ramp shape does the job in closed form. Otherwise no
//! monotone shape exists and a boundary-layer shape is used: a thin ramp from
//! `a` to an overshoot plateau `h`, the plateau, and a thin terminal plunge
//! to `b`.

use crate::error::{Error, Result};

use super::segment::band_integral;

/// Band integral must match its target to this accuracy.
pub const BAND_INTEGRAL_TOL: f64 = 1e-12;

/// Node list `(offset, second derivative)` for a smoothing band.
pub fn solve_smoothing_band(a: f64, b: f64, width: f64, target: f64) -> Result<Vec<[f64; 2]>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Construction(format!(
            "smoothing band width must be positive, got {width}"
        )));
    }
    if ![a, b, target].iter().all(|v| v.is_finite()) {
        return Err(Error::Construction("non-finite smoothing band data".into()));
    }
    let nodes = if a == b && target == a * width {
        vec![[0.0, a], [width, a]]
    } else {
        let (lo, hi) = (a.min(b) * width, a.max(b) * width);
        if target > lo && target < hi {
            plateau_ramp(a, b, width, target)
        } else {
            boundary_layer(a, b, width, target)?
        }
    };
    let residual = band_integral(&nodes) - target;
    if residual.abs() > BAND_INTEGRAL_TOL {
        return Err(Error::Construction(format!(
            "smoothing band integral misses its target by {residual:e}"
        )));
    }
    Ok(nodes)
}

/// Monotone shape with one plateau and one ramp.
fn plateau_ramp(a: f64, b: f64, width: f64, target: f64) -> Vec<[f64; 2]> {
    let mid = 0.5 * (a + b) * width;
    if target <= mid {
        // plateau at `a`, ramp at the right end
        let u = 2.0 * (target - a * width) / (b - a);
        if u >= width {
            vec![[0.0, a], [width, b]]
        } else {
            vec![[0.0, a], [width - u, a], [width, b]]
        }
    } else {
        // ramp at the left end, plateau at `b`
        let u = 2.0 * (b * width - target) / (b - a);
        vec![[0.0, a], [u, b], [width, b]]
    }
}

/// Thin ramps of equal width `w` at both ends around a plateau `h` beyond
/// the endpoint values. The overshoot starts at `width²` and doubles until
/// the target becomes reachable; `w` then follows by bisection.
fn boundary_layer(a: f64, b: f64, width: f64, target: f64) -> Result<Vec<[f64; 2]>> {
    let below = target <= a.min(b) * width;
    let integral = |h: f64, w: f64| 0.5 * (a + b) * w + h * (width - w);

    let mut overshoot = width * width;
    let mut h = f64::NAN;
    for _ in 0..200 {
        let cand = if below {
            a.min(b) - overshoot
        } else {
            a.max(b) + overshoot
        };
        let reachable = if below {
            integral(cand, 0.0) <= target
        } else {
            integral(cand, 0.0) >= target
        };
        if reachable {
            h = cand;
            break;
        }
        overshoot *= 2.0;
    }
    if !h.is_finite() {
        return Err(Error::Construction(
            "no boundary-layer plateau reaches the band integral".into(),
        ));
    }
    let g = |w: f64| integral(h, w) - target;
    let (mut lo, mut hi) = (0.0, 0.5 * width);
    if g(lo).signum() == g(hi).signum() && g(hi) != 0.0 {
        return Err(Error::Construction(format!(
            "boundary-layer band infeasible: plateau {h} cannot match integral {target}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == g(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    if w <= 0.0 {
        return Err(Error::Construction(
            "boundary-layer band collapsed to zero width".into(),
        ));
    }
    Ok(vec![[0.0, a], [w, h], [width - w, h], [width, b]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slope_is_monotone(nodes: &[[f64; 2]]) -> bool {
        nodes.windows(2).all(|w| w[1][1] >= w[0][1])
    }

    #[test]
    fn f_band_plateau_then_ramp() {
        let nodes = solve_smoothing_band(-1.8, 7.2, 0.02, 0.0).unwrap();
        assert_eq!(nodes.len(), 3);
        assert_eq!(nodes[0], [0.0, -1.8]);
        assert_eq!(nodes[1][1], -1.8);
        // ramp width u = -2a W / (b - a) = 3.6 * 0.02 / 9
        let u = 0.02 - nodes[1][0];
        assert!((u - 0.008).abs() < 1e-15, "{u}");
        assert!(slope_is_monotone(&nodes));
        assert!(band_integral(&nodes).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_band_is_a_single_ramp() {
        let nodes = solve_smoothing_band(-1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(nodes, vec![[0.0, -1.0], [1.0, 1.0]]);
    }

    #[test]
    fn plateau_moves_right_when_b_is_small() {
        // |a| > b  =>  ramp at the left end, u = 2bW/(b-a)
        let nodes = solve_smoothing_band(-3.0, 1.0, 0.1, 0.0).unwrap();
        assert_eq!(nodes.len(), 3);
        assert!((nodes[1][0] - 2.0 * 0.1 / 4.0).abs() < 1e-15);
        assert_eq!(nodes[1][1], 1.0);
        assert!(slope_is_monotone(&nodes));
        assert!(band_integral(&nodes).abs() <= 1e-12);
    }

    #[test]
    fn phi_band_boundary_layer() {
        let d: f64 = 0.02;
        let nodes = solve_smoothing_band(-d.cos(), 0.0, d, -d.sin()).unwrap();
        assert_eq!(nodes.len(), 4);
        let h = nodes[1][1];
        let w = nodes[1][0];
        assert!((h + 1.0002).abs() < 5e-5, "plateau {h}");
        assert!((w - 1.1e-5).abs() < 1e-6, "plunge width {w}");
        assert!((nodes[3][0] - nodes[2][0] - w).abs() < 1e-15);
        assert!((band_integral(&nodes) + d.sin()).abs() <= 1e-12);
    }

    #[test]
    fn nonpositive_width_is_rejected() {
        assert!(solve_smoothing_band(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(solve_smoothing_band(-1.0, 1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn upward_boundary_layer() {
        let nodes = solve_smoothing_band(1.0, 0.0, 0.1, 0.2).unwrap();
        assert!(nodes[1][1] > 1.0);
        assert!((band_integral(&nodes) - 0.2).abs() <= 1e-12);
    }
}
