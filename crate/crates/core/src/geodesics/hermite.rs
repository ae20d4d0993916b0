//! Quintic Hermite interpolation from value, first and second derivative.

/// Value and derivative at `s ∈ [0, 1]` of the quintic matching
/// `(y0, d0, a0)` at 0 and `(y1, d1, a1)` at 1, where derivatives are with
/// respect to the original variable and `h` is the interval length.
#[allow(clippy::too_many_arguments)]
pub(crate) fn quintic(h: f64, s: f64, y0: f64, d0: f64, a0: f64, y1: f64, d1: f64, a1: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let g2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let g3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let g5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let hh = h * h;
    let y = h0 * y0 + h * h1 * d0 + hh * h2 * a0 + hh * h3 * a1 + h * h4 * d1 + h5 * y1;
    let dy = (g0 * y0 + h * g1 * d0 + hh * g2 * a0 + hh * g3 * a1 + h * g4 * d1 + g5 * y1) / h;
    (y, dy)
}
