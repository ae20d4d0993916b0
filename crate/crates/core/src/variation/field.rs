use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Result};

/// A variation field `psi` along a geodesic of a given length, vanishing at
/// both ends.
pub trait VariationField {
    fn length(&self) -> f64;
    /// `(psi(t), psi'(t))`.
    fn eval(&self, t: f64) -> (f64, f64);
    /// Points where `psi` is only piecewise smooth.
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// The sine/plateau/sine field on `[0, r]`, `r >= pi`:
/// `sin t` on `[0, pi/2]`, `1` on `[pi/2, r - pi/2]`, `-sin(t - r)` on
/// `[r - pi/2, r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestField {
    pub total_length: f64,
}

pub fn berger_test_field(r: f64) -> Result<TestField> {
    if !(r >= PI) || !r.is_finite() {
        return Err(domain(format!("test field length {r} must be at least pi")));
    }
    Ok(TestField { total_length: r })
}

impl VariationField for TestField {
    fn length(&self) -> f64 {
        self.total_length
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let r = self.total_length;
        if t <= FRAC_PI_2 {
            (t.sin(), t.cos())
        } else if t < r - FRAC_PI_2 {
            (1.0, 0.0)
        } else {
            let (s, c) = (t - r).sin_cos();
            (-s, -c)
        }
    }

    fn breaks(&self) -> Vec<f64> {
        vec![FRAC_PI_2, self.total_length - FRAC_PI_2]
    }
}

/// Field given by closures for `psi` and `psi'`.
pub struct FnField<F, G> {
    pub length: f64,
    pub psi: F,
    pub dpsi: G,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> VariationField for FnField<F, G> {
    fn length(&self) -> f64 {
        self.length
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        ((self.psi)(t), (self.dpsi)(t))
    }

    fn breaks(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// `sin(k pi t / length)`.
pub fn sine_field(length: f64, k: u32) -> FnField<impl Fn(f64) -> f64, impl Fn(f64) -> f64> {
    let w = k as f64 * PI / length;
    FnField {
        length,
        psi: move |t: f64| (w * t).sin(),
        dpsi: move |t: f64| w * (w * t).cos(),
        breaks: Vec::new(),
    }
}
