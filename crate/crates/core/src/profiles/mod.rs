//! Radial profiles, smoothing bands, and the model manifolds built from them.

mod band;
mod model;
mod segment;

pub use band::{solve_smoothing_band, BAND_INTEGRAL_TOL};
pub use model::{
    build_model, cylinder_radius, CapShape, doubling_point, family_limit, ManifoldWithDensity, Meta,
    ModelKind, ModelParams, RadialJets, ScaleMode, Topology, DEFAULT_R_MAX, POLE_EPS,
};
pub use segment::{
    band_integral, JunctionResidual, Jet, RadialProfile, SegmentKind, SegmentSpec, C2_TOL,
};
