//! Stroboscopic-map analysis of integrate-and-fire models driven by a
//! periodic square wave.
//!
//! The state obeys `x' = f(x) + I(t)` below a threshold `θ` and is reset to
//! zero on reaching it. The input `I` is a pulse of amplitude `A` lasting a
//! fraction `d` of each period `T`. The crate computes the time-`T` return
//! map, its periodic attractors and their firing numbers, the border-collision
//! curves that bound the spiking windows, and firing-rate staircases under
//! constant dose `Q = A d`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod cli;
mod error;
mod integrate;
pub mod model;
pub mod orbit;
mod roots;
pub mod strobe;
pub mod sweep;

pub use bifurcation::{
    bif_amplitude, bif_period, contraction_margin, rate_limits, right_branch_sup_slope, BifPoint, RateLimits,
    RateMin, Side,
};
pub use error::{Error, Result};
pub use integrate::IntegratorSettings;
pub use model::{
    averaged_time_to_threshold, classify_region, critical_dose, flow, time_to_threshold, validate_hypotheses,
    Forcing, HypothesisCheck, HypothesisReport, ModelSpec, Region, RegionClass, Subthreshold,
};
pub use num_rational::Ratio;
pub use orbit::{attractor, canonical_word, rotation_number, AttractorOptions, OrbitSummary};
pub use strobe::{boundary_sigma, fixed_point, strobe, BoundaryInfo, StrobeResult};
pub use sweep::{
    scan_plane, sweep_period, verify_adding, AddingCheck, AddingReport, CellOutcome, DoseMode, PlaneCell,
    PlaneScan, StaircaseSample, SweepOptions, Window,
};
