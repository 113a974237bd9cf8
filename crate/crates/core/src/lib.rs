//! Hazard identification for automated vehicles, starting from operational
//! scenarios and the deviations of the vehicle's observable behavior.
//!
//! The pipeline: `.hzl` model files are parsed and lowered ([`hazlang`]) into
//! a [`model::Project`]; [`generate`] combines segments with deviations (and,
//! for comparison, with malfunctions); [`review`] records expert decisions,
//! documents hazards and traces them back to malfunctions; [`service`] exposes
//! the store over HTTP.

pub mod clock;
pub mod generate;
pub mod hazlang;
pub mod model;
pub mod review;
pub mod service;
