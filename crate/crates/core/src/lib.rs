//! Explicit piecewise quasiregular maps of the plane and the numerical
//! machinery around them: exact branch evaluation, region geometry, sampled
//! dilatation estimates, orbit/escape classification, and rendering.
//!
//! Module map:
//! - [`maps`]: the five maps as pure functions, with saturation on overflow
//! - [`regions`]: diamonds, strips, seed sets; membership and sampling
//! - [`qc`]: finite-difference derivatives, dilatation, winding degree
//! - [`dynamics`]: orbit iteration, exit times, grid classification
//! - [`checks`]: structured verification probes
//! - [`render`]: PPM output
//! - [`config`]: JSON run configs

pub mod checks;
pub mod config;
pub mod dynamics;
pub mod maps;
pub mod qc;
pub mod regions;
pub mod render;
pub mod sampling;

pub use dynamics::{DynamicsConfig, GridSpec, LabelGrid, OrbitLabel, OrbitResult};
pub use maps::{evaluate, MapError, MapKind, MapSpec, ParamMode, SATURATION_MAGNITUDE};
pub use regions::{Diamond, EscapeSeeds};
