//! Adaptive minimum-variance control of ARX plants.

pub mod arx;
pub mod control;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod noise;
pub mod presets;
pub mod simulation;
