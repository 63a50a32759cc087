//! 1-D space-time simulator of a Lambda-type atomic quantum memory.
//!
//! Implements gradient echo memory (GEM) and electromagnetically induced
//! transparency (EIT) storage protocols and their hybrid compositions
//! (frequency-to-time and time-to-frequency conversion), plus a heterodyne
//! detection/analysis pipeline.

pub mod analysis;
pub mod config;
pub mod density;
pub mod eit;
pub mod error;
pub mod gem;
pub mod grid;
pub mod output;
pub mod params;
pub mod ramp;
pub mod record;
pub mod sequence;
pub mod signal;
pub mod sweep;
pub mod trace;
pub mod units;

pub use density::{flat_density, sample_density, DensityProfile};
pub use grid::{make_grid, SimGrid};
pub use params::{ParamsInConfigUnits, PhysicalParams};
pub use trace::{C64, ComplexTrace};
