//! Two-dimensional drift-diffusion simulation and characterization of
//! fully-depleted SOI n-channel MOSFETs with a metal gate.
//!
//! - [`physcore`]: constants and closed-form threshold/subthreshold models
//! - [`device`]: device description, doping and tensor meshes
//! - [`ddsolver`]: coupled Poisson/continuity solver, sweeps and cutlines
//! - [`iv`]: I-V curves and their CSV form
//! - [`extract`]: threshold, slope, DIBL, conductance and on/off metrics
//! - [`sweep`]: work-function sweeps, trend fits and optimum selection

pub mod ddsolver;
pub mod device;
pub mod error;
pub mod extract;
pub mod iv;
pub mod physcore;
pub mod sweep;

pub use ddsolver::{Bias, SolutionState, Simulator, SolverSettings, TransportParams};
pub use device::{default_device, DeviceSpec, Mesh, MeshDensity};
pub use error::{Error, Result};
pub use iv::{IvCurve, SweepKind};
pub use physcore::MaterialParams;
