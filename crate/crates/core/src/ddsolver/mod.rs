//! Steady-state drift-diffusion solver: nonlinear Poisson plus electron and
//! hole continuity, coupled by Gummel iteration, with bias continuation,
//! terminal currents, I-V sweeps and cutline export.

mod cutline;
mod flux;
mod geometry;
mod linear;
mod simulator;
mod sweeps;

use serde::{Deserialize, Serialize};

pub use cutline::{export_cutline, Cutline, CutlineDirection, Quantity};
pub use flux::{bernoulli, electron_flux, hole_flux};
pub use linear::{
    linear_solve, solve_direct, solve_with, LinearMethod, LinearSolution, LinearSystem,
};
pub use simulator::{PoissonStep, Simulator, TerminalCurrents};
pub use sweeps::SweepOutcome;

use crate::device::Contact;
use crate::error::{Error, Result};
use crate::physcore::{thermal_voltage, MaterialParams};

/// Applied contact voltages (V).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bias {
    pub gate: f64,
    pub source: f64,
    pub drain: f64,
    pub substrate: f64,
}

impl Bias {
    pub fn new(gate: f64, drain: f64) -> Self {
        Bias { gate, drain, ..Default::default() }
    }

    pub fn get(&self, c: Contact) -> f64 {
        match c {
            Contact::Gate => self.gate,
            Contact::Source => self.source,
            Contact::Drain => self.drain,
            Contact::Substrate => self.substrate,
        }
    }

    pub fn lerp(&self, to: &Bias, t: f64) -> Bias {
        let f = |a: f64, b: f64| a + (b - a) * t;
        Bias {
            gate: f(self.gate, to.gate),
            source: f(self.source, to.source),
            drain: f(self.drain, to.drain),
            substrate: f(self.substrate, to.substrate),
        }
    }

    pub fn max_abs_diff(&self, other: &Bias) -> f64 {
        Contact::ALL
            .into_iter()
            .map(|c| (self.get(c) - other.get(c)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        Contact::ALL.into_iter().all(|c| self.get(c).is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Electron,
    Hole,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub outer_iterations: usize,
    /// Max potential update (V) of each outer iteration at the final bias.
    pub update_history: Vec<f64>,
    pub final_update: f64,
    /// L2 norm of the Poisson residual (C/cm) of the returned state.
    pub poisson_residual: f64,
    pub linear_iterations: usize,
    pub continuation_steps: usize,
    pub wall_time_s: f64,
}

/// Potential and carrier densities at every node plus how they were reached.
/// Densities are zero at nodes that do not touch silicon.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub v: Vec<f64>,
    pub n: Vec<f64>,
    pub p: Vec<f64>,
    pub bias: Bias,
    pub diagnostics: Diagnostics,
}

/// Carrier transport coefficients. Diffusivities are derived from the
/// mobilities through the Einstein relation and cannot be set separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportParams {
    pub mu_n: f64,
    pub mu_p: f64,
    pub srh_enabled: bool,
    pub tau_n: f64,
    pub tau_p: f64,
    /// Constant trap-related density added to the space charge (cm^-3).
    pub n_t: f64,
    pub temp: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self::from_material(&MaterialParams::default(), 300.0)
    }
}

impl TransportParams {
    pub fn from_material(mat: &MaterialParams, temp: f64) -> Self {
        TransportParams {
            mu_n: mat.mu_n,
            mu_p: mat.mu_p,
            srh_enabled: false,
            tau_n: mat.tau_n,
            tau_p: mat.tau_p,
            n_t: 0.0,
            temp,
        }
    }

    pub fn d_n(&self) -> f64 {
        self.mu_n * thermal_voltage(self.temp).unwrap_or(f64::NAN)
    }

    pub fn d_p(&self) -> f64 {
        self.mu_p * thermal_voltage(self.temp).unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        thermal_voltage(self.temp)?;
        if !(self.mu_n > 0.0 && self.mu_p > 0.0) {
            return Err(Error::domain("mobilities must be positive"));
        }
        if !(self.tau_n > 0.0 && self.tau_p > 0.0) {
            return Err(Error::domain("lifetimes must be positive"));
        }
        if !self.n_t.is_finite() {
            return Err(Error::domain("n_t must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Outer convergence: max potential update (V).
    pub gummel_tol: f64,
    pub gummel_max_iter: usize,
    /// Relative residual for iterative linear solves.
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub omega: f64,
    /// Per-node clamp on Newton potential updates (V).
    pub damping: f64,
    pub bias_step_max: f64,
    pub poisson_solver: LinearMethod,
    pub continuity_solver: LinearMethod,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gummel_tol: 1e-5,
            gummel_max_iter: 400,
            linear_tol: 1e-8,
            linear_max_iter: 50_000,
            omega: 1.3,
            damping: 0.5,
            bias_step_max: 0.1,
            poisson_solver: LinearMethod::Direct,
            continuity_solver: LinearMethod::Direct,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.gummel_tol > 0.0 && self.linear_tol > 0.0) {
            return Err(Error::domain("solver tolerances must be positive"));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::domain("omega must lie in (0, 2)"));
        }
        if !(self.bias_step_max > 0.0) {
            return Err(Error::domain("bias_step_max must be positive"));
        }
        if !(self.damping > 0.0) {
            return Err(Error::domain("damping must be positive"));
        }
        if self.gummel_max_iter == 0 || self.linear_max_iter == 0 {
            return Err(Error::domain("iteration limits must be nonzero"));
        }
        Ok(())
    }
}
