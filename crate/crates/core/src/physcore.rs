//! Physical constants, silicon material parameters and the closed-form
//! long-channel threshold and subthreshold relations for bulk and
//! fully-depleted SOI NMOSFETs.
//!
//! Internal units: lengths in cm, potentials in V, charge in C, densities
//! in cm^-3, permittivities in F/cm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementary charge (C).
pub const Q: f64 = 1.602176634e-19;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380649e-23;
/// Vacuum permittivity (F/cm).
pub const EPS0: f64 = 8.8541878128e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub q: f64,
    pub k: f64,
    pub eps0: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        q: Q,
        k: K_B,
        eps0: EPS0,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Silicon / dielectric parameters at the simulation temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub eps_r_si: f64,
    pub eps_r_ox: f64,
    pub eps_r_nitride: f64,
    /// Intrinsic carrier density (cm^-3).
    pub ni: f64,
    /// Electron affinity of silicon (eV).
    pub chi_si: f64,
    /// Band gap (eV).
    pub eg: f64,
    /// Electron mobility (cm^2/V/s).
    pub mu_n: f64,
    /// Hole mobility (cm^2/V/s).
    pub mu_p: f64,
    /// SRH lifetimes (s).
    pub tau_n: f64,
    pub tau_p: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            eps_r_si: 11.7,
            eps_r_ox: 3.9,
            eps_r_nitride: 7.5,
            ni: 1.0e10,
            chi_si: 4.05,
            eg: 1.12,
            mu_n: 1417.0,
            mu_p: 470.5,
            tau_n: 1.0e-7,
            tau_p: 1.0e-7,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("eps_r_si", self.eps_r_si > 1.0),
            ("eps_r_ox", self.eps_r_ox > 1.0),
            ("eps_r_nitride", self.eps_r_nitride > 1.0),
            ("ni", self.ni > 0.0),
            ("mu_n", self.mu_n > 0.0),
            ("mu_p", self.mu_p > 0.0),
            ("tau_n", self.tau_n > 0.0),
            ("tau_p", self.tau_p > 0.0),
            ("chi_si", self.chi_si.is_finite()),
            ("eg", self.eg > 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::domain(format!("material parameter {name} out of range")));
            }
        }
        Ok(())
    }

    pub fn eps_si(&self) -> f64 {
        self.eps_r_si * EPS0
    }

    pub fn eps_ox(&self) -> f64 {
        self.eps_r_ox * EPS0
    }

    /// Work function of intrinsic silicon, chi + Eg/2 (eV). Potentials in the
    /// solver are measured from the intrinsic level, so a gate of work
    /// function `phi_m` sits at `Vg - (phi_m - intrinsic_work_function)`.
    pub fn intrinsic_work_function(&self) -> f64 {
        self.chi_si + 0.5 * self.eg
    }
}

/// Inputs of the closed-form threshold relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInputs {
    /// Gate metal work function (eV).
    pub phi_m: f64,
    /// Channel acceptor doping (cm^-3).
    pub na: f64,
    /// Net film doping magnitude used in the FD-SOI depletion-charge term.
    pub nd_film: f64,
    pub t_ox: f64,
    pub t_si: f64,
    /// Front interface charge (C/cm^2).
    pub q_ss: f64,
    /// Film/BOX interface charge (C/cm^2).
    pub q_ssb: f64,
    pub temp: f64,
}

impl AnalyticInputs {
    pub fn validate(&self, mat: &MaterialParams) -> Result<()> {
        if !(3.5..=6.0).contains(&self.phi_m) {
            return Err(Error::domain(format!("phi_m = {} eV outside [3.5, 6.0]", self.phi_m)));
        }
        if !(self.na >= mat.ni) {
            return Err(Error::domain(format!("na = {:e} below ni = {:e}", self.na, mat.ni)));
        }
        if !(self.t_ox > 0.0) || !(self.t_si > 0.0) {
            return Err(Error::domain("layer thicknesses must be positive"));
        }
        if !(self.temp > 0.0) {
            return Err(Error::domain("temperature must be positive"));
        }
        if !self.nd_film.is_finite() || !self.q_ss.is_finite() || !self.q_ssb.is_finite() {
            return Err(Error::domain("non-finite analytic input"));
        }
        Ok(())
    }

    pub fn c_ox(&self, mat: &MaterialParams) -> f64 {
        mat.eps_ox() / self.t_ox
    }
}

/// kT/q in volts.
pub fn thermal_voltage(temp: f64) -> Result<f64> {
    if !(temp > 0.0) || !temp.is_finite() {
        return Err(Error::domain(format!("temperature must be positive, got {temp}")));
    }
    Ok(K_B * temp / Q)
}

/// Bulk Fermi potential (kT/q) ln(na/ni) of p-type silicon.
pub fn fermi_potential(na: f64, ni: f64, temp: f64) -> Result<f64> {
    if !(ni > 0.0) {
        return Err(Error::domain("ni must be positive"));
    }
    if !(na >= ni) {
        return Err(Error::domain(format!(
            "acceptor doping {na:e} below ni {ni:e}: not p-type"
        )));
    }
    Ok(thermal_voltage(temp)? * (na / ni).ln())
}

/// Gate-to-semiconductor work-function difference, with the semiconductor
/// work function taken as chi + Eg/2 + phi_f.
pub fn work_function_difference(phi_m: f64, chi_si: f64, eg: f64, phi_f: f64) -> Result<f64> {
    if ![phi_m, chi_si, eg, phi_f].iter().all(|v| v.is_finite()) {
        return Err(Error::domain("non-finite work-function input"));
    }
    Ok(phi_m - (chi_si + eg / 2.0 + phi_f))
}

/// Maximum depletion width sqrt(4 eps_si phi_f / (q na)) in cm.
pub fn max_depletion_width(na: f64, phi_f: f64, mat: &MaterialParams) -> Result<f64> {
    if !(na > 0.0) || !(phi_f > 0.0) {
        return Err(Error::domain("max depletion width needs na > 0 and phi_f > 0"));
    }
    Ok((4.0 * mat.eps_si() * phi_f / (Q * na)).sqrt())
}

/// Classical bulk threshold voltage.
pub fn vth_classic(input: &AnalyticInputs, mat: &MaterialParams) -> Result<f64> {
    input.validate(mat)?;
    let phi_f = fermi_potential(input.na, mat.ni, input.temp)?;
    let phi_ms = work_function_difference(input.phi_m, mat.chi_si, mat.eg, phi_f)?;
    let c_ox = input.c_ox(mat);
    // x_dmax is undefined at na = ni (phi_f = 0) but its charge term vanishes.
    let depletion = if phi_f > 0.0 {
        Q * input.na * max_depletion_width(input.na, phi_f, mat)? / c_ox
    } else {
        0.0
    };
    Ok(phi_ms - input.q_ss / c_ox + 2.0 * phi_f + depletion)
}

/// Fully-depleted SOI threshold voltage: the film thickness replaces the
/// depletion width and the back-interface charge couples through the
/// series oxide/film capacitances.
pub fn vth_fdsoi(input: &AnalyticInputs, mat: &MaterialParams) -> Result<f64> {
    input.validate(mat)?;
    let phi_f = fermi_potential(input.na, mat.ni, input.temp)?;
    let phi_ms = work_function_difference(input.phi_m, mat.chi_si, mat.eg, phi_f)?;
    let ox = input.t_ox / mat.eps_ox();
    let si = input.t_si / mat.eps_si();
    Ok(phi_ms - input.q_ss * ox + 2.0 * phi_f + Q * input.nd_film * input.t_si * ox
        - input.q_ssb * (ox + si))
}

/// Analytic subthreshold swing (kT/q) ln10 (1 + cd/ci), in mV/decade.
pub fn subthreshold_slope_analytic(cd: f64, ci: f64, temp: f64) -> Result<f64> {
    if !(ci > 0.0) {
        return Err(Error::domain("gate capacitance must be positive"));
    }
    if !(cd >= 0.0) {
        return Err(Error::domain("depletion capacitance must be non-negative"));
    }
    Ok(thermal_voltage(temp)? * std::f64::consts::LN_10 * (1.0 + cd / ci) * 1e3)
}

/// Strictly thinner than the bulk maximum depletion width.
pub fn is_fully_depleted(t_si: f64, na: f64, phi_f: f64, mat: &MaterialParams) -> Result<bool> {
    if !(t_si > 0.0) {
        return Err(Error::domain("film thickness must be positive"));
    }
    Ok(t_si < max_depletion_width(na, phi_f, mat)?)
}

/// Body capacitance seen by the front gate: film in series with BOX when
/// fully depleted, the bulk depletion capacitance otherwise (F/cm^2).
pub fn body_capacitance(input: &AnalyticInputs, t_box: f64, mat: &MaterialParams) -> Result<f64> {
    let phi_f = fermi_potential(input.na, mat.ni, input.temp)?;
    if phi_f > 0.0 && !is_fully_depleted(input.t_si, input.na, phi_f, mat)? {
        return Ok(mat.eps_si() / max_depletion_width(input.na, phi_f, mat)?);
    }
    if !(t_box > 0.0) {
        return Err(Error::domain("BOX thickness must be positive"));
    }
    let c_si = mat.eps_si() / input.t_si;
    let c_box = mat.eps_ox() / t_box;
    Ok(c_si * c_box / (c_si + c_box))
}
