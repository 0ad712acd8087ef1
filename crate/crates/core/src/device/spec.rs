use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physcore::AnalyticInputs;

/// Geometry, doping and gate of a planar FD-SOI NMOSFET. Lengths in cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub l_gate: f64,
    pub t_si: f64,
    pub t_ox: f64,
    pub t_box: f64,
    pub t_spacer: f64,
    /// Length of each source/drain region.
    pub l_sd: f64,
    pub na_channel: f64,
    pub nd_sd: f64,
    /// Gate metal work function (eV).
    pub phi_m: f64,
    pub include_spacer: bool,
    pub temp: f64,
}

/// The 25 nm FD-SOI NMOSFET with a 4.50 eV metal gate.
pub fn default_device() -> DeviceSpec {
    DeviceSpec {
        l_gate: 25e-7,
        t_si: 6e-7,
        t_ox: 0.6e-7,
        t_box: 20e-7,
        t_spacer: 0.7e-7,
        l_sd: 20e-7,
        na_channel: 1e17,
        nd_sd: 1e19,
        phi_m: 4.50,
        include_spacer: false,
        temp: 300.0,
    }
}

impl Default for DeviceSpec {
    fn default() -> Self {
        default_device()
    }
}

/// One violated bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecViolation {
    pub field: &'static str,
    pub bound: String,
    pub value: f64,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} violates {}", self.field, self.value, self.bound)
    }
}

/// Collects every violated invariant of `spec`.
pub fn validate_spec(spec: &DeviceSpec) -> std::result::Result<(), Vec<SpecViolation>> {
    let mut out = Vec::new();
    let mut positive = |field: &'static str, value: f64| {
        if !(value > 0.0 && value.is_finite()) {
            out.push(SpecViolation {
                field,
                bound: "> 0".into(),
                value,
            });
        }
    };
    positive("l_gate", spec.l_gate);
    positive("t_si", spec.t_si);
    positive("t_ox", spec.t_ox);
    positive("t_box", spec.t_box);
    positive("t_spacer", spec.t_spacer);
    positive("l_sd", spec.l_sd);
    positive("temp", spec.temp);
    for (field, value) in [("na_channel", spec.na_channel), ("nd_sd", spec.nd_sd)] {
        if !(1e12..=1e21).contains(&value) {
            out.push(SpecViolation {
                field,
                bound: "within [1e12, 1e21] cm^-3".into(),
                value,
            });
        }
    }
    if !(spec.nd_sd > spec.na_channel) {
        out.push(SpecViolation {
            field: "nd_sd",
            bound: format!("> na_channel ({:e})", spec.na_channel),
            value: spec.nd_sd,
        });
    }
    if !(3.5..=6.0).contains(&spec.phi_m) {
        out.push(SpecViolation {
            field: "phi_m",
            bound: "within [3.5, 6.0] eV".into(),
            value: spec.phi_m,
        });
    }
    if spec.include_spacer && spec.t_spacer >= spec.l_sd {
        out.push(SpecViolation {
            field: "t_spacer",
            bound: format!("< l_sd ({:e})", spec.l_sd),
            value: spec.t_spacer,
        });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        validate_spec(self).map_err(Error::InvalidSpec)
    }

    pub fn with_phi_m(&self, phi_m: f64) -> DeviceSpec {
        DeviceSpec {
            phi_m,
            ..self.clone()
        }
    }

    pub fn total_length(&self) -> f64 {
        2.0 * self.l_sd + self.l_gate
    }

    pub fn total_height(&self) -> f64 {
        self.t_ox + self.t_si + self.t_box
    }

    /// Inputs of the closed-form threshold relations for this device, with
    /// the given front and back interface charges (C/cm^2).
    pub fn analytic_inputs(&self, q_ss: f64, q_ssb: f64) -> AnalyticInputs {
        AnalyticInputs {
            phi_m: self.phi_m,
            na: self.na_channel,
            nd_film: self.na_channel,
            t_ox: self.t_ox,
            t_si: self.t_si,
            q_ss,
            q_ssb,
            temp: self.temp,
        }
    }

    /// x of the source-side and drain-side metallurgical junctions.
    pub fn junctions(&self) -> (f64, f64) {
        (self.l_sd, self.l_sd + self.l_gate)
    }

    /// y of the top and bottom film interfaces.
    pub fn film_bounds(&self) -> (f64, f64) {
        (self.t_ox, self.t_ox + self.t_si)
    }
}
