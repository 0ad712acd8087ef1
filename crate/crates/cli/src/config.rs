//! Run configuration: one JSON document, merged over defaults, then
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use fdsoi_core::ddsolver::{CutlineDirection, Quantity};
use fdsoi_core::device::{default_device, DeviceSpec, MeshDensity};
use fdsoi_core::extract::ExtractSettings;
use fdsoi_core::sweep::{linspace_step, SweepPlan};
use fdsoi_core::{MaterialParams, SolverSettings, TransportParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// `start:stop:step`, inclusive of `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        RangeSpec { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        linspace_step(self.start, self.stop, self.step).map_err(|e| CliError::Input(e.to_string()))
    }
}

/// A single voltage or a range of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VoltageSpec {
    Value(f64),
    Range(RangeSpec),
}

impl VoltageSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            VoltageSpec::Value(v) if v.is_finite() => Ok(vec![*v]),
            VoltageSpec::Value(v) => Err(CliError::Input(format!("non-finite voltage {v}"))),
            VoltageSpec::Range(r) => r.values(),
        }
    }

    pub fn is_range(&self) -> bool {
        matches!(self, VoltageSpec::Range(_))
    }
}

/// Parses `a:b:s` into a range.
pub fn parse_range(s: &str) -> Result<RangeSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got `{s}`"));
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    Ok(RangeSpec::new(num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

/// Parses either `v` or `a:b:s`.
pub fn parse_voltage(s: &str) -> Result<VoltageSpec, String> {
    if s.contains(':') {
        parse_range(s).map(VoltageSpec::Range)
    } else {
        s.trim().parse::<f64>().map(VoltageSpec::Value).map_err(|_| format!("`{s}` is not a number"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    /// Front interface charge (C/cm^2).
    pub q_ss: f64,
    /// Back interface charge (C/cm^2).
    pub q_ssb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Work-function grid (eV), also used by `analytic`.
    pub wf: RangeSpec,
    pub vg: RangeSpec,
    pub vd: RangeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutlineRequest {
    pub direction: CutlineDirection,
    /// Depth (horizontal) or lateral position (vertical) in nm; by default
    /// mid-film or mid-channel.
    pub position_nm: Option<f64>,
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub vg: VoltageSpec,
    pub vd: VoltageSpec,
    /// Taken at the last converged bias of the sweep.
    pub cutline: Option<CutlineRequest>,
}

/// Fully resolved configuration; echoed into every run report and
/// accepted back as `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSpec,
    pub material: MaterialParams,
    pub transport: TransportParams,
    pub solver: SolverSettings,
    pub extract: ExtractSettings,
    pub analytic: AnalyticSection,
    pub sweep: SweepSection,
    pub simulate: SimulateSection,
    pub mesh: MeshDensity,
    pub jobs: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let device = default_device();
        let material = MaterialParams::default();
        RunConfig {
            transport: TransportParams::from_material(&material, device.temp),
            device,
            material,
            solver: SolverSettings::default(),
            extract: ExtractSettings::default(),
            analytic: AnalyticSection { q_ss: 0.0, q_ssb: 0.0 },
            sweep: SweepSection {
                wf: RangeSpec::new(4.4, 5.0, 0.05),
                vg: RangeSpec::new(-0.4, 1.5, 0.05),
                vd: RangeSpec::new(0.0, 1.0, 0.05),
            },
            simulate: SimulateSection {
                vg: VoltageSpec::Range(RangeSpec::new(0.0, 1.0, 0.05)),
                vd: VoltageSpec::Value(1.0),
                cutline: Some(CutlineRequest {
                    direction: CutlineDirection::Horizontal,
                    position_nm: None,
                    quantities: Quantity::ALL.to_vec(),
                }),
            },
            mesh: MeshDensity::Nominal,
            jobs: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

const SECTIONS: [&str; 11] = [
    "device",
    "material",
    "transport",
    "solver",
    "extract",
    "analytic",
    "sweep",
    "simulate",
    "mesh",
    "jobs",
    "output_dir",
];

/// Overlays the keys of `user` onto `base`, recursing into objects so a
/// section may set only some of its fields.
fn merge(base: &mut Value, user: &Value) {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(k) {
                    // ranges and voltages are replaced whole
                    Some(slot) if slot.is_object() && v.is_object() && !is_leaf_object(k) => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, u) => *b = u.clone(),
    }
}

fn is_leaf_object(key: &str) -> bool {
    matches!(key, "wf" | "vg" | "vd" | "cutline")
}

fn section<T: serde::de::DeserializeOwned + Serialize>(
    name: &str,
    default: &T,
    user: &Map<String, Value>,
) -> Result<T, CliError> {
    let mut base = serde_json::to_value(default).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(v) = user.get(name) {
        if base.is_object() && !v.is_object() {
            return Err(CliError::Input(format!("config section `{name}` must be an object")));
        }
        merge(&mut base, v);
    }
    serde_json::from_value(base).map_err(|e| CliError::Input(format!("config `{name}`: {e}")))
}

impl RunConfig {
    /// Parses a config document. A `device` section, when present, must be
    /// complete; every other section may override a subset of its defaults.
    /// A run report is accepted too and yields the config it echoes.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        let Value::Object(mut user) = doc else {
            return Err(CliError::Input("config must be a JSON object".into()));
        };
        if user.contains_key("command") && user.contains_key("files") {
            match user.remove("config") {
                Some(Value::Object(inner)) => user = inner,
                _ => return Err(CliError::Input("run report without a config object".into())),
            }
        }
        if let Some(k) = user.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CliError::Input(format!("config: unknown key `{k}`")));
        }
        let d = RunConfig::default();
        let device: DeviceSpec = match user.get("device") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("config `device`: {e}")))?,
            None => d.device.clone(),
        };
        let material: MaterialParams = section("material", &d.material, &user)?;
        // mobilities and lifetimes follow the material unless set explicitly
        let transport_default = TransportParams::from_material(&material, device.temp);
        let mut transport: TransportParams = section("transport", &transport_default, &user)?;
        transport.temp = device.temp;
        let cfg = RunConfig {
            device,
            material,
            transport,
            solver: section("solver", &d.solver, &user)?,
            extract: section("extract", &d.extract, &user)?,
            analytic: section("analytic", &d.analytic, &user)?,
            sweep: section("sweep", &d.sweep, &user)?,
            simulate: section("simulate", &d.simulate, &user)?,
            mesh: section("mesh", &d.mesh, &user)?,
            jobs: section("jobs", &d.jobs, &user)?,
            output_dir: section("output_dir", &d.output_dir, &user)?,
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every section against the rules of the module that uses it.
    pub fn validate(&self) -> Result<(), CliError> {
        let input = |e: fdsoi_core::Error| CliError::Input(e.to_string());
        self.device.validate().map_err(input)?;
        self.material.validate().map_err(input)?;
        self.transport.validate().map_err(input)?;
        self.solver.validate().map_err(input)?;
        self.extract.validate().map_err(input)?;
        self.sweep.wf.values()?;
        self.sweep.vg.values()?;
        self.sweep.vd.values()?;
        self.simulate.vg.values()?;
        self.simulate.vd.values()?;
        if self.jobs == 0 {
            return Err(CliError::Input("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan, CliError> {
        let plan = SweepPlan {
            device: self.device.clone(),
            wf_values: self.sweep.wf.values()?,
            vg_grid: self.sweep.vg.values()?,
            vd_grid: self.sweep.vd.values()?,
            mesh: self.mesh,
            material: self.material,
            transport: self.transport,
            solver: self.solver,
            extract: self.extract,
            jobs: self.jobs,
        };
        plan.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(plan)
    }
}
