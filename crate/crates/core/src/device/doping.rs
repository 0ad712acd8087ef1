use serde::{Deserialize, Serialize};

use super::spec::DeviceSpec;
use crate::error::{Error, Result};

/// Rectangle of uniform net doping (+donor, -acceptor), cm^-3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopingBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub level: f64,
}

impl DopingBox {
    fn contains(&self, x: f64, y: f64) -> bool {
        let eps = 1e-9 * (self.x1 - self.x0).abs().max(self.y1 - self.y0).max(1e-12);
        x >= self.x0 - eps && x <= self.x1 + eps && y >= self.y0 - eps && y <= self.y1 + eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Junction {
    #[default]
    Abrupt,
    /// Donor boxes decay laterally as exp(-(d / decay)^2) outside their extent.
    Gaussian { decay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopingProfile {
    pub boxes: Vec<DopingBox>,
    pub junction: Junction,
}

impl DopingProfile {
    /// Source, drain and channel boxes of the FD-SOI film. With abrupt
    /// junctions the channel box is listed last and wins on the junction
    /// lines, which keeps the profile mirror-symmetric.
    pub fn from_spec(spec: &DeviceSpec) -> Self {
        let (xs, xd) = spec.junctions();
        let (y0, y1) = spec.film_bounds();
        let length = spec.total_length();
        DopingProfile {
            boxes: vec![
                DopingBox { x0: 0.0, x1: xs, y0, y1, level: spec.nd_sd },
                DopingBox { x0: xd, x1: length, y0, y1, level: spec.nd_sd },
                DopingBox { x0: xs, x1: xd, y0, y1, level: -spec.na_channel },
            ],
            junction: Junction::Abrupt,
        }
    }

    pub fn uniform(level: f64, length: f64, thickness: f64) -> Self {
        DopingProfile {
            boxes: vec![DopingBox { x0: 0.0, x1: length, y0: 0.0, y1: thickness, level }],
            junction: Junction::Abrupt,
        }
    }

    pub fn with_junction(mut self, junction: Junction) -> Self {
        self.junction = junction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::Validation("doping profile has no regions".into()));
        }
        for b in &self.boxes {
            if !(1e12..=1e21).contains(&b.level.abs()) {
                return Err(Error::Validation(format!(
                    "doping level {:e} outside [1e12, 1e21] cm^-3",
                    b.level
                )));
            }
            if !(b.x1 > b.x0 && b.y1 > b.y0) {
                return Err(Error::Validation("degenerate doping box".into()));
            }
        }
        if let Junction::Gaussian { decay } = self.junction {
            if !(decay > 0.0) {
                return Err(Error::Validation("gaussian decay length must be positive".into()));
            }
        }
        Ok(())
    }

    /// Net doping at (x, y); 0 outside every box.
    pub fn net_at(&self, x: f64, y: f64) -> f64 {
        match self.junction {
            Junction::Abrupt => self
                .boxes
                .iter()
                .rev()
                .find(|b| b.contains(x, y))
                .map_or(0.0, |b| b.level),
            Junction::Gaussian { decay } => {
                let mut net = 0.0;
                for b in &self.boxes {
                    if b.level < 0.0 {
                        if b.contains(x, y) {
                            net += b.level;
                        }
                        continue;
                    }
                    if y < b.y0 - 1e-15 || y > b.y1 + 1e-15 {
                        continue;
                    }
                    let d = if x < b.x0 {
                        b.x0 - x
                    } else if x > b.x1 {
                        x - b.x1
                    } else {
                        0.0
                    };
                    net += b.level * (-(d / decay).powi(2)).exp();
                }
                net
            }
        }
    }
}
