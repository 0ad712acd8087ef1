//! Current-voltage curves and their CSV form (`vg_V,vd_V,id_A_per_um`).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IV_HEADER: &str = "vg_V,vd_V,id_A_per_um";

/// Smallest number of points an I-V curve must carry.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Gate voltage swept at fixed drain voltage.
    Gate,
    /// Drain voltage swept at fixed gate voltage.
    Drain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Simulated,
    Ingested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvPoint {
    /// Swept terminal voltage (V).
    pub v: f64,
    /// Drain current (A/um).
    pub id: f64,
}

/// Validated I-V curve: strictly increasing swept voltage, at least
/// [`MIN_POINTS`] rows, finite currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvCurve {
    kind: SweepKind,
    fixed_bias: f64,
    points: Vec<IvPoint>,
    provenance: Provenance,
}

impl IvCurve {
    pub fn new(
        kind: SweepKind,
        fixed_bias: f64,
        points: Vec<IvPoint>,
        provenance: Provenance,
    ) -> Result<Self> {
        if !fixed_bias.is_finite() {
            return Err(Error::Validation("fixed bias must be finite".into()));
        }
        if points.len() < MIN_POINTS {
            return Err(Error::Validation(format!(
                "curve has {} points, at least {MIN_POINTS} required",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.v.is_finite() || !p.id.is_finite() {
                return Err(Error::Validation(format!("non-finite value in point {i}")));
            }
            if i > 0 && p.v <= points[i - 1].v {
                return Err(Error::Validation(format!(
                    "swept voltage not strictly increasing at point {i} ({} after {})",
                    p.v,
                    points[i - 1].v
                )));
            }
        }
        Ok(IvCurve { kind, fixed_bias, points, provenance })
    }

    /// Builds a curve from (swept V, Id) pairs.
    pub fn from_pairs(
        kind: SweepKind,
        fixed_bias: f64,
        pairs: impl IntoIterator<Item = (f64, f64)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let points = pairs.into_iter().map(|(v, id)| IvPoint { v, id }).collect();
        IvCurve::new(kind, fixed_bias, points, provenance)
    }

    pub fn kind(&self) -> SweepKind {
        self.kind
    }

    pub fn fixed_bias(&self) -> f64 {
        self.fixed_bias
    }

    pub fn points(&self) -> &[IvPoint] {
        &self.points
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn voltages(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }

    pub fn currents(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.id).collect()
    }

    /// Same curve with every current multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let points = self.points.iter().map(|p| IvPoint { v: p.v, id: c * p.id }).collect();
        IvCurve::new(self.kind, self.fixed_bias, points, self.provenance)
    }

    /// (Vg, Vd) of point i.
    pub fn bias_of(&self, i: usize) -> (f64, f64) {
        let v = self.points[i].v;
        match self.kind {
            SweepKind::Gate => (v, self.fixed_bias),
            SweepKind::Drain => (self.fixed_bias, v),
        }
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<(f64, f64, f64)> = (0..self.len())
            .map(|i| {
                let (vg, vd) = self.bias_of(i);
                (vg, vd, self.points[i].id)
            })
            .collect();
        iv_csv_string(&rows)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        match lines.next() {
            Some((_, h)) if h == IV_HEADER => {}
            Some((_, h)) => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{IV_HEADER}`, found `{h}`"),
                })
            }
            None => unreachable!("split yields at least one item"),
        }
        let mut rows = Vec::new();
        let mut saw_blank = false;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() {
                saw_blank = true;
                continue;
            }
            if saw_blank {
                return Err(Error::Parse { line: lineno - 1, message: "blank line inside data".into() });
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let mut vals = [0.0; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("`{f}` is not a number"),
                })?;
                if !slot.is_finite() {
                    return Err(Error::Parse { line: lineno, message: format!("`{f}` is not finite") });
                }
            }
            rows.push((vals[0], vals[1], vals[2]));
        }
        if rows.is_empty() {
            return Err(Error::Validation("no data rows".into()));
        }
        let vg_const = rows.iter().all(|r| r.0 == rows[0].0);
        let vd_const = rows.iter().all(|r| r.1 == rows[0].1);
        let (kind, fixed) = match (vg_const, vd_const) {
            (false, true) => (SweepKind::Gate, rows[0].1),
            (true, false) => (SweepKind::Drain, rows[0].0),
            (true, true) if rows.len() > 1 => {
                return Err(Error::Validation("swept voltage repeats; no strictly increasing sweep".into()))
            }
            (true, true) => (SweepKind::Gate, rows[0].1),
            (false, false) => {
                return Err(Error::Validation("both vg and vd vary; not a single sweep".into()))
            }
        };
        let pairs = rows.iter().map(|r| match kind {
            SweepKind::Gate => (r.0, r.2),
            SweepKind::Drain => (r.1, r.2),
        });
        IvCurve::from_pairs(kind, fixed, pairs, Provenance::Ingested)
    }
}

/// Reads and validates an I-V CSV file.
pub fn ingest_iv_csv(path: impl AsRef<Path>) -> Result<IvCurve> {
    let text = std::fs::read_to_string(path)?;
    IvCurve::parse_csv(&text)
}

/// CSV text for (vg, vd, id) rows, including partial sweeps that do not
/// qualify as a validated curve.
pub fn iv_csv_string(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(IV_HEADER);
    out.push('\n');
    for &(vg, vd, id) in rows {
        let _ = writeln!(out, "{},{},{}", format_number(vg), format_number(vd), format_number(id));
    }
    out
}

/// Shortest round-trip text for `x`; scientific notation outside
/// [1e-4, 1e15) in magnitude.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        if x == 0.0 {
            "0".to_string()
        } else {
            format!("{x}")
        }
    } else {
        format!("{x:e}")
    }
}
