//! Profiles of a solution along one mesh line.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SolutionState;
use crate::device::Mesh;
use crate::error::{Error, Result};
use crate::iv::format_number;

pub const CUTLINE_HEADER: &str = "position_nm,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutlineDirection {
    /// Along x at fixed depth y.
    Horizontal,
    /// Along y (depth) at fixed x.
    Vertical,
}

impl FromStr for CutlineDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Self::Horizontal),
            "vertical" => Ok(Self::Vertical),
            _ => Err(Error::domain(format!("unknown cutline direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Electrostatic potential (V).
    V,
    /// Electron density (cm^-3).
    N,
    /// Hole density (cm^-3).
    P,
    /// -dV/dy with y pointing down into the substrate (V/cm).
    EVertical,
    /// -dV/dx with x pointing from source to drain (V/cm).
    ELateral,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [Quantity::V, Quantity::N, Quantity::P, Quantity::EVertical, Quantity::ELateral];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::V => "v",
            Quantity::N => "n",
            Quantity::P => "p",
            Quantity::EVertical => "e_vertical",
            Quantity::ELateral => "e_lateral",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown cutline quantity `{s}`")))
    }
}

/// Values of several quantities at the nodes of one mesh line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutline {
    pub direction: CutlineDirection,
    /// Requested coordinate (cm).
    pub requested: f64,
    /// Coordinate of the mesh line actually used (cm).
    pub coordinate: f64,
    /// Node positions along the line (cm), strictly increasing.
    pub positions: Vec<f64>,
    pub quantities: Vec<Quantity>,
    /// `values[q][i]` for quantity `quantities[q]` at `positions[i]`.
    pub values: Vec<Vec<f64>>,
}

impl Cutline {
    pub fn values_of(&self, q: Quantity) -> Option<&[f64]> {
        self.quantities.iter().position(|&x| x == q).map(|i| self.values[i].as_slice())
    }

    /// Trapezoid integral of `q` along the line (value x cm).
    pub fn integral(&self, q: Quantity) -> Option<f64> {
        let v = self.values_of(q)?;
        Some(
            self.positions
                .windows(2)
                .zip(v.windows(2))
                .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                .sum(),
        )
    }

    /// `position_nm,value` CSV for one quantity.
    pub fn to_csv(&self, q: Quantity) -> Option<String> {
        let v = self.values_of(q)?;
        let mut out = String::from(CUTLINE_HEADER);
        out.push('\n');
        for (x, y) in self.positions.iter().zip(v) {
            let _ = writeln!(out, "{},{}", format_number(x * 1e7), format_number(*y));
        }
        Some(out)
    }
}

/// Samples `quantities` along the mesh line nearest `coordinate` (cm).
/// Fields come from differencing v along the mesh lines.
pub fn export_cutline(
    state: &SolutionState,
    mesh: &Mesh,
    direction: CutlineDirection,
    coordinate: f64,
    quantities: &[Quantity],
) -> Result<Cutline> {
    if state.v.len() != mesh.node_count() {
        return Err(Error::Validation("state does not belong to this mesh".into()));
    }
    let across = match direction {
        CutlineDirection::Horizontal => &mesh.y_lines,
        CutlineDirection::Vertical => &mesh.x_lines,
    };
    let (lo, hi) = (across[0], across[across.len() - 1]);
    if !coordinate.is_finite() || coordinate < lo || coordinate > hi {
        return Err(Error::Range(format!(
            "cutline coordinate {:.4} nm outside [{:.4}, {:.4}] nm",
            coordinate * 1e7,
            lo * 1e7,
            hi * 1e7
        )));
    }
    let line = Mesh::nearest_line(across, coordinate);
    let (positions, nodes): (Vec<f64>, Vec<usize>) = match direction {
        CutlineDirection::Horizontal => mesh.x_lines.iter().enumerate().map(|(i, &x)| (x, mesh.node(i, line))).unzip(),
        CutlineDirection::Vertical => mesh.y_lines.iter().enumerate().map(|(j, &y)| (y, mesh.node(line, j))).unzip(),
    };
    let mut values = Vec::with_capacity(quantities.len());
    for &q in quantities {
        let col: Vec<f64> = match q {
            Quantity::V => nodes.iter().map(|&k| state.v[k]).collect(),
            Quantity::N => nodes.iter().map(|&k| state.n[k]).collect(),
            Quantity::P => nodes.iter().map(|&k| state.p[k]).collect(),
            Quantity::EVertical => (0..nodes.len())
                .map(|i| {
                    let (ii, jj) = mesh.ij(nodes[i]);
                    -derivative(&mesh.y_lines, jj, |j| state.v[mesh.node(ii, j)])
                })
                .collect(),
            Quantity::ELateral => (0..nodes.len())
                .map(|i| {
                    let (ii, jj) = mesh.ij(nodes[i]);
                    -derivative(&mesh.x_lines, ii, |i| state.v[mesh.node(i, jj)])
                })
                .collect(),
        };
        values.push(col);
    }
    Ok(Cutline {
        direction,
        requested: coordinate,
        coordinate: across[line],
        positions,
        quantities: quantities.to_vec(),
        values,
    })
}

/// d/dx of f on grid `xs` at index i: three-point nonuniform central
/// difference inside, one-sided at the ends.
fn derivative(xs: &[f64], i: usize, f: impl Fn(usize) -> f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    if i == 0 {
        return (f(1) - f(0)) / (xs[1] - xs[0]);
    }
    if i == n - 1 {
        return (f(n - 1) - f(n - 2)) / (xs[n - 1] - xs[n - 2]);
    }
    let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
    let (a, b, c) = (f(i - 1), f(i), f(i + 1));
    (h0 * h0 * (c - b) + h1 * h1 * (b - a)) / (h0 * h1 * (h0 + h1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonuniform_derivative_exact_for_quadratics() {
        let xs = [0.0, 0.1, 0.35, 0.4, 1.0];
        let f = |i: usize| 3.0 * xs[i] * xs[i] - xs[i] + 2.0;
        for i in 1..4 {
            let d = derivative(&xs, i, f);
            assert!((d - (6.0 * xs[i] - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("phi".parse::<Quantity>().is_err());
    }
}
