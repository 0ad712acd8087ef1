//! Nonuniform tensor-product mesh of the SOI cross-section.
//!
//! Nodes are numbered column-major, `k = i * ny + j`, with `i` along the
//! channel (x) and `j` downward from the gate (y = 0 is the gate/oxide
//! interface). Keeping the vertical index fastest makes the five-point
//! operators banded with half-bandwidth `ny`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::doping::DopingProfile;
use super::spec::DeviceSpec;
use crate::error::{Error, Result};
use crate::physcore::MaterialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    GateMetal,
    GateOxide,
    Spacer,
    SiliconFilm,
    Box,
    Source,
    Drain,
}

impl Region {
    pub fn is_semiconductor(self) -> bool {
        matches!(self, Region::SiliconFilm | Region::Source | Region::Drain)
    }

    pub fn permittivity(self, mat: &MaterialParams) -> f64 {
        let rel = match self {
            Region::SiliconFilm | Region::Source | Region::Drain => mat.eps_r_si,
            Region::GateOxide | Region::Box => mat.eps_r_ox,
            Region::Spacer => mat.eps_r_nitride,
            // never meshed; the gate is a boundary condition
            Region::GateMetal => 1.0,
        };
        rel * crate::physcore::EPS0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contact {
    Gate,
    Source,
    Drain,
    Substrate,
}

impl Contact {
    pub const ALL: [Contact; 4] = [Contact::Gate, Contact::Source, Contact::Drain, Contact::Substrate];

    pub fn name(self) -> &'static str {
        match self {
            Contact::Gate => "gate",
            Contact::Source => "source",
            Contact::Drain => "drain",
            Contact::Substrate => "substrate",
        }
    }

    /// Ohmic contacts touch silicon; the others sit on dielectric.
    pub fn is_ohmic(self) -> bool {
        matches!(self, Contact::Source | Contact::Drain)
    }
}

impl fmt::Display for Contact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeshDensity {
    Coarse,
    #[default]
    Nominal,
    Fine,
}

impl FromStr for MeshDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(MeshDensity::Coarse),
            "nominal" => Ok(MeshDensity::Nominal),
            "fine" => Ok(MeshDensity::Fine),
            other => Err(Error::Validation(format!(
                "unknown mesh density '{other}' (expected coarse|nominal|fine)"
            ))),
        }
    }
}

impl fmt::Display for MeshDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshDensity::Coarse => "coarse",
            MeshDensity::Nominal => "nominal",
            MeshDensity::Fine => "fine",
        })
    }
}

/// Target spacings (cm) for one density level.
#[derive(Debug, Clone, Copy)]
struct Spacing {
    hx_junction: f64,
    hx_max: f64,
    hy_interface: f64,
    hy_film_max: f64,
    hy_box_max: f64,
    oxide_cells: f64,
    growth: f64,
}

impl MeshDensity {
    fn spacing(self) -> Spacing {
        const NM: f64 = 1e-7;
        match self {
            MeshDensity::Coarse => Spacing {
                hx_junction: 0.5 * NM,
                hx_max: 2.0 * NM,
                hy_interface: 0.15 * NM,
                hy_film_max: 0.5 * NM,
                hy_box_max: 4.0 * NM,
                oxide_cells: 2.0,
                growth: 1.3,
            },
            MeshDensity::Nominal => Spacing {
                hx_junction: 0.25 * NM,
                hx_max: 1.0 * NM,
                hy_interface: 0.08 * NM,
                hy_film_max: 0.3 * NM,
                hy_box_max: 2.5 * NM,
                oxide_cells: 3.0,
                growth: 1.2,
            },
            MeshDensity::Fine => Spacing {
                hx_junction: 0.15 * NM,
                hx_max: 0.6 * NM,
                hy_interface: 0.05 * NM,
                hy_film_max: 0.2 * NM,
                hy_box_max: 1.6 * NM,
                oxide_cells: 4.0,
                growth: 1.15,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub x_lines: Vec<f64>,
    pub y_lines: Vec<f64>,
    /// Region of cell (ci, cj) at `ci * (ny - 1) + cj`.
    cells: Vec<Region>,
    contacts: BTreeMap<Contact, Vec<usize>>,
    /// Net doping (+donor, -acceptor) per node; 0 off the semiconductor.
    net_doping: Vec<f64>,
    semiconductor: Vec<bool>,
}

impl Mesh {
    pub fn nx(&self) -> usize {
        self.x_lines.len()
    }

    pub fn ny(&self) -> usize {
        self.y_lines.len()
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.ny()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny(), k % self.ny())
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x_lines[i], self.y_lines[j])
    }

    pub fn cell_region(&self, ci: usize, cj: usize) -> Region {
        self.cells[ci * (self.ny() - 1) + cj]
    }

    /// Region of a cell adjacent to node (i, j) offset by (di, dj) in
    /// {-1, 0}; None off the domain.
    pub fn cell_at(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<Region> {
        let ci = i as isize + di;
        let cj = j as isize + dj;
        if ci < 0 || cj < 0 || ci >= self.nx() as isize - 1 || cj >= self.ny() as isize - 1 {
            return None;
        }
        Some(self.cell_region(ci as usize, cj as usize))
    }

    pub fn is_semiconductor(&self, k: usize) -> bool {
        self.semiconductor[k]
    }

    pub fn semiconductor_node_count(&self) -> usize {
        self.semiconductor.iter().filter(|&&s| s).count()
    }

    pub fn contacts(&self) -> &BTreeMap<Contact, Vec<usize>> {
        &self.contacts
    }

    pub fn contact_nodes(&self, c: Contact) -> &[usize] {
        self.contacts.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_contact(&self, c: Contact) -> bool {
        !self.contact_nodes(c).is_empty()
    }

    /// Contact owning node `k`, if any. Gate takes precedence at shared corners.
    pub fn contact_of(&self, k: usize) -> Option<Contact> {
        Contact::ALL
            .into_iter()
            .find(|c| self.contact_nodes(*c).binary_search(&k).is_ok())
    }

    /// Net ionized doping at a semiconductor node.
    pub fn doping_at(&self, k: usize) -> Result<f64> {
        if k >= self.node_count() {
            return Err(Error::Index {
                index: k,
                len: self.node_count(),
            });
        }
        if !self.semiconductor[k] {
            let (x, y) = self.position(k);
            return Err(Error::Range(format!(
                "node {k} at ({:.3} nm, {:.3} nm) is in a dielectric; doping undefined",
                x * 1e7,
                y * 1e7
            )));
        }
        Ok(self.net_doping[k])
    }

    pub fn net_doping(&self) -> &[f64] {
        &self.net_doping
    }

    pub fn region_areas(&self) -> BTreeMap<Region, f64> {
        let mut out = BTreeMap::new();
        for ci in 0..self.nx() - 1 {
            let dx = self.x_lines[ci + 1] - self.x_lines[ci];
            for cj in 0..self.ny() - 1 {
                let dy = self.y_lines[cj + 1] - self.y_lines[cj];
                *out.entry(self.cell_region(ci, cj)).or_insert(0.0) += dx * dy;
            }
        }
        out
    }

    pub fn width(&self) -> f64 {
        self.x_lines[self.nx() - 1] - self.x_lines[0]
    }

    pub fn height(&self) -> f64 {
        self.y_lines[self.ny() - 1] - self.y_lines[0]
    }

    /// Smallest vertical spacing among cells that lie in silicon.
    pub fn min_film_dy(&self) -> f64 {
        let mut best = f64::INFINITY;
        for cj in 0..self.ny() - 1 {
            if (0..self.nx() - 1).any(|ci| self.cell_region(ci, cj).is_semiconductor()) {
                best = best.min(self.y_lines[cj + 1] - self.y_lines[cj]);
            }
        }
        best
    }

    /// Index of the mesh line nearest to `value`.
    pub fn nearest_line(lines: &[f64], value: f64) -> usize {
        let mut best = 0;
        for (idx, &l) in lines.iter().enumerate() {
            if (l - value).abs() < (lines[best] - value).abs() {
                best = idx;
            }
        }
        best
    }

    /// Checks ordering, grading, contact and doping-sign invariants.
    pub fn check_invariants(&self) -> Result<()> {
        for (name, lines) in [("x", &self.x_lines), ("y", &self.y_lines)] {
            if lines.len() < 2 {
                return Err(Error::Validation(format!("{name} needs at least two lines")));
            }
            let h: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
            if h.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::Validation(format!("{name} lines not strictly increasing")));
            }
            for w in h.windows(2) {
                let r = if w[0] > w[1] { w[0] / w[1] } else { w[1] / w[0] };
                if r > 2.0 + 1e-9 {
                    return Err(Error::Validation(format!(
                        "{name} spacing ratio {r:.3} exceeds 2"
                    )));
                }
            }
        }
        for (c, nodes) in &self.contacts {
            if nodes.is_empty() {
                return Err(Error::Validation(format!("contact {c} has no nodes")));
            }
        }
        for ci in 0..self.nx() - 1 {
            for cj in 0..self.ny() - 1 {
                let region = self.cell_region(ci, cj);
                if !matches!(region, Region::Source | Region::Drain) {
                    continue;
                }
                // every corner of an n+ cell that is not also a channel corner
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let k = self.node(ci + di, cj + dj);
                    let (i, j) = self.ij(k);
                    let touches_channel = [(-1, -1), (-1, 0), (0, -1), (0, 0)]
                        .into_iter()
                        .any(|(a, b)| self.cell_at(i, j, a, b) == Some(Region::SiliconFilm));
                    if !touches_channel && self.net_doping[k] <= 0.0 {
                        return Err(Error::Validation(format!(
                            "node {k} in {region:?} has non-donor doping {}",
                            self.net_doping[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the refined tensor mesh for `spec`.
pub fn generate_mesh(spec: &DeviceSpec, density: MeshDensity) -> Result<Mesh> {
    generate_mesh_with_profile(spec, density, &DopingProfile::from_spec(spec))
}

pub fn generate_mesh_with_profile(
    spec: &DeviceSpec,
    density: MeshDensity,
    profile: &DopingProfile,
) -> Result<Mesh> {
    spec.validate()?;
    profile.validate()?;
    let s = density.spacing();
    let (xs, xd) = spec.junctions();
    let (y_top, y_bot) = spec.film_bounds();
    let length = spec.total_length();
    let height = spec.total_height();

    // left half, mirrored so the two junctions see identical grids
    let mid = 0.5 * length;
    let mut x_breaks = vec![0.0, xs, mid];
    if spec.include_spacer {
        x_breaks.insert(1, xs - spec.t_spacer);
    }
    let hx = |x: f64| (s.hx_junction + (s.growth - 1.0) * (x - xs).abs()).min(s.hx_max);
    let half = graded_lines(&x_breaks, hx);
    let mut x_lines = half.clone();
    for &x in half.iter().rev().skip(1) {
        x_lines.push(length - x);
    }

    let h_ox = spec.t_ox / s.oxide_cells;
    let hy = |y: f64| {
        let d = (y - y_top).abs().min((y - y_bot).abs());
        let cap = if y < y_top {
            h_ox
        } else if y <= y_bot {
            s.hy_film_max
        } else {
            s.hy_box_max
        };
        (s.hy_interface + (s.growth - 1.0) * d).min(cap)
    };
    let y_lines = graded_lines(&[0.0, y_top, y_bot, height], hy);

    let nx = x_lines.len();
    let ny = y_lines.len();
    let mut cells = Vec::with_capacity((nx - 1) * (ny - 1));
    for ci in 0..nx - 1 {
        let xc = 0.5 * (x_lines[ci] + x_lines[ci + 1]);
        for cj in 0..ny - 1 {
            let yc = 0.5 * (y_lines[cj] + y_lines[cj + 1]);
            let region = if yc < y_top {
                let in_spacer = spec.include_spacer
                    && ((xc > xs - spec.t_spacer && xc < xs) || (xc > xd && xc < xd + spec.t_spacer));
                if in_spacer {
                    Region::Spacer
                } else {
                    Region::GateOxide
                }
            } else if yc < y_bot {
                if xc < xs {
                    Region::Source
                } else if xc > xd {
                    Region::Drain
                } else {
                    Region::SiliconFilm
                }
            } else {
                Region::Box
            };
            cells.push(region);
        }
    }

    let j_top = index_of(&y_lines, y_top);
    let j_bot = index_of(&y_lines, y_bot);
    let mut contacts = BTreeMap::new();
    let gate: Vec<usize> = (0..nx)
        .filter(|&i| x_lines[i] >= xs - 1e-15 && x_lines[i] <= xd + 1e-15)
        .map(|i| i * ny)
        .collect();
    contacts.insert(Contact::Gate, gate);
    contacts.insert(Contact::Source, (j_top..=j_bot).collect());
    contacts.insert(Contact::Drain, (j_top..=j_bot).map(|j| (nx - 1) * ny + j).collect());
    contacts.insert(Contact::Substrate, (0..nx).map(|i| i * ny + ny - 1).collect());

    finish(x_lines, y_lines, cells, contacts, profile)
}

/// A uniformly donor-doped silicon bar with ohmic contacts at both ends and
/// no gate or substrate: the analytic resistor used to check transport.
pub fn generate_resistor_mesh(
    length: f64,
    thickness: f64,
    donors: f64,
    density: MeshDensity,
) -> Result<Mesh> {
    if !(length > 0.0 && thickness > 0.0) {
        return Err(Error::domain("resistor dimensions must be positive"));
    }
    if !(1e12..=1e21).contains(&donors) {
        return Err(Error::domain("resistor doping outside [1e12, 1e21]"));
    }
    let s = density.spacing();
    let x_lines = graded_lines(&[0.0, length], |_| s.hx_max);
    let y_lines = graded_lines(&[0.0, thickness], |_| s.hy_film_max);
    let nx = x_lines.len();
    let ny = y_lines.len();
    let mut cells = Vec::new();
    for ci in 0..nx - 1 {
        let xc = 0.5 * (x_lines[ci] + x_lines[ci + 1]);
        let region = if xc < 0.5 * length {
            Region::Source
        } else {
            Region::Drain
        };
        cells.extend(std::iter::repeat_n(region, ny - 1));
    }
    let mut contacts = BTreeMap::new();
    contacts.insert(Contact::Source, (0..ny).collect());
    contacts.insert(Contact::Drain, (0..ny).map(|j| (nx - 1) * ny + j).collect());
    let profile = DopingProfile::uniform(donors, length, thickness);
    finish(x_lines, y_lines, cells, contacts, &profile)
}

fn finish(
    x_lines: Vec<f64>,
    y_lines: Vec<f64>,
    cells: Vec<Region>,
    contacts: BTreeMap<Contact, Vec<usize>>,
    profile: &DopingProfile,
) -> Result<Mesh> {
    let nx = x_lines.len();
    let ny = y_lines.len();
    let mut semiconductor = vec![false; nx * ny];
    let mut net_doping = vec![0.0; nx * ny];
    let mut mesh = Mesh {
        x_lines,
        y_lines,
        cells,
        contacts,
        net_doping: Vec::new(),
        semiconductor: Vec::new(),
    };
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            let semi = [(-1, -1), (-1, 0), (0, -1), (0, 0)]
                .into_iter()
                .any(|(a, b)| mesh.cell_at(i, j, a, b).is_some_and(Region::is_semiconductor));
            semiconductor[k] = semi;
            if semi {
                net_doping[k] = profile.net_at(mesh.x_lines[i], mesh.y_lines[j]);
            }
        }
    }
    mesh.semiconductor = semiconductor;
    mesh.net_doping = net_doping;
    mesh.check_invariants()?;
    Ok(mesh)
}

fn index_of(lines: &[f64], value: f64) -> usize {
    Mesh::nearest_line(lines, value)
}

/// Places lines so that every breakpoint is a line and the local spacing
/// follows `h(x)`: the cumulative integral of 1/h is split evenly inside
/// each segment. Adjacent spacing ratios are then forced under 2.
fn graded_lines(breaks: &[f64], h: impl Fn(f64) -> f64) -> Vec<f64> {
    const SAMPLES: usize = 4000;
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dx = (b - a) / SAMPLES as f64;
        let mut cum = Vec::with_capacity(SAMPLES + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for s in 0..SAMPLES {
            let x0 = a + s as f64 * dx;
            acc += 0.5 * dx * (1.0 / h(x0) + 1.0 / h(x0 + dx));
            cum.push(acc);
        }
        let cells = acc.ceil().max(1.0) as usize;
        let mut s = 0;
        for c in 1..cells {
            let target = acc * c as f64 / cells as f64;
            while cum[s + 1] < target {
                s += 1;
            }
            let frac = (target - cum[s]) / (cum[s + 1] - cum[s]);
            out.push(a + (s as f64 + frac) * dx);
        }
        out.push(b);
    }
    smooth_ratios(out)
}

fn smooth_ratios(mut lines: Vec<f64>) -> Vec<f64> {
    loop {
        let mut split = None;
        for k in 1..lines.len() - 1 {
            let left = lines[k] - lines[k - 1];
            let right = lines[k + 1] - lines[k];
            if right > 2.0 * left {
                split = Some(k);
                break;
            }
            if left > 2.0 * right {
                split = Some(k - 1);
                break;
            }
        }
        match split {
            Some(k) => {
                let m = 0.5 * (lines[k] + lines[k + 1]);
                lines.insert(k + 1, m);
            }
            None => return lines,
        }
    }
}
