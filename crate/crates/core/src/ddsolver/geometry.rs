//! Box-integration weights of the tensor mesh.

use crate::device::Mesh;
use crate::physcore::MaterialParams;

/// Per-edge and per-node coefficients of the finite-volume discretization.
/// Edge `east[k]` joins node k to k + ny, edge `south[k]` joins k to k + 1.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub ny: usize,
    pub east_h: Vec<f64>,
    /// Sum over the two adjacent cells of permittivity x half cell width.
    pub east_eps: Vec<f64>,
    /// Control-face length lying in silicon.
    pub east_semi: Vec<f64>,
    pub south_h: Vec<f64>,
    pub south_eps: Vec<f64>,
    pub south_semi: Vec<f64>,
    /// Silicon part of each node's control volume (cm^2 per cm depth).
    pub area_semi: Vec<f64>,
}

impl Geometry {
    pub fn new(mesh: &Mesh, mat: &MaterialParams) -> Self {
        let nx = mesh.nx();
        let ny = mesh.ny();
        let n = nx * ny;
        let mut g = Geometry {
            ny,
            east_h: vec![0.0; n],
            east_eps: vec![0.0; n],
            east_semi: vec![0.0; n],
            south_h: vec![0.0; n],
            south_eps: vec![0.0; n],
            south_semi: vec![0.0; n],
            area_semi: vec![0.0; n],
        };
        let dx = |ci: usize| mesh.x_lines[ci + 1] - mesh.x_lines[ci];
        let dy = |cj: usize| mesh.y_lines[cj + 1] - mesh.y_lines[cj];
        for ci in 0..nx - 1 {
            for cj in 0..ny - 1 {
                let region = mesh.cell_region(ci, cj);
                let eps = region.permittivity(mat);
                let semi = region.is_semiconductor();
                let (hx, hy) = (dx(ci), dy(cj));
                // horizontal edges on the top and bottom of the cell
                for j in [cj, cj + 1] {
                    let k = ci * ny + j;
                    g.east_eps[k] += eps * 0.5 * hy;
                    if semi {
                        g.east_semi[k] += 0.5 * hy;
                    }
                }
                // vertical edges on the left and right of the cell
                for i in [ci, ci + 1] {
                    let k = i * ny + cj;
                    g.south_eps[k] += eps * 0.5 * hx;
                    if semi {
                        g.south_semi[k] += 0.5 * hx;
                    }
                }
                if semi {
                    for (i, j) in [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)] {
                        g.area_semi[i * ny + j] += 0.25 * hx * hy;
                    }
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                if i + 1 < nx {
                    g.east_h[k] = dx(i);
                }
                if j + 1 < ny {
                    g.south_h[k] = dy(j);
                }
            }
        }
        g
    }

    /// Neighbours of node k as (neighbour, edge owner, is_horizontal).
    #[inline]
    pub fn neighbours(&self, k: usize, n: usize) -> impl Iterator<Item = (usize, usize, bool)> {
        let ny = self.ny;
        let j = k % ny;
        let west = (k >= ny).then(|| (k - ny, k - ny, true));
        let east = (k + ny < n).then_some((k + ny, k, true));
        let north = (j > 0).then(|| (k - 1, k - 1, false));
        let south = (j + 1 < ny).then_some((k + 1, k, false));
        [west, east, north, south].into_iter().flatten()
    }

    #[inline]
    pub fn edge(&self, owner: usize, horizontal: bool) -> (f64, f64, f64) {
        if horizontal {
            (self.east_h[owner], self.east_eps[owner], self.east_semi[owner])
        } else {
            (self.south_h[owner], self.south_eps[owner], self.south_semi[owner])
        }
    }
}
