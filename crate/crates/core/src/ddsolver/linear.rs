//! Five-point linear systems on the tensor mesh and their solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse pentadiagonal system `M x = b` over mesh nodes. With the
/// column-major node order `k = i * stride + j`, the west/east couplings
/// sit `stride` away from the diagonal and the north/south ones at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub stride: usize,
    pub diag: Vec<f64>,
    /// Coefficient of x[k - stride].
    pub west: Vec<f64>,
    /// Coefficient of x[k + stride].
    pub east: Vec<f64>,
    /// Coefficient of x[k - 1].
    pub north: Vec<f64>,
    /// Coefficient of x[k + 1].
    pub south: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Unknown; doubles as the initial guess for iterative solves.
    pub x: Vec<f64>,
}

impl LinearSystem {
    pub fn new(len: usize, stride: usize) -> Self {
        Self {
            stride,
            diag: vec![0.0; len],
            west: vec![0.0; len],
            east: vec![0.0; len],
            north: vec![0.0; len],
            south: vec![0.0; len],
            rhs: vec![0.0; len],
            x: vec![0.0; len],
        }
    }

    pub fn identity(len: usize, stride: usize) -> Self {
        let mut s = Self::new(len, stride);
        s.diag.fill(1.0);
        s
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    #[inline]
    fn row_dot(&self, k: usize, x: &[f64]) -> f64 {
        let n = self.len();
        let s = self.stride;
        let mut acc = self.diag[k] * x[k];
        if k >= s {
            acc += self.west[k] * x[k - s];
        }
        if k + s < n {
            acc += self.east[k] * x[k + s];
        }
        if k >= 1 {
            acc += self.north[k] * x[k - 1];
        }
        if k + 1 < n {
            acc += self.south[k] * x[k + 1];
        }
        acc
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| self.row_dot(k, x)).collect()
    }

    /// ||M x - b||_2 / ||b||_2 (absolute norm when b = 0).
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for k in 0..self.len() {
            let r = self.row_dot(k, x) - self.rhs[k];
            r2 += r * r;
            b2 += self.rhs[k] * self.rhs[k];
        }
        if b2 > 0.0 {
            (r2 / b2).sqrt()
        } else {
            r2.sqrt()
        }
    }

    /// Weak diagonal dominance by rows or by columns, with strict dominance
    /// somewhere. Both occur here: the Poisson Jacobian is row dominant,
    /// the exponentially fitted continuity operators are column dominant.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.len();
        let s = self.stride;
        let slack = |d: f64, off: f64| d.abs() * (1.0 + 1e-9) + 1e-300 >= off;
        let rows = (0..n).all(|k| {
            let off = self.west[k].abs()
                + self.east[k].abs()
                + self.north[k].abs()
                + self.south[k].abs();
            slack(self.diag[k], off)
        });
        if rows {
            return true;
        }
        (0..n).all(|k| {
            // entries of column k live in the neighbouring rows
            let mut off = 0.0;
            if k + s < n {
                off += self.west[k + s].abs();
            }
            if k >= s {
                off += self.east[k - s].abs();
            }
            if k + 1 < n {
                off += self.north[k + 1].abs();
            }
            if k >= 1 {
                off += self.south[k - 1].abs();
            }
            slack(self.diag[k], off)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearMethod {
    /// Gauss-Seidel / successive over-relaxation sweeps.
    #[default]
    Sor,
    /// Banded Gaussian elimination (no pivoting; the operators assembled
    /// here are M-matrices).
    Direct,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Relative residual after each sweep.
    pub history: Vec<f64>,
}

/// Gauss-Seidel (`omega = 1`) or SOR (`1 < omega < 2`) sweeps in natural
/// node order, starting from `system.x`, until the relative residual drops
/// to `tol`.
pub fn linear_solve(
    system: &LinearSystem,
    tol: f64,
    max_iter: usize,
    omega: f64,
) -> Result<LinearSolution> {
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::domain(format!("relaxation factor {omega} outside (0, 2)")));
    }
    if system.rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite right-hand side".into()));
    }
    debug_assert!(system.is_diagonally_dominant(), "system not diagonally dominant");

    let n = system.len();
    let s = system.stride;
    let mut x = system.x.clone();
    let mut history = Vec::new();
    let mut residual = system.relative_residual(&x);
    if residual <= tol {
        return Ok(LinearSolution { x, iterations: 0, residual, history });
    }
    for sweep in 1..=max_iter {
        for k in 0..n {
            let d = system.diag[k];
            if d == 0.0 {
                return Err(Error::Numerical(format!("zero diagonal at row {k}")));
            }
            let mut sigma = 0.0;
            if k >= s {
                sigma += system.west[k] * x[k - s];
            }
            if k + s < n {
                sigma += system.east[k] * x[k + s];
            }
            if k >= 1 {
                sigma += system.north[k] * x[k - 1];
            }
            if k + 1 < n {
                sigma += system.south[k] * x[k + 1];
            }
            let gs = (system.rhs[k] - sigma) / d;
            x[k] += omega * (gs - x[k]);
        }
        residual = system.relative_residual(&x);
        history.push(residual);
        if !residual.is_finite() {
            return Err(Error::Numerical("SOR iteration diverged".into()));
        }
        if residual <= tol {
            return Ok(LinearSolution { x, iterations: sweep, residual, history });
        }
    }
    Err(Error::LinearSolver { iterations: max_iter, residual })
}

/// Banded LU factors: unit-lower multipliers stored below the diagonal.
struct BandLu {
    n: usize,
    m: usize,
    band: Vec<f64>,
}

impl BandLu {
    fn factor(system: &LinearSystem) -> Result<Self> {
        let n = system.len();
        let m = system.stride.min(n.saturating_sub(1));
        let w = 2 * m + 1;
        let mut band = vec![0.0; n * w];
        let s = system.stride;
        for k in 0..n {
            let row = &mut band[k * w..(k + 1) * w];
            row[m] = system.diag[k];
            if k >= s && s <= m {
                row[m - s] = system.west[k];
            }
            if k + s < n && s <= m {
                row[m + s] = system.east[k];
            }
            if k >= 1 && m >= 1 {
                row[m - 1] += system.north[k];
            }
            if k + 1 < n && m >= 1 {
                row[m + 1] += system.south[k];
            }
        }
        for k in 0..n {
            let pivot = band[k * w + m];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numerical(format!("zero pivot at row {k} in banded elimination")));
            }
            let kend = (k + m).min(n - 1);
            let (head, tail) = band.split_at_mut((k + 1) * w);
            let pivot_row = &head[k * w + m + 1..k * w + m + 1 + (kend - k)];
            for i in k + 1..=kend {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let d = k + m - i;
                let f = row[d];
                if f == 0.0 {
                    continue;
                }
                let l = f / pivot;
                row[d] = l;
                // columns k+1..=kend of row i start at offset d + 1
                for (dst, &src) in row[d + 1..d + 1 + (kend - k)].iter_mut().zip(pivot_row) {
                    *dst -= l * src;
                }
            }
        }
        Ok(BandLu { n, m, band })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let w = 2 * m + 1;
        let mut b = rhs.to_vec();
        for i in 0..n {
            let row = &self.band[i * w..(i + 1) * w];
            let kstart = i.saturating_sub(m);
            let mut acc = b[i];
            for k in kstart..i {
                acc -= row[k + m - i] * b[k];
            }
            b[i] = acc;
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let kend = (k + m).min(n - 1);
            let row = &self.band[k * w..(k + 1) * w];
            let mut acc = b[k];
            for (c, &a) in row[m + 1..m + 1 + (kend - k)].iter().enumerate() {
                acc -= a * x[k + 1 + c];
            }
            x[k] = acc / row[m];
        }
        x
    }
}

/// Exact solve by banded LU elimination with half-bandwidth `stride`,
/// followed by a few steps of iterative refinement. The refinement matters
/// for the continuity operators, whose entries span dozens of decades.
pub fn solve_direct(system: &LinearSystem) -> Result<Vec<f64>> {
    let lu = BandLu::factor(system)?;
    let mut x = lu.solve(&system.rhs);
    let residual = |x: &[f64]| -> Vec<f64> {
        (0..system.len()).map(|k| system.rhs[k] - system.row_dot(k, x)).collect()
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for _ in 0..3 {
        if rn == 0.0 || !rn.is_finite() {
            break;
        }
        let dx = lu.solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let rt = residual(&trial);
        let rtn = norm(&rt);
        if !(rtn < rn) {
            break;
        }
        x = trial;
        r = rt;
        rn = rtn;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite result from banded elimination".into()));
    }
    Ok(x)
}

/// Dispatches on `method`; the direct path reports one "iteration".
pub fn solve_with(
    method: LinearMethod,
    system: &LinearSystem,
    tol: f64,
    max_iter: usize,
    omega: f64,
) -> Result<LinearSolution> {
    match method {
        LinearMethod::Sor => linear_solve(system, tol, max_iter, omega),
        LinearMethod::Direct => {
            let x = solve_direct(system)?;
            let residual = system.relative_residual(&x);
            Ok(LinearSolution { x, iterations: 1, residual, history: vec![residual] })
        }
    }
}
