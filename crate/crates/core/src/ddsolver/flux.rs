//! Exponentially fitted (Scharfetter-Gummel) edge fluxes.
//!
//! Potentials are in units of the thermal voltage. For an edge from node
//! `a` to node `b` with `delta = psi_b - psi_a`, the current densities in
//! the a -> b direction are `q D / h` times
//!
//! ```text
//! electrons: n_b B(delta) - n_a B(-delta)
//! holes:     p_a B(delta) - p_b B(-delta)
//! ```
//!
//! which reduce to central-difference diffusion at `delta = 0` and to
//! upwinded drift for `|delta| >> 1`.

/// Bernoulli function x / (e^x - 1).
#[inline]
pub fn bernoulli(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-5 {
        1.0 - 0.5 * x + x * x / 12.0
    } else if x > 700.0 {
        x * (-x).exp()
    } else if x < -700.0 {
        -x
    } else {
        x / x.exp_m1()
    }
}

/// Electron current density along a -> b, divided by q D / h.
#[inline]
pub fn electron_flux(n_a: f64, n_b: f64, delta: f64) -> f64 {
    n_b * bernoulli(delta) - n_a * bernoulli(-delta)
}

/// Hole current density along a -> b, divided by q D / h.
#[inline]
pub fn hole_flux(p_a: f64, p_b: f64, delta: f64) -> f64 {
    p_a * bernoulli(delta) - p_b * bernoulli(-delta)
}
