use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::flux::bernoulli;
use super::geometry::Geometry;
use super::linear::{solve_with, LinearSystem};
use super::{Bias, Carrier, Diagnostics, SolutionState, SolverSettings, TransportParams};
use crate::device::{generate_mesh, Contact, DeviceSpec, Mesh, MeshDensity};
use crate::error::{ConvergenceFailure, Error, Result};
use crate::physcore::{thermal_voltage, MaterialParams, Q};

/// Contact currents per unit device width (A/um); positive into the device.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TerminalCurrents {
    pub gate: f64,
    pub source: f64,
    pub drain: f64,
    pub substrate: f64,
}

impl TerminalCurrents {
    pub fn get(&self, c: Contact) -> f64 {
        match c {
            Contact::Gate => self.gate,
            Contact::Source => self.source,
            Contact::Drain => self.drain,
            Contact::Substrate => self.substrate,
        }
    }

    pub fn sum(&self) -> f64 {
        self.gate + self.source + self.drain + self.substrate
    }

    pub fn max_abs(&self) -> f64 {
        Contact::ALL.into_iter().map(|c| self.get(c).abs()).fold(0.0, f64::max)
    }
}

/// Outcome of one damped Newton update of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStep {
    pub max_update: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    pub linear_iterations: usize,
}

/// Reference point of the Boltzmann linearization used inside a Gummel
/// iteration: n = n0 exp((v - v0)/Vt), p = p0 exp(-(v - v0)/Vt), i.e. the
/// quasi-Fermi levels stay frozen while the potential moves.
#[derive(Debug, Clone)]
struct Anchor {
    v: Vec<f64>,
    n: Vec<f64>,
    p: Vec<f64>,
}

impl Anchor {
    fn of(state: &SolutionState) -> Self {
        Anchor {
            v: state.v.clone(),
            n: state.n.clone(),
            p: state.p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    /// Dielectric node with a free potential.
    Dielectric,
    /// Silicon node with free potential and densities.
    Silicon,
    /// Potential fixed by a contact; densities fixed too on ohmic contacts.
    Contact(Contact),
}

/// Drift-diffusion solver bound to one mesh, material set and gate.
#[derive(Debug, Clone)]
pub struct Simulator {
    mesh: Arc<Mesh>,
    mat: MaterialParams,
    transport: TransportParams,
    settings: SolverSettings,
    phi_m: f64,
    vt: f64,
    geom: Geometry,
    kind: Vec<NodeKind>,
    /// Charge-neutral equilibrium values at silicon nodes.
    n_eq: Vec<f64>,
    p_eq: Vec<f64>,
    v_eq: Vec<f64>,
}

impl Simulator {
    pub fn new(
        mesh: Arc<Mesh>,
        mat: MaterialParams,
        transport: TransportParams,
        settings: SolverSettings,
        phi_m: f64,
    ) -> Result<Self> {
        mat.validate()?;
        transport.validate()?;
        settings.validate()?;
        if !(3.5..=6.0).contains(&phi_m) {
            return Err(Error::domain(format!("phi_m = {phi_m} eV outside [3.5, 6.0]")));
        }
        let vt = thermal_voltage(transport.temp)?;
        let n = mesh.node_count();
        let geom = Geometry::new(&mesh, &mat);
        let mut kind = Vec::with_capacity(n);
        let mut n_eq = vec![0.0; n];
        let mut p_eq = vec![0.0; n];
        let mut v_eq = vec![0.0; n];
        let ni = mat.ni;
        for k in 0..n {
            let semi = mesh.is_semiconductor(k);
            if semi {
                let net = mesh.net_doping()[k] + transport.n_t;
                let half = 0.5 * net;
                let root = (half * half + ni * ni).sqrt();
                // cancellation-free majority/minority split
                let (ne, pe) = if net >= 0.0 {
                    let ne = half + root;
                    (ne, ni * ni / ne)
                } else {
                    let pe = -half + root;
                    (ni * ni / pe, pe)
                };
                n_eq[k] = ne;
                p_eq[k] = pe;
                v_eq[k] = vt * (ne / ni).ln();
            }
            let k_kind = match mesh.contact_of(k) {
                Some(c) if c.is_ohmic() && !semi => {
                    return Err(Error::Validation(format!("ohmic contact node {k} not in silicon")));
                }
                Some(c) => NodeKind::Contact(c),
                None if semi => NodeKind::Silicon,
                None => NodeKind::Dielectric,
            };
            kind.push(k_kind);
        }
        Ok(Simulator {
            mesh,
            mat,
            transport,
            settings,
            phi_m,
            vt,
            geom,
            kind,
            n_eq,
            p_eq,
            v_eq,
        })
    }

    /// Meshes `spec` and binds a solver to it with the spec's gate and temperature.
    pub fn for_device(
        spec: &DeviceSpec,
        density: MeshDensity,
        mat: MaterialParams,
        transport: TransportParams,
        settings: SolverSettings,
    ) -> Result<Self> {
        let mesh = Arc::new(generate_mesh(spec, density)?);
        let transport = TransportParams { temp: spec.temp, ..transport };
        Simulator::new(mesh, mat, transport, settings, spec.phi_m)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn shared_mesh(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn material(&self) -> &MaterialParams {
        &self.mat
    }

    pub fn transport(&self) -> &TransportParams {
        &self.transport
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn phi_m(&self) -> f64 {
        self.phi_m
    }

    pub fn thermal_voltage(&self) -> f64 {
        self.vt
    }

    /// Electrostatic potential imposed at the gate for an applied Vg; the
    /// work function enters the system only here.
    pub fn gate_potential(&self, vg: f64) -> f64 {
        vg - (self.phi_m - self.mat.intrinsic_work_function())
    }

    fn n_nodes(&self) -> usize {
        self.kind.len()
    }

    fn is_fixed(&self, k: usize) -> bool {
        matches!(self.kind[k], NodeKind::Contact(_))
    }

    fn carries_carriers(&self, k: usize) -> bool {
        self.mesh.is_semiconductor(k)
    }

    fn contact_potential(&self, k: usize, c: Contact, bias: &Bias) -> f64 {
        match c {
            Contact::Gate => self.gate_potential(bias.gate),
            Contact::Substrate => bias.substrate,
            Contact::Source | Contact::Drain => bias.get(c) + self.v_eq[k],
        }
    }

    /// Imposes contact boundary values for `bias` on `state`.
    fn apply_bias(&self, state: &mut SolutionState, bias: &Bias) {
        for k in 0..self.n_nodes() {
            if let NodeKind::Contact(c) = self.kind[k] {
                state.v[k] = self.contact_potential(k, c, bias);
                if c.is_ohmic() {
                    state.n[k] = self.n_eq[k];
                    state.p[k] = self.p_eq[k];
                }
            }
        }
        state.bias = *bias;
    }

    /// Charge-neutral starting point at zero bias.
    pub fn initial_state(&self) -> SolutionState {
        let n = self.n_nodes();
        let mut state = SolutionState {
            v: self.v_eq.clone(),
            n: self.n_eq.clone(),
            p: self.p_eq.clone(),
            bias: Bias::default(),
            diagnostics: Diagnostics::default(),
        };
        let _ = n;
        self.apply_bias(&mut state, &Bias::default());
        state
    }

    /// Poisson residual per node (C/cm); zero on fixed nodes.
    pub fn poisson_residual(&self, state: &SolutionState) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; n];
        for (k, slot) in out.iter_mut().enumerate() {
            if self.is_fixed(k) {
                continue;
            }
            let mut f = 0.0;
            for (l, owner, horiz) in self.geom.neighbours(k, n) {
                let (h, eps, _) = self.geom.edge(owner, horiz);
                f += eps / h * (state.v[l] - state.v[k]);
            }
            if self.carries_carriers(k) {
                f += Q * self.geom.area_semi[k] * self.space_charge_density(k, state.n[k], state.p[k]);
            }
            *slot = f;
        }
        out
    }

    pub fn poisson_residual_norm(&self, state: &SolutionState) -> f64 {
        self.poisson_residual(state).iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// p - n + N_D - N_A + n_T at a silicon node.
    #[inline]
    fn space_charge_density(&self, k: usize, n: f64, p: f64) -> f64 {
        p - n + self.mesh.net_doping()[k] + self.transport.n_t
    }

    fn linearized_densities(&self, anchor: &Anchor, v: &[f64], n: &mut [f64], p: &mut [f64]) {
        for k in 0..self.n_nodes() {
            if !self.carries_carriers(k) || matches!(self.kind[k], NodeKind::Contact(_)) {
                continue;
            }
            let e = ((v[k] - anchor.v[k]) / self.vt).exp();
            n[k] = anchor.n[k] * e;
            p[k] = anchor.p[k] / e;
        }
    }

    fn assemble_poisson(&self, state: &SolutionState) -> LinearSystem {
        let n = self.n_nodes();
        let ny = self.geom.ny;
        let mut sys = LinearSystem::new(n, ny);
        for k in 0..n {
            if self.is_fixed(k) {
                sys.diag[k] = 1.0;
                continue;
            }
            let mut f = 0.0;
            let mut diag = 0.0;
            for (l, owner, horiz) in self.geom.neighbours(k, n) {
                let (h, eps, _) = self.geom.edge(owner, horiz);
                let c = eps / h;
                f += c * (state.v[l] - state.v[k]);
                diag += c;
                if !self.is_fixed(l) {
                    set_offdiag(&mut sys, k, l, ny, -c);
                }
            }
            if self.carries_carriers(k) {
                let a = Q * self.geom.area_semi[k];
                f += a * self.space_charge_density(k, state.n[k], state.p[k]);
                diag += a * (state.n[k] + state.p[k]) / self.vt;
            }
            sys.diag[k] = diag;
            sys.rhs[k] = f;
        }
        sys
    }

    fn poisson_step_anchored(&self, state: &mut SolutionState, anchor: &Anchor) -> Result<PoissonStep> {
        let sys = self.assemble_poisson(state);
        let residual_before = norm_free(&sys.rhs);
        let s = &self.settings;
        let sol = solve_with(s.poisson_solver, &sys, s.linear_tol, s.linear_max_iter, s.omega)?;
        let mut delta = sol.x;
        for d in delta.iter_mut() {
            *d = d.clamp(-s.damping, s.damping);
        }
        let v0 = state.v.clone();
        let mut scale = 1.0;
        let mut residual_after;
        // backtrack until the residual does not grow
        loop {
            for k in 0..delta.len() {
                state.v[k] = v0[k] + scale * delta[k];
            }
            self.linearized_densities(anchor, &state.v, &mut state.n, &mut state.p);
            residual_after = self.poisson_residual_norm(state);
            if residual_after <= residual_before || scale < 1e-3 {
                break;
            }
            scale *= 0.5;
        }
        if !residual_after.is_finite() {
            return Err(Error::Numerical("non-finite Poisson residual".into()));
        }
        let max_update = delta.iter().map(|d| (scale * d).abs()).fold(0.0, f64::max);
        Ok(PoissonStep {
            max_update,
            residual_before,
            residual_after,
            linear_iterations: sol.iterations,
        })
    }

    /// One damped Newton update of the potential with the quasi-Fermi
    /// levels of `state` held fixed. Densities are updated consistently.
    pub fn poisson_step(&self, state: &mut SolutionState) -> Result<PoissonStep> {
        let anchor = Anchor::of(state);
        self.poisson_step_anchored(state, &anchor)
    }

    /// Newton iteration of the nonlinear Poisson equation at frozen
    /// quasi-Fermi levels. Returns the largest total potential change and
    /// the linear iterations spent.
    pub fn solve_poisson(&self, state: &mut SolutionState) -> Result<(f64, usize)> {
        let anchor = Anchor::of(state);
        let tol = (0.01 * self.settings.gummel_tol).max(1e-12);
        let mut linear = 0;
        for _ in 0..200 {
            let step = self.poisson_step_anchored(state, &anchor)?;
            linear += step.linear_iterations;
            if step.max_update <= tol {
                let change = state
                    .v
                    .iter()
                    .zip(&anchor.v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                return Ok((change, linear));
            }
        }
        Err(Error::Numerical("nonlinear Poisson iteration did not converge".into()))
    }

    /// SRH denominator with a midgap trap.
    #[inline]
    fn srh_denominator(&self, n: f64, p: f64) -> f64 {
        let ni = self.mat.ni;
        self.transport.tau_p * (n + ni) + self.transport.tau_n * (p + ni)
    }

    fn assemble_continuity(&self, state: &SolutionState, carrier: Carrier) -> LinearSystem {
        let n = self.n_nodes();
        let ny = self.geom.ny;
        let mut sys = LinearSystem::new(n, ny);
        let (diff, own) = match carrier {
            Carrier::Electron => (self.transport.d_n(), &state.n),
            Carrier::Hole => (self.transport.d_p(), &state.p),
        };
        let ni2 = self.mat.ni * self.mat.ni;
        for k in 0..n {
            let free = matches!(self.kind[k], NodeKind::Silicon)
                || matches!(self.kind[k], NodeKind::Contact(c) if !c.is_ohmic());
            if !self.carries_carriers(k) || !free {
                sys.diag[k] = 1.0;
                sys.rhs[k] = if self.carries_carriers(k) { own[k] } else { 0.0 };
                sys.x[k] = sys.rhs[k];
                continue;
            }
            let mut diag = 0.0;
            let mut rhs = 0.0;
            for (l, owner, horiz) in self.geom.neighbours(k, n) {
                let (h, _, semi_w) = self.geom.edge(owner, horiz);
                if semi_w == 0.0 {
                    continue;
                }
                let c = diff * semi_w / h;
                let delta = (state.v[l] - state.v[k]) / self.vt;
                // coupling to the neighbour's density and to our own
                let (b_own, b_nbr) = match carrier {
                    Carrier::Electron => (bernoulli(-delta), bernoulli(delta)),
                    Carrier::Hole => (bernoulli(delta), bernoulli(-delta)),
                };
                diag += c * b_own;
                let coupling = c * b_nbr;
                if matches!(self.kind[l], NodeKind::Contact(cl) if cl.is_ohmic()) {
                    rhs += coupling * own[l];
                } else {
                    set_offdiag(&mut sys, k, l, ny, -coupling);
                }
            }
            if self.transport.srh_enabled {
                let a = self.geom.area_semi[k];
                let den = self.srh_denominator(state.n[k], state.p[k]);
                let other = match carrier {
                    Carrier::Electron => state.p[k],
                    Carrier::Hole => state.n[k],
                };
                diag += a * other / den;
                rhs += a * ni2 / den;
            }
            sys.diag[k] = diag;
            sys.rhs[k] = rhs;
            sys.x[k] = own[k];
        }
        sys
    }

    /// Solves the steady continuity equation of one carrier at the current
    /// potential. Returns the largest relative density change.
    pub fn continuity_step(&self, state: &mut SolutionState, carrier: Carrier) -> Result<f64> {
        let sys = self.assemble_continuity(state, carrier);
        debug_assert!(sys.is_diagonally_dominant());
        let s = &self.settings;
        let sol = solve_with(s.continuity_solver, &sys, s.linear_tol, s.linear_max_iter, s.omega)?;
        let dens = match carrier {
            Carrier::Electron => &mut state.n,
            Carrier::Hole => &mut state.p,
        };
        let mut change: f64 = 0.0;
        for k in 0..dens.len() {
            if !self.carries_carriers(k) {
                continue;
            }
            let mut x = sol.x[k];
            if !x.is_finite() {
                return Err(Error::Numerical(format!("non-finite density at node {k}")));
            }
            if x <= 0.0 {
                x = 1e-30;
            }
            change = change.max((x - dens[k]).abs() / dens[k]);
            dens[k] = x;
        }
        Ok(change)
    }

    /// Zero-bias solution of the nonlinear Poisson equation with Boltzmann
    /// carriers pinned to the common Fermi level.
    pub fn solve_equilibrium(&self) -> Result<SolutionState> {
        let start = Instant::now();
        let mut state = self.initial_state();
        let anchor = Anchor {
            v: vec![0.0; self.n_nodes()],
            n: (0..self.n_nodes())
                .map(|k| if self.carries_carriers(k) { self.mat.ni } else { 0.0 })
                .collect(),
            p: (0..self.n_nodes())
                .map(|k| if self.carries_carriers(k) { self.mat.ni } else { 0.0 })
                .collect(),
        };
        self.linearized_densities(&anchor, &state.v.clone(), &mut state.n, &mut state.p);
        let tol = (0.01 * self.settings.gummel_tol).max(1e-12);
        let mut history = Vec::new();
        let mut linear = 0;
        for _ in 0..self.settings.gummel_max_iter {
            let step = self.poisson_step_anchored(&mut state, &anchor)?;
            linear += step.linear_iterations;
            history.push(step.max_update);
            if step.max_update <= tol {
                state.diagnostics = Diagnostics {
                    outer_iterations: history.len(),
                    final_update: step.max_update,
                    update_history: history,
                    poisson_residual: self.poisson_residual_norm(&state),
                    linear_iterations: linear,
                    continuation_steps: 0,
                    wall_time_s: start.elapsed().as_secs_f64(),
                };
                return Ok(state);
            }
        }
        Err(Error::Convergence(Box::new(ConvergenceFailure {
            bias: Bias::default(),
            history,
            last_good: None,
            reason: "equilibrium Poisson iteration did not converge".into(),
        })))
    }

    /// Gummel loop at the bias already imposed on `state`.
    fn gummel(&self, state: &mut SolutionState) -> std::result::Result<(), (Vec<f64>, String)> {
        let mut history = Vec::new();
        let mut linear = 0;
        for _ in 0..self.settings.gummel_max_iter {
            let (dv, lin) = self
                .solve_poisson(state)
                .map_err(|e| (history.clone(), e.to_string()))?;
            linear += lin;
            for carrier in [Carrier::Electron, Carrier::Hole] {
                self.continuity_step(state, carrier)
                    .map_err(|e| (history.clone(), e.to_string()))?;
            }
            history.push(dv);
            if !dv.is_finite() {
                return Err((history, "non-finite potential update".into()));
            }
            if dv <= self.settings.gummel_tol {
                state.diagnostics.outer_iterations = history.len();
                state.diagnostics.final_update = dv;
                state.diagnostics.update_history = history;
                state.diagnostics.linear_iterations = linear;
                return Ok(());
            }
        }
        Err((history, "Gummel iteration limit reached".into()))
    }

    /// Walks the contact biases from `prev` to `target` in increments of at
    /// most `bias_step_max`, reusing each converged state as the next guess.
    /// A failing increment is retried with halved steps before giving up.
    pub fn solve_bias(&self, prev: &SolutionState, target: &Bias) -> Result<SolutionState> {
        if !target.is_finite() {
            return Err(Error::domain("non-finite target bias"));
        }
        let start = Instant::now();
        let from = prev.bias;
        let total = from.max_abs_diff(target);
        let mut step = if total > 0.0 {
            1.0 / (total / self.settings.bias_step_max).ceil()
        } else {
            1.0
        };
        let mut current = prev.clone();
        let mut t: f64 = 0.0;
        let mut steps = 0;
        let mut retries = 0;
        loop {
            let t_next = (t + step).min(1.0);
            let bias = if t_next >= 1.0 { *target } else { from.lerp(target, t_next) };
            let mut trial = current.clone();
            self.apply_bias(&mut trial, &bias);
            match self.gummel(&mut trial) {
                Ok(()) => {
                    current = trial;
                    t = t_next;
                    steps += 1;
                    if t >= 1.0 {
                        break;
                    }
                }
                Err((history, reason)) => {
                    if retries < 5 && total > 0.0 {
                        retries += 1;
                        step *= 0.5;
                        continue;
                    }
                    return Err(Error::Convergence(Box::new(ConvergenceFailure {
                        bias,
                        history,
                        last_good: Some(current),
                        reason,
                    })));
                }
            }
        }
        current.diagnostics.continuation_steps = steps;
        current.diagnostics.poisson_residual = self.poisson_residual_norm(&current);
        current.diagnostics.wall_time_s = start.elapsed().as_secs_f64();
        Ok(current)
    }

    /// Equilibrium followed by continuation to `bias`.
    pub fn solve_at(&self, bias: &Bias) -> Result<SolutionState> {
        let eq = self.solve_equilibrium()?;
        self.solve_bias(&eq, bias)
    }

    /// Drift-diffusion current leaving each contact into the device,
    /// summed over the contact's silicon edges, per um of width.
    pub fn terminal_currents(&self, state: &SolutionState) -> TerminalCurrents {
        let n = self.n_nodes();
        let (dn, dp) = (self.transport.d_n(), self.transport.d_p());
        let mut out = TerminalCurrents::default();
        for c in [Contact::Source, Contact::Drain] {
            let mut total = 0.0;
            for &k in self.mesh.contact_nodes(c) {
                for (l, owner, horiz) in self.geom.neighbours(k, n) {
                    if self.kind[l] == NodeKind::Contact(c) {
                        continue;
                    }
                    let (h, _, semi_w) = self.geom.edge(owner, horiz);
                    if semi_w == 0.0 {
                        continue;
                    }
                    let delta = (state.v[l] - state.v[k]) / self.vt;
                    let b_pos = bernoulli(delta);
                    let b_neg = bernoulli(-delta);
                    let jn = dn * (state.n[l] * b_pos - state.n[k] * b_neg);
                    let jp = dp * (state.p[k] * b_pos - state.p[l] * b_neg);
                    total += Q * semi_w / h * (jn + jp);
                }
            }
            // A/cm -> A/um
            let amps = total * 1e-4;
            match c {
                Contact::Source => out.source = amps,
                _ => out.drain = amps,
            }
        }
        out
    }
}

#[inline]
fn set_offdiag(sys: &mut LinearSystem, k: usize, l: usize, ny: usize, value: f64) {
    if l + ny == k {
        sys.west[k] = value;
    } else if l == k + ny {
        sys.east[k] = value;
    } else if l + 1 == k {
        sys.north[k] = value;
    } else {
        sys.south[k] = value;
    }
}

fn norm_free(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}
