//! Gate and drain sweeps with continuation between bias points.

use super::{Bias, SolutionState};
use super::simulator::Simulator;
use crate::device::Contact;
use crate::error::{Error, Result};
use crate::iv::{iv_csv_string, IvCurve, Provenance, SweepKind};

/// Converged points of a sweep plus, if it stopped early, why.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub kind: SweepKind,
    pub fixed_bias: f64,
    /// (swept V, drain current A/um) for every converged point, in order.
    pub points: Vec<(f64, f64)>,
    /// Swept voltage at which the solver gave up, and the reason.
    pub failure: Option<(f64, String)>,
    /// Last converged state, usable to continue elsewhere.
    pub last_state: Option<SolutionState>,
}

impl SweepOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Validated curve from the converged points.
    pub fn curve(&self) -> Result<IvCurve> {
        IvCurve::from_pairs(self.kind, self.fixed_bias, self.points.iter().copied(), Provenance::Simulated)
    }

    /// CSV of the converged points, even when too few for a curve.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(f64, f64, f64)> = self
            .points
            .iter()
            .map(|&(v, id)| match self.kind {
                SweepKind::Gate => (v, self.fixed_bias, id),
                SweepKind::Drain => (self.fixed_bias, v, id),
            })
            .collect();
        iv_csv_string(&rows)
    }
}

fn check_ordered(list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::domain("empty bias list"));
    }
    if list.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite bias in list"));
    }
    if list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("bias list must be strictly increasing"));
    }
    Ok(())
}

/// Runs a sweep starting from `start`, calling `visit` on each converged
/// state. Preceding points are kept when a later one fails.
pub(crate) fn run_sweep(
    sim: &Simulator,
    start: &SolutionState,
    kind: SweepKind,
    fixed: f64,
    list: &[f64],
    mut visit: impl FnMut(&SolutionState),
) -> Result<SweepOutcome> {
    check_ordered(list)?;
    if !fixed.is_finite() {
        return Err(Error::domain("non-finite fixed bias"));
    }
    let mut out = SweepOutcome { kind, fixed_bias: fixed, points: Vec::new(), failure: None, last_state: None };
    let mut prev = start.clone();
    for &v in list {
        let bias = match kind {
            SweepKind::Gate => Bias { gate: v, drain: fixed, ..start.bias },
            SweepKind::Drain => Bias { gate: fixed, drain: v, ..start.bias },
        };
        match sim.solve_bias(&prev, &bias) {
            Ok(state) => {
                let id = sim.terminal_currents(&state).get(Contact::Drain);
                out.points.push((v, id));
                visit(&state);
                prev = state;
            }
            Err(e) if e.is_numerical() => {
                out.failure = Some((v, e.to_string()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !out.points.is_empty() {
        out.last_state = Some(prev);
    }
    Ok(out)
}

impl Simulator {
    /// Id(Vg) at fixed `vd`, continuing from `start`.
    pub fn sweep_gate(&self, start: &SolutionState, vd: f64, vg_list: &[f64]) -> Result<SweepOutcome> {
        run_sweep(self, start, SweepKind::Gate, vd, vg_list, |_| {})
    }

    /// Id(Vd) at fixed `vg`, continuing from `start`.
    pub fn sweep_drain(&self, start: &SolutionState, vg: f64, vd_list: &[f64]) -> Result<SweepOutcome> {
        run_sweep(self, start, SweepKind::Drain, vg, vd_list, |_| {})
    }

    /// Like [`Simulator::sweep_gate`] but hands every converged state to `visit`.
    pub fn sweep_gate_with(
        &self,
        start: &SolutionState,
        vd: f64,
        vg_list: &[f64],
        visit: impl FnMut(&SolutionState),
    ) -> Result<SweepOutcome> {
        run_sweep(self, start, SweepKind::Gate, vd, vg_list, visit)
    }
}
