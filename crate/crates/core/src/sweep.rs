//! Work-function sweeps: simulate and characterize one device per gate work
//! function, fit the threshold and off-current trends, and pick the work
//! function that balances the two.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ddsolver::{export_cutline, Bias, CutlineDirection, Quantity, Simulator, SolverSettings, TransportParams};
use crate::device::{default_device, DeviceSpec, MeshDensity};
use crate::error::{Error, Result};
use crate::extract::{extract_metrics, least_squares, ExtractSettings, Metrics};
use crate::iv::format_number;
use crate::physcore::MaterialParams;

pub const SUMMARY_HEADER: &str =
    "wf_eV,vth_cc_V,vth_extrap_V,ss_mV_per_dec,dibl_mV_per_V,ioff_A_per_um,ion_A_per_um,ion_ioff,gm_max_S_per_um";

/// Depth below the top silicon interface of the channel cutline (cm).
const CHANNEL_CUT_DEPTH: f64 = 0.5e-7;

/// Evenly spaced values from `start` to `stop` inclusive; the last value
/// is snapped to `stop` when the step lands on it within rounding.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::domain(format!("bad range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(Error::domain("range has too many points"));
    }
    // multiply rather than accumulate so grids are reproducible, and
    // round to 12 digits so 4.4 + 0.1 * 3 prints as 4.7
    Ok((0..=n).map(|i| round12(start + step * i as f64)).collect())
}

fn round12(x: f64) -> f64 {
    let s = format!("{x:.12}");
    s.parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepPlan {
    pub device: DeviceSpec,
    /// Gate work functions (eV), strictly increasing.
    pub wf_values: Vec<f64>,
    /// Gate voltages of both transfer sweeps (V).
    pub vg_grid: Vec<f64>,
    /// Drain voltages of the output sweep (V).
    pub vd_grid: Vec<f64>,
    pub mesh: MeshDensity,
    pub material: MaterialParams,
    pub transport: TransportParams,
    pub solver: SolverSettings,
    /// Criteria plus the low/high drain biases and Vdd.
    pub extract: ExtractSettings,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            device: default_device(),
            wf_values: linspace_step(4.4, 5.0, 0.05).expect("static range"),
            vg_grid: linspace_step(-0.4, 1.5, 0.05).expect("static range"),
            vd_grid: linspace_step(0.0, 1.0, 0.05).expect("static range"),
            mesh: MeshDensity::Nominal,
            material: MaterialParams::default(),
            transport: TransportParams::default(),
            solver: SolverSettings::default(),
            extract: ExtractSettings::default(),
            jobs: 1,
        }
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[1] > w[0])
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.material.validate()?;
        self.transport.validate()?;
        self.solver.validate()?;
        self.extract.validate()?;
        if self.wf_values.is_empty() || !strictly_increasing(&self.wf_values) {
            return Err(Error::domain("wf_values must be non-empty and strictly increasing"));
        }
        if self.wf_values.iter().any(|w| !(3.5..=6.0).contains(w)) {
            return Err(Error::domain("wf_values must lie in [3.5, 6.0] eV"));
        }
        if !strictly_increasing(&self.vg_grid) || self.vg_grid.len() < crate::iv::MIN_POINTS {
            return Err(Error::domain("vg_grid must be strictly increasing with at least 5 points"));
        }
        let (g0, g1) = (self.vg_grid[0], self.vg_grid[self.vg_grid.len() - 1]);
        if g0 > 0.0 || g1 < self.extract.vdd {
            return Err(Error::domain(format!("vg_grid [{g0}, {g1}] must cover [0, Vdd = {}]", self.extract.vdd)));
        }
        if !strictly_increasing(&self.vd_grid) || self.vd_grid.len() < crate::iv::MIN_POINTS {
            return Err(Error::domain("vd_grid must be strictly increasing with at least 5 points"));
        }
        if self.jobs == 0 {
            return Err(Error::domain("jobs must be at least 1"));
        }
        Ok(())
    }
}

/// Simulation and extraction results for one work function. Missing
/// values are explained in `metrics.issues` / `failures`, never invented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub wf: f64,
    pub metrics: Metrics,
    /// Electron sheet density along the channel cutline at Vg = Vdd, Vd = 0 (cm^-1 per cm of depth).
    pub channel_electrons: Option<f64>,
    /// Peak |E_vertical| under the gate on that cutline (V/cm).
    pub peak_e_vertical: Option<f64>,
    /// (Vg, Id) at Vd = vd_low, (Vg, Id) at Vd = vd_high, (Vd, Id) at Vg = Vdd.
    pub iv_low: Vec<(f64, f64)>,
    pub iv_high: Vec<(f64, f64)>,
    pub iv_drain: Vec<(f64, f64)>,
    /// Solver failures encountered while producing this row.
    pub failures: Vec<String>,
    /// Seconds spent on this row. Not deterministic.
    pub wall_time_s: f64,
}

impl SweepRow {
    /// A row is usable for trends when both trend quantities were extracted.
    pub fn is_success(&self) -> bool {
        self.metrics.vth_cc.is_some() && self.metrics.ioff.is_some()
    }

    fn is_total_failure(&self) -> bool {
        let m = &self.metrics;
        [m.vth_cc, m.vth_extrap, m.ss, m.dibl, m.gm_max, m.gd, m.ioff, m.ion].iter().all(Option::is_none)
    }
}

/// Ordinary least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of `ys` against `xs`. Constant `ys` fit perfectly:
/// slope 0 and r² = 1.
pub fn fit_trend(xs: &[f64], ys: &[f64]) -> Result<TrendFit> {
    if xs.len() != ys.len() {
        return Err(Error::domain("fit_trend: length mismatch"));
    }
    if xs.len() < 3 {
        return Err(Error::domain("fit_trend needs at least 3 points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::domain("fit_trend: non-finite input"));
    }
    let (slope, intercept) = least_squares(xs, ys)?;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(TrendFit { slope, intercept, r2, points: xs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimumPolicy {
    /// Scale vth and log10(ioff) to [0, 1] over the sweep and minimize the
    /// larger of the two along the piecewise-linear interpolants; this is
    /// where the rising threshold meets the falling off-current.
    #[default]
    NormalizedMinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub wf: f64,
    pub policy: OptimumPolicy,
    /// Value of the minimized objective at `wf`, in [0, 1].
    pub objective: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// vth_cc against work function.
    pub vth_fit: Option<TrendFit>,
    /// log10(ioff) against work function.
    pub log_ioff_fit: Option<TrendFit>,
    pub optimum: Option<Optimum>,
    /// Why a fit or the optimum is absent.
    pub notes: Vec<String>,
}

impl SweepReport {
    /// Builds fits and the optimum from finished rows.
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut report = SweepReport { rows, vth_fit: None, log_ioff_fit: None, optimum: None, notes: Vec::new() };
        let ok: Vec<&SweepRow> = report.rows.iter().filter(|r| r.is_success()).collect();
        if ok.len() < 3 {
            report
                .notes
                .push(format!("trend fits not applicable: {} usable rows (need 3)", ok.len()));
        } else {
            let xs: Vec<f64> = ok.iter().map(|r| r.wf).collect();
            let vth: Vec<f64> = ok.iter().filter_map(|r| r.metrics.vth_cc).collect();
            let lio: Vec<f64> = ok.iter().filter_map(|r| r.metrics.ioff.map(f64::log10)).collect();
            match fit_trend(&xs, &vth) {
                Ok(f) => report.vth_fit = Some(f),
                Err(e) => report.notes.push(format!("vth fit: {e}")),
            }
            match fit_trend(&xs, &lio) {
                Ok(f) => report.log_ioff_fit = Some(f),
                Err(e) => report.notes.push(format!("log ioff fit: {e}")),
            }
        }
        match select_optimum_wf(&report, OptimumPolicy::NormalizedMinMax) {
            Ok(o) => report.optimum = Some(o),
            Err(e) => report.notes.push(format!("optimum: {e}")),
        }
        report
    }

    /// `sweep_summary.csv`; metrics that could not be extracted are empty.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        let f = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                format_number(r.wf),
                f(m.vth_cc),
                f(m.vth_extrap),
                f(m.ss),
                f(m.dibl),
                f(m.ioff),
                f(m.ion),
                f(m.ion_ioff),
                f(m.gm_max)
            );
        }
        out
    }
}

/// Picks the work function balancing threshold voltage against off-current.
pub fn select_optimum_wf(report: &SweepReport, policy: OptimumPolicy) -> Result<Optimum> {
    let OptimumPolicy::NormalizedMinMax = policy;
    let rows: Vec<(f64, f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| Some((r.wf, r.metrics.vth_cc?, r.metrics.ioff?)))
        .filter(|&(_, _, i)| i > 0.0)
        .map(|(w, v, i)| (w, v, i.log10()))
        .collect();
    if rows.len() < 3 {
        return Err(Error::Policy(format!("{} usable rows, at least 3 required", rows.len())));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a = normalize(&rows.iter().map(|r| r.1).collect::<Vec<_>>())
        .ok_or_else(|| Error::Policy("threshold voltage is constant across the sweep".into()))?;
    let b = normalize(&rows.iter().map(|r| r.2).collect::<Vec<_>>())
        .ok_or_else(|| Error::Policy("off-current is constant across the sweep".into()))?;
    let g = |i: usize| a[i].max(b[i]);
    let mut best = (xs[0], g(0));
    let mut consider = |x: f64, v: f64| {
        if v < best.1 - 1e-15 {
            best = (x, v);
        }
    };
    for i in 0..xs.len() {
        consider(xs[i], g(i));
        if i + 1 < xs.len() {
            // crossing of the two interpolants inside the segment
            let (da, db) = (a[i + 1] - a[i], b[i + 1] - b[i]);
            let denom = da - db;
            if denom != 0.0 {
                let t = (b[i] - a[i]) / denom;
                if t > 0.0 && t < 1.0 {
                    let x = xs[i] + t * (xs[i + 1] - xs[i]);
                    consider(x, a[i] + t * da);
                }
            }
        }
    }
    Ok(Optimum {
        wf: best.0,
        policy,
        objective: best.1,
        note: "vth and log10(ioff) min-max normalized over the sweep; optimum minimizes their maximum".into(),
    })
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    (span > 0.0).then(|| v.iter().map(|x| (x - lo) / span).collect())
}

/// Simulates and characterizes the plan's device at one work function.
pub fn run_wf_point(plan: &SweepPlan, wf: f64) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        wf,
        metrics: Metrics::default(),
        channel_electrons: None,
        peak_e_vertical: None,
        iv_low: Vec::new(),
        iv_high: Vec::new(),
        iv_drain: Vec::new(),
        failures: Vec::new(),
        wall_time_s: 0.0,
    };
    let spec = plan.device.with_phi_m(wf);
    let sim = match Simulator::for_device(&spec, plan.mesh, plan.material, plan.transport, plan.solver) {
        Ok(s) => s,
        Err(e) => {
            row.failures.push(format!("setup: {e}"));
            row.metrics = extract_metrics(None, None, None, &plan.extract);
            return row;
        }
    };
    let eq = match sim.solve_equilibrium() {
        Ok(s) => s,
        Err(e) => {
            row.failures.push(format!("equilibrium: {e}"));
            row.metrics = extract_metrics(None, None, None, &plan.extract);
            return row;
        }
    };
    let s = &plan.extract;
    let sweep_gate = |vd: f64, label: &str, failures: &mut Vec<String>| match sim.sweep_gate(&eq, vd, &plan.vg_grid) {
        Ok(o) => {
            if let Some((v, why)) = &o.failure {
                failures.push(format!("{label} sweep stopped at Vg = {v} V: {why}"));
            }
            o.points.clone()
        }
        Err(e) => {
            failures.push(format!("{label} sweep: {e}"));
            Vec::new()
        }
    };
    row.iv_low = sweep_gate(s.vd_low, "low-drain", &mut row.failures);
    row.iv_high = sweep_gate(s.vd_high, "high-drain", &mut row.failures);

    match sim.solve_bias(&eq, &Bias::new(s.vdd, 0.0)) {
        Ok(on) => {
            let (y_top, _) = spec.film_bounds();
            let (xs, xd) = spec.junctions();
            match export_cutline(
                &on,
                sim.mesh(),
                CutlineDirection::Horizontal,
                y_top + CHANNEL_CUT_DEPTH,
                &[Quantity::N, Quantity::EVertical],
            ) {
                Ok(cut) => {
                    let n = cut.values_of(Quantity::N).unwrap_or_default();
                    let e = cut.values_of(Quantity::EVertical).unwrap_or_default();
                    let inside: Vec<usize> = (0..cut.positions.len())
                        .filter(|&i| cut.positions[i] >= xs - 1e-12 && cut.positions[i] <= xd + 1e-12)
                        .collect();
                    let integral: f64 = inside
                        .windows(2)
                        .map(|w| 0.5 * (cut.positions[w[1]] - cut.positions[w[0]]) * (n[w[0]] + n[w[1]]))
                        .sum();
                    row.channel_electrons = Some(integral);
                    row.peak_e_vertical = inside.iter().map(|&i| e[i].abs()).reduce(f64::max);
                }
                Err(err) => row.failures.push(format!("channel cutline: {err}")),
            }
            match sim.sweep_drain(&on, s.vdd, &plan.vd_grid) {
                Ok(o) => {
                    if let Some((v, why)) = &o.failure {
                        row.failures.push(format!("drain sweep stopped at Vd = {v} V: {why}"));
                    }
                    row.iv_drain = o.points;
                }
                Err(e) => row.failures.push(format!("drain sweep: {e}")),
            }
        }
        Err(e) => row.failures.push(format!("on-state bias: {e}")),
    }

    let curve = |pts: &[(f64, f64)], kind, fixed| {
        crate::iv::IvCurve::from_pairs(kind, fixed, pts.iter().copied(), crate::iv::Provenance::Simulated).ok()
    };
    let low = curve(&row.iv_low, crate::iv::SweepKind::Gate, s.vd_low);
    let high = curve(&row.iv_high, crate::iv::SweepKind::Gate, s.vd_high);
    let drain = curve(&row.iv_drain, crate::iv::SweepKind::Drain, s.vdd);
    row.metrics = extract_metrics(low.as_ref(), high.as_ref(), drain.as_ref(), s);
    row.wall_time_s = start.elapsed().as_secs_f64();
    row
}

/// Runs every work function of the plan on a pool of `plan.jobs` threads.
/// Rows come back in work-function order whatever the completion order.
pub fn run_wf_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| plan.wf_values.par_iter().map(|&wf| run_wf_point(plan, wf)).collect());
    if rows.iter().all(SweepRow::is_total_failure) {
        let why = rows.iter().flat_map(|r| r.failures.first()).next().cloned().unwrap_or_default();
        return Err(Error::Numerical(format!("every sweep point failed (first: {why})")));
    }
    Ok(SweepReport::from_rows(rows))
}
