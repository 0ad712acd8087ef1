//! Device metrics from I-V curves: threshold voltage (constant current and
//! max-gm extrapolation), subthreshold slope, DIBL, transconductance, output
//! conductance, voltage gain and on/off currents.
//!
//! Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::iv::{ingest_iv_csv, IvCurve, IvPoint, Provenance, SweepKind};

/// Lower bound on any extracted slope at 300 K (ideal 59.5 less 1% slack).
pub const SS_FLOOR_MV_PER_DEC: f64 = 59.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSettings {
    /// Constant-current threshold criterion (A/um).
    pub i_crit: f64,
    /// Current window for the subthreshold fit (A/um).
    pub ss_window: (f64, f64),
    pub vd_low: f64,
    pub vd_high: f64,
    pub vdd: f64,
    /// Load resistance for the voltage gain (ohm um).
    pub r_d: f64,
    /// Drain bias at which gd is reported (V).
    pub gd_vd: f64,
}

impl Default for ExtractSettings {
    fn default() -> Self {
        ExtractSettings {
            i_crit: 1e-7,
            ss_window: (1e-11, 1e-8),
            vd_low: 0.05,
            vd_high: 1.0,
            vdd: 1.0,
            r_d: 1e4,
            gd_vd: 0.05,
        }
    }
}

impl ExtractSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_crit > 0.0 && self.i_crit.is_finite()) {
            return Err(Error::domain("i_crit must be positive"));
        }
        let (lo, hi) = self.ss_window;
        if !(lo > 0.0 && hi.is_finite() && hi >= 10.0 * lo) {
            return Err(Error::domain("ss_window must be positive and span at least one decade"));
        }
        if !(self.vd_low.is_finite() && self.vd_high.is_finite() && self.vd_high > self.vd_low) {
            return Err(Error::domain("vd_high must exceed vd_low"));
        }
        if !(self.vdd > 0.0 && self.vdd.is_finite()) {
            return Err(Error::domain("vdd must be positive"));
        }
        if !(self.r_d > 0.0 && self.r_d.is_finite()) {
            return Err(Error::domain("r_d must be positive"));
        }
        if !self.gd_vd.is_finite() {
            return Err(Error::domain("gd_vd must be finite"));
        }
        Ok(())
    }
}

fn require_kind(iv: &IvCurve, kind: SweepKind) -> Result<()> {
    if iv.kind() != kind {
        return Err(Error::Validation(format!("expected a {kind:?} sweep, got {:?}", iv.kind())));
    }
    Ok(())
}

/// First derivative of sampled `ys` over a possibly nonuniform grid `xs`:
/// three-point central differences inside, three-point one-sided at the
/// ends. Exact for quadratics.
pub fn derivative(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::domain("derivative: length mismatch"));
    }
    if n < 3 {
        return Err(Error::domain("derivative needs at least 3 points"));
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        d[i] = (h0 * h0 * (c - b) + h1 * h1 * (b - a)) / (h0 * h1 * (h0 + h1));
    }
    let one_sided = |y0: f64, y1: f64, y2: f64, h1: f64, h2: f64| {
        -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y0 + (h1 + h2) / (h1 * h2) * y1 - h1 / (h2 * (h1 + h2)) * y2
    };
    d[0] = one_sided(ys[0], ys[1], ys[2], xs[1] - xs[0], xs[2] - xs[1]);
    // mirrored: step backwards, so the sign flips
    d[n - 1] = -one_sided(
        ys[n - 1],
        ys[n - 2],
        ys[n - 3],
        xs[n - 1] - xs[n - 2],
        xs[n - 2] - xs[n - 3],
    );
    Ok(d)
}

/// gm = dId/dVg at each point of a gate sweep (S/um).
pub fn transconductance(iv: &IvCurve) -> Result<Vec<f64>> {
    require_kind(iv, SweepKind::Gate)?;
    derivative(&iv.voltages(), &iv.currents())
}

/// Largest transconductance among the samples with lo <= Vg <= hi.
pub fn gm_max_in(iv: &IvCurve, lo: f64, hi: f64) -> Result<f64> {
    let gm = transconductance(iv)?;
    iv.points()
        .iter()
        .zip(gm)
        .filter(|(p, _)| p.v >= lo - 1e-9 && p.v <= hi + 1e-9)
        .map(|(_, g)| g)
        .reduce(f64::max)
        .ok_or_else(|| Error::Window(format!("no samples with {lo} <= Vg <= {hi} V")))
}

/// gd = dId/dVd at each point of a drain sweep (S/um).
pub fn output_conductance(iv: &IvCurve) -> Result<Vec<f64>> {
    require_kind(iv, SweepKind::Drain)?;
    derivative(&iv.voltages(), &iv.currents())
}

/// Av = gm R_D with gm in S/um and R_D in ohm um.
pub fn voltage_gain(gm: f64, r_d: f64) -> Result<f64> {
    if !(gm > 0.0 && r_d > 0.0) || !(gm.is_finite() && r_d.is_finite()) {
        return Err(Error::domain(format!("voltage gain needs positive gm and R_D (got {gm}, {r_d})")));
    }
    Ok(gm * r_d)
}

/// Gate voltage at which Id first reaches `i_crit`, interpolating
/// log10(Id) linearly in Vg between the bracketing samples.
pub fn vth_constant_current(iv: &IvCurve, i_crit: f64) -> Result<f64> {
    require_kind(iv, SweepKind::Gate)?;
    if !(i_crit > 0.0 && i_crit.is_finite()) {
        return Err(Error::domain("i_crit must be positive"));
    }
    let pts = iv.points();
    if let Some(p) = pts.iter().find(|p| p.id == i_crit) {
        return Ok(p.v);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.id < i_crit && b.id > i_crit {
            if a.id > 0.0 {
                let t = (i_crit.log10() - a.id.log10()) / (b.id.log10() - a.id.log10());
                return Ok(a.v + t * (b.v - a.v));
            }
            let t = (i_crit - a.id) / (b.id - a.id);
            return Ok(a.v + t * (b.v - a.v));
        }
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.id), h.max(p.id)));
    Err(Error::Range(format!("Id never rises through {i_crit:e} A/um (curve spans {lo:e} .. {hi:e})")))
}

/// x-intercept of the tangent to Id(Vg) at the transconductance maximum.
pub fn vth_linear_extrapolation(iv: &IvCurve) -> Result<f64> {
    let gm = transconductance(iv)?;
    let max = gm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Window("transconductance never positive".into()));
    }
    // first of (numerically) tied maxima; the tolerance is relative so the
    // choice does not depend on the current scale
    let idx = gm.iter().position(|&g| g >= max * (1.0 - 1e-9)).unwrap_or(0);
    if idx == 0 || idx == gm.len() - 1 {
        return Err(Error::Window(format!(
            "transconductance peaks at the sweep boundary (Vg = {} V)",
            iv.points()[idx].v
        )));
    }
    let p = iv.points()[idx];
    Ok(p.v - p.id / gm[idx])
}

/// Points of a gate sweep whose current lies within `window`.
fn window_points(iv: &IvCurve, window: (f64, f64)) -> Result<Vec<IvPoint>> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain("current window must satisfy 0 < lo < hi"));
    }
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::domain("current window must span at least one decade"));
    }
    let ids = iv.currents();
    let min = ids.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min > lo || max < hi {
        return Err(Error::Range(format!(
            "window [{lo:e}, {hi:e}] A/um not inside curve range [{min:e}, {max:e}]"
        )));
    }
    let pts: Vec<IvPoint> = iv.points().iter().copied().filter(|p| p.id >= lo && p.id <= hi).collect();
    if pts.len() < 2 {
        return Err(Error::Range("fewer than two samples inside the current window".into()));
    }
    Ok(pts)
}

/// Inverse slope of the least-squares line through log10(Id) vs Vg over
/// the samples inside `window`, in mV/decade.
pub fn subthreshold_slope(iv: &IvCurve, window: (f64, f64)) -> Result<f64> {
    require_kind(iv, SweepKind::Gate)?;
    let pts = window_points(iv, window)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.v).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.id.log10()).collect();
    let (slope, _) = least_squares(&xs, &ys)?;
    if !(slope > 0.0) {
        return Err(Error::Window("current does not rise through the window".into()));
    }
    Ok(1000.0 / slope)
}

/// Ordinary least squares `y = slope x + intercept`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::domain("x values have zero variance"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Drain-induced barrier lowering in mV/V from constant-current thresholds
/// at two drain biases.
pub fn dibl(iv_low: &IvCurve, iv_high: &IvCurve, i_crit: f64) -> Result<f64> {
    let v_low = vth_constant_current(iv_low, i_crit)?;
    let v_high = vth_constant_current(iv_high, i_crit)?;
    let dv = iv_high.fixed_bias() - iv_low.fixed_bias();
    if v_low == v_high {
        return Ok(0.0);
    }
    if !(dv > 0.0) {
        return Err(Error::domain("DIBL needs the high-drain curve at a larger Vd"));
    }
    Ok((v_low - v_high) / dv * 1000.0)
}

fn sampled_at(iv: &IvCurve, v: f64, log: bool) -> Result<f64> {
    let pts = iv.points();
    let tol = 1e-9;
    if let Some(p) = pts.iter().find(|p| (p.v - v).abs() <= tol) {
        return Ok(p.id);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.v < v && v < b.v {
            let t = (v - a.v) / (b.v - a.v);
            if log && a.id > 0.0 && b.id > 0.0 {
                return Ok(10f64.powf(a.id.log10() + t * (b.id.log10() - a.id.log10())));
            }
            return Ok(a.id + t * (b.id - a.id));
        }
    }
    Err(Error::Range(format!(
        "sweep [{}, {}] V does not cover {v} V",
        pts[0].v,
        pts[pts.len() - 1].v
    )))
}

/// (Ioff, Ion, Ion/Ioff) from a gate sweep at Vd = Vdd: Id at Vg = 0
/// (log interpolation) and at Vg = vdd (linear interpolation).
pub fn ioff_ion(iv: &IvCurve, vdd: f64) -> Result<(f64, f64, f64)> {
    require_kind(iv, SweepKind::Gate)?;
    let ioff = sampled_at(iv, 0.0, true)?;
    let ion = sampled_at(iv, vdd, false)?;
    if !(ioff > 0.0) {
        return Err(Error::Numerical(format!("non-positive off current {ioff:e}")));
    }
    Ok((ioff, ion, ion / ioff))
}

/// Metrics extracted independently, so one failure does not hide the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub vth_cc: Option<f64>,
    pub vth_extrap: Option<f64>,
    pub ss: Option<f64>,
    pub dibl: Option<f64>,
    /// Max gm over 0 <= Vg <= Vdd of the high-drain sweep.
    pub gm_max: Option<f64>,
    pub gd: Option<f64>,
    pub av: Option<f64>,
    pub ioff: Option<f64>,
    pub ion: Option<f64>,
    pub ion_ioff: Option<f64>,
    /// One message per metric that could not be extracted.
    pub issues: Vec<String>,
}

/// Extracts every metric that the available curves support. `low` and
/// `high` are gate sweeps at `vd_low` and `vd_high`, `drain` a drain sweep.
pub fn extract_metrics(
    low: Option<&IvCurve>,
    high: Option<&IvCurve>,
    drain: Option<&IvCurve>,
    s: &ExtractSettings,
) -> Metrics {
    let mut m = Metrics::default();
    let mut note = |name: &str, r: Result<f64>| -> Option<f64> {
        match r {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                m.issues.push(format!("{name}: non-finite value {v}"));
                None
            }
            Err(e) => {
                m.issues.push(format!("{name}: {e}"));
                None
            }
        }
    };
    let missing = |what: &str| Err(Error::Validation(format!("{what} curve unavailable")));

    let vth_cc = note("vth_cc", low.map_or_else(|| missing("low-drain"), |c| vth_constant_current(c, s.i_crit)));
    let vth_extrap = note("vth_extrap", low.map_or_else(|| missing("low-drain"), vth_linear_extrapolation));
    let ss = note("ss", low.map_or_else(|| missing("low-drain"), |c| subthreshold_slope(c, s.ss_window)));
    let dibl_v = note(
        "dibl",
        match (low, high) {
            (Some(l), Some(h)) => dibl(l, h, s.i_crit),
            _ => missing("low- or high-drain"),
        },
    );
    let gm_max = note(
        "gm_max",
        high.map_or_else(|| missing("high-drain"), |c| gm_max_in(c, 0.0, s.vdd)),
    );
    let gd = note(
        "gd",
        drain.map_or_else(|| missing("drain"), |c| {
            let g = output_conductance(c)?;
            let vs = c.voltages();
            interpolate(&vs, &g, s.gd_vd)
        }),
    );
    let av = note("av", gm_max.map_or_else(|| missing("gm"), |g| voltage_gain(g, s.r_d)));
    let onoff: Result<(f64, f64, f64)> = match high {
        None => Err(Error::Validation("high-drain curve unavailable".into())),
        Some(c) if (c.fixed_bias() - s.vdd).abs() > 1e-9 => Err(Error::Validation(format!(
            "on/off currents need a sweep at Vd = {} V, got {} V",
            s.vdd,
            c.fixed_bias()
        ))),
        Some(c) => ioff_ion(c, s.vdd),
    };
    let (ioff, ion, ratio) = match onoff {
        Ok((a, b, r)) => (Some(a), Some(b), Some(r)),
        Err(e) => {
            note("ioff/ion", Err(e));
            (None, None, None)
        }
    };
    m.vth_cc = vth_cc;
    m.vth_extrap = vth_extrap;
    m.ss = ss;
    m.dibl = dibl_v;
    m.gm_max = gm_max;
    m.gd = gd;
    m.av = av;
    m.ioff = ioff;
    m.ion = ion;
    m.ion_ioff = ratio;
    m
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    if let Some(i) = xs.iter().position(|&v| (v - x).abs() <= 1e-12) {
        return Ok(ys[i]);
    }
    for i in 0..xs.len().saturating_sub(1) {
        if xs[i] < x && x < xs[i + 1] {
            let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
            return Ok(ys[i] + t * (ys[i + 1] - ys[i]));
        }
    }
    Err(Error::Range(format!("{x} V outside the sweep")))
}

/// Complete set of metrics with the criteria used to obtain them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub vth_cc: f64,
    pub vth_extrap: f64,
    /// mV/dec
    pub ss: f64,
    /// mV/V
    pub dibl: f64,
    /// S/um, max over 0 <= Vg <= Vdd at Vd = vd_high
    pub gm_max: f64,
    /// S/um at `settings.gd_vd`
    pub gd: f64,
    pub av: f64,
    pub ioff: f64,
    pub ion: f64,
    pub ion_ioff: f64,
    /// Criteria, windows and biases the metrics refer to.
    pub settings: ExtractSettings,
}

impl ExtractionReport {
    /// Full report from the three curves; fails on the first metric that
    /// cannot be extracted.
    pub fn extract(low: &IvCurve, high: &IvCurve, drain: &IvCurve, s: &ExtractSettings) -> Result<Self> {
        s.validate()?;
        require_kind(low, SweepKind::Gate)?;
        require_kind(high, SweepKind::Gate)?;
        require_kind(drain, SweepKind::Drain)?;
        Self::from_metrics(&extract_metrics(Some(low), Some(high), Some(drain), s), s)
    }

    pub fn from_metrics(m: &Metrics, s: &ExtractSettings) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                let why = m.issues.iter().find(|i| i.starts_with(name)).cloned();
                Error::Validation(why.unwrap_or_else(|| format!("{name} unavailable")))
            })
        };
        Ok(ExtractionReport {
            vth_cc: need(m.vth_cc, "vth_cc")?,
            vth_extrap: need(m.vth_extrap, "vth_extrap")?,
            ss: need(m.ss, "ss")?,
            dibl: need(m.dibl, "dibl")?,
            gm_max: need(m.gm_max, "gm_max")?,
            gd: need(m.gd, "gd")?,
            av: need(m.av, "av")?,
            ioff: need(m.ioff, "ioff")?,
            ion: need(m.ion, "ion")?,
            ion_ioff: need(m.ion_ioff, "ioff")?,
            settings: *s,
        })
    }

    /// Slope floor and on/off ordering; returns the violated conditions.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.ss < SS_FLOOR_MV_PER_DEC {
            out.push(format!("ss {} mV/dec below {SS_FLOOR_MV_PER_DEC}", self.ss));
        }
        if self.ion < self.ioff {
            out.push(format!("ion {:e} below ioff {:e}", self.ion, self.ioff));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(vs: &[f64], f: impl Fn(f64) -> f64) -> IvCurve {
        IvCurve::from_pairs(SweepKind::Gate, 0.05, vs.iter().map(|&v| (v, f(v))), Provenance::Simulated).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn derivative_exact_for_quadratic_on_nonuniform_grid() {
        let xs = [0.0, 0.05, 0.2, 0.22, 0.5, 0.9];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x - 3.0 * x + 1.0).collect();
        let d = derivative(&xs, &ys).unwrap();
        for (x, g) in xs.iter().zip(d) {
            assert!((g - (4.0 * x - 3.0)).abs() < 1e-12, "{x} {g}");
        }
    }

    #[test]
    fn flat_curve_has_no_extrapolated_threshold() {
        let c = gate(&grid(0.0, 1.0, 11), |_| 1e-6);
        assert!(matches!(vth_linear_extrapolation(&c), Err(Error::Window(_))));
    }

    #[test]
    fn kind_mismatch_rejected() {
        let c = IvCurve::from_pairs(SweepKind::Drain, 1.0, grid(0.0, 1.0, 6).into_iter().map(|v| (v, v)), Provenance::Simulated)
            .unwrap();
        assert!(transconductance(&c).is_err());
        assert!(output_conductance(&c).is_ok());
    }

    #[test]
    fn on_off_interpolation() {
        let c = gate(&[-0.3, -0.1, 0.1, 0.5, 0.9, 1.1], |v| 1e-9 * 10f64.powf(v / 0.1));
        let (ioff, ion, r) = ioff_ion(&c, 1.0).unwrap();
        assert!((ioff - 1e-9).abs() < 1e-20);
        // linear between 0.9 and 1.1
        let lin = 0.5 * (1e-9 * 10f64.powf(9.0) + 1e-9 * 10f64.powf(11.0));
        assert!((ion - lin).abs() < 1e-9 * lin);
        assert!((r - ion / ioff).abs() < 1e-12 * r);
        assert!(matches!(ioff_ion(&c, 1.5), Err(Error::Range(_))));
    }
}
