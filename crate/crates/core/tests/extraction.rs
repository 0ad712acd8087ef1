use fdsoi_core::extract::{
    dibl, extract_metrics, gm_max_in, ioff_ion, subthreshold_slope, vth_constant_current, vth_linear_extrapolation,
    ExtractSettings, ExtractionReport,
};
use fdsoi_core::iv::{IvCurve, Provenance, SweepKind};
use proptest::prelude::*;

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).round() as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

fn gate_curve(vd: f64, vs: &[f64], f: impl Fn(f64) -> f64) -> IvCurve {
    IvCurve::from_pairs(SweepKind::Gate, vd, vs.iter().map(|&v| (v, f(v))), Provenance::Simulated).unwrap()
}

/// Id = i0 10^(Vg / S), S in V/decade.
fn exponential(i0: f64, s_mv: f64) -> impl Fn(f64) -> f64 {
    move |v| i0 * 10f64.powf(v / (s_mv * 1e-3))
}

/// Cubic turn-on: Id = k (x^2/2 - x^3 / (6 L)) for x = Vg - vt > 0, so gm
/// peaks at x = L with gm = k L / 2 and Id = k L^2 / 3; the tangent there
/// crosses zero at vt + L / 3.
fn cubic(k: f64, vt: f64, l: f64) -> impl Fn(f64) -> f64 {
    move |v| {
        let x = (v - vt).max(0.0);
        k * (x * x / 2.0 - x * x * x / (6.0 * l))
    }
}

#[test]
fn constant_current_threshold_is_exact_on_exponentials() {
    let vs = grid(0.0, 0.8, 0.02);
    let c = gate_curve(0.05, &vs, exponential(1e-13, 80.0));
    // 1e-7 = 1e-13 10^(v / 0.08)  =>  v = 0.48
    let v = vth_constant_current(&c, 1e-7).unwrap();
    assert!((v - 0.48).abs() < 1e-12, "{v}");
    assert!(vth_constant_current(&c, 1.0).is_err());
}

#[test]
fn extrapolated_threshold_matches_tangent_construction() {
    let (vt, l) = (0.3, 0.4);
    let vs = grid(0.0, 0.9, 0.01);
    let c = gate_curve(0.05, &vs, cubic(1e-3, vt, l));
    let v = vth_linear_extrapolation(&c).unwrap();
    assert!((v - (vt + l / 3.0)).abs() < 1e-3, "{v}");
    let gm = gm_max_in(&c, 0.0, 0.9).unwrap();
    assert!((gm - 1e-3 * l / 2.0).abs() / (1e-3 * l / 2.0) < 1e-3);
}

#[test]
fn gm_peak_at_sweep_edge_is_a_window_error() {
    let vs = grid(0.0, 0.5, 0.05);
    let c = gate_curve(0.05, &vs, |v| v * v);
    assert!(vth_linear_extrapolation(&c).is_err());
}

#[test]
fn dibl_from_shifted_exponentials() {
    let vs = grid(0.0, 1.0, 0.02);
    let low = gate_curve(0.05, &vs, exponential(1e-13, 75.0));
    // 40 mV lower threshold at Vd = 1 V
    let high = gate_curve(1.0, &vs, |v| exponential(1e-13, 75.0)(v + 0.04));
    let d = dibl(&low, &high, 1e-7).unwrap();
    assert!((d - 40.0 / 0.95).abs() < 1e-9, "{d}");
    assert_eq!(dibl(&low, &low, 1e-7).unwrap(), 0.0);
    assert!(dibl(&high, &low, 1e-7).is_err());
}

#[test]
fn on_off_currents_and_gain() {
    let vs = grid(-0.2, 1.0, 0.05);
    let f = exponential(1e-12, 70.0);
    let c = gate_curve(1.0, &vs, &f);
    let (ioff, ion, ratio) = ioff_ion(&c, 1.0).unwrap();
    assert!((ioff - f(0.0)).abs() / f(0.0) < 1e-12);
    assert!((ion - f(1.0)).abs() / f(1.0) < 1e-12);
    assert!((ratio - ion / ioff).abs() <= 1e-12 * ratio);
    assert!(ioff_ion(&c, 1.2).is_err());
}

#[test]
fn full_metric_set_from_synthetic_device() {
    let s = ExtractSettings::default();
    let vs = grid(-0.4, 1.5, 0.01);
    // subthreshold exponential joined to a cubic turn-on
    let device = |shift: f64| {
        move |v: f64| exponential(1e-12, 70.0)((v + shift).min(0.45)) + cubic(2e-3, 0.45, 0.5)(v + shift)
    };
    let low = gate_curve(0.05, &vs, device(0.0));
    let high = gate_curve(1.0, &vs, device(0.05));
    let vd = grid(0.0, 1.0, 0.05);
    let (g0, vsat) = (2e-3, 0.6);
    let drain = IvCurve::from_pairs(
        SweepKind::Drain,
        1.0,
        vd.iter().map(|&v| (v, g0 * (v - v * v / (2.0 * vsat)))),
        Provenance::Simulated,
    )
    .unwrap();
    let m = extract_metrics(Some(&low), Some(&high), Some(&drain), &s);
    assert!(m.issues.is_empty(), "{:?}", m.issues);
    let ss = m.ss.unwrap();
    assert!((ss - 70.0).abs() < 0.7, "{ss}");
    assert!((m.dibl.unwrap() - 50.0 / 0.95).abs() < 1.0);
    // gd of a quadratic is exact: g0 (1 - vd / vsat)
    assert!((m.gd.unwrap() - g0 * (1.0 - 0.05 / vsat)).abs() < 1e-12);
    assert!((m.av.unwrap() - m.gm_max.unwrap() * s.r_d).abs() < 1e-12);
    let report = ExtractionReport::from_metrics(&m, &s).unwrap();
    assert!(report.invariant_violations().is_empty());
    assert_eq!(report.settings, s);
}

#[test]
fn missing_curves_are_reported_not_invented() {
    let vs = grid(0.0, 0.8, 0.02);
    let low = gate_curve(0.05, &vs, exponential(1e-13, 80.0));
    let m = extract_metrics(Some(&low), None, None, &ExtractSettings::default());
    assert!(m.vth_cc.is_some());
    assert!(m.dibl.is_none() && m.gd.is_none() && m.ioff.is_none());
    assert!(m.issues.iter().any(|i| i.starts_with("dibl")));
    assert!(ExtractionReport::from_metrics(&m, &ExtractSettings::default()).is_err());
}

#[test]
fn report_invariants_flag_sub_thermal_slope_and_inverted_currents() {
    let ok = ExtractionReport {
        vth_cc: 0.3,
        vth_extrap: 0.4,
        ss: 70.0,
        dibl: 50.0,
        gm_max: 1e-3,
        gd: 1e-4,
        av: 10.0,
        ioff: 1e-10,
        ion: 1e-4,
        ion_ioff: 1e6,
        settings: ExtractSettings::default(),
    };
    assert!(ok.invariant_violations().is_empty());
    let bad = ExtractionReport { ss: 50.0, ion: 1e-12, ..ok };
    let v = bad.invariant_violations();
    assert_eq!(v.len(), 2, "{v:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slope_of_pure_exponential_is_recovered(s_mv in 60.0f64..150.0, log_i0 in -16.0f64..-13.0, step in 0.005f64..0.02) {
        let vs = grid(-0.2, 1.6, step);
        let c = gate_curve(0.05, &vs, exponential(10f64.powf(log_i0), s_mv));
        prop_assume!(c.currents().iter().copied().fold(0.0, f64::max) > 1e-8);
        prop_assume!(c.currents()[0] < 1e-11);
        let ss = subthreshold_slope(&c, (1e-11, 1e-8)).unwrap();
        prop_assert!((ss - s_mv).abs() < 1e-6 * s_mv);
    }

    #[test]
    fn thresholds_are_scale_covariant(scale in 0.1f64..10.0, shift in -0.2f64..0.2) {
        let vs = grid(-0.4, 1.2, 0.01);
        let base = gate_curve(0.05, &vs, |v| cubic(1e-3, 0.3, 0.4)(v - shift));
        let scaled = base.scaled(scale).unwrap();
        let a = vth_linear_extrapolation(&base).unwrap();
        let b = vth_linear_extrapolation(&scaled).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((a - (0.3 + shift + 0.4 / 3.0)).abs() < 2e-3);
        let c1 = vth_constant_current(&base, 1e-5).unwrap();
        let c2 = vth_constant_current(&scaled, 1e-5 * scale).unwrap();
        prop_assert!((c1 - c2).abs() < 1e-9);
    }

    #[test]
    fn dibl_is_shift_over_drain_span(dv_th in 0.0f64..0.1, vd_high in 0.5f64..1.5) {
        let vs = grid(-0.5, 1.5, 0.01);
        let low = gate_curve(0.05, &vs, exponential(1e-13, 80.0));
        let high = gate_curve(vd_high, &vs, |v| exponential(1e-13, 80.0)(v + dv_th));
        let d = dibl(&low, &high, 1e-7).unwrap();
        prop_assert!((d - dv_th / (vd_high - 0.05) * 1000.0).abs() < 1e-6);
    }
}
