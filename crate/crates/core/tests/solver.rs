use std::sync::{Arc, OnceLock};

use fdsoi_core::ddsolver::{export_cutline, CutlineDirection, Quantity};
use fdsoi_core::device::{generate_resistor_mesh, Contact};
use fdsoi_core::{
    default_device, Bias, MaterialParams, MeshDensity, Simulator, SolutionState, SolverSettings, TransportParams,
};

const Q: f64 = 1.602176634e-19;

fn device_sim() -> &'static (Simulator, SolutionState) {
    static SIM: OnceLock<(Simulator, SolutionState)> = OnceLock::new();
    SIM.get_or_init(|| {
        let mat = MaterialParams::default();
        let sim = Simulator::for_device(
            &default_device(),
            MeshDensity::Coarse,
            mat,
            TransportParams::from_material(&mat, 300.0),
            SolverSettings::default(),
        )
        .unwrap();
        let eq = sim.solve_equilibrium().unwrap();
        (sim, eq)
    })
}

#[test]
fn resistor_current_matches_ohms_law() {
    let mat = MaterialParams::default();
    let (length, thickness, nd) = (200e-7, 10e-7, 1e17);
    let mesh = Arc::new(generate_resistor_mesh(length, thickness, nd, MeshDensity::Coarse).unwrap());
    let transport = TransportParams::from_material(&mat, 300.0);
    let sim = Simulator::new(mesh, mat, transport, SolverSettings::default(), 4.5).unwrap();
    let eq = sim.solve_equilibrium().unwrap();
    for dv in [0.005, 0.02] {
        let s = sim.solve_bias(&eq, &Bias::new(0.0, dv)).unwrap();
        let i = sim.terminal_currents(&s).get(Contact::Drain);
        // q mu n t dV / L per cm of width, reported per um
        let n0 = 0.5 * nd + (0.25 * nd * nd + mat.ni * mat.ni).sqrt();
        let oracle = Q * mat.mu_n * n0 * thickness * dv / length * 1e-4;
        let rel = (i - oracle).abs() / oracle;
        assert!(rel < 0.02, "dV = {dv}: {i:e} vs {oracle:e} ({rel:.2e})");
    }
}

#[test]
fn equilibrium_carries_no_current_and_satisfies_mass_action() {
    let (sim, eq) = device_sim();
    let c = sim.terminal_currents(eq);
    assert!(c.max_abs() <= 1e-15, "{c:?}");
    let ni2 = sim.material().ni.powi(2);
    for k in 0..eq.n.len() {
        if sim.mesh().is_semiconductor(k) {
            let r = eq.n[k] * eq.p[k] / ni2;
            assert!((r - 1.0).abs() < 1e-3, "node {k}: np/ni^2 = {r}");
        }
    }
}

#[test]
fn equilibrium_source_is_neutral_far_from_junction() {
    let (sim, eq) = device_sim();
    let spec = default_device();
    let (top, bottom) = spec.film_bounds();
    let cut = export_cutline(eq, sim.mesh(), CutlineDirection::Horizontal, 0.5 * (top + bottom), &[Quantity::N])
        .unwrap();
    let n = cut.values_of(Quantity::N).unwrap();
    // the ohmic contact pins neutrality; inside, the back interface and
    // the gate fringe deplete the 6 nm film slightly
    assert!((n[0] - spec.nd_sd).abs() / spec.nd_sd < 1e-6, "n = {:e}", n[0]);
    let deep = cut.positions.iter().position(|&x| x > 0.25 * spec.l_sd).unwrap();
    let rel = (n[deep] - spec.nd_sd).abs() / spec.nd_sd;
    assert!(rel < 0.1, "n = {:e}", n[deep]);
}

#[test]
fn current_is_conserved_between_source_and_drain() {
    let (sim, eq) = device_sim();
    for (vg, vd) in [(1.0, 0.05), (1.0, 1.0)] {
        let s = sim.solve_bias(eq, &Bias::new(vg, vd)).unwrap();
        let c = sim.terminal_currents(&s);
        let rel = c.sum().abs() / c.drain.abs();
        assert!(c.drain > 0.0);
        assert!(rel <= 1e-6, "({vg}, {vd}): {c:?}");
    }
}

#[test]
fn converged_state_is_a_fixed_point() {
    let (sim, eq) = device_sim();
    let s = sim.solve_bias(eq, &Bias::new(0.8, 0.5)).unwrap();
    let again = sim.solve_bias(&s, &Bias::new(0.8, 0.5)).unwrap();
    let dv = s.v.iter().zip(&again.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dv < sim.settings().gummel_tol * 10.0, "{dv}");
    assert!(again.diagnostics.outer_iterations <= 2);
}

#[test]
fn gate_sweep_current_rises_monotonically() {
    let (sim, eq) = device_sim();
    let vg: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let out = sim.sweep_gate(eq, 0.05, &vg).unwrap();
    assert!(out.is_complete());
    let curve = out.curve().unwrap();
    let id = curve.currents();
    assert!(id.windows(2).all(|w| w[1] > w[0]), "{id:?}");
    // more than five decades between Vg = 0 and 1 V
    assert!(id[10] / id[0] > 1e5);
}

#[test]
fn drain_sweep_saturates() {
    let (sim, eq) = device_sim();
    let on = sim.solve_bias(eq, &Bias::new(1.0, 0.0)).unwrap();
    let vd: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let out = sim.sweep_drain(&on, 1.0, &vd).unwrap();
    let id = out.curve().unwrap().currents();
    assert!(id[0].abs() < 1e-12);
    assert!(id.windows(2).all(|w| w[1] > w[0]));
    let early = id[2] - id[1];
    let late = id[10] - id[9];
    assert!(late < 0.5 * early, "no saturation: {early:e} vs {late:e}");
}

#[test]
fn vertical_cutline_through_channel_is_ordered_and_bounded() {
    let (sim, eq) = device_sim();
    let spec = default_device();
    let (xs, xd) = spec.junctions();
    let cut = export_cutline(eq, sim.mesh(), CutlineDirection::Vertical, 0.5 * (xs + xd), &Quantity::ALL).unwrap();
    assert!(cut.positions.windows(2).all(|w| w[1] > w[0]));
    let v = cut.values_of(Quantity::V).unwrap();
    assert!(v.iter().all(|x| x.is_finite()));
    // the gate boundary value sits at the top of the line
    let expected_gate = sim.gate_potential(0.0);
    assert!((v[0] - expected_gate).abs() < 1e-12);
    assert!(export_cutline(eq, sim.mesh(), CutlineDirection::Vertical, -1e-7, &[Quantity::V]).is_err());
}

#[test]
fn horizontal_cutline_is_symmetric_at_zero_drain_bias() {
    let (sim, eq) = device_sim();
    let spec = default_device();
    let (top, bottom) = spec.film_bounds();
    let cut = export_cutline(eq, sim.mesh(), CutlineDirection::Horizontal, 0.5 * (top + bottom), &[Quantity::V])
        .unwrap();
    let v = cut.values_of(Quantity::V).unwrap();
    let len = spec.total_length();
    for (i, &x) in cut.positions.iter().enumerate() {
        // compare with the mirror node when the mesh has one
        if let Some(j) = cut.positions.iter().position(|&y| (y - (len - x)).abs() < 1e-12) {
            assert!((v[i] - v[j]).abs() < 1e-6, "x = {x}: {} vs {}", v[i], v[j]);
        }
    }
}
