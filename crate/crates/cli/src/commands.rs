//! The four subcommands.

use std::fmt::Write as _;
use std::time::Instant;

use fdsoi_core::ddsolver::{export_cutline, CutlineDirection, SweepOutcome};
use fdsoi_core::extract::{extract_metrics, ExtractionReport};
use fdsoi_core::iv::{format_number, ingest_iv_csv, SweepKind};
use fdsoi_core::physcore::{body_capacitance, subthreshold_slope_analytic, vth_classic, vth_fdsoi};
use fdsoi_core::sweep::run_wf_sweep;
use fdsoi_core::{IvCurve, Simulator};
use serde_json::json;

use crate::config::{CutlineRequest, RangeSpec, RunConfig, VoltageSpec};
use crate::output::{OutputDir, RunReport};
use crate::{CliError, Common, ExtractArgs, SimulateArgs};

pub const ANALYTIC_HEADER: &str = "phi_m_eV,vth_classic_V,vth_fdsoi_V,ss_mV_per_dec";

/// Config file, then the flags shared by every command.
fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(mesh) = common.mesh {
        cfg.mesh = mesh;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    Ok(cfg)
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn analytic(common: &Common, wf: Option<RangeSpec>) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    if let Some(wf) = wf {
        cfg.sweep.wf = wf;
    }
    cfg.validate()?;
    let t0 = Instant::now();
    let mut csv = String::from(ANALYTIC_HEADER);
    csv.push('\n');
    let mut rows = Vec::new();
    for phi_m in cfg.sweep.wf.values()? {
        let input = cfg.device.with_phi_m(phi_m).analytic_inputs(cfg.analytic.q_ss, cfg.analytic.q_ssb);
        let classic = vth_classic(&input, &cfg.material)?;
        let fdsoi = vth_fdsoi(&input, &cfg.material)?;
        let cd = body_capacitance(&input, cfg.device.t_box, &cfg.material)?;
        let ss = subthreshold_slope_analytic(cd, input.c_ox(&cfg.material), input.temp)?;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            format_number(phi_m),
            format_number(classic),
            format_number(fdsoi),
            format_number(ss)
        );
        rows.push(json!({ "phi_m": phi_m, "vth_classic": classic, "vth_fdsoi": fdsoi, "ss": ss }));
    }
    print!("{csv}");
    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write("analytic.csv", &csv)?;
    let mut report = RunReport::new("analytic", &cfg);
    report.timings.insert("analytic".into(), secs(t0));
    report.result = json!({ "rows": rows });
    report.finish(&mut out)?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = resolve(&args.common)?;
    if let Some(vg) = args.vg {
        cfg.simulate.vg = vg;
    }
    if let Some(vd) = args.vd {
        cfg.simulate.vd = vd;
    }
    if args.no_cutline {
        cfg.simulate.cutline = None;
    } else if args.cut_dir.is_some() || args.cut_at.is_some() || args.cut_quantities.is_some() {
        let base = cfg.simulate.cutline.clone().unwrap_or(CutlineRequest {
            direction: CutlineDirection::Horizontal,
            position_nm: None,
            quantities: fdsoi_core::ddsolver::Quantity::ALL.to_vec(),
        });
        cfg.simulate.cutline = Some(CutlineRequest {
            direction: args.cut_dir.unwrap_or(base.direction),
            position_nm: args.cut_at.or(base.position_nm),
            quantities: args.cut_quantities.clone().unwrap_or(base.quantities),
        });
    }
    cfg.validate()?;
    let (kind, fixed, list) = match (cfg.simulate.vg, cfg.simulate.vd) {
        (VoltageSpec::Range(_), VoltageSpec::Range(_)) => {
            return Err(CliError::Input("only one of vg and vd may be a range".into()))
        }
        (vg, VoltageSpec::Value(vd)) => (SweepKind::Gate, vd, vg.values()?),
        (VoltageSpec::Value(vg), vd) => (SweepKind::Drain, vg, vd.values()?),
    };
    if let Some(cut) = &cfg.simulate.cutline {
        if cut.quantities.is_empty() {
            return Err(CliError::Input("cutline needs at least one quantity".into()));
        }
    }

    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut report = RunReport::new("simulate", &cfg);
    let t0 = Instant::now();
    let sim = Simulator::for_device(&cfg.device, cfg.mesh, cfg.material, cfg.transport, cfg.solver)?;
    report.timings.insert("setup".into(), secs(t0));

    let t1 = Instant::now();
    let eq = match sim.solve_equilibrium() {
        Ok(s) => s,
        Err(e) => {
            let e = CliError::from(e);
            report.failure = Some(e.to_string());
            report.timings.insert("equilibrium".into(), secs(t1));
            report.finish(&mut out)?;
            return Err(e);
        }
    };
    report.timings.insert("equilibrium".into(), secs(t1));

    let t2 = Instant::now();
    let outcome: SweepOutcome = match kind {
        SweepKind::Gate => sim.sweep_gate(&eq, fixed, &list)?,
        SweepKind::Drain => sim.sweep_drain(&eq, fixed, &list)?,
    };
    report.timings.insert("sweep".into(), secs(t2));
    let iv_name = match kind {
        SweepKind::Gate => "iv_transfer.csv",
        SweepKind::Drain => "iv_output.csv",
    };
    out.write(iv_name, &outcome.to_csv())?;
    println!("{} of {} bias points converged; wrote {}", outcome.points.len(), list.len(), iv_name);

    let mut cut_info = serde_json::Value::Null;
    if let (Some(req), Some(state)) = (&cfg.simulate.cutline, &outcome.last_state) {
        let coordinate = match (req.position_nm, req.direction) {
            (Some(nm), _) => nm * 1e-7,
            (None, CutlineDirection::Horizontal) => {
                let (top, bottom) = cfg.device.film_bounds();
                0.5 * (top + bottom)
            }
            (None, CutlineDirection::Vertical) => {
                let (xs, xd) = cfg.device.junctions();
                0.5 * (xs + xd)
            }
        };
        let cut = match export_cutline(state, sim.mesh(), req.direction, coordinate, &req.quantities) {
            Ok(c) => c,
            Err(e) => {
                let e = CliError::from(e);
                report.failure = Some(format!("cutline: {e}"));
                report.finish(&mut out)?;
                return Err(e);
            }
        };
        for q in &cut.quantities {
            if let Some(text) = cut.to_csv(*q) {
                out.write(&format!("cutline_{q}.csv"), &text)?;
            }
        }
        cut_info = json!({
            "direction": cut.direction,
            "requested_nm": cut.requested * 1e7,
            "line_nm": cut.coordinate * 1e7,
            "bias": { "gate": state.bias.gate, "drain": state.bias.drain },
            "quantities": cut.quantities,
        });
    }

    report.result = json!({
        "kind": outcome.kind,
        "fixed_bias": outcome.fixed_bias,
        "requested_points": list.len(),
        "converged_points": outcome.points.len(),
        "cutline": cut_info,
    });
    let failure = outcome.failure.as_ref().map(|(v, why)| format!("stopped at {v} V: {why}"));
    report.failure = failure.clone();
    report.finish(&mut out)?;
    match failure {
        Some(f) => Err(CliError::Numerical(f)),
        None => Ok(()),
    }
}

fn load_curve(path: &std::path::Path) -> Result<IvCurve, CliError> {
    ingest_iv_csv(path).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        match e {
            fdsoi_core::Error::Io(_) => CliError::Input(msg),
            e if e.is_numerical() => CliError::Numerical(msg),
            _ => CliError::Input(msg),
        }
    })
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let mut cfg = resolve(&args.common)?;
    if let Some(i) = args.i_crit {
        cfg.extract.i_crit = i;
    }
    if let Some(w) = args.ss_window {
        cfg.extract.ss_window = w;
    }
    if let Some(v) = args.vdd {
        cfg.extract.vdd = v;
    }
    cfg.validate()?;
    let t0 = Instant::now();
    let low = load_curve(&args.low)?;
    let high = args.high.as_deref().map(load_curve).transpose()?;
    let drain = args.drain.as_deref().map(load_curve).transpose()?;
    let expect = |c: &IvCurve, kind: SweepKind, which: &str| {
        if c.kind() == kind {
            Ok(())
        } else {
            Err(CliError::Input(format!("{which} file holds a {:?} sweep, expected {kind:?}", c.kind())))
        }
    };
    expect(&low, SweepKind::Gate, "--low")?;
    if let Some(h) = &high {
        expect(h, SweepKind::Gate, "--high")?;
    }
    if let Some(d) = &drain {
        expect(d, SweepKind::Drain, "--drain")?;
    }
    // the criteria must describe the curves actually supplied
    cfg.extract.vd_low = low.fixed_bias();
    if let Some(h) = &high {
        cfg.extract.vd_high = h.fixed_bias();
    }
    let metrics = extract_metrics(Some(&low), high.as_ref(), drain.as_ref(), &cfg.extract);
    let full = ExtractionReport::from_metrics(&metrics, &cfg.extract).ok();
    let violations = full.as_ref().map(ExtractionReport::invariant_violations).unwrap_or_default();
    let doc = json!({
        "inputs": {
            "low": args.low,
            "high": args.high,
            "drain": args.drain,
        },
        "metrics": metrics,
        "settings": cfg.extract,
        "complete": full.is_some(),
        "invariant_violations": violations,
    });
    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write_json("extraction.json", &doc)?;
    for (name, v) in [
        ("vth_cc_V", metrics.vth_cc),
        ("vth_extrap_V", metrics.vth_extrap),
        ("ss_mV_per_dec", metrics.ss),
        ("dibl_mV_per_V", metrics.dibl),
        ("gm_max_S_per_um", metrics.gm_max),
        ("gd_S_per_um", metrics.gd),
        ("av", metrics.av),
        ("ioff_A_per_um", metrics.ioff),
        ("ion_A_per_um", metrics.ion),
        ("ion_ioff", metrics.ion_ioff),
    ] {
        println!("{name:>16} {}", v.map(format_number).unwrap_or_else(|| "-".into()));
    }
    let mut report = RunReport::new("extract", &cfg);
    report.timings.insert("extract".into(), secs(t0));
    report.result = doc;
    report.finish(&mut out)?;
    Ok(())
}

pub fn sweep_wf(
    common: &Common,
    wf: Option<RangeSpec>,
    vg: Option<RangeSpec>,
    vd: Option<RangeSpec>,
) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    if let Some(wf) = wf {
        cfg.sweep.wf = wf;
    }
    if let Some(vg) = vg {
        cfg.sweep.vg = vg;
    }
    if let Some(vd) = vd {
        cfg.sweep.vd = vd;
    }
    cfg.validate()?;
    let plan = cfg.sweep_plan()?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut report = RunReport::new("sweep-wf", &cfg);
    let t0 = Instant::now();
    let result = run_wf_sweep(&plan);
    report.timings.insert("sweep".into(), secs(t0));
    let sweep = match result {
        Ok(s) => s,
        Err(e) => {
            let e = CliError::from(e);
            report.failure = Some(e.to_string());
            report.finish(&mut out)?;
            return Err(e);
        }
    };
    for row in &sweep.rows {
        report.timings.insert(format!("wf_{}", format_number(row.wf)), row.wall_time_s);
    }
    let summary = sweep.summary_csv();
    out.write("sweep_summary.csv", &summary)?;
    print!("{summary}");
    if let Some(o) = &sweep.optimum {
        println!("optimum work function: {:.4} eV", o.wf);
    }
    let failed: Vec<f64> = sweep.rows.iter().filter(|r| !r.is_success()).map(|r| r.wf).collect();
    if !failed.is_empty() {
        report.failure = Some(format!("incomplete extraction at {failed:?} eV"));
    }
    report.result = serde_json::to_value(&sweep).map_err(|e| CliError::Io(e.to_string()))?;
    report.finish(&mut out)?;
    Ok(())
}
