//! Coarse work-function sweep printed as the summary table.
//!
//! `cargo run --release --example wf_sweep -- 4.4,4.6,4.8`

use fdsoi_core::sweep::{run_wf_sweep, SweepPlan};
use fdsoi_core::MeshDensity;

fn main() -> fdsoi_core::Result<()> {
    let wf_values = match std::env::args().nth(1) {
        Some(list) => list.split(',').map(|x| x.trim().parse().expect("work function in eV")).collect(),
        None => vec![4.4, 4.6, 4.8, 5.0],
    };
    let plan = SweepPlan { mesh: MeshDensity::Coarse, wf_values, ..SweepPlan::default() };
    let report = run_wf_sweep(&plan)?;
    print!("{}", report.summary_csv());
    if let Some(o) = &report.optimum {
        println!("optimum work function: {:.3} eV", o.wf);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(())
}
