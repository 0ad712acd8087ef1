//! `fdsoi`: analytic models, device simulation, parameter extraction and
//! work-function sweeps for FD-SOI NMOSFETs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdsoi_core::ddsolver::{CutlineDirection, Quantity};
use fdsoi_core::MeshDensity;

use config::{parse_range, parse_voltage, RangeSpec, VoltageSpec};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input files (exit 2).
    Input(String),
    /// The solver or a sweep failed (exit 3).
    Numerical(String),
    /// Writing outputs failed (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<fdsoi_core::Error> for CliError {
    fn from(e: fdsoi_core::Error) -> Self {
        match e {
            fdsoi_core::Error::Io(io) => CliError::Io(io.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "fdsoi", version, about = "FD-SOI NMOSFET simulator and characterization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mesh density.
    #[arg(long, value_parser = parse_mesh)]
    pub mesh: Option<MeshDensity>,
    /// Worker threads for work-function sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form threshold voltages and subthreshold swing over a work-function grid.
    Analytic {
        #[command(flatten)]
        common: Common,
        /// Work-function grid start:stop:step (eV).
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        wf: Option<RangeSpec>,
    },
    /// Simulate one device: a gate or drain sweep plus a cutline.
    Simulate(SimulateArgs),
    /// Extract metrics from I-V CSV files.
    Extract(ExtractArgs),
    /// Simulate and characterize the device over a work-function grid.
    SweepWf {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        wf: Option<RangeSpec>,
        /// Gate grid of the transfer sweeps.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        vg: Option<RangeSpec>,
        /// Drain grid of the output sweep.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        vd: Option<RangeSpec>,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Gate voltage or start:stop:step.
    #[arg(long, value_parser = parse_voltage, allow_hyphen_values = true)]
    pub vg: Option<VoltageSpec>,
    /// Drain voltage or start:stop:step.
    #[arg(long, value_parser = parse_voltage, allow_hyphen_values = true)]
    pub vd: Option<VoltageSpec>,
    /// Cutline direction: horizontal or vertical.
    #[arg(long, value_parser = parse_direction)]
    pub cut_dir: Option<CutlineDirection>,
    /// Cutline position in nm (depth for horizontal, x for vertical).
    #[arg(long, allow_hyphen_values = true)]
    pub cut_at: Option<f64>,
    /// Comma-separated quantities: v,n,p,e_vertical,e_lateral.
    #[arg(long, value_parser = parse_quantity, value_delimiter = ',')]
    pub cut_quantities: Option<Vec<Quantity>>,
    /// Skip the cutline.
    #[arg(long)]
    pub no_cutline: bool,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    /// Gate sweep at low drain bias.
    #[arg(long)]
    pub low: PathBuf,
    /// Gate sweep at high drain bias.
    #[arg(long)]
    pub high: Option<PathBuf>,
    /// Drain sweep.
    #[arg(long)]
    pub drain: Option<PathBuf>,
    /// Constant-current criterion (A/um).
    #[arg(long)]
    pub i_crit: Option<f64>,
    /// Subthreshold fit window lo:hi (A/um).
    #[arg(long, value_parser = parse_window)]
    pub ss_window: Option<(f64, f64)>,
    #[arg(long)]
    pub vdd: Option<f64>,
}

fn parse_mesh(s: &str) -> Result<MeshDensity, String> {
    s.parse().map_err(|e: fdsoi_core::Error| e.to_string())
}

fn parse_direction(s: &str) -> Result<CutlineDirection, String> {
    s.parse().map_err(|e: fdsoi_core::Error| e.to_string())
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    s.trim().parse().map_err(|e: fdsoi_core::Error| e.to_string())
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    Ok((num(a)?, num(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analytic { common, wf } => commands::analytic(&common, wf),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Extract(args) => commands::extract(&args),
        Command::SweepWf { common, wf, vg, vd } => commands::sweep_wf(&common, wf, vg, vd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdsoi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
