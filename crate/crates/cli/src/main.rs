mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{merge, read_config_file, Entries, RunConfig};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "carnot",
    version,
    about = "Distances, ring capacities and conformal type of Carnot-Caratheodory spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimensions, filtration ranks and Hausdorff dimension of a structure.
    Info(Flags),
    /// Ball volumes and sphere areas at the given radii.
    Growth(Flags),
    /// Capacity estimates with bounds for each annulus.
    Capacity(Flags),
    /// Parabolic or hyperbolic verdict from a growth profile.
    Classify(Flags),
    /// Coarea, sandwich and Ahlfors-Gromov consistency suites.
    Check(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in name (euclidean, heisenberg_cc, heisenberg_riemannian) or structure file.
    #[arg(long)]
    structure: Option<String>,
    /// Topological dimension of a built-in structure.
    #[arg(long)]
    dim: Option<String>,
    /// `H`, `lo:hi`, or `lo:hi,lo:hi,...` per axis.
    #[arg(long, allow_hyphen_values = true)]
    chart: Option<String>,
    /// Nodes per axis: one value or one per axis.
    #[arg(long)]
    res: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    origin: Option<String>,
    /// Strictly decreasing schedule of the Riemannian approximations.
    #[arg(long)]
    tau: Option<String>,
    /// `r1,r2,...` or `start..end[:count[:log]]`.
    #[arg(long)]
    radii: Option<String>,
    /// `a,b,p`; repeatable.
    #[arg(long)]
    annulus: Vec<String>,
    /// CSV with columns r, v and optionally S.
    #[arg(long)]
    growth_file: Option<String>,
    /// `power:c,k` or `exponential:c,beta`.
    #[arg(long)]
    model: Option<String>,
    /// Hausdorff dimension for growth inputs.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    total_volume: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn entries(&self) -> Entries {
        let single = [
            ("structure", &self.structure),
            ("dim", &self.dim),
            ("chart", &self.chart),
            ("res", &self.res),
            ("origin", &self.origin),
            ("tau", &self.tau),
            ("radii", &self.radii),
            ("growth-file", &self.growth_file),
            ("model", &self.model),
            ("m", &self.m),
            ("total-volume", &self.total_volume),
            ("out", &self.out),
        ];
        let mut out: Entries = single
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone(), 0)))
            .collect();
        out.extend(
            self.annulus
                .iter()
                .map(|a| ("annulus".to_string(), a.clone(), 0)),
        );
        out
    }

    fn resolve(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => Vec::new(),
        };
        RunConfig::from_entries(&merge(file, self.entries()))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Info(f) => commands::info(&f.resolve()?, &mut out),
        Command::Growth(f) => commands::growth(&f.resolve()?, &mut out),
        Command::Capacity(f) => commands::capacity(&f.resolve()?, &mut out),
        Command::Classify(f) => commands::classify(&f.resolve()?, &mut out),
        Command::Check(f) => commands::check(&f.resolve()?, &mut out),
    };
    out.flush().ok();
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
