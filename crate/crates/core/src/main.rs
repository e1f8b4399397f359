use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloaksim::config::{RunConfig, Task};
use cloaksim::run::run;
use cloaksim::Error;

#[derive(Parser, Debug)]
#[command(name = "cloaksim", version, about = "Layered acoustic and quantum cloak experiments")]
struct Cli {
    #[command(subcommand)]
    task: TaskCmd,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum TaskCmd {
    /// Dump the anisotropic and layered material profiles.
    Profile,
    /// Partial-wave scattering by the layered cloak.
    Scatter,
    /// Dirichlet-to-Neumann eigenvalues against free space.
    Dn,
    /// Trapping potentials and exceptional energies with pole fits.
    Resonance,
    /// Cloaking potential and gauge-transformed segment field.
    Quantum,
    /// Cloak versus uncloaked ball scattering and plane field.
    #[command(name = "fig1-left")]
    Fig1Left,
    /// Almost trapped eigenfunction.
    #[command(name = "fig1-right")]
    Fig1Right,
    /// Radial segment dumps of u and ψ for both presets.
    Fig2,
}

impl From<TaskCmd> for Task {
    fn from(t: TaskCmd) -> Task {
        match t {
            TaskCmd::Profile => Task::Profile,
            TaskCmd::Scatter => Task::Scatter,
            TaskCmd::Dn => Task::Dn,
            TaskCmd::Resonance => Task::Resonance,
            TaskCmd::Quantum => Task::Quantum,
            TaskCmd::Fig1Left => Task::Fig1Left,
            TaskCmd::Fig1Right => Task::Fig1Right,
            TaskCmd::Fig2 => Task::Fig2,
        }
    }
}

/// Every flag overrides the key of the same name in the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "E", global = true, allow_negative_numbers = true)]
    energy: Option<String>,
    #[arg(long = "R", global = true)]
    r_trunc: Option<String>,
    #[arg(long = "n_fine_layers", global = true)]
    n_fine_layers: Option<String>,
    #[arg(long = "l_max", global = true)]
    l_max: Option<String>,
    #[arg(long = "Q_in", global = true, allow_negative_numbers = true)]
    q_in: Option<String>,
    #[arg(long = "m", global = true)]
    m: Option<String>,
    #[arg(long = "R_Q", global = true)]
    q_radius: Option<String>,
    #[arg(long = "out_dir", global = true)]
    out_dir: Option<String>,
    #[arg(long = "manifest", global = true)]
    manifest: Option<String>,
    /// `lo,hi`
    #[arg(long = "q_scan", global = true, allow_hyphen_values = true)]
    q_scan: Option<String>,
    /// `lo,hi`
    #[arg(long = "e_scan", global = true, allow_hyphen_values = true)]
    e_scan: Option<String>,
    #[arg(long = "points_per_unit", global = true)]
    points_per_unit: Option<String>,
    #[arg(long = "scan_l_max", global = true)]
    scan_l_max: Option<String>,
    #[arg(long = "segment_samples", global = true)]
    segment_samples: Option<String>,
    #[arg(long = "angle_samples", global = true)]
    angle_samples: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        [
            ("E", &self.energy),
            ("R", &self.r_trunc),
            ("n_fine_layers", &self.n_fine_layers),
            ("l_max", &self.l_max),
            ("Q_in", &self.q_in),
            ("m", &self.m),
            ("R_Q", &self.q_radius),
            ("out_dir", &self.out_dir),
            ("manifest", &self.manifest),
            ("q_scan", &self.q_scan),
            ("e_scan", &self.e_scan),
            ("points_per_unit", &self.points_per_unit),
            ("scan_l_max", &self.scan_l_max),
            ("segment_samples", &self.segment_samples),
            ("angle_samples", &self.angle_samples),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }
}

fn resolve(cli: &Cli) -> cloaksim::Result<RunConfig> {
    let mut cfg = RunConfig::new(cli.task.into());
    if let Some(path) = &cli.opts.config {
        cfg.apply_file(path)?;
        // the subcommand wins over a `task` key in the file
        cfg.task = cli.task.into();
    }
    for (k, v) in cli.opts.pairs() {
        cfg.set(k, v)?;
    }
    cfg.validate()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for c in outcome.manifest.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
            }
            println!("{}", outcome.manifest_path.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
