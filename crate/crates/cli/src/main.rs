//! `qsdyn`: simulate the tumor quasispecies model, list its equilibria, and
//! sweep the `(f0 Q, f1 Qp)` plane.

mod commands;
mod config;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsdyn::equilibria::EquilibriumKind;
use qsdyn::sweep::{Axis, BranchChoice, SweepKind};

use config::{CliError, RunConfig, Settings, DEFAULT_SIMULATE_TMAX};

#[derive(Parser)]
#[command(name = "qsdyn", version, about = "Tumor quasispecies dynamics: orbits, equilibria and parameter sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one orbit and write `orbit.csv`.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Report the three fixed points, their eigenvalues and stability.
    Equilibria {
        #[command(flatten)]
        common: Common,
        /// Print the machine-readable CSV instead of the text report.
        #[arg(long)]
        csv: bool,
    },
    /// Sweep the (f0Q, f1Qp) grid and write `sweep_<kind>.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// classify, densities or transients
        #[arg(long, default_value = "classify")]
        kind: SweepKind,
    },
    /// Scan one line of the grid and write `section_<kind>.csv`.
    Section {
        #[command(flatten)]
        common: Common,
        /// classify, densities or transients
        #[arg(long, default_value = "classify")]
        kind: SweepKind,
        /// Product held fixed along the section: f0Q or f1Qp.
        #[arg(long)]
        axis: Axis,
        /// Value of the fixed product.
        #[arg(long)]
        value: f64,
        /// Add eigenvalue columns for the tracked branch.
        #[arg(long)]
        eigen: bool,
        /// Branch to track: auto, UnstableDominance, MutatorCoexistence or FullCoexistence.
        #[arg(long, default_value = "auto")]
        branch: String,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write gnuplot scripts next to the CSV files.
    #[arg(long = "emit-plots")]
    emit_plots: bool,
    /// Worker threads for sweeps.
    #[arg(long, env = "QSDYN_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    f1: Option<f64>,
    #[arg(long)]
    f2: Option<f64>,
    #[arg(long = "Q")]
    q: Option<f64>,
    #[arg(long = "Qp")]
    qp: Option<f64>,
    /// Integration horizon (simulate defaults to 100, sweeps to 1e5).
    #[arg(long)]
    tmax: Option<f64>,
    /// Grid step in product coordinates.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long = "f0Q_min")]
    f0q_min: Option<f64>,
    #[arg(long = "f0Q_max")]
    f0q_max: Option<f64>,
    #[arg(long = "f1Qp_min")]
    f1qp_min: Option<f64>,
    #[arg(long = "f1Qp_max")]
    f1qp_max: Option<f64>,
    #[arg(long = "abs_tol")]
    abs_tol: Option<f64>,
    #[arg(long = "rel_tol")]
    rel_tol: Option<f64>,
    #[arg(long = "h_init")]
    h_init: Option<f64>,
    #[arg(long = "h_max")]
    h_max: Option<f64>,
    #[arg(long = "drift_tol")]
    drift_tol: Option<f64>,
    #[arg(long = "classify_tol")]
    classify_tol: Option<f64>,
    #[arg(long = "transient_tol")]
    transient_tol: Option<f64>,
    /// Sampling interval of `orbit.csv`.
    #[arg(long)]
    interval: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long)]
    x2: Option<f64>,
    /// Subclone fitnesses, comma separated; switches `simulate` to the n-subclone model.
    #[arg(long)]
    f2s: Option<String>,
    /// Branching probabilities into the subclones, comma separated.
    #[arg(long)]
    branching: Option<String>,
    /// Mutation kernel rows `to` separated by `;`, entries by `,`.
    #[arg(long)]
    kernel: Option<String>,
    /// Initial subclone densities, comma separated.
    #[arg(long)]
    x2s: Option<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let numbers = [
            ("f0", self.f0),
            ("f1", self.f1),
            ("f2", self.f2),
            ("Q", self.q),
            ("Qp", self.qp),
            ("tmax", self.tmax),
            ("step", self.step),
            ("f0Q_min", self.f0q_min),
            ("f0Q_max", self.f0q_max),
            ("f1Qp_min", self.f1qp_min),
            ("f1Qp_max", self.f1qp_max),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("h_init", self.h_init),
            ("h_max", self.h_max),
            ("drift_tol", self.drift_tol),
            ("classify_tol", self.classify_tol),
            ("transient_tol", self.transient_tol),
            ("interval", self.interval),
            ("x0", self.x0),
            ("x1", self.x1),
            ("x2", self.x2),
        ];
        for (k, v) in numbers {
            if let Some(v) = v {
                s.set(k, &v.to_string())?;
            }
        }
        for (k, v) in [("f2s", &self.f2s), ("branching", &self.branching), ("kernel", &self.kernel), ("x2s", &self.x2s)] {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        if let Some(out) = &self.out {
            s.set("out", &out.to_string_lossy())?;
        }
        if self.emit_plots {
            s.set("emit_plots", "true")?;
        }
        if let Some(t) = self.threads {
            s.set("threads", &t.to_string())?;
        }
        Ok(s)
    }

    fn run_config(&self, default_tmax: f64) -> Result<RunConfig, CliError> {
        let cfg = RunConfig::from_settings(&self.settings()?, default_tmax)?;
        if let Some(n) = cfg.threads {
            // a second initialization in the same process is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(cfg)
    }
}

fn parse_branch(s: &str) -> Result<BranchChoice, CliError> {
    match s {
        "auto" => Ok(BranchChoice::Auto),
        "none" => Ok(BranchChoice::None),
        other => EquilibriumKind::ALL
            .iter()
            .find(|k| k.name() == other)
            .map(|k| BranchChoice::Fixed(*k))
            .ok_or_else(|| CliError::Config(format!("unknown branch `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let sweep_tmax = qsdyn::IntegratorConfig::default().t_max;
    match cli.command {
        Command::Simulate { common } => commands::simulate(&common.run_config(DEFAULT_SIMULATE_TMAX)?),
        Command::Equilibria { common, csv } => commands::equilibria(&common.run_config(DEFAULT_SIMULATE_TMAX)?, csv),
        Command::Sweep { common, kind } => commands::sweep(&common.run_config(sweep_tmax)?, kind),
        Command::Section { common, kind, axis, value, eigen, branch } => {
            let branch = parse_branch(&branch)?;
            commands::run_section(&common.run_config(sweep_tmax)?, kind, axis, value, branch, eigen)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qsdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
