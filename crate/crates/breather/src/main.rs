use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use breather::cli;
use breather::config::RunConfig;
use breather::core::breather::SolverKind;

#[derive(Parser)]
#[command(name = "breather", version, about = "Polychromatic surface-plasmon solutions at a dispersive interface")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Untruncated roots, truncated eigenvalues, winding counts and δ₀(T).
    Spectrum(Common),
    /// Eigenvalue and eigenfunction at the configured truncation.
    Eigen(Common),
    /// Builds the coefficient table and its diagnostics.
    Breather(Common),
    /// Numerical assumption checks; nonzero exit on failure.
    Check {
        #[command(flatten)]
        common: Common,
        /// Append the Drude truncation counts.
        #[arg(long)]
        drude_demo: bool,
    },
    /// Grid refinement of the partial sum and eigenvalue error against T.
    Converge(Common),
    /// Winding counts of the Drude dispersion function over a truncation schedule.
    DrudeDemo(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Fd,
    Analytic,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "configs/example_paper.json")]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, env = "BREATHER_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    seed_eps: Option<f64>,
    #[arg(long)]
    nu_max: Option<u32>,
    #[arg(long)]
    grid_d: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(v) = self.seed_eps {
            cfg.eps = v;
        }
        if let Some(v) = self.nu_max {
            cfg.nu_max = v;
        }
        if let Some(v) = self.grid_d {
            cfg.grid.d = v;
        }
        if let Some(v) = self.grid_n {
            cfg.grid.n = v;
        }
        if let Some(s) = self.solver {
            cfg.solver = match s {
                Solver::Fd => SolverKind::Fd,
                Solver::Analytic => SolverKind::Analytic,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> usize {
        self.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

fn run() -> Result<bool> {
    let args = Cli::parse();
    let (summary, ok) = match &args.verb {
        Verb::Spectrum(c) => (cli::spectrum(&c.load()?, &c.out)?, true),
        Verb::Eigen(c) => (cli::eigen(&c.load()?, &c.out)?, true),
        Verb::Breather(c) => (cli::breather(&c.load()?, &c.out, c.threads())?, true),
        Verb::Check { common, drude_demo } => cli::check(&common.load()?, &common.out, *drude_demo)?,
        Verb::Converge(c) => (cli::converge(&c.load()?, &c.out)?, true),
        Verb::DrudeDemo(c) => (cli::drude_demo(&c.load()?, &c.out)?, true),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
