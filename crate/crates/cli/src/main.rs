//! `pcascape` command line.
//!
//! Exit codes: 0 on success, 1 on a failed check or runtime error, 2 on a
//! bad argument or configuration.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcascape::io::{Command, ExperimentConfig};
use pcascape::Error;

#[derive(Parser)]
#[command(name = "pcascape", version, about = "Metastability analysis for a parallel-update spin automaton")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the energy landscape: traps, stability levels, metastable set.
    Landscape(Common),
    /// Build the reference paths and check their ceilings.
    Paths(Common),
    /// Exact chain quantities over a ladder of beta values.
    Exact(Common),
    /// Monte Carlo hitting times, visit order and recurrence.
    Mc(Common),
    /// Landscape, paths and exact quantities in one summary.
    Report(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Torus size, e.g. 6x2.
    #[arg(long)]
    geometry: Option<String>,
    /// External field, 0 < h < 1.
    #[arg(long)]
    h: Option<f64>,
    /// Inverse temperature; repeat or use a comma list.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Master seed. A fresh one is drawn and echoed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Step cap per Monte Carlo trial (default 100 exp(beta (Gamma + 1))).
    #[arg(long)]
    step_cap: Option<u64>,
    /// Comma list of path cases, or "all".
    #[arg(long)]
    cases: Option<String>,
    /// Mixing or recurrence margin; repeat or use a comma list.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Allow runs that need large memory or long wall time.
    #[arg(long)]
    expensive: bool,
    /// Print a frame-by-frame storyboard of each path.
    #[arg(long)]
    storyboard: bool,
}

pub enum Failure {
    Usage(String),
    Check(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Param(_) | Error::Geometry { .. } | Error::TooLarge { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn resolve(command: Command, a: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let cfg = ExperimentConfig::parse(&text)?;
            if cfg.command != command {
                return Err(Failure::Usage(format!(
                    "config is for `{}`, not `{}`",
                    cfg.command, command
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(command),
    };
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    if let Some(g) = &a.geometry {
        cfg.set("geometry", g)?;
    }
    if let Some(h) = a.h {
        cfg.h = h;
    }
    if !a.beta.is_empty() {
        cfg.set("beta", &join(&a.beta))?;
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(c) = a.step_cap {
        cfg.step_cap = Some(c);
    }
    if let Some(c) = &a.cases {
        cfg.set("cases", c)?;
    }
    if !a.epsilon.is_empty() {
        cfg.set("epsilon", &join(&a.epsilon))?;
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    cfg.expensive |= a.expensive;
    cfg.storyboard |= a.storyboard;
    if cfg.seed.is_none() {
        let s: u64 = rand::random();
        eprintln!("seed = {s}");
        cfg.seed = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (command, args) = match &cli.cmd {
        Cmd::Landscape(a) => (Command::Landscape, a),
        Cmd::Paths(a) => (Command::Paths, a),
        Cmd::Exact(a) => (Command::Exact, a),
        Cmd::Mc(a) => (Command::Mc, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    let cfg = resolve(command, args)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("manifest.txt"), cfg.to_manifest())?;
    match command {
        Command::Landscape => commands::landscape(&cfg),
        Command::Paths => commands::paths(&cfg),
        Command::Exact => commands::exact(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
