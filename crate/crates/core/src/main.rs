use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use imfsi::coupling::{Coupling, PenaltyConfig};
use imfsi::oracle::{j2_uniaxial, sod, GasState, RiemannSolution};
use imfsi::run::{load_config, progress_printer, run};
use imfsi::scenario::{Level, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(name = "imfsi", version, about = "Immersed blast fluid-structure interaction in 2D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingArg {
    Strong,
    Weak,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset scenario, or a configuration file.
    Run {
        /// chamber, ductile or brittle
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value = "coarse")]
        level: String,
        #[arg(long, value_enum)]
        coupling: Option<CouplingArg>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        damage_penalty: Option<bool>,
        /// Configuration file used instead of a preset.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        #[arg(long)]
        end_time: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print progress every this many steps (0 = quiet).
        #[arg(long, default_value_t = 100)]
        report_every: usize,
    },
    /// Check a configuration file and print it back.
    Validate { config: PathBuf },
    /// Print a reference solution.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact Sod shock-tube density, velocity, pressure on [0, 1] at t = 0.2.
    Sod {
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Exact Riemann problem; states given as rho,u,p.
    Riemann {
        #[arg(long, value_delimiter = ',', required = true)]
        left: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        right: Vec<f64>,
        #[arg(long, default_value_t = 1.4)]
        gamma: f64,
        #[arg(long, default_value_t = 0.2)]
        time: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Uniaxial J2 stress-strain curve with linear hardening.
    J2 {
        #[arg(long, default_value_t = 200e9)]
        youngs: f64,
        #[arg(long, default_value_t = 0.4e9)]
        yield_stress: f64,
        #[arg(long, default_value_t = 0.1e9)]
        hardening: f64,
        #[arg(long, default_value_t = 0.02)]
        max_strain: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
}

fn print_riemann(solution: &RiemannSolution, time: f64, points: usize) {
    println!("x,rho,u,p");
    let n = points.max(2);
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let s = solution.sample((x - 0.5) / time);
        println!("{x},{},{},{}", s.rho, s.u, s.p);
    }
}

fn execute(cli: Cli) -> imfsi::Result<()> {
    match cli.command {
        Command::Run { scenario, level, coupling, beta, damage_penalty, config, end_time, out, report_every } => {
            let mut cfg = match (config, scenario) {
                (Some(path), _) => load_config(&path)?,
                (None, Some(name)) => ScenarioConfig::preset(name.parse::<ScenarioKind>()?, level.parse::<Level>()?)?,
                (None, None) => return Err(imfsi::Error::Config("give --scenario or --config".into())),
            };
            let mut penalty = match cfg.coupling {
                Coupling::Weak(p) => p,
                _ => PenaltyConfig::default(),
            };
            penalty.beta = beta.unwrap_or(penalty.beta);
            penalty.damage_scaling = damage_penalty.unwrap_or(penalty.damage_scaling);
            match coupling {
                Some(CouplingArg::Strong) => cfg.coupling = Coupling::Strong,
                Some(CouplingArg::Weak) => cfg.coupling = Coupling::Weak(penalty),
                None if matches!(cfg.coupling, Coupling::Weak(_)) => cfg.coupling = Coupling::Weak(penalty),
                None => {}
            }
            if let Some(t) = end_time {
                cfg.end_time = t;
            }
            let mut printer = progress_printer(std::io::stderr(), if report_every == 0 { usize::MAX } else { report_every });
            let summary = run(&cfg, Some(&out), &mut printer, &mut |_| Ok(()))?;
            println!(
                "finished {} steps, t = {:e} s, {} snapshot files in {}",
                summary.steps,
                summary.time,
                summary.snapshots.len(),
                out.display()
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}", cfg.to_json()?);
            Ok(())
        }
        Command::Oracle { which } => {
            match which {
                OracleCommand::Sod { points } => print_riemann(&sod(), 0.2, points),
                OracleCommand::Riemann { left, right, gamma, time, points } => {
                    if left.len() != 3 || right.len() != 3 {
                        return Err(imfsi::Error::Config("states are given as rho,u,p".into()));
                    }
                    let state = |v: &[f64]| GasState { rho: v[0], u: v[1], p: v[2] };
                    print_riemann(&RiemannSolution::solve(state(&left), state(&right), gamma), time, points);
                }
                OracleCommand::J2 { youngs, yield_stress, hardening, max_strain, points } => {
                    println!("strain,stress,eps_p");
                    let n = points.max(2);
                    for i in 0..n {
                        let e = max_strain * i as f64 / (n - 1) as f64;
                        let (s, ep) = j2_uniaxial(youngs, yield_stress, hardening, e);
                        println!("{e},{s},{ep}");
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
