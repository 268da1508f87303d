//! Command-line front end. Every command validates its whole configuration,
//! computes, then writes CSV files plus a `meta.toml` sidecar into the output
//! directory. The sidecar is itself a config: passing it back through
//! `--config` reruns the command with identical inputs.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};

use crate::dynamics::{
    evolve_effective, evolve_lab, evolve_rotating, AmplitudePair, IntegratorConfig,
};
use crate::effective::derive_effective;
use crate::error::Result;
use crate::experiments::{averaging_validity_report, run_lz_sweep, trapping_experiment};
use crate::io;
use crate::phase_space::{
    continue_in_gamma, contour_lines, energy_grid, find_fixed_points, separatrix_curve,
    ContinuationOptions, Couplings, FixedPointOptions, SeparatrixOptions,
};
use crate::quantum::quantum_spectrum_scan;

pub use config::RunConfig;

/// Version recorded in every sidecar.
pub const ARTIFACT_VERSION: &str = concat!(
    env!("CARGO_PKG_NAME"),
    " ",
    env!("CARGO_PKG_VERSION"),
    "+",
    env!("TWOMODE_GIT_REV")
);

pub const META_FILE: &str = "meta.toml";

#[derive(Debug, Parser)]
#[command(
    name = "twomode",
    version,
    about = "Driven two-mode condensate simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "twomode-out")]
    pub out: PathBuf,
    /// Ensemble seed, overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, overrides `run.threads`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mean-field fixed-point branches over a bias grid.
    Spectrum,
    /// Energy contours, fixed points and separatrices at one bias.
    Portrait,
    /// Single trajectory in the lab, rotating or averaged frame.
    Evolve,
    /// One adiabatic bias sweep and its transition probability.
    Lz,
    /// Perturbed sweep ensemble classified by final attractor.
    Trapping,
    /// Rotating vs averaged model error across drive frequencies.
    Validity,
    /// Exact N-boson spectrum over a bias grid.
    Quantum,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Portrait => "portrait",
            Command::Evolve => "evolve",
            Command::Lz => "lz",
            Command::Trapping => "trapping",
            Command::Validity => "validity",
            Command::Quantum => "quantum",
        }
    }
}

/// Files written by a command and a one-line summary for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the configuration: file first, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(prov) = &cfg.provenance {
        if prov.command != cli.command.name() {
            warn!(
                "config was recorded for `{}`, running `{}`",
                prov.command,
                cli.command.name()
            );
        }
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = Some(threads);
    }
    cfg.provenance = Some(config::Provenance {
        command: cli.command.name().to_owned(),
        version: ARTIFACT_VERSION.to_owned(),
    });
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    cfg.validate_for(cli.command.name())?;
    if let Some(n) = cfg.run.threads {
        // the global pool can only be set once per process
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            warn!("thread pool already initialized; --threads ignored");
        }
    }
    std::fs::create_dir_all(&cli.out)?;
    let mut outcome = run_command(cli.command, &cfg, &cli.out)?;
    let meta = cli.out.join(META_FILE);
    std::fs::write(&meta, cfg.to_toml()?)?;
    outcome.files.push(meta);
    Ok(outcome)
}

/// Runs one command against an already validated configuration.
pub fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.model.params()?;
    match command {
        Command::Spectrum => {
            let grid = cfg.grid.values()?;
            let cont = continue_in_gamma(&p, &grid, &ContinuationOptions::default())?;
            let path = out.join("spectrum.csv");
            io::write_spectrum(&path, &cont)?;
            let mut files = vec![path];
            if cfg.spectrum.include_quantum {
                let scan = quantum_spectrum_scan(&p, &grid, cfg.quantum.n_particles)?;
                let qpath = out.join("quantum_spectrum.csv");
                io::write_quantum(&qpath, &scan, cfg.quantum.n_particles)?;
                files.push(qpath);
            }
            let (lo, hi) = cont
                .counts
                .iter()
                .fold((usize::MAX, 0), |(lo, hi), &n| (lo.min(n), hi.max(n)));
            let bif: Vec<String> = cont
                .bifurcations()
                .iter()
                .map(|g| format!("{g:.4}"))
                .collect();
            Ok(Outcome {
                files,
                summary: format!(
                    "branches={} fixed_points_per_gamma={lo}..{hi} bifurcations=[{}]",
                    cont.branches.len(),
                    bif.join(",")
                ),
            })
        }
        Command::Quantum => {
            let grid = cfg.grid.values()?;
            let scan = quantum_spectrum_scan(&p, &grid, cfg.quantum.n_particles)?;
            let path = out.join("quantum_spectrum.csv");
            io::write_quantum(&path, &scan, cfg.quantum.n_particles)?;
            Ok(Outcome {
                files: vec![path],
                summary: format!(
                    "levels={} gamma_points={}",
                    cfg.quantum.n_particles + 1,
                    grid.len()
                ),
            })
        }
        Command::Portrait => portrait(cfg, &p, out),
        Command::Evolve => {
            let initial = AmplitudePair::from_phase_point(cfg.evolve.initial()?, 0.0);
            let t_final = cfg.evolve.t_final;
            let base = IntegratorConfig::recommended(&p, p.gamma, cfg.integrator.steps_per_natural);
            let icfg = cfg.integrator.apply(base, t_final);
            let traj = match cfg.evolve.frame {
                config::Frame::Lab => evolve_lab(&initial, &p, t_final, &icfg)?,
                config::Frame::Rotating => evolve_rotating(&initial, &p, t_final, &icfg)?,
                config::Frame::Effective => {
                    evolve_effective(&initial, &derive_effective(&p)?, p.delta0, t_final, &icfg)?
                }
            };
            let path = out.join("trajectory.csv");
            io::write_trajectory(&path, &traj)?;
            let last = traj.last().copied().unwrap_or(initial);
            Ok(Outcome {
                files: vec![path],
                summary: format!(
                    "samples={} pop_a={:.6} pop_b={:.6} max_norm_drift={:.3e}",
                    traj.len(),
                    last.pop_a(),
                    last.pop_b(),
                    traj.max_norm_drift()
                ),
            })
        }
        Command::Lz => {
            let proto = cfg.sweep.protocol(cfg.run.seed);
            let icfg = cfg.integrator.apply(
                proto.integrator(&p, cfg.integrator.max_samples),
                proto.duration(),
            );
            let result = run_lz_sweep(&proto, &p, &icfg)?;
            if result.pole_proximity {
                warn!("sweep trajectory came within 1e-6 of a pole");
            }
            let report = out.join("lz_report.csv");
            io::write_lz_report(&report, &proto, &result)?;
            let traj = out.join("trajectory.csv");
            io::write_trajectory(&traj, &result.trajectory)?;
            Ok(Outcome {
                files: vec![report, traj],
                summary: format!(
                    "transition_probability={:.6e} attractor={}",
                    result.transition_probability, result.attractor
                ),
            })
        }
        Command::Trapping => {
            let proto = cfg.trapping.protocol(cfg.run.seed);
            let icfg = cfg
                .integrator
                .apply(proto.integrator(&p, 1), proto.duration());
            let (hist, members) = trapping_experiment(
                &proto,
                &p,
                &icfg,
                cfg.trapping.ensemble_size,
                cfg.trapping.perturbation,
            )?;
            if hist.ambiguous > 0 {
                warn!(
                    "{} ensemble members could not be classified",
                    hist.ambiguous
                );
            }
            let hpath = out.join("trapping_histogram.csv");
            io::write_histogram(&hpath, &hist)?;
            let mpath = out.join("trapping_members.csv");
            io::write_trapping_members(&mpath, &members)?;
            Ok(Outcome {
                files: vec![hpath, mpath],
                summary: hist.to_string(),
            })
        }
        Command::Validity => {
            let rows = averaging_validity_report(
                &p,
                &cfg.validity.multipliers,
                &cfg.validity.scenario()?,
            )?;
            let path = out.join("validity.csv");
            io::write_validity(&path, &rows)?;
            let table: Vec<String> = rows
                .iter()
                .map(|r| format!("{}:{:.3e}", r.multiplier, r.max_error))
                .collect();
            Ok(Outcome {
                files: vec![path],
                summary: format!("max_error {}", table.join(" ")),
            })
        }
    }
}

fn portrait(cfg: &RunConfig, p: &crate::effective::ModelParams, out: &Path) -> Result<Outcome> {
    let cp = Couplings::from_model(p)?;
    let fps = find_fixed_points(&cp, &FixedPointOptions::default());
    let mut separatrices = Vec::new();
    if cfg.portrait.separatrices {
        for f in fps.iter().filter(|f| f.is_saddle()) {
            let curve = separatrix_curve(f, &cp, &SeparatrixOptions::default())?;
            if !curve.complete {
                warn!(
                    "separatrix through ({:.4}, {:.4}) is partial",
                    f.point.s, f.point.phi
                );
            }
            separatrices.push(curve);
        }
    }
    let samples = energy_grid(&cp, cfg.portrait.n_s, cfg.portrait.n_phi);
    let (e_min, e_max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, e)| {
            (lo.min(*e), hi.max(*e))
        });
    let n = cfg.portrait.levels;
    let levels: Vec<f64> = (1..=n)
        .map(|k| e_min + (e_max - e_min) * k as f64 / (n + 1) as f64)
        .collect();
    let contours = contour_lines(&cp, &levels, cfg.portrait.n_s, cfg.portrait.n_phi)?;
    info!(
        "portrait: {} contour polylines, {} separatrices",
        contours.len(),
        separatrices.len()
    );

    let fp_path = out.join("fixed_points.csv");
    io::write_fixed_points(&fp_path, &fps)?;
    let portrait_path = out.join("portrait.csv");
    io::write_portrait(&portrait_path, &contours, &separatrices)?;
    let sep_path = out.join("separatrix.csv");
    io::write_separatrices(&sep_path, &separatrices)?;
    let saddles = fps.iter().filter(|f| f.is_saddle()).count();
    Ok(Outcome {
        files: vec![portrait_path, fp_path, sep_path],
        summary: format!("fixed_points={} saddles={saddles}", fps.len()),
    })
}
