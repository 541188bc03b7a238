//! `sphere-sim`: run, sweep and inspect rolling-sphere scenarios.
//!
//! ```text
//! sphere-sim run --preset fig2 --out out/fig2
//! sphere-sim run --config scenario.toml --format json --t-final 20
//! sphere-sim sweep --preset fig2 --axis kp=1,5,10 --axis kv=0.5,1,2
//! sphere-sim presets [--dump fig3]
//! sphere-sim validate --config scenario.toml
//! ```
//!
//! Exit status is 0 on success, 2 for usage and configuration errors and 3
//! when a simulation diverges. A run that completes without converging still
//! exits 0; the outcome is in `summary.json`.

pub mod config;
pub mod error;
pub mod export;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphere_control::analysis::{check_convergence_with, ConvergenceCriteria};
use sphere_control::par::Execution;
use sphere_control::sim::{simulate_open_loop, ConstantTorque, PRESET_NAMES};
use sphere_control::sweep::{sweep_with, Grid, Param};
use sphere_control::{simulate, Mode, Scenario};

use crate::config::{ConfigFile, Loaded};
pub use crate::error::{CliError, EXIT_DIVERGED, EXIT_OK, EXIT_USAGE};
use crate::export::{sweep_csv, to_json, trajectory_csv, trajectory_json, RunSummary};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "SPHERE_SIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "sphere-sim", version, about = "Rolling-sphere controller simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write trajectory, report.json and summary.json.
    Run(RunArgs),
    /// Simulate every point of a parameter grid and write a summary table.
    Sweep(SweepArgs),
    /// List the built-in presets, or print one as a config file.
    Presets(PresetsArgs),
    /// Check a config file without simulating.
    Validate(SourceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in scenario.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    pub preset: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Override the integration step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Override the horizon (s).
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Grid axis `name=v1,v2,...` with name in kp, kv, dt, x, y, tilt. Repeatable;
    /// the first axis varies slowest.
    #[arg(long = "axis", required = true)]
    pub axes: Vec<String>,
    /// Run grid points one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    /// Print this preset as a TOML config.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    pub dump: Option<String>,
}

pub fn resolve(source: &SourceArgs) -> Result<(Loaded, String), CliError> {
    match (&source.preset, &source.config) {
        (Some(name), None) => {
            let scenario =
                Scenario::preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?;
            Ok((
                Loaded {
                    scenario,
                    torque: Default::default(),
                },
                format!("preset:{name}"),
            ))
        }
        (None, Some(path)) => Ok((config::load(path)?, path.display().to_string())),
        _ => Err(CliError::Usage("give exactly one of --preset or --config".into())),
    }
}

fn apply_overrides(sc: &mut Scenario, o: &Overrides) -> Result<(), CliError> {
    if let Some(dt) = o.dt {
        sc.config.dt = dt;
    }
    if let Some(t) = o.t_final {
        sc.config.t_final = t;
    }
    sc.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Output { path, source })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_owned(),
        source,
    })
}

pub fn run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let (mut loaded, source) = resolve(&args.source)?;
    apply_overrides(&mut loaded.scenario, &args.overrides)?;
    let sc = &loaded.scenario;
    let traj = match sc.config.mode {
        Mode::ClosedLoop => simulate(sc)?,
        Mode::OpenLoop => simulate_open_loop(sc, &ConstantTorque(loaded.torque))?,
    };
    let report = check_convergence_with(&traj, &ConvergenceCriteria::default())?;

    let out = &args.overrides.out;
    let format = args.overrides.format;
    let trajectory_file = format!("trajectory.{}", format.ext());
    let files = vec![trajectory_file.clone(), "report.json".into(), "summary.json".into()];
    let summary = RunSummary::new(sc, &source, &traj, &report, files);

    create_dir(out)?;
    let body = match format {
        Format::Csv => trajectory_csv(&traj),
        Format::Json => trajectory_json(&traj),
    };
    write(out, &trajectory_file, &body)?;
    write(out, "report.json", &to_json(&report))?;
    write(out, "summary.json", &to_json(&summary))?;
    Ok(summary)
}

pub fn parse_axis(spec: &str) -> Result<(Param, Vec<f64>), CliError> {
    let usage = |msg: &str| CliError::Usage(format!("bad --axis `{spec}`: {msg}"));
    let (name, values) = spec.split_once('=').ok_or_else(|| usage("expected name=v1,v2,..."))?;
    let param = Param::from_name(name.trim()).ok_or_else(|| usage("name must be one of kp, kv, dt, x, y, tilt"))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage("values must be numbers")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage("values must be finite"));
    }
    Ok((param, values))
}

pub fn sweep(args: &SweepArgs) -> Result<usize, CliError> {
    let (mut loaded, _) = resolve(&args.source)?;
    apply_overrides(&mut loaded.scenario, &args.overrides)?;
    if loaded.scenario.config.mode != Mode::ClosedLoop {
        return Err(CliError::Usage("sweeps need a closed-loop scenario".into()));
    }
    let mut grid = Grid::new();
    for spec in &args.axes {
        let (param, values) = parse_axis(spec)?;
        if grid.axes.iter().any(|a| a.param == param) {
            return Err(CliError::Usage(format!("axis `{}` given twice", param.name())));
        }
        grid = grid.axis(param, values);
    }
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let rows = sweep_with(&loaded.scenario, &grid, &ConvergenceCriteria::default(), execution)?;

    let out = &args.overrides.out;
    create_dir(out)?;
    let body = match args.overrides.format {
        Format::Csv => {
            let axes: Vec<Param> = grid.axes.iter().map(|a| a.param).collect();
            sweep_csv(&axes, &rows)
        }
        Format::Json => to_json(&rows),
    };
    write(out, &format!("sweep.{}", args.overrides.format.ext()), &body)?;
    Ok(rows.len())
}

pub fn presets(args: &PresetsArgs) -> String {
    match &args.dump {
        Some(name) => ConfigFile::from_scenario(&Scenario::preset(name).expect("validated by clap")).to_toml(),
        None => PRESET_NAMES
            .iter()
            .map(|n| {
                let sc = Scenario::preset(n).expect("listed preset exists");
                let i = &sc.initial;
                format!("{n}\tx={} y={} R(0) rows={:?}\n", i.x, i.y, i.attitude.to_rows())
            })
            .collect(),
    }
}

pub fn validate(args: &SourceArgs) -> Result<String, CliError> {
    let (loaded, source) = resolve(args)?;
    let sc = &loaded.scenario;
    Ok(format!(
        "ok: {source} ({}; dt = {}, t_final = {}, {} steps)\n",
        sc.name,
        sc.config.dt,
        sc.config.t_final,
        sc.config.steps()
    ))
}

/// Runs the parsed command, printing to stdout/stderr, and returns the exit status.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => run(&args).map(|s| {
            let status = if s.converged { "converged" } else { "not converged" };
            println!(
                "{}: {status}, spin sign {:+}, final |(x,y)| = {:.3e}, |e_w| = {:.3e}; wrote {}",
                s.scenario,
                s.spin_sign,
                s.final_position_norm,
                s.final_velocity_error_norm,
                args.overrides.out.display()
            );
        }),
        Command::Sweep(args) => sweep(&args).map(|n| println!("{n} grid points; wrote {}", args.overrides.out.display())),
        Command::Presets(args) => {
            print!("{}", presets(&args));
            Ok(())
        }
        Command::Validate(args) => validate(&args).map(|msg| print!("{msg}")),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
