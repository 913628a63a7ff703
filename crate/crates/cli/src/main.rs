//! `dforge`: derive effective Hamiltonians from a scenario file, simulate the
//! full and effective dynamics, and sweep parameters.
//!
//! Exit codes: 0 success, 1 golden mismatch, 2 usage or configuration error,
//! 3 numerical failure.

mod output;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dforge::dynamics::{
    compare_with_effective, dispersive_convergence_scan, loglog_slope, observables, propagate_effective,
    propagate_full, ScanSettings, Trajectory,
};
use dforge::fock::{build_state, realize};
use dforge::{decompose, effective_hamiltonian, parse_operator_expr, parse_scenario, Error, Level, Scenario};

use output::{fmt_g, scenario_hash, write_manifest, IntegratorSettings, RunManifest};

/// Largest norm drift tolerated before a trajectory counts as failed.
const MAX_NORM_DRIFT: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "dforge", version, about = "Effective Hamiltonians for driven cavity QED")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective Hamiltonian and its decomposition.
    Derive {
        config: PathBuf,
        /// Eliminate this (virtually populated) level before printing.
        #[arg(long)]
        project_level: Option<String>,
        /// Compare against a stored expression; exit 1 on mismatch.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Propagate the initial state and write observables as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst full-vs-effective infidelity for each value of one parameter.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        vary: String,
        /// Horizon in units of δ/λ² when the detuning is varied.
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Full,
    Effective,
    Both,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Effective => "effective",
            Mode::Both => "both",
        }
    }
}

enum Failure {
    Usage(String),
    Golden(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Golden(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Golden(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::NotHermitian(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<Scenario> {
    parse_scenario(&read(path)?).map_err(|e| Failure::from(e).with_context(path))
}

impl Failure {
    fn with_context(self, path: &Path) -> Self {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

/// Points at byte `position` of `text` with a caret.
fn caret(text: &str, position: usize) -> String {
    format!("  {text}\n  {}^", " ".repeat(text[..position.min(text.len())].chars().count()))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn finish(out: Option<&Path>, scenario: &Scenario, command: &str, settings: String, started: Instant) -> CliResult {
    let Some(path) = out else { return Ok(()) };
    let manifest = RunManifest {
        scenario_hash: scenario_hash(&scenario.canonical_text(), &format!("{command} {settings}")),
        command: command.into(),
        settings,
        integrator: IntegratorSettings::new(scenario.step),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(path, &manifest).map_err(|e| Failure::Usage(format!("cannot write manifest: {e}")))
}

fn cmd_derive(config: &Path, project_level: Option<&str>, golden: Option<&Path>) -> CliResult {
    let s = load(config)?;
    let mut h = effective_hamiltonian(&s.channels);
    let mut text = String::new();
    if let Some(label) = project_level {
        let level = Level::new(label);
        if !s.levels.contains(&level) {
            return Err(Error::UnknownLevel(label.into()).into());
        }
        h = h.project_out_level(&level)?;
        let _ = writeln!(text, "# level {label} projected out");
    }
    let _ = writeln!(text, "H_eff = {h}");
    for (name, part) in decompose(&h, &s.ground, &s.excited).parts() {
        let _ = writeln!(text, "{name}: {part}");
    }
    emit(None, &text)?;

    if let Some(path) = golden {
        let raw = read(path)?;
        let body: Vec<&str> = raw.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
        let body = body.join(" ");
        let expected = parse_operator_expr(body.trim(), &s.levels).map_err(|e| {
            let detail = match &e {
                Error::Parse { position, .. } | Error::IllegalCharacter(position) => {
                    format!("\n{}", caret(body.trim(), *position))
                }
                _ => String::new(),
            };
            Failure::Usage(format!("{}: {e}{detail}", path.display()))
        })?;
        if expected != h {
            return Err(Failure::Golden(format!(
                "golden mismatch against {}\n  derived - golden = {}",
                path.display(),
                &h - &expected
            )));
        }
        eprintln!("golden match: {}", path.display());
    }
    Ok(())
}

fn check_drift(traj: &Trajectory) -> CliResult {
    let drift = traj.max_norm_drift();
    if drift > MAX_NORM_DRIFT {
        return Err(Failure::Numerical(format!("norm drift {drift:e} exceeds {MAX_NORM_DRIFT:e}")));
    }
    Ok(())
}

fn cmd_simulate(config: &Path, mode: Mode, out: Option<&Path>) -> CliResult {
    let started = Instant::now();
    let s = load(config)?;
    let psi0 = build_state(&s.initial, &s.space)?;
    let full = match mode {
        Mode::Effective => None,
        _ => Some(propagate_full(&s.channels, &s.params, &s.space, &psi0, &s.grid, s.step)?),
    };
    let effective = match mode {
        Mode::Full => None,
        _ => {
            let h = realize(&effective_hamiltonian(&s.channels), &s.space, &s.params)?;
            Some(propagate_effective(&h, &psi0, &s.grid)?)
        }
    };
    for traj in full.iter().chain(&effective) {
        check_drift(traj)?;
    }
    let obs = match (&full, &effective) {
        (Some(f), Some(e)) => observables(f, Some(e), &s.space)?,
        (Some(t), None) | (None, Some(t)) => observables(t, None, &s.space)?,
        (None, None) => unreachable!("every mode runs at least one propagator"),
    };

    let mut csv = String::from("t");
    for level in &s.levels {
        let _ = write!(csv, ",P_{level}");
    }
    csv.push_str(",n_mean,fidelity\n");
    for (k, t) in obs.times.iter().enumerate() {
        csv.push_str(&fmt_g(*t));
        for p in &obs.populations[k] {
            let _ = write!(csv, ",{}", fmt_g(*p));
        }
        let _ = write!(csv, ",{},", fmt_g(obs.n_mean[k]));
        if let Some(f) = &obs.fidelity {
            csv.push_str(&fmt_g(f[k]));
        }
        csv.push('\n');
    }
    emit(out, &csv)?;
    finish(out, &s, "simulate", format!("mode={}", mode.name()), started)
}

fn parse_vary(spec: &str) -> CliResult<(String, Vec<f64>)> {
    let bad = || Failure::Usage(format!("--vary expects `key=v1,v2,...`, got `{spec}`"));
    let (key, values) = spec.split_once('=').ok_or_else(bad)?;
    let values =
        values.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<Vec<f64>>>()?;
    Ok((key.trim().to_string(), values))
}

fn cmd_sweep(config: &Path, vary: &str, horizon: f64, out: Option<&Path>) -> CliResult {
    let started = Instant::now();
    let s = load(config)?;
    let (key, values) = parse_vary(vary)?;
    if !s.params.contains(&key) {
        return Err(Failure::Usage(format!("cannot vary `{key}`: not a parameter of {}", config.display())));
    }
    let psi0 = build_state(&s.initial, &s.space)?;
    let mut comments = Vec::new();
    let (rows, slope): (Vec<(f64, f64)>, Option<f64>) = if key == s.channels.delta() {
        let settings = ScanSettings { horizon, samples: s.grid.samples(), step: s.step };
        let report = dispersive_convergence_scan(&s.channels, &s.params, &s.space, &psi0, &values, &settings)?;
        for r in report.rows.iter().filter(|r| r.warning) {
            comments.push(format!(
                "# warning: {key}={} has ratio {} to the coupling, excluded from the slope",
                fmt_g(r.delta),
                fmt_g(r.ratio)
            ));
        }
        (report.rows.iter().map(|r| (r.delta, r.max_infidelity)).collect(), report.slope)
    } else {
        let h = effective_hamiltonian(&s.channels);
        let infidelities = values
            .par_iter()
            .map(|&v| {
                let p = s.params.clone().with(key.as_str(), v);
                compare_with_effective(&s.channels, &h, &p, &s.space, &psi0, &s.grid, s.step)
            })
            .collect::<dforge::Result<Vec<f64>>>()?;
        let rows: Vec<(f64, f64)> = values.iter().copied().zip(infidelities).collect();
        let positive: Vec<(f64, f64)> = rows.iter().copied().filter(|&(v, i)| v > 0.0 && i > 0.0).collect();
        (rows, loglog_slope(&positive))
    };

    let mut csv = format!("{key},max_infidelity\n");
    for (v, inf) in &rows {
        let _ = writeln!(csv, "{},{}", fmt_g(*v), fmt_g(*inf));
    }
    for c in comments {
        let _ = writeln!(csv, "{c}");
    }
    if let (true, Some(slope)) = (rows.len() >= 2, slope) {
        let _ = writeln!(csv, "# slope={}", fmt_g(slope));
    }
    emit(out, &csv)?;
    finish(out, &s, "sweep", format!("vary={vary} horizon={}", fmt_g(horizon)), started)
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var("DFORGE_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("DFORGE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the worker pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Derive { config, project_level, golden } => {
            cmd_derive(config, project_level.as_deref(), golden.as_deref())
        }
        Command::Simulate { config, mode, out } => cmd_simulate(config, *mode, out.as_deref()),
        Command::Sweep { config, vary, horizon, out } => cmd_sweep(config, vary, *horizon, out.as_deref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
