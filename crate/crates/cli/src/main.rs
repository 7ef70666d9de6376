//! `nhstirap`: run three-level and waveguide simulations from a TOML config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stirap_core::bpm::{CouplingCalibration, ExperimentSetup};
use stirap_core::sweep::{run_sweep, Mode, SweepSpec};
use stirap_core::{fidelity, propagate, AdiabaticFrame};

use config::RunConfig;
use manifest::Outputs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] stirap_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        use stirap_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::ParameterDomain(_) | E::Table(_) => 2,
                E::Overflow { .. } => 4,
                E::Csv(_) | E::Io(_) => 1,
                _ => 3,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nhstirap", version, about = "Non-Hermitian shortcut to STIRAP")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. `--set pulse.omega0=2.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(flatten)]
    mode: ModeFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModeFlags {
    /// Run without gain/loss.
    #[arg(long, global = true, conflicts_with = "nh")]
    hermitian: bool,
    /// Run with the cancelling gain/loss (default unless `gamma.enabled = false`).
    #[arg(long, global = true)]
    nh: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Propagate the three-level system and write `trajectory.csv`.
    Simulate,
    /// Tabulate the gain/loss rate over the window into `gamma.csv`.
    Gamma,
    /// Run the configured parameter grid into `sweep.csv`.
    Sweep,
    /// Calibrate and propagate the three-waveguide structure.
    Bpm,
    /// Fit the coupling law only, into `calibration.csv`.
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Gamma => "gamma",
            Command::Sweep => "sweep",
            Command::Bpm => "bpm",
            Command::Calibrate => "calibrate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} exit={code}: {msg}", e.kind());
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let nh = if cli.mode.hermitian {
        false
    } else {
        cli.mode.nh || cfg.gamma.enabled
    };
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut outputs = Outputs::new(&dir);
    let derived = match cli.command {
        Command::Simulate => simulate(&cfg, nh, &mut outputs)?,
        Command::Gamma => gamma(&cfg, &mut outputs)?,
        Command::Sweep => {
            let only = if cli.mode.hermitian {
                Some(Mode::Hermitian)
            } else if cli.mode.nh {
                Some(Mode::Nh)
            } else {
                None
            };
            sweep(&cfg, only, &mut outputs)?
        }
        Command::Bpm => bpm(&cfg, nh, &mut outputs)?,
        Command::Calibrate => calibrate(&cfg, &mut outputs)?,
    };
    manifest::write(&dir, cli.command.name(), nh, &cfg, derived, &outputs)
}

fn simulate(cfg: &RunConfig, nh: bool, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let pair = cfg.pair()?;
    let window = cfg.window()?;
    let gain = cfg.gain(&pair, nh)?;
    if let Some(g) = &gain {
        g.screen((0..=window.steps()).map(|k| window.time(k)))?;
    }
    let c0 = cfg
        .initial_state()?
        .resolve(pair.as_ref(), window.t_start)?;
    let traj = propagate(pair.as_ref(), gain.as_ref(), &c0, &window)?;
    out.write("trajectory.csv", |w| Ok(traj.write_csv(w)?))?;
    let p3 = fidelity(&traj);
    println!(
        "{} P3 = {p3:.6}  final norm = {:.6}  max norm = {:.6}",
        if nh { "nh" } else { "hermitian" },
        traj.final_norm(),
        traj.max_norm
    );
    Ok(json!({
        "mode": if nh { "nh" } else { "hermitian" },
        "window": window_json(&window),
        "gamma_constant": gain.as_ref().and_then(|g| g.constant_value()),
        "P3_final": p3,
        "final_norm": traj.final_norm(),
        "max_norm": traj.max_norm,
        "peak_P2": traj.peak_p2,
    }))
}

fn window_json(w: &stirap_core::PropagationConfig) -> serde_json::Value {
    json!({ "t_start": w.t_start, "t_end": w.t_end, "dt": w.dt, "record_stride": w.record_stride })
}

fn gamma(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let pair = cfg.pair()?;
    let window = cfg.window()?;
    let gain = cfg.gain(&pair, true)?.expect("gain requested");
    let mut rows = Vec::new();
    for k in (0..=window.steps()).step_by(window.record_stride) {
        let t = window.time(k);
        let g = gain.gamma(t)?;
        let frame = AdiabaticFrame::at(pair.as_ref(), t)?;
        rows.push([t, g, frame.theta, frame.theta_dot]);
    }
    out.write("gamma.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["t", "gamma", "theta", "theta_dot"])
            .map_err(stirap_core::Error::from)?;
        for r in &rows {
            w.serialize(r).map_err(stirap_core::Error::from)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let constant = gain.constant_value();
    match constant {
        Some(c) => println!("gamma is constant: {c}"),
        None => println!("gamma tabulated at {} points", rows.len()),
    }
    Ok(json!({
        "window": window_json(&window),
        "gamma_constant": constant,
        "gamma_max": gain.gamma_max(),
        "samples": rows.len(),
    }))
}

fn sweep(
    cfg: &RunConfig,
    only: Option<Mode>,
    out: &mut Outputs,
) -> Result<serde_json::Value, CliError> {
    let modes = match only {
        Some(m) => vec![m],
        None => cfg.sweep.modes.clone(),
    };
    let spec = SweepSpec {
        axes: cfg.sweep.axes.clone(),
        base: cfg.pulse_spec()?,
        window: cfg.window()?,
        modes,
        initial: cfg.initial_state()?,
        workers: cfg.sweep.workers,
    };
    let result = run_sweep(&spec)?;
    out.write("sweep.csv", |w| Ok(result.write_csv(w)?))?;
    let failed = result.records.iter().filter(|r| r.outcome.is_err()).count();
    let regressions = result.nh_regressions();
    println!(
        "{} runs, {failed} failed, {} points where nh is worse than hermitian",
        result.records.len(),
        regressions.len()
    );
    Ok(json!({
        "window": window_json(&spec.window),
        "runs": result.records.len(),
        "failed": failed,
        "nh_regressions": regressions,
    }))
}

fn bpm(cfg: &RunConfig, nh: bool, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let exp = cfg.experiment()?;
    let setup = exp.prepare()?;
    let tag = if nh { "nh" } else { "hermitian" };
    let run = exp.run_with_map(&setup, nh, cfg.bpm.field_map_stride)?;
    out.write(&format!("trace_{tag}.csv"), |w| Ok(run.write_trace_csv(w)?))?;
    if let Some(map) = &run.map {
        out.write(&format!("fieldmap_{tag}.bin"), |w| Ok(map.write_binary(w)?))?;
    }
    out.write("calibration.csv", |w| write_calibration(&setup.coupling, w))?;
    let traj = exp.coupled_mode(&setup, nh)?;
    let deviation = exp.max_deviation(&run, &traj);
    let last = run.final_sample();
    println!(
        "{tag} P_L = {:.4}  P_C = {:.4}  P_R = {:.4}  total = {:.4}  max |P_R - P3| = {deviation:.4}",
        last.channels[0], last.channels[1], last.channels[2], last.total
    );
    Ok(json!({
        "mode": tag,
        "calibration": setup_json(&setup),
        "final": { "P_L": last.channels[0], "P_C": last.channels[1], "P_R": last.channels[2], "P_total": last.total },
        "coupled_mode_P3": fidelity(&traj),
        "max_deviation": deviation,
    }))
}

fn setup_json(setup: &ExperimentSetup) -> serde_json::Value {
    let law = setup.coupling.fit.law;
    json!({
        "k_per_um": law.k,
        "omega_ref_per_cm": law.omega_ref * 1e4,
        "d_ref_um": law.d_ref,
        "r_squared": setup.coupling.fit.r_squared,
        "omega0_per_cm": setup.omega0 * 1e4,
        "d_min_um": setup.d_min,
        "gamma_per_cm": setup.gamma * 1e4,
        "dnI_frac": setup.dn_i,
        "loss_rate_per_cm": setup.loss.map(|l| l.measured_rate * 1e4),
        "launch_overlap": setup.launch.overlap,
    })
}

fn write_calibration(
    cal: &CouplingCalibration,
    w: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["d_um", "omega_per_cm"])
        .map_err(stirap_core::Error::from)?;
    for (d, omega) in &cal.points {
        w.serialize((d, omega * 1e4))
            .map_err(stirap_core::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn calibrate(cfg: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let exp = cfg.experiment()?;
    let coupling = exp.calibrate()?;
    let law = coupling.fit.law;
    out.write("calibration.csv", |w| write_calibration(&coupling, w))?;
    println!(
        "Omega(d) = {:.4}/cm * exp(-{:.4}/um * (d - {} um))  R^2 = {:.5}",
        law.omega_ref * 1e4,
        law.k,
        law.d_ref,
        coupling.fit.r_squared
    );
    Ok(json!({
        "k_per_um": law.k,
        "omega_ref_per_cm": law.omega_ref * 1e4,
        "d_ref_um": law.d_ref,
        "r_squared": coupling.fit.r_squared,
    }))
}
