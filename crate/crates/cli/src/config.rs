//! Run configuration: a TOML file with one table per section, overridden by
//! `--set section.key=value` flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stirap_core::bpm::{
    ChannelProfile, Grid, GuideExperiment, LaunchShape, LaunchState, OpticalParams,
};
use stirap_core::pulses::{TabulatedPair, DEFAULT_GAMMA_MAX};
use stirap_core::sweep::{Axis, Family, Mode, PulseSpec};
use stirap_core::{GainProfile, InitialState, PropagationConfig, SharedPair};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pulse: PulseSection,
    pub propagation: PropagationSection,
    pub gamma: GammaSection,
    pub sweep: SweepSection,
    pub bpm: BpmSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseFamily {
    Gaussian,
    Sech,
    Sin2,
    Table,
}

/// Times in units of `T`, rates in `1/T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PulseSection {
    pub family: PulseFamily,
    pub omega0: f64,
    pub T: f64,
    pub tau: f64,
    pub pump_table: Option<PathBuf>,
    pub stokes_table: Option<PathBuf>,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection {
            family: PulseFamily::Gaussian,
            omega0: 1.3,
            T: 1.0,
            tau: 1.0,
            pump_table: None,
            stokes_table: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    /// Defaults to `−5T`.
    pub t_start: Option<f64>,
    /// Defaults to `+5T`.
    pub t_end: Option<f64>,
    /// Defaults to `T/2000`.
    pub dt: Option<f64>,
    pub record_stride: usize,
    /// `dark`, `1`, `2` or `3`.
    pub initial_state: String,
}

impl Default for PropagationSection {
    fn default() -> Self {
        PropagationSection {
            t_start: None,
            t_end: None,
            dt: None,
            record_stride: 1,
            initial_state: "dark".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSection {
    pub enabled: bool,
    /// Constant rate used instead of the synthesized profile.
    #[serde(rename = "override")]
    pub override_value: Option<f64>,
    /// Screening bound on `|γ|`; defaults to `1e6/T`.
    pub gamma_max: Option<f64>,
}

impl Default for GammaSection {
    fn default() -> Self {
        GammaSection {
            enabled: true,
            override_value: None,
            gamma_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<Axis>,
    pub modes: Vec<Mode>,
    /// 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axes: Vec::new(),
            modes: vec![Mode::Hermitian, Mode::Nh],
            workers: 0,
        }
    }
}

/// Physical units as named in each key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct BpmSection {
    pub lambda_nm: f64,
    pub n_s: f64,
    pub dn0: f64,
    pub w1_um: f64,
    pub Dx_um: f64,
    pub dnI_frac: f64,
    pub calibrate_dnI: bool,
    pub d0_um: f64,
    pub tau_mm: f64,
    pub T_mm: f64,
    pub L_mm: f64,
    /// Peak coupling times `T`; unset places the closest approach at `d0_um`.
    pub omega0_T: Option<f64>,
    pub separations_um: Vec<f64>,
    pub calibration_length_mm: f64,
    pub decay_length_mm: f64,
    pub x_half_width_um: f64,
    pub dx_um: f64,
    pub dz_um: f64,
    pub record_stride: usize,
    pub launch: LaunchState,
    pub launch_shape: LaunchShape,
    /// Write `|ψ|²` every this many steps.
    pub field_map_stride: Option<usize>,
}

impl Default for BpmSection {
    fn default() -> Self {
        let e = GuideExperiment::default();
        BpmSection {
            lambda_nm: e.optics.lambda * 1e3,
            n_s: e.optics.n_s,
            dn0: e.channel.dn0,
            w1_um: e.channel.w1,
            Dx_um: e.channel.dx,
            dnI_frac: e.channel.dn_i,
            calibrate_dnI: e.calibrate_loss,
            d0_um: e.d0,
            tau_mm: e.tau * 1e-3,
            T_mm: e.T * 1e-3,
            L_mm: e.length * 1e-3,
            omega0_T: e.omega0_t,
            separations_um: e.separations,
            calibration_length_mm: e.calibration_length * 1e-3,
            decay_length_mm: e.decay_length * 1e-3,
            x_half_width_um: -e.grid.x0,
            dx_um: e.grid.dx,
            dz_um: e.dz,
            record_stride: e.record_stride,
            launch: e.launch,
            launch_shape: e.shape,
            field_map_stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Every run is deterministic; `false` is rejected.
    pub deterministic: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            deterministic: true,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Read `path` (if any), apply `overrides`, and deserialize.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| config_err(format!("{}: {}", p.display(), e.message())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| config_err(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got '{item}'")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad key '{key}'")));
    }
    // Parse the right-hand side as a TOML value; fall back to a bare string.
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_err(format!("'{p}' in '{key}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        if !self.output.deterministic {
            return Err(config_err("output.deterministic = false is not supported"));
        }
        let p = &self.pulse;
        if p.family == PulseFamily::Table && (p.pump_table.is_none() || p.stokes_table.is_none()) {
            return Err(config_err(
                "pulse.family = \"table\" needs pulse.pump_table and pulse.stokes_table",
            ));
        }
        self.initial_state()?;
        if self.propagation.record_stride == 0 {
            return Err(config_err("propagation.record_stride must be >= 1"));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<InitialState, CliError> {
        match self.propagation.initial_state.as_str() {
            "dark" => Ok(InitialState::DarkState),
            "1" => Ok(InitialState::Bare(1)),
            "2" => Ok(InitialState::Bare(2)),
            "3" => Ok(InitialState::Bare(3)),
            other => Err(config_err(format!(
                "propagation.initial_state must be dark, 1, 2 or 3, got '{other}'"
            ))),
        }
    }

    pub fn window(&self) -> Result<PropagationConfig, CliError> {
        let t = self.pulse.T;
        let d = PropagationConfig::default_for(t);
        let p = &self.propagation;
        Ok(PropagationConfig::new(
            p.t_start.unwrap_or(d.t_start),
            p.t_end.unwrap_or(d.t_end),
            p.dt.unwrap_or(d.dt),
            p.record_stride,
        )?)
    }

    pub fn pulse_spec(&self) -> Result<PulseSpec, CliError> {
        let p = &self.pulse;
        let family = match p.family {
            PulseFamily::Gaussian => Family::Gaussian,
            PulseFamily::Sech => Family::Sech,
            PulseFamily::Sin2 => Family::Sin2,
            PulseFamily::Table => return Err(config_err("tabulated pulses cannot be swept")),
        };
        Ok(PulseSpec {
            family,
            omega0: p.omega0,
            T: p.T,
            tau: p.tau,
        })
    }

    pub fn pair(&self) -> Result<SharedPair, CliError> {
        let p = &self.pulse;
        if p.family == PulseFamily::Table {
            let (a, b) = (p.pump_table.as_ref(), p.stokes_table.as_ref());
            let pair = TabulatedPair::from_files(a.expect("validated"), b.expect("validated"))
                .map_err(|e| config_err(e.to_string()))?
                .with_time_scale(p.T);
            return Ok(std::sync::Arc::new(pair));
        }
        Ok(self.pulse_spec()?.build()?)
    }

    /// `None` when gain/loss is off.
    pub fn gain(&self, pair: &SharedPair, nh: bool) -> Result<Option<GainProfile>, CliError> {
        if !nh {
            return Ok(None);
        }
        let g = &self.gamma;
        let profile = match g.override_value {
            Some(v) => GainProfile::constant(v)?,
            None => stirap_core::synthesize_gamma(pair.clone()),
        };
        let max = g.gamma_max.unwrap_or(DEFAULT_GAMMA_MAX / self.pulse.T);
        if !(max > 0.0) {
            return Err(config_err(format!(
                "gamma.gamma_max must be positive, got {max}"
            )));
        }
        Ok(Some(profile.with_gamma_max(max)))
    }

    pub fn experiment(&self) -> Result<GuideExperiment, CliError> {
        let b = &self.bpm;
        let grid = Grid::symmetric(b.x_half_width_um, b.dx_um)?;
        Ok(GuideExperiment {
            optics: OpticalParams::new(b.lambda_nm * 1e-3, b.n_s)?,
            channel: ChannelProfile::new(b.dn0, b.w1_um, b.Dx_um, b.dnI_frac)?,
            d0: b.d0_um,
            T: b.T_mm * 1e3,
            tau: b.tau_mm * 1e3,
            length: b.L_mm * 1e3,
            omega0_t: b.omega0_T,
            separations: b.separations_um.clone(),
            calibration_length: b.calibration_length_mm * 1e3,
            decay_length: b.decay_length_mm * 1e3,
            calibrate_loss: b.calibrate_dnI,
            loss_tolerance: 0.02,
            launch: b.launch,
            shape: b.launch_shape,
            grid,
            dz: b.dz_um,
            record_stride: b.record_stride.max(1),
        })
    }
}
