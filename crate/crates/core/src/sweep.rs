//! Parameter scans over the coupled-mode model.
//!
//! Points are evaluated in parallel and gathered in row-major order over the
//! axes (first axis outermost), with modes innermost in the order given.
//! Failures are recorded per point and never abort the scan.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fidelity, propagate, InitialState, PropagationConfig};
use crate::error::{Error, Result};
use crate::pulses::{
    make_gaussian_pair, make_sech_pair, make_sin2_pair, synthesize_gamma, GaussianParams,
    SechParams, SharedPair, Sin2Params,
};

/// Analytic pulse families that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Sech,
    Sin2,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "sech" => Ok(Family::Sech),
            "sin2" => Ok(Family::Sin2),
            other => Err(Error::ParameterDomain(format!(
                "unknown pulse family '{other}'"
            ))),
        }
    }
}

/// One analytic pulse pair, by family and shape parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PulseSpec {
    pub family: Family,
    pub omega0: f64,
    pub T: f64,
    pub tau: f64,
}

impl PulseSpec {
    pub fn build(&self) -> Result<SharedPair> {
        Ok(match self.family {
            Family::Gaussian => Arc::new(make_gaussian_pair(GaussianParams::new(
                self.omega0,
                self.T,
                self.tau,
            )?)),
            Family::Sech => Arc::new(make_sech_pair(SechParams::new(
                self.omega0,
                self.T,
                self.tau,
            )?)),
            Family::Sin2 => Arc::new(make_sin2_pair(Sin2Params::new(
                self.omega0,
                self.T,
                self.tau,
            )?)),
        })
    }

    fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "omega0" => self.omega0 = value,
            "T" => self.T = value,
            "tau" => self.tau = value,
            other => {
                return Err(Error::ParameterDomain(format!(
                    "unknown sweep axis '{other}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hermitian,
    Nh,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hermitian => "hermitian",
            Mode::Nh => "nh",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::ParameterDomain(format!(
                "axis '{}' needs count >= 2, got {}",
                self.name, self.count
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "axis '{}' bounds not finite",
                self.name
            )));
        }
        let last = (self.count - 1) as f64;
        match self.scale {
            Scale::Linear => Ok((0..self.count)
                .map(|i| self.min + (self.max - self.min) * i as f64 / last)
                .collect()),
            Scale::Log => {
                if self.min <= 0.0 || self.max <= 0.0 {
                    return Err(Error::ParameterDomain(format!(
                        "log axis '{}' needs positive bounds",
                        self.name
                    )));
                }
                let (a, b) = (self.min.ln(), self.max.ln());
                Ok((0..self.count)
                    .map(|i| (a + (b - a) * i as f64 / last).exp())
                    .collect())
            }
        }
    }
}

/// A grid of pulse parameters and the modes to run at each point.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub base: PulseSpec,
    pub window: PropagationConfig,
    pub modes: Vec<Mode>,
    pub initial: InitialState,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl SweepSpec {
    /// All grid coordinates, row-major.
    pub fn grid(&self) -> Result<Vec<Vec<f64>>> {
        let mut grid = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values()?;
            // Validate the name once up front.
            self.base.clone().set(&axis.name, values[0])?;
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(grid)
    }
}

/// Observables of one successful run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOutcome {
    pub fidelity: f64,
    pub final_norm: f64,
    pub max_norm: f64,
    pub peak_p2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub coords: Vec<f64>,
    pub mode: Mode,
    /// `Err` holds the error code.
    pub outcome: std::result::Result<PointOutcome, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub records: Vec<SweepRecord>,
}

/// Run `spec` at one pulse specification and mode.
pub fn run_point(
    pulse: &PulseSpec,
    mode: Mode,
    window: &PropagationConfig,
    initial: InitialState,
) -> Result<PointOutcome> {
    let pair = pulse.build()?;
    let gain = match mode {
        Mode::Hermitian => None,
        Mode::Nh => Some(synthesize_gamma(pair.clone())),
    };
    let c0 = initial.resolve(pair.as_ref(), window.t_start)?;
    let traj = propagate(pair.as_ref(), gain.as_ref(), &c0, window)?;
    Ok(PointOutcome {
        fidelity: fidelity(&traj),
        final_norm: traj.final_norm(),
        max_norm: traj.max_norm,
        peak_p2: traj.peak_p2,
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let axis_names: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    if spec.modes.is_empty() {
        return Ok(SweepResult {
            axis_names,
            records: Vec::new(),
        });
    }
    spec.window.validate()?;
    let jobs: Vec<(Vec<f64>, Mode)> = spec
        .grid()?
        .into_iter()
        .flat_map(|coords| spec.modes.iter().map(move |&m| (coords.clone(), m)))
        .collect();

    let evaluate = |(coords, mode): &(Vec<f64>, Mode)| -> SweepRecord {
        let mut pulse = spec.base;
        let outcome = spec
            .axes
            .iter()
            .zip(coords)
            .try_for_each(|(axis, &v)| pulse.set(&axis.name, v))
            .and_then(|_| run_point(&pulse, *mode, &spec.window, spec.initial))
            .map_err(|e| e.code().to_string());
        SweepRecord {
            coords: coords.clone(),
            mode: *mode,
            outcome,
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::ParameterDomain(format!("worker pool: {e}")))?;
    let records = pool.install(|| jobs.par_iter().map(evaluate).collect());
    Ok(SweepResult {
        axis_names,
        records,
    })
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = self.axis_names.clone();
        header.extend(
            [
                "mode",
                "fidelity",
                "final_norm",
                "max_norm",
                "peak_P2",
                "error_code",
            ]
            .map(String::from),
        );
        out.write_record(&header)?;
        for rec in &self.records {
            let mut row: Vec<String> = rec.coords.iter().map(|v| v.to_string()).collect();
            row.push(rec.mode.to_string());
            match &rec.outcome {
                Ok(o) => {
                    row.extend(
                        [o.fidelity, o.final_norm, o.max_norm, o.peak_p2].map(|v| v.to_string()),
                    );
                    row.push(String::new());
                }
                Err(code) => {
                    row.extend(std::iter::repeat_n("NaN".to_string(), 4));
                    row.push(code.clone());
                }
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Grid points where the NH run ends with lower fidelity than the
    /// Hermitian one. Reported for review; not a theorem.
    pub fn nh_regressions(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for h in self.records.iter().filter(|r| r.mode == Mode::Hermitian) {
            let nh = self
                .records
                .iter()
                .find(|r| r.mode == Mode::Nh && r.coords == h.coords);
            if let (Ok(a), Some(Ok(b))) = (&h.outcome, nh.map(|r| &r.outcome)) {
                if b.fidelity < a.fidelity {
                    out.push(h.coords.clone());
                }
            }
        }
        out
    }
}

/// Hermitian and NH runs at the same point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub fidelity_hermitian: f64,
    pub fidelity_nh: f64,
    pub nh_final_norm: f64,
    pub nh_min_norm: f64,
    pub nh_max_norm: f64,
}

pub fn compare_hermitian_nh(
    pulse: &PulseSpec,
    window: &PropagationConfig,
    initial: InitialState,
) -> Result<Comparison> {
    let pair = pulse.build()?;
    let c0 = initial.resolve(pair.as_ref(), window.t_start)?;
    let herm = propagate(pair.as_ref(), None, &c0, window)?;
    let gain = synthesize_gamma(pair.clone());
    let nh = propagate(pair.as_ref(), Some(&gain), &c0, window)?;
    Ok(Comparison {
        fidelity_hermitian: fidelity(&herm),
        fidelity_nh: fidelity(&nh),
        nh_final_norm: nh.final_norm(),
        nh_min_norm: nh.min_norm,
        nh_max_norm: nh.max_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PulseSpec {
        PulseSpec {
            family: Family::Gaussian,
            omega0: 1.3,
            T: 1.0,
            tau: 1.0,
        }
    }

    #[test]
    fn axis_values() {
        let lin = Axis {
            name: "tau".into(),
            min: 0.0,
            max: 1.0,
            count: 3,
            scale: Scale::Linear,
        };
        assert_eq!(lin.values().unwrap(), vec![0.0, 0.5, 1.0]);
        let log = Axis {
            name: "omega0".into(),
            min: 1.0,
            max: 100.0,
            count: 3,
            scale: Scale::Log,
        };
        let v = log.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        let bad = Axis {
            count: 1,
            ..lin.clone()
        };
        assert!(bad.values().is_err());
        let bad = Axis { min: 0.0, ..log };
        assert!(bad.values().is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let spec = SweepSpec {
            axes: vec![
                Axis {
                    name: "omega0".into(),
                    min: 1.0,
                    max: 2.0,
                    count: 2,
                    scale: Scale::Linear,
                },
                Axis {
                    name: "tau".into(),
                    min: 0.0,
                    max: 1.0,
                    count: 3,
                    scale: Scale::Linear,
                },
            ],
            base: base(),
            window: PropagationConfig::default_for(1.0),
            modes: vec![Mode::Hermitian],
            initial: InitialState::DarkState,
            workers: 1,
        };
        let g = spec.grid().unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![1.0, 0.0]);
        assert_eq!(g[1], vec![1.0, 0.5]);
        assert_eq!(g[3], vec![2.0, 0.0]);
    }

    #[test]
    fn unknown_axis_rejected() {
        let spec = SweepSpec {
            axes: vec![Axis {
                name: "detuning".into(),
                min: 0.0,
                max: 1.0,
                count: 2,
                scale: Scale::Linear,
            }],
            base: base(),
            window: PropagationConfig::default_for(1.0),
            modes: vec![Mode::Nh],
            initial: InitialState::DarkState,
            workers: 1,
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn empty_modes_empty_result() {
        let spec = SweepSpec {
            axes: vec![],
            base: base(),
            window: PropagationConfig::default_for(1.0),
            modes: vec![],
            initial: InitialState::DarkState,
            workers: 1,
        };
        assert!(run_sweep(&spec).unwrap().records.is_empty());
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let spec = SweepSpec {
            axes: vec![Axis {
                name: "omega0".into(),
                min: -1.0,
                max: 1.0,
                count: 2,
                scale: Scale::Linear,
            }],
            base: base(),
            window: PropagationConfig::default_for(1.0).with_stride(1000),
            modes: vec![Mode::Hermitian],
            initial: InitialState::Bare(1),
            workers: 2,
        };
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.records[0].outcome, Err("parameter_domain".to_string()));
        assert!(r.records[1].outcome.is_ok());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega0,mode,fidelity,final_norm,max_norm,peak_P2,error_code\n"));
        assert!(text.contains("-1,hermitian,NaN,NaN,NaN,NaN,parameter_domain"));
    }
}
