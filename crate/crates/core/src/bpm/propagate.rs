use std::io::Write;

use rustfft::FftPlanner;

use super::layout::fill_potential;
use super::mode::wavenumbers;
use super::{power_windows, ChannelProfile, FieldEnvelope, Grid, OpticalParams, WaveguideLayout};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpmConfig {
    pub grid: Grid,
    pub z_max: f64,
    pub dz: f64,
    /// Record powers every this many steps (plus the last step).
    pub record_stride: usize,
    /// Keep `|ψ|²` rows every this many steps.
    pub map_stride: Option<usize>,
    pub absorber_width: f64,
    /// Peak imaginary index of the quadratic absorbing ramp.
    pub absorber_strength: f64,
    /// Largest tolerated fraction of power inside the absorber.
    pub margin_tolerance: f64,
    /// Required distance from any channel centre to the grid edge, in `Dx`.
    pub margin_dx: f64,
}

impl BpmConfig {
    pub fn new(grid: Grid, z_max: f64, dz: f64) -> Self {
        BpmConfig {
            grid,
            z_max,
            dz,
            record_stride: 100,
            map_stride: None,
            absorber_width: 5.0,
            absorber_strength: 0.05,
            margin_tolerance: 1e-3,
            margin_dx: 10.0,
        }
    }

    /// `x ∈ [−45, 45]`, `dx = 0.05`, `dz = 1`.
    pub fn default_grid() -> Grid {
        Grid {
            x0: -45.0,
            dx: 0.05,
            n: 1800,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn with_map(mut self, stride: usize) -> Self {
        self.map_stride = Some(stride.max(1));
        self
    }

    fn steps(&self) -> Result<usize> {
        if !(self.z_max > 0.0 && self.dz > 0.0 && self.z_max.is_finite()) {
            return Err(Error::Grid(format!(
                "need z_max, dz > 0 (got {}, {})",
                self.z_max, self.dz
            )));
        }
        Ok(((self.z_max / self.dz).round() as usize).max(1))
    }
}

/// Powers at one `z`, relative to the launched power.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSample {
    pub z: f64,
    pub channels: Vec<f64>,
    pub total: f64,
}

/// Rows of `|ψ|²` sampled every `dz_row`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMap {
    pub grid: Grid,
    pub z0: f64,
    pub dz_row: f64,
    pub rows: Vec<Vec<f64>>,
}

impl FieldMap {
    /// Text header terminated by `end\n`, then rows of little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        write!(
            w,
            "fieldmap 1\nrows {}\ncols {}\nx0 {}\ndx {}\nz0 {}\ndz {}\ndtype f64le\nend\n",
            self.rows.len(),
            self.grid.n,
            self.grid.x0,
            self.grid.dx,
            self.z0,
            self.dz_row
        )?;
        for row in &self.rows {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BpmRun {
    pub samples: Vec<PowerSample>,
    pub input_power: f64,
    pub final_field: FieldEnvelope,
    pub map: Option<FieldMap>,
}

pub const TRACE_HEADER: [&str; 5] = ["z_mm", "P_L", "P_C", "P_R", "P_total"];

impl BpmRun {
    pub fn final_sample(&self) -> &PowerSample {
        self.samples
            .last()
            .expect("at least the launch sample is recorded")
    }

    /// Three-guide trace; lengths converted from micrometres to millimetres.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRACE_HEADER)?;
        for s in &self.samples {
            let mut row = vec![(s.z * 1e-3).to_string()];
            for i in 0..3 {
                row.push(s.channels.get(i).copied().unwrap_or(f64::NAN).to_string());
            }
            row.push(s.total.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Symmetrised split-step Fourier integration from `z = 0` to `cfg.z_max`.
///
/// Each step applies half the potential phase, the free-space propagator in
/// Fourier space and the other half, with `V` sampled at the step midpoint.
pub fn bpm_propagate(
    layout: &WaveguideLayout,
    channel: &ChannelProfile,
    optics: &OpticalParams,
    input: &FieldEnvelope,
    cfg: &BpmConfig,
) -> Result<BpmRun> {
    let grid = cfg.grid;
    if input.grid != grid || input.psi.len() != grid.n {
        return Err(Error::Grid(
            "input field is not on the configured grid".into(),
        ));
    }
    let steps = cfg.steps()?;
    let dz = cfg.z_max / steps as f64;
    let lb = optics.reduced_wavelength();
    let n = grid.n;

    let input_power = input.power();
    if !(input_power > 0.0 && input_power.is_finite()) {
        return Err(Error::Grid(format!("input power is {input_power}")));
    }

    let x_hi = grid.x_max();
    let absorber: Vec<f64> = grid
        .xs()
        .map(|x| {
            let depth =
                (cfg.absorber_width - (x - grid.x0).min(x_hi - x)).max(0.0) / cfg.absorber_width;
            cfg.absorber_strength * depth * depth
        })
        .collect();
    let inner = (grid.x0 + cfg.absorber_width, x_hi - cfg.absorber_width);

    let check_margin = |z: f64| -> Result<()> {
        layout.check_geometry(channel, z)?;
        let margin = cfg.margin_dx * channel.dx;
        for c in layout.centers(z) {
            if c - margin < grid.x0 || c + margin > x_hi {
                return Err(Error::Grid(format!(
                    "channel at {c:.3} um is within {margin} um of the grid edge at z = {z} um"
                )));
            }
        }
        Ok(())
    };

    let kin: Vec<C64> = wavenumbers(&grid)
        .map(|k| C64::from_polar(1.0 / n as f64, -lb * k * k * dz / (2.0 * optics.n_s)))
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];

    let mut field = input.clone();
    let mut samples = Vec::with_capacity(steps / cfg.record_stride + 2);
    let mut map = cfg.map_stride.map(|s| FieldMap {
        grid,
        z0: 0.0,
        dz_row: s as f64 * dz,
        rows: Vec::new(),
    });

    let record = |field: &FieldEnvelope, z: f64, samples: &mut Vec<PowerSample>| -> Result<()> {
        let total = field.power();
        let edge = total - field.power_between(inner.0, inner.1);
        if edge > cfg.margin_tolerance * total {
            return Err(Error::Grid(format!(
                "{:.2e} of the power sits in the absorbing margin at z = {z} um",
                edge / total
            )));
        }
        let channels = power_windows(&layout.centers(z), channel)
            .into_iter()
            .map(|(lo, hi)| field.power_between(lo, hi) / input_power)
            .collect();
        samples.push(PowerSample {
            z,
            channels,
            total: total / input_power,
        });
        Ok(())
    };

    check_margin(0.0)?;
    record(&field, 0.0, &mut samples)?;
    if let Some(m) = map.as_mut() {
        m.rows.push(field.intensity());
    }

    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut half = vec![C64::new(0.0, 0.0); n];
    for step in 0..steps {
        let z_mid = (step as f64 + 0.5) * dz;
        check_margin(z_mid)?;
        fill_potential(layout, channel, &grid, z_mid, &mut v);
        // exp(−i V dz / 2ƛ) with the absorber folded into Im V.
        for ((h, vi), a) in half.iter_mut().zip(&v).zip(&absorber) {
            let vi = C64::new(vi.re, vi.im - a);
            *h = (C64::new(0.0, -0.5 * dz / lb) * vi).exp();
        }
        for (p, h) in field.psi.iter_mut().zip(&half) {
            *p *= h;
        }
        fwd.process_with_scratch(&mut field.psi, &mut scratch);
        for (p, k) in field.psi.iter_mut().zip(&kin) {
            *p *= k;
        }
        inv.process_with_scratch(&mut field.psi, &mut scratch);
        for (p, h) in field.psi.iter_mut().zip(&half) {
            *p *= h;
        }

        let done = step + 1;
        let z = done as f64 * dz;
        if field.psi.iter().any(|p| !p.is_finite()) {
            return Err(Error::Overflow { time: z });
        }
        if done % cfg.record_stride == 0 || done == steps {
            record(&field, z, &mut samples)?;
        }
        if let Some(m) = map.as_mut() {
            if done % cfg.map_stride.unwrap_or(1) == 0 {
                m.rows.push(field.intensity());
            }
        }
    }

    Ok(BpmRun {
        samples,
        input_power,
        final_field: field,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpm::{launch_field, Launch};

    fn setup() -> (ChannelProfile, OpticalParams, Grid) {
        (
            ChannelProfile::new(7e-3, 2.0, 2.0, 0.0).unwrap(),
            OpticalParams::new(0.514, 2.33).unwrap(),
            Grid::symmetric(40.0, 0.1).unwrap(),
        )
    }

    #[test]
    fn straight_guide_conserves_power() {
        let (ch, op, g) = setup();
        let l = Launch::fit(&ch, &op, &g).unwrap();
        let input = launch_field(&l, &g, 0.0);
        let cfg = BpmConfig::new(g, 2000.0, 1.0).with_stride(500);
        let run = bpm_propagate(&WaveguideLayout::single(0.0), &ch, &op, &input, &cfg).unwrap();
        assert_eq!(run.samples.len(), 5);
        let last = run.final_sample();
        assert!((last.total - 1.0).abs() < 1e-4, "total {}", last.total);
        assert!(last.channels[0] > 0.99);
    }

    #[test]
    fn lossy_guide_decays() {
        let (ch, op, g) = setup();
        let l = Launch::fit(&ch, &op, &g).unwrap();
        let input = launch_field(&l, &g, 0.0);
        let cfg = BpmConfig::new(g, 1000.0, 1.0);
        let run = bpm_propagate(&WaveguideLayout::single(0.01), &ch, &op, &input, &cfg).unwrap();
        assert!(run.final_sample().total < 0.9);
        let run = bpm_propagate(&WaveguideLayout::single(-0.01), &ch, &op, &input, &cfg).unwrap();
        assert!(run.final_sample().total > 1.1);
    }

    #[test]
    fn channel_near_edge_is_rejected() {
        let (ch, op, g) = setup();
        let l = Launch::fit(&ch, &op, &g).unwrap();
        let input = launch_field(&l, &g, 0.0);
        let cfg = BpmConfig::new(g, 10.0, 1.0);
        let layout = WaveguideLayout {
            channels: vec![super::super::Channel {
                position: super::super::Position::Fixed(30.0),
                loss: 0.0,
            }],
        };
        let err = bpm_propagate(&layout, &ch, &op, &input, &cfg).unwrap_err();
        assert!(matches!(err, Error::Grid(_)));
    }

    #[test]
    fn field_map_layout() {
        let (ch, op, g) = setup();
        let l = Launch::fit(&ch, &op, &g).unwrap();
        let input = launch_field(&l, &g, 0.0);
        let cfg = BpmConfig::new(g, 20.0, 1.0).with_map(10);
        let run = bpm_propagate(&WaveguideLayout::single(0.0), &ch, &op, &input, &cfg).unwrap();
        let map = run.map.unwrap();
        assert_eq!(map.rows.len(), 3);
        let mut buf = Vec::new();
        map.write_binary(&mut buf).unwrap();
        let text_end = buf.windows(4).position(|w| w == b"end\n").unwrap() + 4;
        assert_eq!(buf.len() - text_end, 3 * g.n * 8);
        let header = std::str::from_utf8(&buf[..text_end]).unwrap();
        assert!(header.contains("rows 3\ncols 800\n"));
    }
}
