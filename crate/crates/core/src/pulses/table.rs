use std::path::Path;

use super::PulsePair;
use crate::error::{Error, Result};

/// Natural cubic spline through `(t, y)` samples, zero outside the table.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n != y.len() {
            return Err(Error::Table(
                "time and value columns differ in length".into(),
            ));
        }
        if n < 4 {
            return Err(Error::Table(format!("need at least 4 samples, got {n}")));
        }
        if t.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite sample".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Table("times must be strictly increasing".into()));
        }

        // Tridiagonal solve for the natural spline (m₀ = m_{n−1} = 0).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(CubicSpline { t, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Mean knot spacing.
    pub fn mean_spacing(&self) -> f64 {
        let (a, b) = self.domain();
        (b - a) / (self.t.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return 0.0;
        }
        let i = match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            k => (k - 1).min(self.t.len() - 2),
        };
        let h = self.t[i + 1] - self.t[i];
        let u = (self.t[i + 1] - x) / h;
        let v = (x - self.t[i]) / h;
        u * self.y[i]
            + v * self.y[i + 1]
            + ((u * u * u - u) * self.m[i] + (v * v * v - v) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Fourth-order central difference with step `h`.
fn diff4(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// User-supplied envelopes, interpolated with cubic splines.
///
/// Derivatives use fourth-order central differences with the table spacing
/// as step.
#[derive(Clone, Debug)]
pub struct TabulatedPair {
    pump: CubicSpline,
    stokes: CubicSpline,
    time_scale: f64,
}

impl TabulatedPair {
    pub fn new(pump: CubicSpline, stokes: CubicSpline) -> Self {
        TabulatedPair {
            pump,
            stokes,
            time_scale: 1.0,
        }
    }

    pub fn from_files(pump: &Path, stokes: &Path) -> Result<Self> {
        Ok(Self::new(load_table_csv(pump)?, load_table_csv(stokes)?))
    }

    pub fn with_time_scale(mut self, t: f64) -> Self {
        self.time_scale = t;
        self
    }
}

impl PulsePair for TabulatedPair {
    fn pump(&self, t: f64) -> f64 {
        self.pump.eval(t)
    }

    fn stokes(&self, t: f64) -> f64 {
        self.stokes.eval(t)
    }

    fn pump_deriv(&self, t: f64) -> f64 {
        diff4(|x| self.pump.eval(x), t, self.pump.mean_spacing())
    }

    fn stokes_deriv(&self, t: f64) -> f64 {
        diff4(|x| self.stokes.eval(x), t, self.stokes.mean_spacing())
    }

    fn time_scale(&self) -> f64 {
        self.time_scale
    }

    fn family(&self) -> &'static str {
        "table"
    }
}

/// Read a two-column `(t, Ω)` CSV. A leading non-numeric row is treated as a
/// header.
pub fn load_table_csv(path: &Path) -> Result<CubicSpline> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Table(format!(
                "{}: row {row} has < 2 columns",
                path.display()
            )));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                y.push(b);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Table(format!(
                    "{}: row {row} is not numeric",
                    path.display()
                )))
            }
        }
    }
    CubicSpline::new(t, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn spline_reproduces_cubic_interior() {
        // A natural spline through samples of a smooth function converges
        // at fourth order away from the ends.
        let t: Vec<f64> = (0..=200).map(|i| -4.0 + 0.04 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| (-x * x).exp()).collect();
        let s = CubicSpline::new(t, y).unwrap();
        for x in [-1.01, -0.333, 0.0, 0.5, 1.2345] {
            assert!((s.eval(x) - (-x * x).exp()).abs() < 1e-6);
        }
        assert_eq!(s.eval(-4.5), 0.0);
        assert_eq!(s.eval(4.01), 0.0);
    }

    #[test]
    fn spline_rejects_bad_tables() {
        assert!(CubicSpline::new(vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn tabulated_gaussian_gamma_close_to_constant() {
        let t: Vec<f64> = (0..=800).map(|i| -4.0 + 0.01 * i as f64).collect();
        let p: Vec<f64> = t.iter().map(|x| (-(x - 0.5f64).powi(2)).exp()).collect();
        let s: Vec<f64> = t.iter().map(|x| (-(x + 0.5f64).powi(2)).exp()).collect();
        let pair = TabulatedPair::new(
            CubicSpline::new(t.clone(), p).unwrap(),
            CubicSpline::new(t, s).unwrap(),
        );
        for x in [-1.5, -0.5, 0.0, 0.7, 1.5] {
            let g = pair.pump_log_deriv(x) - pair.stokes_log_deriv(x);
            assert!((g - 2.0).abs() < 1e-4, "{x}: {g}");
        }
    }

    #[test]
    fn loads_csv_with_header() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "t,omega").unwrap();
        for i in 0..10 {
            writeln!(f, "{},{}", i as f64 * 0.5, (i as f64).sin().abs()).unwrap();
        }
        let s = load_table_csv(f.path()).unwrap();
        assert_eq!(s.domain(), (0.0, 4.5));
        assert!((s.eval(1.0) - 2f64.sin()).abs() < 1e-12);
    }
}
