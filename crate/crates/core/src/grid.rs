//! Sampled scalar functions on an interval and their norms.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Something that can be evaluated pointwise on the interval.
pub trait ScalarFunction: Sync {
    fn eval(&self, t: f64) -> f64;

    /// Estimate of `||f||_Lip` on `[a, b]`. The default samples 4097 points
    /// and inflates the largest divided difference by 1.25.
    fn lipschitz_estimate(&self, a: f64, b: f64) -> f64 {
        let n = 4096;
        let h = (b - a) / n as f64;
        let mut prev = self.eval(a);
        let mut best = 0.0f64;
        for i in 1..=n {
            let v = self.eval(a + h * i as f64);
            best = best.max(((v - prev) / h).abs());
            prev = v;
        }
        1.25 * best
    }
}

impl<F> ScalarFunction for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Values on a strictly increasing grid, evaluated off-grid by a monotone
/// cubic.
#[derive(Debug, Clone)]
pub struct GridFunction {
    interp: MonotoneCubic,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "grid must be strictly increasing".into(),
            ));
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid function has non-finite entries".into(),
            ));
        }
        Ok(Self {
            interp: MonotoneCubic::new(grid, values),
        })
    }

    /// Sample `f` on `grid`.
    pub fn sample(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|t| f(*t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        self.interp.xs()
    }

    pub fn values(&self) -> &[f64] {
        self.interp.ys()
    }

    pub fn len(&self) -> usize {
        self.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same grid, values shifted by a constant.
    pub fn shifted(&self, c: f64) -> GridFunction {
        let values = self.values().iter().map(|v| v + c).collect();
        GridFunction::new(self.grid().to_vec(), values).expect("shift keeps validity")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 {
            return Err(Error::Parse(format!(
                "expected two columns \"t,value\", found {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let (mut grid, mut values) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", line + 2)))
            };
            grid.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Self::new(grid, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Two-column CSV with header `t,value` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["t", "value"])?;
        for (t, v) in self.grid().iter().zip(self.values()) {
            w.write_record([fmt_f64(*t), fmt_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Estimates of `f^(j)(grid[i])` for `j = 0..=order` from a window of
    /// `2 order + 1` neighbouring samples (shifted inward at the ends).
    pub fn derivatives_at(&self, i: usize, order: usize) -> Vec<f64> {
        let n = self.len();
        let width = (2 * order + 1).min(n);
        let start = i.saturating_sub(order).min(n - width);
        let xs = &self.grid()[start..start + width];
        let ys = &self.values()[start..start + width];
        let w = fornberg_weights(self.grid()[i], xs, order);
        let center = self.values()[i];
        // derivatives of f - f(t_i) are the same, with less cancellation
        let mut out: Vec<f64> = (0..=order)
            .map(|j| w[j].iter().zip(ys).map(|(c, y)| c * (y - center)).sum())
            .collect();
        out[0] = center;
        out
    }
}

impl ScalarFunction for GridFunction {
    fn eval(&self, t: f64) -> f64 {
        self.interp.eval(t)
    }

    fn lipschitz_estimate(&self, _a: f64, _b: f64) -> f64 {
        lipschitz_norm(self)
    }
}

/// Largest divided difference between adjacent samples. This is the exact
/// Lipschitz constant of the piecewise-linear interpolant and a lower
/// estimate for smoother interpolants.
pub fn lipschitz_norm(f: &GridFunction) -> f64 {
    f.grid()
        .windows(2)
        .zip(f.values().windows(2))
        .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
        .fold(0.0, f64::max)
}

/// Uniform grid of `n` points spanning `[a, b]` with exact endpoints.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut g: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    g[n - 1] = b;
    g
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Finite-difference weights for derivatives `0..=order` at `x0` using the
/// nodes `xs` (Fornberg's recursion). `w[j][k]` multiplies `f(xs[k])`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
