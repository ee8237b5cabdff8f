//! Perturbation fields `phi` together with the interval between two
//! consecutive simple zeros.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Highest derivative order supplied by the analytic families unless
/// overridden with [`PerturbationField::with_p_max`].
pub const DEFAULT_P_MAX: usize = 5;

/// Analytic or sampled description of `phi`.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `amp * sin(omega * t + phase)`.
    Sine { amp: f64, omega: f64, phase: f64 },
    /// Polynomial with ascending coefficients.
    Polynomial(Vec<f64>),
    /// Sum of profiles.
    Sum(Vec<Profile>),
    /// Samples joined by a monotone cubic; derivatives are approximate.
    Sampled(Arc<MonotoneCubic>),
}

impl Profile {
    fn derivative(&self, order: usize, t: f64) -> f64 {
        match self {
            Profile::Sine { amp, omega, phase } => {
                let x = omega * t + phase;
                let cyc = match order % 4 {
                    0 => x.sin(),
                    1 => x.cos(),
                    2 => -x.sin(),
                    _ => -x.cos(),
                };
                amp * omega.powi(order as i32) * cyc
            }
            Profile::Polynomial(c) => poly_derivative(c, order, t),
            Profile::Sum(parts) => parts.iter().map(|p| p.derivative(order, t)).sum(),
            Profile::Sampled(interp) => sampled_derivative(interp, order, t),
        }
    }

    fn is_approximate(&self) -> bool {
        match self {
            Profile::Sampled(_) => true,
            Profile::Sum(parts) => parts.iter().any(Profile::is_approximate),
            _ => false,
        }
    }
}

fn poly_derivative(c: &[f64], order: usize, t: f64) -> f64 {
    if order >= c.len() {
        return 0.0;
    }
    // Horner on the differentiated coefficients
    let mut acc = 0.0;
    for k in (order..c.len()).rev() {
        let falling: f64 = ((k - order + 1)..=k).map(|m| m as f64).product();
        acc = acc * t + c[k] * falling;
    }
    acc
}

fn sampled_derivative(interp: &MonotoneCubic, order: usize, t: f64) -> f64 {
    match order {
        0 => interp.eval(t),
        1 => interp.derivative(t),
        _ => {
            // central differences of the interpolant's slope
            let xs = interp.xs();
            let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            let lo = sampled_derivative(interp, order - 1, t - h);
            let hi = sampled_derivative(interp, order - 1, t + h);
            (hi - lo) / (2.0 * h)
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// The perturbation `phi` on `[t_minus, t_plus]`.
#[derive(Debug, Clone)]
pub struct PerturbationField {
    profile: Profile,
    t_minus: f64,
    t_plus: f64,
    p_max: usize,
    lip_norm: f64,
    reflected: bool,
}

impl PerturbationField {
    /// `phi = profile` on `[t_minus, t_plus]`.
    pub fn new(profile: Profile, t_minus: f64, t_plus: f64) -> Result<Self> {
        if !(t_minus < t_plus) || !t_minus.is_finite() || !t_plus.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval [{t_minus}, {t_plus}] is empty or not finite"
            )));
        }
        let p_max = if profile.is_approximate() {
            3
        } else {
            DEFAULT_P_MAX
        };
        let mut field = Self {
            profile,
            t_minus,
            t_plus,
            p_max,
            lip_norm: 0.0,
            reflected: false,
        };
        field.lip_norm = field.measure_lip_norm();
        Ok(field)
    }

    /// `sin t` on `[0, pi]`.
    pub fn sine() -> Self {
        Self::sine_on(0.0, PI).expect("valid interval")
    }

    /// `sin t` on an arbitrary interval (not necessarily between zeros).
    pub fn sine_on(t_minus: f64, t_plus: f64) -> Result<Self> {
        Self::new(
            Profile::Sine {
                amp: 1.0,
                omega: 1.0,
                phase: 0.0,
            },
            t_minus,
            t_plus,
        )
    }

    /// `sin(omega t) / omega` on `[0, pi / omega]`.
    pub fn scaled_sine(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega = {omega} must be positive"
            )));
        }
        Self::new(
            Profile::Sine {
                amp: 1.0 / omega,
                omega,
                phase: 0.0,
            },
            0.0,
            PI / omega,
        )
    }

    /// Polynomial bump `t (length - t) q(t)` on `[0, length]`, with `q`
    /// given by ascending coefficients.
    pub fn bump(length: f64, q: &[f64]) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidArgument(
                "bump needs at least one q coefficient".into(),
            ));
        }
        let base = [0.0, length, -1.0];
        Self::new(Profile::Polynomial(poly_mul(&base, q)), 0.0, length)
    }

    /// Field sampled on a strictly increasing grid whose first and last
    /// points are taken as the fixed points.
    pub fn sampled(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() < 4 || ts.len() != values.len() {
            return Err(Error::InvalidArgument(
                "sampled phi needs at least 4 (t, value) pairs".into(),
            ));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "sample grid must be strictly increasing".into(),
            ));
        }
        let (a, b) = (ts[0], ts[ts.len() - 1]);
        Self::new(
            Profile::Sampled(Arc::new(MonotoneCubic::new(ts, values))),
            a,
            b,
        )
    }

    /// `phi + h psi` on the same interval.
    pub fn perturbed(&self, h: f64, psi: Profile) -> Result<Self> {
        let profile = Profile::Sum(vec![self.profile.clone(), scale_profile(psi, h)]);
        let mut out = Self::new(profile, self.t_minus, self.t_plus)?;
        out.p_max = out.p_max.min(self.p_max);
        out.reflected = self.reflected;
        out.lip_norm = out.measure_lip_norm();
        Ok(out)
    }

    pub fn with_p_max(mut self, p_max: usize) -> Self {
        self.p_max = p_max;
        self
    }

    /// Conjugate by the reflection `t -> t_minus + t_plus - t` and flip the
    /// sign, so that a shift with `alpha * phi < 0` becomes one with
    /// `alpha * phi > 0`.
    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        out.reflected = !self.reflected;
        out
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn t_minus(&self) -> f64 {
        self.t_minus
    }

    pub fn t_plus(&self) -> f64 {
        self.t_plus
    }

    pub fn length(&self) -> f64 {
        self.t_plus - self.t_minus
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// `||phi||_Lip = sup |phi'|` over the interval.
    pub fn lip_norm(&self) -> f64 {
        self.lip_norm
    }

    /// True when derivatives come from finite differences of samples.
    pub fn approximate_derivatives(&self) -> bool {
        self.profile.is_approximate()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `phi^(order)(t)`. Orders above `p_max` are still evaluated; callers
    /// that need trustworthy values check `p_max` first.
    pub fn derivative(&self, order: usize, t: f64) -> f64 {
        if self.reflected {
            let s = self.t_minus + self.t_plus - t;
            let sign = if order.is_multiple_of(2) { -1.0 } else { 1.0 };
            sign * self.profile.derivative(order, s)
        } else {
            self.profile.derivative(order, t)
        }
    }

    /// `[phi(t), phi'(t), ..., phi^(order)(t)]`.
    pub fn derivatives(&self, order: usize, t: f64) -> Vec<f64> {
        (0..=order).map(|j| self.derivative(j, t)).collect()
    }

    fn measure_lip_norm(&self) -> f64 {
        let n = 4096;
        let (a, l) = (self.t_minus, self.length());
        let mut best = (0.0f64, a);
        for i in 0..=n {
            let t = a + l * i as f64 / n as f64;
            let d = self.derivative(1, t).abs();
            if d > best.0 {
                best = (d, t);
            }
        }
        // golden-section polish around the sampled maximum
        let h = l / n as f64;
        let (mut lo, mut hi) = ((best.1 - h).max(a), (best.1 + h).min(self.t_plus));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if self.derivative(1, x1).abs() >= self.derivative(1, x2).abs() {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        best.0.max(self.derivative(1, 0.5 * (lo + hi)).abs())
    }

    /// Check the fixed-point and non-degeneracy conditions on a Chebyshev
    /// probe grid of `probes` points (at least 64).
    pub fn validate(&self, tol: f64, probes: usize) -> Result<NondegeneracyCertificate> {
        let probes = probes.max(64);
        let (a, b) = (self.t_minus, self.t_plus);
        let value_minus = self.eval(a);
        let value_plus = self.eval(b);
        for (t, v) in [(a, value_minus), (b, value_plus)] {
            if !(v.abs() <= tol) {
                return Err(Error::EndpointMismatch {
                    t,
                    value: v.abs(),
                    tol,
                });
            }
        }
        let slope_minus = self.derivative(1, a);
        let slope_plus = self.derivative(1, b);
        for (t, s) in [(a, slope_minus), (b, slope_plus)] {
            if !(s.abs() >= 10.0 * tol) {
                return Err(Error::DegeneratePerturbation { t, slope: s });
            }
        }

        let grid = chebyshev_lobatto(a, b, probes);
        let interior = &grid[1..grid.len() - 1];
        let reference = self.eval(0.5 * (a + b)).signum();
        let mut prev: Option<(f64, f64)> = None;
        for &t in interior {
            let v = self.eval(t);
            if v.abs() <= tol {
                return Err(Error::InteriorZero { t });
            }
            if let Some((tp, vp)) = prev {
                if vp.signum() != v.signum() {
                    return Err(Error::InteriorZero {
                        t: self.bisect_zero(tp, t),
                    });
                }
            }
            prev = Some((t, v));
        }
        if let Some((t, v)) = prev {
            if v.signum() != reference {
                return Err(Error::InteriorZero { t });
            }
        }

        let mut taylor_constant = 0.0f64;
        for (tstar, slope, value) in [(a, slope_minus, value_minus), (b, slope_plus, value_plus)] {
            for &t in &grid {
                let d = t - tstar;
                if d == 0.0 || d.abs() > 0.25 * (b - a) {
                    continue;
                }
                let ratio = (self.eval(t) - value - slope * d).abs() / (d * d);
                if !ratio.is_finite() || ratio > 1e8 {
                    return Err(Error::RoughEndpoint { t, ratio });
                }
                taylor_constant = taylor_constant.max(ratio);
            }
        }

        Ok(NondegeneracyCertificate {
            value_minus,
            value_plus,
            slope_minus,
            slope_plus,
            taylor_constant,
            probes,
        })
    }

    fn bisect_zero(&self, mut lo: f64, mut hi: f64) -> f64 {
        let flo = self.eval(lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid).signum() == flo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn scale_profile(p: Profile, h: f64) -> Profile {
    match p {
        Profile::Sine { amp, omega, phase } => Profile::Sine {
            amp: amp * h,
            omega,
            phase,
        },
        Profile::Polynomial(c) => Profile::Polynomial(c.into_iter().map(|x| x * h).collect()),
        Profile::Sum(parts) => {
            Profile::Sum(parts.into_iter().map(|q| scale_profile(q, h)).collect())
        }
        Profile::Sampled(interp) => {
            let ys = interp.ys().iter().map(|y| y * h).collect();
            Profile::Sampled(Arc::new(MonotoneCubic::new(interp.xs().to_vec(), ys)))
        }
    }
}

/// Measured evidence that a field is non-degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyCertificate {
    pub value_minus: f64,
    pub value_plus: f64,
    pub slope_minus: f64,
    pub slope_plus: f64,
    /// `sup |phi(t) - phi(t*) - phi'(t*)(t - t*)| / (t - t*)^2` near each endpoint.
    pub taylor_constant: f64,
    pub probes: usize,
}

/// `n` Chebyshev–Lobatto points on `[a, b]`, clustered at both ends,
/// including the endpoints exactly.
pub fn chebyshev_lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut pts: Vec<f64> = (0..n)
        .map(|i| mid - half * (PI * i as f64 / (n - 1) as f64).cos())
        .collect();
    pts[0] = a;
    pts[n - 1] = b;
    pts
}
