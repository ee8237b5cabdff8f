//! The non-uniform shift `Phi(t) = t + alpha * phi(t)`.

use crate::error::{Error, Result};
use crate::field::PerturbationField;

/// Default absolute tolerance for [`ShiftMap::invert`].
pub const DEFAULT_INVERT_TOL: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 100;

/// Which way orbits move under the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `alpha * phi > 0`: forward orbits increase toward `t_plus`.
    Forward,
    /// `alpha * phi < 0`: handled by reflecting `t -> t_minus + t_plus - t`.
    Reflected,
}

#[derive(Debug, Clone)]
pub struct ShiftMap {
    field: PerturbationField,
    alpha: f64,
    orientation: Orientation,
}

impl ShiftMap {
    /// Requires `0 < |alpha| < 1 / ||phi||_Lip`, which makes the shift a
    /// strictly increasing bijection of the interval.
    pub fn new(field: PerturbationField, alpha: f64) -> Result<Self> {
        let alpha_max = 1.0 / field.lip_norm();
        if !(alpha != 0.0 && alpha.is_finite() && alpha.abs() < alpha_max) {
            return Err(Error::AmplitudeTooLarge { alpha, alpha_max });
        }
        let mid = 0.5 * (field.t_minus() + field.t_plus());
        let orientation = if alpha * field.eval(mid) > 0.0 {
            Orientation::Forward
        } else {
            Orientation::Reflected
        };
        Ok(Self {
            field,
            alpha,
            orientation,
        })
    }

    pub fn field(&self) -> &PerturbationField {
        &self.field
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn t_minus(&self) -> f64 {
        self.field.t_minus()
    }

    pub fn t_plus(&self) -> f64 {
        self.field.t_plus()
    }

    /// The conjugated shift in which forward orbits always increase. For a
    /// forward-oriented map this is a copy of `self`.
    pub fn normalized(&self) -> ShiftMap {
        match self.orientation {
            Orientation::Forward => self.clone(),
            Orientation::Reflected => ShiftMap {
                field: self.field.reflected(),
                alpha: self.alpha,
                orientation: Orientation::Forward,
            },
        }
    }

    /// Map a point into the coordinates of [`normalized`](Self::normalized).
    /// The reflection is an involution, so this also maps back.
    pub fn to_normalized(&self, t: f64) -> f64 {
        match self.orientation {
            Orientation::Forward => t,
            Orientation::Reflected => self.t_minus() + self.t_plus() - t,
        }
    }

    fn check_domain(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.t_minus(), self.t_plus());
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// `Phi(t)` for `t` in the interval.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        Ok(self.apply(t))
    }

    /// `Phi(t)` without the domain check, clamped to the interval.
    pub(crate) fn apply(&self, t: f64) -> f64 {
        (t + self.alpha * self.field.eval(t)).clamp(self.t_minus(), self.t_plus())
    }

    /// `Phi'(t) = 1 + alpha phi'(t)`.
    pub fn slope(&self, t: f64) -> f64 {
        1.0 + self.alpha * self.field.derivative(1, t)
    }

    /// Solve `Phi(t) = y` by Newton's method from `y - alpha phi(y)`,
    /// falling back to bisection whenever a step leaves the bracket.
    pub fn invert(&self, y: f64, tol: f64) -> Result<f64> {
        let y = self.check_domain(y)?;
        let (mut lo, mut hi) = (self.t_minus(), self.t_plus());
        if y == lo || y == hi {
            return Ok(y);
        }
        let mut t = (y - self.alpha * self.field.eval(y)).clamp(lo, hi);
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let g = t + self.alpha * self.field.eval(t) - y;
            if g == 0.0 {
                return Ok(t);
            }
            if g > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            let mut next = t - g / self.slope(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - t).abs();
            t = next;
            if step <= 4.0 * f64::EPSILON * t.abs() + f64::MIN_POSITIVE
                || hi - lo <= 4.0 * f64::EPSILON * hi.abs()
            {
                let residual = (t + self.alpha * self.field.eval(t) - y).abs();
                if residual <= tol {
                    return Ok(t);
                }
                break;
            }
        }
        Err(Error::NoConvergence {
            y,
            iterations: MAX_NEWTON_ITERATIONS,
        })
    }

    /// `Phi^k t0` for `k` in `k_min..=k_max`.
    pub fn orbit(&self, t0: f64, k_min: i64, k_max: i64) -> Result<Orbit> {
        if k_min > 0 || k_max < 0 {
            return Err(Error::InvalidArgument(format!(
                "orbit range {k_min}..={k_max} must contain 0"
            )));
        }
        let t0 = self.check_domain(t0)?;
        let mut backward = Vec::with_capacity((-k_min) as usize);
        let mut x = t0;
        for _ in 0..(-k_min) {
            x = self.invert(x, DEFAULT_INVERT_TOL)?;
            backward.push(x);
        }
        backward.reverse();
        let mut points = backward;
        points.push(t0);
        let mut x = t0;
        for _ in 0..k_max {
            x = self.apply(x);
            points.push(x);
        }
        Ok(Orbit {
            base: t0,
            k_min,
            points,
        })
    }
}

/// A finite piece of the orbit `t_k = Phi^k t_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub base: f64,
    pub k_min: i64,
    pub points: Vec<f64>,
}

impl Orbit {
    pub fn k_max(&self) -> i64 {
        self.k_min + self.points.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        if k < self.k_min {
            return None;
        }
        self.points.get((k - self.k_min) as usize).copied()
    }

    /// `(k, t_k)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.points
            .iter()
            .enumerate()
            .map(move |(i, t)| (self.k_min + i as i64, *t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine_map(alpha: f64) -> ShiftMap {
        ShiftMap::new(PerturbationField::sine(), alpha).unwrap()
    }

    fn bisection_oracle(map: &ShiftMap, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + map.alpha() * mid.sin() < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eval_examples() {
        let m = sine_map(0.1);
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(m.eval(PI / 2.0).unwrap(), PI / 2.0 + 0.1);
        let two = m.eval(m.eval(1.0).unwrap()).unwrap();
        let orbit = m.orbit(1.0, 0, 2).unwrap();
        assert!((two - orbit.get(2).unwrap()).abs() <= 1e-14);
        assert!(matches!(m.eval(3.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn invert_examples() {
        let m = sine_map(0.1);
        assert_eq!(m.invert(0.0, 1e-12).unwrap(), 0.0);
        let y = m.eval(1.0).unwrap();
        assert!((m.invert(y, 1e-12).unwrap() - 1.0).abs() <= 1e-12);
        let t = m.invert(1.2, 1e-12).unwrap();
        assert!((t - bisection_oracle(&m, 1.2)).abs() <= 1e-12);
    }

    #[test]
    fn amplitude_bound_enforced() {
        assert!(matches!(
            ShiftMap::new(PerturbationField::sine(), 1.5),
            Err(Error::AmplitudeTooLarge { .. })
        ));
        assert!(ShiftMap::new(PerturbationField::sine(), 0.0).is_err());
        assert!(ShiftMap::new(PerturbationField::sine(), 0.99).is_ok());
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let m = sine_map(0.1);
        let o = m.orbit(PI, -5, 5).unwrap();
        assert!(o.points.iter().all(|t| *t == PI));
    }

    #[test]
    fn forward_orbit_converges_to_t_plus() {
        let m = sine_map(0.1);
        let o = m.orbit(1.0, 0, 200).unwrap();
        // loop oracle
        let mut t = 1.0f64;
        for _ in 0..200 {
            t += 0.1 * t.sin();
        }
        assert!((o.get(200).unwrap() - t).abs() < 1e-14);
        assert!((PI - t).abs() < 1e-6);
        assert!(o.points.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn orbit_satisfies_recurrence() {
        let m = sine_map(0.1);
        let o = m.orbit(1.0, -5, 5).unwrap();
        for k in -5..5 {
            let next = m.eval(o.get(k).unwrap()).unwrap();
            assert!((next - o.get(k + 1).unwrap()).abs() <= 1e-12);
        }
        assert_eq!(o.k_max(), 5);
    }

    #[test]
    fn reflected_orientation_for_negative_alpha() {
        let m = sine_map(-0.2);
        assert_eq!(m.orientation(), Orientation::Reflected);
        let n = m.normalized();
        assert_eq!(n.orientation(), Orientation::Forward);
        // conjugacy: R Phi R = normalized Phi
        for &t in &[0.2, 1.0, 2.5] {
            let lhs = m.to_normalized(m.eval(m.to_normalized(t)).unwrap());
            assert!((lhs - n.eval(t).unwrap()).abs() < 1e-14);
            assert!(n.eval(t).unwrap() > t);
        }
        let o = m.orbit(2.0, 0, 300).unwrap();
        assert!(o.get(300).unwrap() < 1e-6);
    }

    #[test]
    fn contraction_near_t_plus() {
        // |Phi tb - Phi ta| <= (1 - |alpha phi'(t+)| (1 - 2 delta)) |tb - ta| within eps_phi
        let m = sine_map(0.3);
        let delta = 0.1;
        let eps = 0.18;
        let factor = 1.0 - 0.3 * (1.0 - 2.0 * delta);
        for i in 0..50 {
            let ta = PI - eps + eps * i as f64 / 60.0;
            let tb = ta + 0.001;
            let lhs = (m.eval(tb).unwrap() - m.eval(ta).unwrap()).abs();
            assert!(lhs <= factor * (tb - ta));
        }
    }

    proptest! {
        #[test]
        fn strictly_increasing(a in 0.0f64..PI, b in 0.0f64..PI, alpha in 0.01f64..0.95) {
            prop_assume!(a < b);
            let m = sine_map(alpha);
            prop_assert!(m.eval(a).unwrap() < m.eval(b).unwrap() || b - a < 1e-15);
        }

        #[test]
        fn invert_round_trip(t in 0.0f64..PI, alpha in -0.9f64..0.9) {
            prop_assume!(alpha.abs() > 1e-3);
            let m = sine_map(alpha);
            let y = m.eval(t).unwrap();
            prop_assert!((m.invert(y, 1e-12).unwrap() - t).abs() <= 1e-11);
        }

        #[test]
        fn global_expansion_bound(a in 0.0f64..PI, b in 0.0f64..PI, k in 0usize..40) {
            let m = sine_map(0.2);
            let (mut x, mut y) = (a, b);
            for _ in 0..k {
                x = m.eval(x).unwrap();
                y = m.eval(y).unwrap();
            }
            let bound = 1.2f64.powi(k as i32) * (b - a).abs();
            prop_assert!((y - x).abs() <= bound + 1e-12);
        }
    }
}
