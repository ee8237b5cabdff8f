//! Range test and series inverse for `Delta v = v o Phi - v`.
//!
//! With forward orbits increasing toward `t_plus`, a solution anchored at
//! the fixed points is
//!
//! ```text
//! v(t) = v(t_plus)  - sum_{j >= 0} w(Phi^j t)
//! v(t) = v(t_minus) + sum_{l >= 1} w(Phi^{-l} t)
//! ```
//!
//! and the two agree exactly when the bilateral orbit sum of `w` is the same
//! constant `v(t_plus) - v(t_minus)` for every `t`.
//!
//! All sums run in the coordinates of [`ShiftMap::normalized`]; inputs and
//! outputs use the caller's coordinates.

use crate::constants::ConstantsReport;
use crate::error::{Error, Result};
use crate::grid::{lipschitz_norm, GridFunction, ScalarFunction};
use crate::shift::{Orientation, ShiftMap};

pub const DEFAULT_TOL: f64 = 1e-10;
/// Default number of probe points for the solvability check.
pub const DEFAULT_PROBES: usize = 32;

/// Which fixed-point value was pinned when building the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// `v(t_minus) = 0` and `v(t_plus) = constant`.
    MinusZero,
}

impl Anchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::MinusZero => "v(t_minus)=0,v(t_plus)=constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityVerdict {
    /// `(|w(t_minus)|, |w(t_plus)|)`.
    pub endpoint_decay: (f64, f64),
    pub probes: Vec<f64>,
    pub bilateral_values: Vec<f64>,
    pub spread: f64,
    pub constant: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct InverseSolution {
    pub v: GridFunction,
    pub anchor: Anchor,
    /// `v(t_plus) - v(t_minus)`.
    pub constant: f64,
    pub residual_sup: f64,
    pub lip_ratio: f64,
    pub verdict: SolvabilityVerdict,
}

/// `w` viewed in normalized coordinates.
struct Oriented<'w, W: ?Sized> {
    w: &'w W,
    reflect: Option<f64>,
}

impl<W: ScalarFunction + ?Sized> Oriented<'_, W> {
    fn eval(&self, s: f64) -> f64 {
        match self.reflect {
            None => self.w.eval(s),
            Some(sum) => self.w.eval(sum - s),
        }
    }
}

/// Orbit-series machinery for one shift, one set of constants and one `w`.
pub struct SeriesSolver<'a, W: ScalarFunction + ?Sized> {
    map: &'a ShiftMap,
    inner: ShiftMap,
    report: &'a ConstantsReport,
    w: Oriented<'a, W>,
    w_lip: f64,
}

impl<'a, W: ScalarFunction + ?Sized> SeriesSolver<'a, W> {
    pub fn new(map: &'a ShiftMap, report: &'a ConstantsReport, w: &'a W) -> Self {
        let reflect = match map.orientation() {
            Orientation::Forward => None,
            Orientation::Reflected => Some(map.t_minus() + map.t_plus()),
        };
        let w_lip = w.lipschitz_estimate(map.t_minus(), map.t_plus());
        Self {
            map,
            inner: map.normalized(),
            report,
            w: Oriented { w, reflect },
            w_lip,
        }
    }

    /// The Lipschitz estimate of `w` used in tail bounds.
    pub fn w_lipschitz(&self) -> f64 {
        self.w_lip
    }

    fn a(&self) -> f64 {
        self.inner.t_minus()
    }

    fn b(&self) -> f64 {
        self.inner.t_plus()
    }

    fn endpoint_values(&self) -> (f64, f64) {
        (self.w.eval(self.a()).abs(), self.w.eval(self.b()).abs())
    }

    // sum_{j >= 0} w(Phi^j s), normalized coordinates
    fn forward_inner(&self, s: f64, tol: f64) -> Result<f64> {
        if s <= self.a() {
            // limit from inside the interval
            return self.bilateral_inner(0.5 * (self.a() + self.b()), tol);
        }
        let b = self.b();
        let w_plus = self.w.eval(b);
        if !(w_plus.abs() <= tol) {
            return Err(Error::NoDecay {
                t: self.map.to_normalized(b),
                value: w_plus.abs(),
            });
        }
        let margin = self.report.step_margin();
        let eps = self.report.eps_phi;
        let cap = self.report.iteration_cap();
        let mut x = s;
        let mut sum = 0.0;
        for _ in 0..cap {
            let gap = b - x;
            if gap <= eps && self.w_lip * gap / margin <= tol {
                return Ok(sum);
            }
            sum += self.w.eval(x);
            x = self.inner.apply(x);
        }
        Err(Error::TailStall {
            t: self.map.to_normalized(s),
            steps: cap,
        })
    }

    // sum_{l >= 1} w(Phi^{-l} s), normalized coordinates
    fn backward_inner(&self, s: f64, tol: f64) -> Result<f64> {
        let a = self.a();
        let w_minus = self.w.eval(a);
        if !(w_minus.abs() <= tol) {
            return Err(Error::NoDecay {
                t: self.map.to_normalized(a),
                value: w_minus.abs(),
            });
        }
        let margin = self.report.step_margin();
        // backward steps shrink the gap by 1 / (1 + margin), so the tail
        // from gap g is at most g (1 + margin) / margin
        let tail_factor = (1.0 + margin) / margin;
        let eps = self.report.eps_phi;
        let cap = self.report.iteration_cap();
        let invert_tol = (0.01 * tol).max(1e-15);
        if s >= self.b() {
            return self.bilateral_inner(0.5 * (a + self.b()), tol);
        }
        let mut x = s;
        let mut sum = 0.0;
        for _ in 0..cap {
            x = if x <= a {
                a
            } else {
                self.inner.invert(x, invert_tol)?
            };
            let gap = x - a;
            if gap <= eps && self.w_lip * gap * tail_factor <= tol {
                return Ok(sum);
            }
            sum += self.w.eval(x);
        }
        Err(Error::TailStall {
            t: self.map.to_normalized(s),
            steps: cap,
        })
    }

    fn check_point(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.map.t_minus(), self.map.t_plus());
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(self.map.to_normalized(t.clamp(lo, hi)))
    }

    /// `sum_{j >= 0} w(Phi^j t)` with a certified tail below `tol`. In the
    /// reflected orientation "forward" follows the normalized shift.
    pub fn forward_sum(&self, t: f64, tol: f64) -> Result<f64> {
        let s = self.check_point(t)?;
        self.forward_inner(s, tol)
    }

    /// `sum_{l >= 1} w(Phi^{-l} t)` with a certified tail below `tol`.
    pub fn backward_sum(&self, t: f64, tol: f64) -> Result<f64> {
        let s = self.check_point(t)?;
        self.backward_inner(s, tol)
    }

    fn bilateral_inner(&self, s: f64, tol: f64) -> Result<f64> {
        let next = self.inner.apply(s);
        Ok(self.backward_inner(s, tol)? + self.w.eval(s) + self.forward_inner(next, tol)?)
    }

    /// `sum_k w(Phi^k t)` over all integers `k`.
    pub fn bilateral_sum(&self, t: f64, tol: f64) -> Result<f64> {
        let s = self.check_point(t)?;
        self.bilateral_inner(s, tol)
    }

    /// Range test: `w` must vanish at both fixed points and its bilateral
    /// orbit sum must not depend on the probe. Failure of the endpoint test
    /// is reported in the verdict, not as an error.
    pub fn check_solvability(&self, probes: &[f64], tol: f64) -> Result<SolvabilityVerdict> {
        let (lo, hi) = (self.map.t_minus(), self.map.t_plus());
        if let Some(t) = probes.iter().find(|t| !(**t > lo && **t < hi)) {
            return Err(Error::InvalidArgument(format!(
                "probe {t} is not strictly inside ({lo}, {hi})"
            )));
        }
        let endpoint_decay = self.endpoint_values();
        let decays = endpoint_decay.0 <= tol && endpoint_decay.1 <= tol;
        if !decays {
            return Ok(SolvabilityVerdict {
                endpoint_decay,
                probes: probes.to_vec(),
                bilateral_values: Vec::new(),
                spread: f64::INFINITY,
                constant: f64::NAN,
                tol,
                passed: false,
            });
        }
        let sum_tol = tol / 8.0;
        let values = map_points(probes, |t| {
            self.bilateral_inner(self.map.to_normalized(t), sum_tol)
        })?;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = max - min;
        let constant = values.iter().sum::<f64>() / values.len() as f64;
        // in reflected coordinates the bilateral constant is v(t_minus) - v(t_plus)
        let constant = match self.map.orientation() {
            Orientation::Forward => constant,
            Orientation::Reflected => -constant,
        };
        let passed = spread <= tol * (1.0 + constant.abs());
        Ok(SolvabilityVerdict {
            endpoint_decay,
            probes: probes.to_vec(),
            bilateral_values: values,
            spread,
            constant,
            tol,
            passed,
        })
    }

    /// `v` in normalized coordinates, anchored so that `v(a) = 0` and
    /// `v(b) = inner_constant`. Uses the forward formula on the upper half.
    fn value_inner(&self, s: f64, inner_constant: f64, tol: f64) -> Result<f64> {
        let mid = 0.5 * (self.a() + self.b());
        if s >= mid {
            Ok(inner_constant - self.forward_inner(s, tol)?)
        } else {
            self.backward_inner(s, tol)
        }
    }

    /// The two closed forms for `v(t)` under the standard anchor, from the
    /// forward and the backward orbit respectively.
    pub fn both_formulas(&self, t: f64, constant: f64, tol: f64) -> Result<(f64, f64)> {
        let s = self.check_point(t)?;
        let inner_constant = self.inner_constant(constant);
        let fwd = inner_constant - self.forward_inner(s, tol)?;
        let bwd = self.backward_inner(s, tol)?;
        Ok(match self.map.orientation() {
            Orientation::Forward => (fwd, bwd),
            Orientation::Reflected => (fwd - inner_constant, bwd - inner_constant),
        })
    }

    fn inner_constant(&self, constant: f64) -> f64 {
        match self.map.orientation() {
            Orientation::Forward => constant,
            Orientation::Reflected => -constant,
        }
    }

    /// Solve on `grid`, which must span the interval. The solution is
    /// anchored at `v(t_minus) = 0`.
    pub fn solve_on(&self, grid: &[f64], tol: f64) -> Result<InverseSolution> {
        let (lo, hi) = (self.map.t_minus(), self.map.t_plus());
        if grid.len() < 2 || grid[0] != lo || grid[grid.len() - 1] != hi {
            return Err(Error::InvalidArgument(format!(
                "output grid must start at {lo} and end at {hi}"
            )));
        }
        let probes = default_probes(lo, hi, DEFAULT_PROBES);
        let verdict = self.check_solvability(&probes, tol)?;
        if !verdict.passed {
            return Err(Error::SolvabilityRequired {
                spread: verdict.spread,
                w_minus: verdict.endpoint_decay.0,
                w_plus: verdict.endpoint_decay.1,
            });
        }
        let sum_tol = tol / 8.0;
        let inner_constant = self.inner_constant(verdict.constant);

        // in reflected coordinates the anchor lands on t_plus; shift afterwards
        let offset = match self.map.orientation() {
            Orientation::Forward => 0.0,
            Orientation::Reflected => -inner_constant,
        };
        let values = map_points(grid, |t| {
            Ok(self.value_inner(self.map.to_normalized(t), inner_constant, sum_tol)? + offset)
        })?;
        let residuals = map_points(grid, |t| {
            let s = self.map.to_normalized(t);
            let next = self.inner.apply(s);
            let v_s = self.value_inner(s, inner_constant, sum_tol)?;
            let v_next = self.value_inner(next, inner_constant, sum_tol)?;
            Ok((v_next - v_s - self.w.eval(s)).abs())
        })?;
        let residual_sup = residuals.iter().copied().fold(0.0, f64::max);

        let v = GridFunction::new(grid.to_vec(), values)?;
        let w_grid = GridFunction::sample(grid.to_vec(), |t| self.w.w.eval(t))?;
        let w_lip = lipschitz_norm(&w_grid);
        let v_lip = lipschitz_norm(&v);
        let lip_ratio = if w_lip > 0.0 { v_lip / w_lip } else { 0.0 };

        if !(residual_sup <= tol) {
            return Err(Error::ToleranceUnreachable {
                residual: residual_sup,
                tol,
            });
        }
        Ok(InverseSolution {
            v,
            anchor: Anchor::MinusZero,
            constant: verdict.constant,
            residual_sup,
            lip_ratio,
            verdict,
        })
    }
}

/// `n` probe points evenly spaced strictly inside `(a, b)`.
pub fn default_probes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64)
        .collect()
}

#[cfg(feature = "parallel")]
fn map_points<F>(points: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    points.par_iter().map(|t| f(*t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<F>(points: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    points.iter().map(|t| f(*t)).collect()
}

pub fn forward_sum<W: ScalarFunction + ?Sized>(
    map: &ShiftMap,
    report: &ConstantsReport,
    w: &W,
    t: f64,
    tol: f64,
) -> Result<f64> {
    SeriesSolver::new(map, report, w).forward_sum(t, tol)
}

pub fn backward_sum<W: ScalarFunction + ?Sized>(
    map: &ShiftMap,
    report: &ConstantsReport,
    w: &W,
    t: f64,
    tol: f64,
) -> Result<f64> {
    SeriesSolver::new(map, report, w).backward_sum(t, tol)
}

pub fn check_solvability<W: ScalarFunction + ?Sized>(
    map: &ShiftMap,
    report: &ConstantsReport,
    w: &W,
    probes: &[f64],
    tol: f64,
) -> Result<SolvabilityVerdict> {
    SeriesSolver::new(map, report, w).check_solvability(probes, tol)
}

/// Solve `v o Phi - v = w` on the grid of `w`.
pub fn solve(
    map: &ShiftMap,
    w: &GridFunction,
    report: &ConstantsReport,
    tol: f64,
) -> Result<InverseSolution> {
    SeriesSolver::new(map, report, w).solve_on(w.grid(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::compute_constants;
    use crate::field::PerturbationField;
    use crate::grid::uniform_grid;
    use std::f64::consts::PI;

    fn setup(alpha: f64) -> (ShiftMap, ConstantsReport) {
        let map = ShiftMap::new(PerturbationField::sine(), alpha).unwrap();
        let report = compute_constants(&map, 0.1).unwrap();
        (map, report)
    }

    #[test]
    fn zero_w_sums_to_zero() {
        let (map, report) = setup(0.1);
        let zero = |_: f64| 0.0;
        let s = SeriesSolver::new(&map, &report, &zero);
        for t in [0.0, 0.5, 1.0, 2.9, PI] {
            assert_eq!(s.forward_sum(t, 1e-10).unwrap(), 0.0);
            assert_eq!(s.backward_sum(t, 1e-10).unwrap(), 0.0);
        }
    }

    #[test]
    fn telescoping_identity_sums() {
        let (map, report) = setup(0.1);
        let w = |t: f64| 0.1 * t.sin();
        let s = SeriesSolver::new(&map, &report, &w);
        assert!((s.forward_sum(1.0, 1e-10).unwrap() - (PI - 1.0)).abs() <= 1e-10);
        assert!((s.backward_sum(1.0, 1e-10).unwrap() - 1.0).abs() <= 1e-10);
        assert_eq!(s.backward_sum(0.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn telescoping_cosine() {
        let (map, report) = setup(0.1);
        let w = |t: f64| (t + 0.1 * t.sin()).cos() - t.cos();
        let got = forward_sum(&map, &report, &w, 1.0, 1e-10).unwrap();
        assert!((got - (-1.0 - 1f64.cos())).abs() <= 1e-10, "{got}");
    }

    #[test]
    fn nonvanishing_w_has_no_decay() {
        let (map, report) = setup(0.1);
        let one = |_: f64| 1.0;
        assert!(matches!(
            forward_sum(&map, &report, &one, 1.0, 1e-10),
            Err(Error::NoDecay { .. })
        ));
        assert!(matches!(
            backward_sum(&map, &report, &one, 1.0, 1e-10),
            Err(Error::NoDecay { .. })
        ));
    }

    #[test]
    fn verdicts() {
        let (map, report) = setup(0.1);
        let probes = default_probes(0.0, PI, 32);

        let w = |t: f64| 0.1 * t.sin();
        let v = check_solvability(&map, &report, &w, &probes, 1e-10).unwrap();
        assert!(v.passed);
        assert!((v.constant - PI).abs() <= 1e-10);
        assert!(v.spread <= 1e-10);

        let one = |_: f64| 1.0;
        let v = check_solvability(&map, &report, &one, &probes, 1e-10).unwrap();
        assert!(!v.passed);
        assert_eq!(v.endpoint_decay, (1.0, 1.0));

        // bump supported inside one fundamental domain: orbit sums see it once or not at all
        let bump = |t: f64| {
            if (1.0..1.5).contains(&t) {
                (t - 1.0) * (1.5 - t)
            } else {
                0.0
            }
        };
        let v = check_solvability(&map, &report, &bump, &probes, 1e-10).unwrap();
        assert!(!v.passed);
        assert!(v.spread > 1e3 * 1e-10);
    }

    #[test]
    fn analytic_w_oscillation_is_exponentially_small() {
        let probes = default_probes(0.0, PI, 32);
        let sin2 = |t: f64| (2.0 * t).sin();
        let spread = |alpha: f64| {
            let (map, report) = setup(alpha);
            check_solvability(&map, &report, &sin2, &probes, 1e-10)
                .unwrap()
                .spread
        };
        assert!(spread(0.1) < 1e-10);
        let big = spread(0.7);
        assert!(big > 1e3 * 1e-10, "{big}");
        // two probes that are not orbit-equivalent disagree
        let (map, report) = setup(0.7);
        let s = SeriesSolver::new(&map, &report, &sin2);
        let b1 = s.bilateral_sum(0.7, 1e-11).unwrap();
        let b2 = s.bilateral_sum(1.9, 1e-11).unwrap();
        assert!((b1 - b2).abs() > 1e-6);
    }

    #[test]
    fn probes_must_be_interior() {
        let (map, report) = setup(0.1);
        let w = |t: f64| 0.1 * t.sin();
        assert!(check_solvability(&map, &report, &w, &[0.0, 1.0], 1e-10).is_err());
    }

    #[test]
    fn solve_zero_and_identity() {
        let (map, report) = setup(0.1);
        let grid = uniform_grid(0.0, PI, 201);
        let zero = GridFunction::sample(grid.clone(), |_| 0.0).unwrap();
        let sol = solve(&map, &zero, &report, 1e-10).unwrap();
        assert!(sol.v.values().iter().all(|v| *v == 0.0));

        let w = |t: f64| 0.1 * t.sin();
        let sol = SeriesSolver::new(&map, &report, &w)
            .solve_on(&grid, 1e-10)
            .unwrap();
        for (t, v) in sol.v.grid().iter().zip(sol.v.values()) {
            assert!((v - t).abs() <= 1e-10, "{t}: {v}");
        }
        assert!(sol.residual_sup <= 1e-10);
        assert!(sol.lip_ratio <= report.k_phi);
        assert_eq!(sol.anchor, Anchor::MinusZero);
    }

    #[test]
    fn solve_recovers_smooth_v0() {
        let (map, report) = setup(0.1);
        let v0 = |t: f64| t.cos() + 0.3 * t * t;
        let w = |t: f64| v0(t + 0.1 * t.sin()) - v0(t);
        let grid = uniform_grid(0.0, PI, 1001);
        let sol = SeriesSolver::new(&map, &report, &w)
            .solve_on(&grid, 1e-10)
            .unwrap();
        let worst = sol
            .v
            .grid()
            .iter()
            .zip(sol.v.values())
            .map(|(t, v)| (v - (v0(*t) - v0(0.0))).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn solve_rejects_out_of_range() {
        let (map, report) = setup(0.1);
        let grid = uniform_grid(0.0, PI, 101);
        let w = GridFunction::sample(grid, |t| 1.0 + t).unwrap();
        assert!(matches!(
            solve(&map, &w, &report, 1e-10),
            Err(Error::SolvabilityRequired { .. })
        ));
    }

    #[test]
    fn formulas_agree_in_middle_third() {
        let (map, report) = setup(0.2);
        let v0 = |t: f64| (1.5 * t).sin() + t;
        let w = |t: f64| v0(t + 0.2 * t.sin()) - v0(t);
        let s = SeriesSolver::new(&map, &report, &w);
        let verdict = s
            .check_solvability(&default_probes(0.0, PI, 32), 1e-10)
            .unwrap();
        assert!(verdict.passed);
        for i in 0..20 {
            let t = PI / 3.0 + PI / 3.0 * i as f64 / 19.0;
            let (f, b) = s.both_formulas(t, verdict.constant, 1e-11).unwrap();
            assert!((f - b).abs() <= 1e-9, "{t}: {f} vs {b}");
        }
    }

    #[test]
    fn reflected_orientation_solves_in_original_coordinates() {
        // alpha < 0 with phi = sin: orbits run toward 0
        let map = ShiftMap::new(PerturbationField::sine(), -0.15).unwrap();
        let report = compute_constants(&map, 0.1).unwrap();
        let v0 = |t: f64| (0.7 * t).cos() + 0.2 * t;
        let w = |t: f64| v0(t - 0.15 * t.sin()) - v0(t);
        let grid = uniform_grid(0.0, PI, 301);
        let sol = SeriesSolver::new(&map, &report, &w)
            .solve_on(&grid, 1e-10)
            .unwrap();
        assert_eq!(sol.v.values()[0], 0.0);
        for (t, v) in sol.v.grid().iter().zip(sol.v.values()) {
            assert!((v - (v0(*t) - v0(0.0))).abs() <= 1e-8, "{t}");
        }
        assert!((sol.constant - (v0(PI) - v0(0.0))).abs() <= 1e-9);
    }

    #[test]
    fn endpoint_tail_bound_holds() {
        let (map, report) = setup(0.1);
        let w = |t: f64| (t + 0.1 * t.sin()).cos() - t.cos();
        let s = SeriesSolver::new(&map, &report, &w);
        let lip = s.w_lipschitz();
        for i in 0..20 {
            let t = PI - report.eps_phi * (i as f64 + 0.5) / 20.0;
            let sum = s.forward_sum(t, 1e-13).unwrap().abs();
            assert!(sum <= lip * (PI - t) / report.step_margin());
        }
    }
}
