//! Bounded elements of the kernel of `v -> v o Phi - v`.
//!
//! Every bounded invariant function is determined by its values on a
//! fundamental domain `[t0, Phi t0)`, and any seed there extends uniquely by
//! walking orbits. Only constant seeds give elements that are continuous at
//! the fixed points.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::constants::{compute_constants, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::shift::{ShiftMap, DEFAULT_INVERT_TOL};

/// Samples per radius in [`oscillation_profile`].
pub const OSCILLATION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedKind {
    Constant,
    Step,
    Sampled,
    Function,
}

impl SeedKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedKind::Constant => "constant",
            SeedKind::Step => "step",
            SeedKind::Sampled => "sampled",
            SeedKind::Function => "function",
        }
    }
}

/// Seed data on the fundamental domain, in the caller's coordinates.
#[derive(Clone)]
pub enum Seed {
    Constant(f64),
    /// `left` below `split`, `right` from `split` on.
    Step {
        split: f64,
        left: f64,
        right: f64,
    },
    /// Piecewise constant: `values[i]` on `[knots[i], knots[i + 1])`.
    Sampled {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seed::Constant(c) => write!(f, "Constant({c})"),
            Seed::Step { split, left, right } => {
                write!(f, "Step {{ split: {split}, left: {left}, right: {right} }}")
            }
            Seed::Sampled { knots, .. } => write!(f, "Sampled({} knots)", knots.len()),
            Seed::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Seed {
    pub fn kind(&self) -> SeedKind {
        match self {
            Seed::Constant(_) => SeedKind::Constant,
            Seed::Step { .. } => SeedKind::Step,
            Seed::Sampled { .. } => SeedKind::Sampled,
            Seed::Function(_) => SeedKind::Function,
        }
    }

    /// Two-column CSV of `(t, value)` rows, read as a piecewise-constant seed.
    pub fn load(path: impl AsRef<Path>) -> Result<Seed> {
        let g = GridFunction::load(path)?;
        Ok(Seed::Sampled {
            knots: g.grid().to_vec(),
            values: g.values().to_vec(),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Seed::Constant(c) => *c,
            Seed::Step { split, left, right } => {
                if t < *split {
                    *left
                } else {
                    *right
                }
            }
            Seed::Sampled { knots, values } => {
                let i = knots.partition_point(|k| *k <= t);
                values[i.saturating_sub(1)]
            }
            Seed::Function(f) => f(t),
        }
    }
}

/// A kernel element: seed data on the fundamental domain between `t0`
/// (included) and `Phi t0` (excluded), extended by invariance.
#[derive(Debug, Clone)]
pub struct KernelElement {
    t0: f64,
    end: f64,
    seed: Seed,
    cap: usize,
}

impl KernelElement {
    pub fn new(map: &ShiftMap, t0: f64, seed: Seed) -> Result<Self> {
        let (lo, hi) = (map.t_minus(), map.t_plus());
        if !(t0 > lo && t0 < hi) {
            return Err(Error::OutOfDomain { t: t0, lo, hi });
        }
        let end = map.eval(t0)?;
        if end == t0 {
            return Err(Error::InvalidArgument(format!(
                "fundamental domain at t0 = {t0} is empty"
            )));
        }
        if let Seed::Sampled { knots, values } = &seed {
            if knots.is_empty() || knots.len() != values.len() {
                return Err(Error::InvalidArgument(
                    "sampled seed needs matching knots and values".into(),
                ));
            }
        }
        let cap = compute_constants(map, DEFAULT_DELTA)?.iteration_cap();
        Ok(Self { t0, end, seed, cap })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `Phi t0`.
    pub fn domain_end(&self) -> f64 {
        self.end
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    pub fn seed_kind(&self) -> SeedKind {
        self.seed.kind()
    }

    /// `sup - inf` of the seed over the fundamental domain.
    pub fn seed_oscillation(&self) -> f64 {
        match &self.seed {
            Seed::Constant(_) => 0.0,
            Seed::Step { split, left, right } => {
                let (a, b) = self.domain_bounds();
                if *split > a && *split < b {
                    (left - right).abs()
                } else {
                    0.0
                }
            }
            Seed::Sampled { .. } | Seed::Function(_) => {
                let (a, b) = self.domain_bounds();
                let n = OSCILLATION_SAMPLES;
                let vals = (0..n).map(|i| self.seed.eval(a + (b - a) * i as f64 / n as f64));
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                hi - lo
            }
        }
    }

    fn domain_bounds(&self) -> (f64, f64) {
        (self.t0.min(self.end), self.t0.max(self.end))
    }

    fn in_domain(&self, x: f64) -> bool {
        if self.end > self.t0 {
            x >= self.t0 && x < self.end
        } else {
            x <= self.t0 && x > self.end
        }
    }

    // x lies on the t0 side of the domain, so forward steps approach it
    fn before(&self, x: f64) -> bool {
        if self.end > self.t0 {
            x < self.t0
        } else {
            x > self.t0
        }
    }

    /// `(k, Phi^k t)` with `Phi^k t` in the fundamental domain.
    pub fn land(&self, map: &ShiftMap, t: f64) -> Result<(i64, f64)> {
        let (lo, hi) = (map.t_minus(), map.t_plus());
        if !(t > lo && t < hi) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let exhausted = || Error::OrbitExhausted {
            t,
            distance: (t - lo).min(hi - t),
        };
        let mut x = t;
        let mut k = 0i64;
        if self.before(x) {
            for _ in 0..self.cap {
                if !self.before(x) {
                    return Ok((k, self.wrap(x)));
                }
                x = map.eval(x)?;
                k += 1;
            }
            Err(exhausted())
        } else {
            for _ in 0..self.cap {
                if self.in_domain(x) || self.before(x) {
                    return Ok((k, self.wrap(x)));
                }
                x = map.invert(x, DEFAULT_INVERT_TOL)?;
                k -= 1;
            }
            Err(exhausted())
        }
    }

    // rounding can push a landing point just across the seam; it then
    // represents the orbit of t0 itself
    fn wrap(&self, x: f64) -> f64 {
        if self.in_domain(x) {
            x
        } else {
            self.t0
        }
    }

    pub fn eval(&self, map: &ShiftMap, t: f64) -> Result<f64> {
        let (_, x) = self.land(map, t)?;
        Ok(self.seed.eval(x))
    }
}

pub fn kernel_eval(map: &ShiftMap, elem: &KernelElement, t: f64) -> Result<f64> {
    elem.eval(map, t)
}

/// `max |v(Phi t) - v(t)|` over the probes.
pub fn verify_invariance(map: &ShiftMap, elem: &KernelElement, probes: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in probes {
        let v = elem.eval(map, t)?;
        let v_next = elem.eval(map, map.eval(t)?)?;
        worst = worst.max((v_next - v).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Minus,
    Plus,
}

impl Endpoint {
    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::Minus => "t_minus",
            Endpoint::Plus => "t_plus",
        }
    }
}

/// `sup - inf` of the element over the one-sided punctured neighbourhood of
/// radius `r` at `endpoint`, from [`OSCILLATION_SAMPLES`] points per radius.
pub fn oscillation_profile(
    map: &ShiftMap,
    elem: &KernelElement,
    endpoint: Endpoint,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = (map.t_minus(), map.t_plus());
    if radii.iter().any(|r| !(*r > 0.0 && *r < hi - lo)) {
        return Err(Error::InvalidArgument(
            "radii must lie in (0, t_plus - t_minus)".into(),
        ));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("radii must be decreasing".into()));
    }
    let n = OSCILLATION_SAMPLES;
    radii
        .iter()
        .map(|&r| {
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..n {
                let d = r * (i as f64 + 0.5) / n as f64;
                let t = match endpoint {
                    Endpoint::Minus => lo + d,
                    Endpoint::Plus => hi - d,
                };
                let v = elem.eval(map, t)?;
                min = min.min(v);
                max = max.max(v);
            }
            Ok((r, max - min))
        })
        .collect()
}

/// CSV with header `radius,oscillation`.
pub fn profile_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("radius,oscillation\n");
    for (r, o) in rows {
        out.push_str(&format!(
            "{},{}\n",
            crate::grid::fmt_f64(*r),
            crate::grid::fmt_f64(*o)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PerturbationField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(alpha: f64) -> ShiftMap {
        ShiftMap::new(PerturbationField::sine(), alpha).unwrap()
    }

    fn half_step(map: &ShiftMap, t0: f64) -> Seed {
        let end = map.eval(t0).unwrap();
        Seed::Step {
            split: 0.5 * (t0 + end),
            left: 1.0,
            right: 0.0,
        }
    }

    fn probes(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.01..PI - 0.01)).collect()
    }

    #[test]
    fn constant_seed_is_constant() {
        let map = sine(0.1);
        let e = KernelElement::new(&map, 1.0, Seed::Constant(2.5)).unwrap();
        for t in probes(50, 1) {
            assert_eq!(e.eval(&map, t).unwrap(), 2.5);
        }
        assert_eq!(verify_invariance(&map, &e, &probes(100, 2)).unwrap(), 0.0);
    }

    #[test]
    fn domain_points_land_at_k_zero() {
        let map = sine(0.1);
        let e = KernelElement::new(&map, 1.0, half_step(&map, 1.0)).unwrap();
        assert_eq!(e.land(&map, 1.02).unwrap(), (0, 1.02));
        assert_eq!(e.eval(&map, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn step_seed_follows_orbits() {
        let map = sine(0.1);
        let e = KernelElement::new(&map, 1.0, half_step(&map, 1.0)).unwrap();
        let mut t = 1.02;
        for _ in 0..3 {
            t = map.eval(t).unwrap();
        }
        assert_eq!(e.eval(&map, t).unwrap(), e.eval(&map, 1.02).unwrap());
        assert_eq!(e.land(&map, t).unwrap().0, -3);
        assert_eq!(verify_invariance(&map, &e, &probes(100, 3)).unwrap(), 0.0);
    }

    #[test]
    fn base_point_independence() {
        let map = sine(0.1);
        let first = Arc::new(KernelElement::new(&map, 1.0, half_step(&map, 1.0)).unwrap());
        let m = map.clone();
        let inner = Arc::clone(&first);
        let f = Seed::Function(Arc::new(move |t| inner.eval(&m, t).unwrap()));
        let second = KernelElement::new(&map, 2.0, f).unwrap();
        for t in probes(100, 4) {
            assert_eq!(
                second.eval(&map, t).unwrap(),
                first.eval(&map, t).unwrap(),
                "{t}"
            );
        }
    }

    #[test]
    fn oscillation_dichotomy() {
        let map = sine(0.1);
        let radii = [0.1, 0.01, 0.001];
        let c = KernelElement::new(&map, 1.0, Seed::Constant(1.0)).unwrap();
        let s = KernelElement::new(&map, 1.0, half_step(&map, 1.0)).unwrap();
        assert_eq!(s.seed_oscillation(), 1.0);
        for end in [Endpoint::Minus, Endpoint::Plus] {
            for (_, o) in oscillation_profile(&map, &c, end, &radii).unwrap() {
                assert_eq!(o, 0.0);
            }
            for (_, o) in oscillation_profile(&map, &s, end, &radii).unwrap() {
                assert!(o >= 0.99, "{end:?} {o}");
            }
        }
    }

    #[test]
    fn sampled_seed_is_piecewise_constant() {
        let map = sine(0.2);
        let end = map.eval(1.0).unwrap();
        let knots: Vec<f64> = (0..8).map(|i| 1.0 + (end - 1.0) * i as f64 / 8.0).collect();
        let values: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let e = KernelElement::new(&map, 1.0, Seed::Sampled { knots, values }).unwrap();
        assert_eq!(e.seed_kind(), SeedKind::Sampled);
        assert_eq!(verify_invariance(&map, &e, &probes(100, 5)).unwrap(), 0.0);
    }

    #[test]
    fn reflected_orientation() {
        let map = sine(-0.1);
        let e = KernelElement::new(&map, 2.0, half_step(&map, 2.0)).unwrap();
        assert!(e.domain_end() < 2.0);
        assert_eq!(verify_invariance(&map, &e, &probes(100, 6)).unwrap(), 0.0);
        for end in [Endpoint::Minus, Endpoint::Plus] {
            for (_, o) in oscillation_profile(&map, &e, end, &[0.05, 0.005]).unwrap() {
                assert!(o >= 0.99);
            }
        }
    }

    #[test]
    fn endpoints_are_rejected() {
        let map = sine(0.1);
        let e = KernelElement::new(&map, 1.0, Seed::Constant(0.0)).unwrap();
        assert!(matches!(e.eval(&map, 0.0), Err(Error::OutOfDomain { .. })));
        assert!(KernelElement::new(&map, PI, Seed::Constant(0.0)).is_err());
    }

    #[test]
    fn profile_csv_header() {
        assert!(profile_csv(&[(0.1, 1.0)]).starts_with("radius,oscillation\n"));
    }
}
