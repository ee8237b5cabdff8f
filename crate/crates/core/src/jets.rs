//! Derivative jets of the iterates `Phi^k` and the C^p inverse bound.
//!
//! The state `U_k = (t_k, s_k, r_k, q_k, ...)` holds the orbit point and the
//! derivatives of `Phi^k` at the base point. One step is the chain rule for
//! `Phi o Phi^k`, which for `p <= 3` reads
//!
//! ```text
//! s' = (1 + a phi') s
//! r' = (1 + a phi') r + a phi'' s^2
//! q' = (1 + a phi') q + 3 a phi'' s r + a phi''' s^3
//! ```
//!
//! and for general `p` is truncated power-series composition. Both fixed
//! points `U_{-inf} = (t_minus, 0)` and `U_{+inf} = (t_plus, 0)` are
//! stationary; the attracting one contracts with rate about `1 + a phi'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::{compute_constants, ConstantsReport};
use crate::error::{Error, Result};
use crate::grid::{fmt_f64, GridFunction};
use crate::record::Record;
use crate::series::{partial_bell, Series};
use crate::shift::{Orientation, ShiftMap, DEFAULT_INVERT_TOL};

/// Number of base points in [`cp_bound`].
pub const CP_PROBES: usize = 33;
const DIRECTIONS: usize = 64;
const LADDER: usize = 12;
const MIN_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct JetState {
    pub t: f64,
    /// `jet[j - 1] = (d/dt)^j Phi^k` at the base point, `j = 1..=p`.
    pub jet: Vec<f64>,
}

impl JetState {
    /// `U_0 = (t0, 1, 0, 0, ...)`.
    pub fn identity(t0: f64, p: usize) -> Self {
        let mut jet = vec![0.0; p];
        jet[0] = 1.0;
        Self { t: t0, jet }
    }

    pub fn order(&self) -> usize {
        self.jet.len()
    }

    /// `|U_hat| = sum_j |jet_j|`.
    pub fn jet_norm(&self) -> f64 {
        self.jet.iter().map(|x| x.abs()).sum()
    }

    /// `|U - (t_star, 0)| = |t - t_star| + |U_hat|`.
    pub fn distance_to(&self, t_star: f64) -> f64 {
        (self.t - t_star).abs() + self.jet_norm()
    }

    fn as_series(&self) -> Series {
        let mut d = Vec::with_capacity(self.jet.len() + 1);
        d.push(self.t);
        d.extend_from_slice(&self.jet);
        Series::from_derivatives(&d, self.jet.len())
    }

    fn from_series(s: &Series) -> Self {
        let d = s.derivatives();
        Self {
            t: d[0],
            jet: d[1..].to_vec(),
        }
    }
}

fn check_order(map: &ShiftMap, p: usize) -> Result<()> {
    let p_max = map.field().p_max();
    if p == 0 || p + 1 > p_max {
        return Err(Error::OrderUnsupported {
            p,
            needed: p + 1,
            p_max,
        });
    }
    Ok(())
}

/// Taylor series of `Phi` around `t` to order `p`.
fn shift_series(map: &ShiftMap, t: f64, p: usize) -> Series {
    let alpha = map.alpha();
    let mut d: Vec<f64> = map
        .field()
        .derivatives(p, t)
        .iter()
        .map(|x| alpha * x)
        .collect();
    d[0] += t;
    if p >= 1 {
        d[1] += 1.0;
    }
    Series::from_derivatives(&d, p)
}

fn step_unchecked(map: &ShiftMap, state: &JetState) -> JetState {
    let p = state.order();
    let outer = shift_series(map, state.t, p);
    let mut next = JetState::from_series(&outer.compose(&state.as_series()));
    next.t = map.eval(state.t).unwrap_or(next.t);
    next
}

/// `U_{k+1} = F(U_k)`.
pub fn jet_step(map: &ShiftMap, state: &JetState) -> Result<JetState> {
    check_order(map, state.order())?;
    map.eval(state.t)?;
    Ok(step_unchecked(map, state))
}

/// The hand-expanded hierarchy for `p <= 3`, used as a cross-check.
pub fn jet_step_explicit(map: &ShiftMap, state: &JetState) -> Result<JetState> {
    let p = state.order();
    if p > 3 {
        return Err(Error::InvalidArgument(
            "explicit hierarchy covers p <= 3".into(),
        ));
    }
    check_order(map, p)?;
    let a = map.alpha();
    let d = map.field().derivatives(3, state.t);
    let lin = 1.0 + a * d[1];
    let s = state.jet[0];
    let mut jet = vec![lin * s];
    if p >= 2 {
        let r = state.jet[1];
        jet.push(lin * r + a * d[2] * s * s);
        if p >= 3 {
            let q = state.jet[2];
            jet.push(lin * q + 3.0 * a * d[2] * s * r + a * d[3] * s * s * s);
        }
    }
    Ok(JetState {
        t: map.eval(state.t)?,
        jet,
    })
}

fn inverse_step(map: &ShiftMap, state: &JetState) -> Result<JetState> {
    let p = state.order();
    let x = map.invert(state.t, DEFAULT_INVERT_TOL)?;
    let inv = shift_series(map, x, p)
        .without_constant()
        .revert()
        .ok_or_else(|| Error::InvalidArgument(format!("shift is not invertible at {x}")))?;
    let mut out = JetState::from_series(&inv.compose(&state.as_series()));
    out.t = x;
    Ok(out)
}

/// `U_{-1} = F^{-1}(U)`, the jet of `Phi^{-1} o Phi^k`.
pub fn jet_step_backward(map: &ShiftMap, state: &JetState) -> Result<JetState> {
    check_order(map, state.order())?;
    inverse_step(map, state)
}

/// `U_0, ..., U_{k_max}` from the identity jet at `t0`.
pub fn propagate(map: &ShiftMap, t0: f64, p: usize, k_max: usize) -> Result<Vec<JetState>> {
    check_order(map, p)?;
    map.eval(t0)?;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(JetState::identity(t0, p));
    for k in 0..k_max {
        let next = step_unchecked(map, &out[k]);
        out.push(next);
    }
    Ok(out)
}

/// `U_0, U_{-1}, ..., U_{-k_max}`: jets of the inverse iterates.
pub fn propagate_backward(
    map: &ShiftMap,
    t0: f64,
    p: usize,
    k_max: usize,
) -> Result<Vec<JetState>> {
    check_order(map, p)?;
    map.eval(t0)?;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(JetState::identity(t0, p));
    for k in 0..k_max {
        let next = inverse_step(map, &out[k])?;
        out.push(next);
    }
    Ok(out)
}

/// CSV with header `k,t,s,r,q,d4,...` up to order `p`.
pub fn trajectory_csv(states: &[JetState], k_sign: i64) -> String {
    let p = states.first().map_or(0, |s| s.order());
    let mut out = String::from("k,t");
    for j in 1..=p {
        match j {
            1 => out.push_str(",s"),
            2 => out.push_str(",r"),
            3 => out.push_str(",q"),
            _ => out.push_str(&format!(",d{j}")),
        }
    }
    out.push('\n');
    for (k, s) in states.iter().enumerate() {
        out.push_str(&format!("{},{}", k_sign * k as i64, fmt_f64(s.t)));
        for x in &s.jet {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

/// `(attracting, repelling)` fixed points of the forward dynamics.
pub fn fixed_points(map: &ShiftMap) -> (f64, f64) {
    match map.orientation() {
        Orientation::Forward => (map.t_plus(), map.t_minus()),
        Orientation::Reflected => (map.t_minus(), map.t_plus()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contraction {
    pub eta: f64,
    pub eps_jet: f64,
    /// `1 - max |F(U) - U+| / |U - U+|` near the attracting point.
    pub eta_forward: f64,
    /// `1 - max |U - U-| / |F(U) - U-|` near the repelling point.
    pub eta_backward: f64,
}

// unit directions (tau, v) in the l1 norm, tau pointing into the interval
fn directions(p: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    out.push((1.0, vec![0.0; p]));
    for j in 0..p {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; p];
            v[j] = sign;
            out.push((0.0, v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DIRECTIONS {
        let tau: f64 = rng.gen_range(0.0..1.0);
        let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = tau + v.iter().map(|x| x.abs()).sum::<f64>();
        out.push((tau / norm, v.iter().map(|x| x / norm).collect()));
    }
    out
}

fn margins(map: &ShiftMap, p: usize, eps: f64, dirs: &[(f64, Vec<f64>)]) -> (f64, f64) {
    let (plus, minus) = fixed_points(map);
    let inward = |t_star: f64| if t_star == map.t_plus() { -1.0 } else { 1.0 };
    let (mut fwd, mut bwd) = (0.0f64, 0.0f64);
    for i in 0..LADDER {
        let rho = eps * 0.5f64.powi(i as i32);
        for (tau, v) in dirs {
            let jet: Vec<f64> = v.iter().map(|x| rho * x).collect();
            let u = JetState {
                t: plus + inward(plus) * rho * tau,
                jet: jet.clone(),
            };
            let fu = step_unchecked(map, &u);
            fwd = fwd.max(fu.distance_to(plus) / u.distance_to(plus));

            let u = JetState {
                t: minus + inward(minus) * rho * tau,
                jet,
            };
            let fu = step_unchecked(map, &u);
            bwd = bwd.max(u.distance_to(minus) / fu.distance_to(minus));
        }
    }
    debug_assert!(p >= 1);
    (1.0 - fwd, 1.0 - bwd)
}

/// Measure the contraction margin of the jet dynamics at the fixed points,
/// starting from the scalar radius `eps_phi` and halving until a positive
/// margin is found.
pub fn contraction_check(map: &ShiftMap, p: usize, delta: f64) -> Result<Contraction> {
    check_order(map, p)?;
    let report = compute_constants(map, delta)?;
    let dirs = directions(p, 0x5eed + p as u64);
    let mut eps = report.eps_phi;
    while eps >= MIN_RADIUS {
        let (eta_forward, eta_backward) = margins(map, p, eps, &dirs);
        let eta = eta_forward.min(eta_backward);
        if eta > 0.0 && eta < 1.0 {
            return Ok(Contraction {
                eta,
                eps_jet: eps,
                eta_forward,
                eta_backward,
            });
        }
        eps *= 0.5;
    }
    Err(Error::ContractionNotFound { radius: eps * 2.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpReport {
    pub p: usize,
    pub eta: f64,
    pub eps_jet: f64,
    /// Largest number of forward steps a probe needs to enter the
    /// contraction ball around the attracting fixed point.
    pub n_k: usize,
    /// Same for backward steps toward the repelling fixed point.
    pub n_k_backward: usize,
    /// `max_t0 (sum_{j < N_K} |U_hat_j| + |U_hat_{N_K}| / eta)`.
    pub sum_bound: f64,
    pub backward_sum_bound: f64,
    /// Measured `max_m sum_n |B_{n,m}(U_hat)| / |U_hat|` along all
    /// trajectories, the composition constant of the C^p norm.
    pub k0: f64,
    /// Bound on the undifferentiated orbit sum per unit `||w||_Lip`, times
    /// `|alpha|`.
    pub c_sup: f64,
    pub k_cp: f64,
}

impl CpReport {
    /// `K_cp / |alpha|`, the bound on `||v||_p / ||w||_p`.
    pub fn inverse_bound(&self, alpha: f64) -> f64 {
        self.k_cp / alpha.abs()
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.push("p", self.p)
            .push_f64("eta", self.eta)
            .push_f64("eps_jet", self.eps_jet)
            .push("N_K", self.n_k)
            .push("N_K_backward", self.n_k_backward)
            .push_f64("sum_bound", self.sum_bound)
            .push_f64("backward_sum_bound", self.backward_sum_bound)
            .push_f64("K_0", self.k0)
            .push_f64("C_sup", self.c_sup)
            .push_f64("K_cp", self.k_cp);
        r
    }
}

fn composition_ratio(state: &JetState) -> f64 {
    let n = state.jet_norm();
    if n == 0.0 {
        return 0.0;
    }
    let p = state.order();
    let bell = partial_bell(&state.jet, p);
    (1..=p)
        .map(|m| (m..=p).map(|k| bell[k][m].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        / n
}

// steps until the state enters the ball of radius eps_jet around target,
// and the largest composition ratio seen on the way
fn entry_steps<F>(
    start: JetState,
    target: f64,
    eps_jet: f64,
    cap: usize,
    mut step: F,
) -> Result<(usize, f64)>
where
    F: FnMut(&JetState) -> Result<JetState>,
{
    let t0 = start.t;
    let mut u = start;
    let mut k0 = 0.0f64;
    for k in 0..cap {
        k0 = k0.max(composition_ratio(&u));
        if u.distance_to(target) < eps_jet {
            return Ok((k, k0));
        }
        u = step(&u)?;
    }
    Err(Error::TailStall { t: t0, steps: cap })
}

/// Certified bound on the C^p norm of the inverse, from the jet dynamics.
pub fn cp_bound(map: &ShiftMap, p: usize, report: &ConstantsReport) -> Result<CpReport> {
    check_order(map, p)?;
    let c = contraction_check(map, p, report.delta)?;
    let (plus, minus) = fixed_points(map);
    let eps = report.eps_phi;
    let (lo, hi) = (map.t_minus() + eps, map.t_plus() - eps);
    let cap = report.iteration_cap();
    let probes: Vec<f64> = (0..CP_PROBES)
        .map(|i| lo + (hi - lo) * i as f64 / (CP_PROBES - 1) as f64)
        .collect();

    let mut n_k = 0;
    let mut n_k_backward = 0;
    let mut k0 = 0.0f64;
    for &t0 in &probes {
        let (n, k) = entry_steps(JetState::identity(t0, p), plus, c.eps_jet, cap, |u| {
            Ok(step_unchecked(map, u))
        })?;
        n_k = n_k.max(n);
        k0 = k0.max(k);
        let (n, k) = entry_steps(JetState::identity(t0, p), minus, c.eps_jet, cap, |u| {
            inverse_step(map, u)
        })?;
        n_k_backward = n_k_backward.max(n);
        k0 = k0.max(k);
    }

    // sums are taken to the common entry index N_K
    let bound_at = |t0: f64, n: usize, forward: bool| -> Result<f64> {
        let mut u = JetState::identity(t0, p);
        let mut partial = 0.0;
        for _ in 0..n {
            partial += u.jet_norm();
            u = if forward {
                step_unchecked(map, &u)
            } else {
                inverse_step(map, &u)?
            };
        }
        Ok(partial + u.jet_norm() / c.eta)
    };
    let mut sum_bound = 0.0f64;
    let mut backward_sum_bound = 0.0f64;
    for &t0 in &probes {
        sum_bound = sum_bound.max(bound_at(t0, n_k, true)?);
        backward_sum_bound = backward_sum_bound.max(bound_at(t0, n_k_backward, false)?);
    }

    let alpha = map.alpha().abs();
    let c_sup = 2.0 * (2.0 / report.step_margin() + report.n_alpha as f64 + 1.0) * report.length();
    let k_cp = alpha * (c_sup + k0.max(1.0) * sum_bound.max(backward_sum_bound));
    Ok(CpReport {
        p,
        eta: c.eta,
        eps_jet: c.eps_jet,
        n_k,
        n_k_backward,
        sum_bound,
        backward_sum_bound,
        k0,
        c_sup,
        k_cp,
    })
}

/// `sup_t sum_{j <= p} |f^(j)(t)|` over the grid, with derivatives from
/// finite differences on `2p + 1` neighbouring samples. An estimator, not a
/// bound.
pub fn cp_norm(f: &GridFunction, p: usize) -> Result<f64> {
    let needed = 2 * p + 1;
    if f.len() < needed {
        return Err(Error::GridTooCoarse {
            points: f.len(),
            needed,
        });
    }
    let best = (0..f.len())
        .map(|i| f.derivatives_at(i, p).iter().map(|d| d.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(best)
}
