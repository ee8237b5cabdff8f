//! Explicit constants certifying convergence of orbit sums and bounding the
//! Lipschitz norm of the inverse.
//!
//! The ladder is built from a margin `delta` in `(0, 1/2)`:
//!
//! * `E_phi` bounds the Lipschitz norms of the envelope functions `E_±`,
//!   and `eps_phi <= delta / E_phi` is the radius of the endpoint
//!   neighbourhoods on which `|E_±| <= delta`;
//! * `m_phi = phi'_inf eps_phi (1 - delta)` bounds `|phi|` from below away
//!   from those neighbourhoods;
//! * `N_alpha` is the number of steps needed to cross the middle part;
//! * `V_phi` and `K_1` bound the two cases of the inverse estimate and
//!   `K_phi = max(K_1, V_phi)`.

use crate::error::{Error, Result};
use crate::field::{chebyshev_lobatto, PerturbationField};
use crate::grid::fmt_f64;
use crate::record::Record;
use crate::shift::ShiftMap;

pub const DEFAULT_DELTA: f64 = 0.1;
/// Probe points used to measure `E_phi`.
pub const ENVELOPE_PROBES: usize = 2048;
/// Inflation applied to the measured Lipschitz bound of `E_±`.
pub const ENVELOPE_SAFETY: f64 = 1.25;

/// Which term attains `K_phi = max(K_1, V_phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KBranch {
    K1,
    VPhi,
}

impl KBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            KBranch::K1 => "K_1",
            KBranch::VPhi => "V_phi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub alpha: f64,
    pub delta: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub lip_norm: f64,
    pub e_phi: f64,
    pub eps_phi: f64,
    pub m_phi: f64,
    pub phi_prime_inf: f64,
    pub alpha_max: f64,
    pub n_alpha: u64,
    pub v_phi: f64,
    pub k_1: f64,
    pub k_phi: f64,
    pub k_phi_branch: KBranch,
    /// Whether `|alpha| < (1 - delta) / phi'_inf < 1 / ||phi||_Lip` holds.
    /// Only `|alpha| < 1 / ||phi||_Lip` is enforced.
    pub stated_alpha_chain_holds: bool,
    pub approximate_derivatives: bool,
}

impl ConstantsReport {
    pub fn length(&self) -> f64 {
        self.t_plus - self.t_minus
    }

    /// `|alpha| (1 - delta) phi'_inf`, the per-step contraction margin near
    /// the fixed points.
    pub fn step_margin(&self) -> f64 {
        self.alpha.abs() * (1.0 - self.delta) * self.phi_prime_inf
    }

    /// Iteration cap for one-sided orbit walks.
    pub fn iteration_cap(&self) -> usize {
        (10u64.saturating_mul(self.n_alpha)).saturating_add(10_000) as usize
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.push_f64("alpha", self.alpha)
            .push_f64("delta", self.delta)
            .push_f64("t_minus", self.t_minus)
            .push_f64("t_plus", self.t_plus)
            .push_f64("lip_norm", self.lip_norm)
            .push_f64("E_phi", self.e_phi)
            .push_f64("eps_phi", self.eps_phi)
            .push_f64("m_phi", self.m_phi)
            .push_f64("phi_prime_inf", self.phi_prime_inf)
            .push_f64("alpha_max", self.alpha_max)
            .push("N_alpha", self.n_alpha)
            .push_f64("V_phi", self.v_phi)
            .push_f64("K_1", self.k_1)
            .push_f64("K_phi", self.k_phi)
            .push("K_phi_branch", self.k_phi_branch.as_str())
            .push(
                "stated_alpha_chain",
                if self.stated_alpha_chain_holds {
                    "holds"
                } else {
                    "unverified"
                },
            )
            .push("approximate_derivatives", self.approximate_derivatives);
        r
    }
}

/// `(E_-(t), E_+(t))` with
/// `E_±(t) = (phi(t) - phi(t±) - phi'(t±)(t - t±)) / (phi'(t±)(t - t±))`
/// and the removable singularity at `t±` filled by 0.
pub fn envelope_functions(field: &PerturbationField, t: f64) -> Result<(f64, f64)> {
    let (a, b) = (field.t_minus(), field.t_plus());
    if !(t >= a && t <= b) {
        return Err(Error::OutOfDomain { t, lo: a, hi: b });
    }
    let one = |tstar: f64| -> Result<f64> {
        let slope = field.derivative(1, tstar);
        if slope == 0.0 {
            return Err(Error::DegeneratePerturbation { t: tstar, slope });
        }
        let d = t - tstar;
        if d == 0.0 {
            return Ok(0.0);
        }
        Ok((field.eval(t) - field.eval(tstar) - slope * d) / (slope * d))
    };
    Ok((one(a)?, one(b)?))
}

/// Largest divided difference of `E_-` and `E_+` over a Chebyshev probe grid.
fn measured_envelope_lipschitz(field: &PerturbationField) -> Result<f64> {
    let grid = chebyshev_lobatto(field.t_minus(), field.t_plus(), ENVELOPE_PROBES);
    let values: Vec<(f64, f64)> = grid
        .iter()
        .map(|t| envelope_functions(field, *t))
        .collect::<Result<_>>()?;
    let mut best = 0.0f64;
    for i in 1..grid.len() {
        let h = grid[i] - grid[i - 1];
        best = best
            .max(((values[i].0 - values[i - 1].0) / h).abs())
            .max(((values[i].1 - values[i - 1].1) / h).abs());
    }
    Ok(best)
}

pub fn compute_constants(map: &ShiftMap, delta: f64) -> Result<ConstantsReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidDelta { delta });
    }
    let field = map.field();
    let alpha = map.alpha();
    let alpha_max = 1.0 / field.lip_norm();
    if !(alpha.abs() < alpha_max) {
        return Err(Error::AmplitudeTooLarge { alpha, alpha_max });
    }
    let a = alpha.abs();
    let length = field.length();

    let e_phi = ENVELOPE_SAFETY * measured_envelope_lipschitz(field)?;
    let quarter = 0.25 * length * (1.0 - 1e-9);
    let eps_phi = if e_phi > 0.0 {
        (delta / e_phi).min(quarter)
    } else {
        quarter
    };

    let phi_prime_inf = field
        .derivative(1, field.t_minus())
        .abs()
        .min(field.derivative(1, field.t_plus()).abs());
    if phi_prime_inf == 0.0 {
        return Err(Error::DegeneratePerturbation {
            t: field.t_minus(),
            slope: 0.0,
        });
    }
    let m_phi = phi_prime_inf * eps_phi * (1.0 - delta);

    let crossing = (length - 2.0 * eps_phi) / (a * m_phi);
    let n_alpha = crossing.ceil() as u64 + 1;

    let growth = (n_alpha as f64) * (a * field.lip_norm()).ln_1p();
    let v_phi = 2.0 * growth.exp() / (a * phi_prime_inf * (1.0 - 2.0 * delta));

    let margin = a * (1.0 - delta) * phi_prime_inf;
    let k_1 = (2.0 + 2.0 * eps_phi + a * n_alpha as f64 * (1.0 - delta) * phi_prime_inf)
        / (margin * (length - 2.0 * eps_phi));

    let (k_phi, k_phi_branch) = if k_1 >= v_phi {
        (k_1, KBranch::K1)
    } else {
        (v_phi, KBranch::VPhi)
    };

    let chain = (1.0 - delta) / phi_prime_inf;
    Ok(ConstantsReport {
        alpha,
        delta,
        t_minus: field.t_minus(),
        t_plus: field.t_plus(),
        lip_norm: field.lip_norm(),
        e_phi,
        eps_phi,
        m_phi,
        phi_prime_inf,
        alpha_max,
        n_alpha,
        v_phi,
        k_1,
        k_phi,
        k_phi_branch,
        stated_alpha_chain_holds: a < chain && chain < alpha_max,
        approximate_derivatives: field.approximate_derivatives(),
    })
}

/// `phi'_inf (1 - delta) min(t - t_minus, eps_phi, t_plus - t)`.
pub fn trapezoid(report: &ConstantsReport, t: f64) -> f64 {
    let d = (t - report.t_minus)
        .min(report.t_plus - t)
        .min(report.eps_phi)
        .max(0.0);
    report.phi_prime_inf * (1.0 - report.delta) * d
}

/// Verify `|phi| >= trapezoid` on `grid` and return the smallest slack.
pub fn trapezoid_check(map: &ShiftMap, report: &ConstantsReport, grid: &[f64]) -> Result<f64> {
    let field = map.field();
    let mut worst = f64::INFINITY;
    for &t in grid {
        let phi = field.eval(t).abs();
        let trap = trapezoid(report, t);
        let slack = phi - trap;
        if slack < -4.0 * f64::EPSILON * (phi + trap) - f64::MIN_POSITIVE {
            return Err(Error::TrapezoidViolation { t, slack });
        }
        worst = worst.min(slack);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub alpha: f64,
    pub n_alpha: u64,
    pub v_phi: f64,
    pub k_1: f64,
    pub k_phi: f64,
    pub alpha_k_phi: f64,
}

/// Constants for each amplitude; `alpha K_phi` stays bounded as `alpha -> 0`.
pub fn scaling_study(
    field: &PerturbationField,
    delta: f64,
    alphas: &[f64],
) -> Result<Vec<ScalingRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            let map = ShiftMap::new(field.clone(), alpha)?;
            let r = compute_constants(&map, delta)?;
            Ok(ScalingRow {
                alpha,
                n_alpha: r.n_alpha,
                v_phi: r.v_phi,
                k_1: r.k_1,
                k_phi: r.k_phi,
                alpha_k_phi: alpha.abs() * r.k_phi,
            })
        })
        .collect()
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("alpha,N_alpha,V_phi,K_1,K_phi,alpha_K_phi\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(r.alpha),
            r.n_alpha,
            fmt_f64(r.v_phi),
            fmt_f64(r.k_1),
            fmt_f64(r.k_phi),
            fmt_f64(r.alpha_k_phi)
        ));
    }
    out
}
