//! Gram matrices of the warped sine modes `e_k(t) = sin(k (t + alpha sin t))`
//! on `[0, pi]`.
//!
//! With the Jacobian weight `1 + alpha cos t` the substitution
//! `u = t + alpha sin t` turns every entry into `int_0^pi sin(ju) sin(ku) du`,
//! so the matrix is `(pi / 2) I`.

use crate::error::{Error, Result};
use crate::field::{PerturbationField, Profile};
use crate::grid::fmt_f64;
use crate::quad::integrate;

pub const MAX_MODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramWeight {
    /// `1 + alpha phi'`.
    Jacobian,
    /// `1 / (1 + alpha phi')`.
    Reciprocal,
}

impl GramWeight {
    pub fn as_str(self) -> &'static str {
        match self {
            GramWeight::Jacobian => "jacobian",
            GramWeight::Reciprocal => "reciprocal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jacobian" => Ok(GramWeight::Jacobian),
            "reciprocal" => Ok(GramWeight::Reciprocal),
            _ => Err(Error::Parse(format!("unknown Gram weight {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GramReport {
    pub alpha: f64,
    pub weight: GramWeight,
    /// Row-major `modes x modes`.
    pub matrix: Vec<Vec<f64>>,
    pub max_off_diagonal: f64,
    pub max_diagonal_defect: f64,
    pub max_quadrature_error: f64,
}

impl GramReport {
    pub fn modes(&self) -> usize {
        self.matrix.len()
    }

    /// `max |G - (pi/2) I|` over all entries.
    pub fn max_defect(&self) -> f64 {
        self.max_off_diagonal.max(self.max_diagonal_defect)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j");
        for k in 1..=self.modes() {
            out.push_str(&format!(",k{k}"));
        }
        out.push('\n');
        for (j, row) in self.matrix.iter().enumerate() {
            out.push_str(&(j + 1).to_string());
            for v in row {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Whether `field` is `sin` on `[0, pi]`.
pub fn is_unit_sine(field: &PerturbationField) -> bool {
    let standard = matches!(
        field.profile(),
        Profile::Sine { amp, omega, phase } if *amp == 1.0 && *omega == 1.0 && *phase == 0.0
    );
    standard
        && !field.is_reflected()
        && field.t_minus() == 0.0
        && (field.t_plus() - std::f64::consts::PI).abs() < 1e-15
}

/// `G_jk = int_0^pi e_j e_k sigma dt` for `j, k = 1..=modes`.
pub fn gram_matrix(alpha: f64, modes: usize, weight: GramWeight, tol: f64) -> Result<GramReport> {
    if modes == 0 || modes > MAX_MODES {
        return Err(Error::InvalidArgument(format!(
            "modes must be in 1..={MAX_MODES}, got {modes}"
        )));
    }
    if !(alpha.abs() < 1.0) {
        return Err(Error::AmplitudeTooLarge {
            alpha,
            alpha_max: 1.0,
        });
    }
    let sigma = move |t: f64| {
        let j = 1.0 + alpha * t.cos();
        match weight {
            GramWeight::Jacobian => j,
            GramWeight::Reciprocal => 1.0 / j,
        }
    };
    let half_pi = 0.5 * std::f64::consts::PI;
    let mut matrix = vec![vec![0.0; modes]; modes];
    let mut max_off_diagonal = 0.0f64;
    let mut max_diagonal_defect = 0.0f64;
    let mut max_quadrature_error = 0.0f64;
    for j in 1..=modes {
        for k in j..=modes {
            let (jf, kf) = (j as f64, k as f64);
            let q = integrate(
                |t| {
                    let u = t + alpha * t.sin();
                    (jf * u).sin() * (kf * u).sin() * sigma(t)
                },
                0.0,
                std::f64::consts::PI,
                tol,
                0.0,
            )?;
            matrix[j - 1][k - 1] = q.value;
            matrix[k - 1][j - 1] = q.value;
            max_quadrature_error = max_quadrature_error.max(q.error);
            if j == k {
                max_diagonal_defect = max_diagonal_defect.max((q.value - half_pi).abs());
            } else {
                max_off_diagonal = max_off_diagonal.max(q.value.abs());
            }
        }
    }
    Ok(GramReport {
        alpha,
        weight,
        matrix,
        max_off_diagonal,
        max_diagonal_defect,
        max_quadrature_error,
    })
}

/// [`gram_matrix`] for a field, which must be `sin` on `[0, pi]`.
pub fn gram_for_field(
    field: &PerturbationField,
    alpha: f64,
    modes: usize,
    weight: GramWeight,
    tol: f64,
) -> Result<GramReport> {
    if !is_unit_sine(field) {
        return Err(Error::UnsupportedField(
            "the Gram demonstration needs phi = sin on [0, pi]".into(),
        ));
    }
    gram_matrix(alpha, modes, weight, tol)
}
