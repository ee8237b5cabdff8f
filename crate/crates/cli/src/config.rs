//! Run configuration: a TOML file plus command-line overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use shiftinv::field::PerturbationField;
use shiftinv::grid::GridFunction;
use shiftinv::{Error, ShiftMap};

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `sin t` on `[0, pi]`.
    #[default]
    Sine,
    /// `sin(omega t) / omega` on `[0, pi / omega]`.
    ScaledSine { omega: f64 },
    /// `t (length - t) q(t)` on `[0, length]`.
    Bump { length: f64, q: Vec<f64> },
    /// Sampled `phi` from a two-column CSV.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub t0: f64,
    pub k_min: i64,
    pub k_max: i64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            k_min: 0,
            k_max: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub t0: f64,
    /// `constant`, `step`, or a path to a seed CSV.
    pub seed: String,
    pub value: f64,
    pub radii: Vec<f64>,
    pub probes: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            seed: "step".into(),
            value: 1.0,
            radii: vec![0.1, 0.01, 0.001],
            probes: 100,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct JetsConfig {
    pub t0: f64,
    pub k_max: usize,
}

impl Default for JetsConfig {
    fn default() -> Self {
        Self { t0: 1.0, k_max: 50 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GramConfig {
    pub modes: usize,
    /// `jacobian` or `reciprocal`.
    pub weight: String,
    pub tol: f64,
}

impl Default for GramConfig {
    fn default() -> Self {
        Self {
            modes: 16,
            weight: "jacobian".into(),
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub alpha: f64,
    pub delta: f64,
    pub p: usize,
    pub grid_points: usize,
    pub tol: f64,
    /// `telescope:<v0>`, `raw:<name>`, or a path to a `t,value` CSV.
    pub w: String,
    pub output_dir: PathBuf,
    /// Amplitudes for the scaling table written by `constants`.
    pub alphas: Vec<f64>,
    pub plots: bool,
    pub orbit: OrbitConfig,
    pub kernel: KernelConfig,
    pub jets: JetsConfig,
    pub gram: GramConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: FieldSpec::Sine,
            alpha: 0.1,
            delta: 0.1,
            p: 3,
            grid_points: 1001,
            tol: 1e-10,
            w: "telescope:cos".into(),
            output_dir: PathBuf::from("out"),
            alphas: Vec::new(),
            plots: false,
            orbit: OrbitConfig::default(),
            kernel: KernelConfig::default(),
            jets: JetsConfig::default(),
            gram: GramConfig::default(),
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub p: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub plots: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self, Error> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let mut cfg: RunConfig = toml::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new("."));
                cfg.resolve_paths(base);
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(a) = ov.alpha {
            cfg.alpha = a;
        }
        if let Some(d) = ov.delta {
            cfg.delta = d;
        }
        if let Some(p) = ov.p {
            cfg.p = p;
        }
        if let Some(t) = ov.tol {
            cfg.tol = t;
        }
        if let Some(o) = &ov.out {
            cfg.output_dir = o.clone();
        }
        cfg.plots |= ov.plots;
        Ok(cfg)
    }

    // relative paths in a config file are relative to the file
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &Path| {
            if p.is_relative() {
                base.join(p)
            } else {
                p.to_path_buf()
            }
        };
        if let FieldSpec::Csv { path } = &mut self.field {
            *path = fix(path);
        }
        if !self.w.starts_with("telescope:") && !self.w.starts_with("raw:") {
            self.w = fix(Path::new(&self.w)).to_string_lossy().into_owned();
        }
        if !matches!(self.kernel.seed.as_str(), "constant" | "step") {
            self.kernel.seed = fix(Path::new(&self.kernel.seed))
                .to_string_lossy()
                .into_owned();
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn build_field(&self) -> Result<PerturbationField, Error> {
        let field = match &self.field {
            FieldSpec::Sine => PerturbationField::sine(),
            FieldSpec::ScaledSine { omega } => PerturbationField::scaled_sine(*omega)?,
            FieldSpec::Bump { length, q } => PerturbationField::bump(*length, q)?,
            FieldSpec::Csv { path } => {
                let g = GridFunction::load(path)?;
                PerturbationField::sampled(g.grid().to_vec(), g.values().to_vec())?
            }
        };
        Ok(field)
    }

    /// Check the field and every numeric bound, and build the shift.
    pub fn validate(&self) -> Result<ShiftMap, Error> {
        if self.grid_points < 11 {
            return Err(Error::InvalidArgument(format!(
                "grid_points = {} must be at least 11",
                self.grid_points
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidDelta { delta: self.delta });
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        let field = self.build_field()?;
        field.validate(1e-9, 256)?;
        ShiftMap::new(field, self.alpha)
    }
}

/// Named test functions `v0` for `telescope:` sources, scaled to the interval.
pub fn named_v0(
    name: &str,
    t_minus: f64,
    t_plus: f64,
) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    let mid = 0.5 * (t_minus + t_plus);
    let len = t_plus - t_minus;
    let f: Box<dyn Fn(f64) -> f64 + Send + Sync> = match name {
        "cos" => Box::new(f64::cos),
        "square" => Box::new(|t| t * t),
        "damped_sin3" => Box::new(|t| (3.0 * t).sin() * (1.0 - t / (2.0 * PI))),
        "hat" => Box::new(move |t| (1.0 - (t - mid).abs() * PI / len).max(0.0)),
        "identity" => Box::new(|t| t),
        _ => return None,
    };
    Some(f)
}

/// Named raw sources for `raw:`.
pub fn named_raw(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "sin2" => Some(|t| (2.0 * t).sin()),
        "one" => Some(|_| 1.0),
        "zero" => Some(|_| 0.0),
        _ => None,
    }
}
