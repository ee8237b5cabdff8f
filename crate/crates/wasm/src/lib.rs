//! Browser bindings. Everything runs on the sine field `sin t` over `[0, pi]`.
//!
//! The plain functions return `Result<_, String>` so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers turn errors into JS exceptions.

use shiftinv::constants::compute_constants;
use shiftinv::grid::uniform_grid;
use shiftinv::inverse::SeriesSolver;
use shiftinv::kernel::{oscillation_profile, Endpoint, KernelElement, Seed};
use shiftinv::{PerturbationField, ShiftMap};
use wasm_bindgen::prelude::*;

const DELTA: f64 = 0.1;
const TOL: f64 = 1e-10;

fn sine(alpha: f64) -> Result<ShiftMap, String> {
    ShiftMap::new(PerturbationField::sine(), alpha).map_err(|e| e.to_string())
}

fn v0(name: &str) -> Result<fn(f64) -> f64, String> {
    Ok(match name {
        "cos" => f64::cos,
        "square" => |t| t * t,
        "damped_sin3" => |t| (3.0 * t).sin() * (1.0 - t / (2.0 * std::f64::consts::PI)),
        "hat" => |t| (1.0 - (t - std::f64::consts::FRAC_PI_2).abs()).max(0.0),
        _ => return Err(format!("unknown test function {name:?}")),
    })
}

/// `key=value` lines of the constant ladder.
pub fn constants_text(alpha: f64) -> Result<String, String> {
    let map = sine(alpha)?;
    let r = compute_constants(&map, DELTA).map_err(|e| e.to_string())?;
    Ok(r.to_record().to_string())
}

/// `t_k` for `k = k_min..=k_max`.
pub fn orbit_points(alpha: f64, t0: f64, k_min: i32, k_max: i32) -> Result<Vec<f64>, String> {
    let map = sine(alpha)?;
    let o = map
        .orbit(t0, k_min as i64, k_max as i64)
        .map_err(|e| e.to_string())?;
    Ok(o.points)
}

/// Solve `v o Phi - v = v0 o Phi - v0` on `n` points. Returns `[t; n]`,
/// `[v; n]`, `[v0 - v0(0); n]` concatenated.
pub fn roundtrip_values(alpha: f64, name: &str, n: usize) -> Result<Vec<f64>, String> {
    let map = sine(alpha)?;
    let f = v0(name)?;
    let r = compute_constants(&map, DELTA).map_err(|e| e.to_string())?;
    let m = map.clone();
    let w = move |t: f64| f(m.eval(t).unwrap_or(t)) - f(t);
    let grid = uniform_grid(0.0, std::f64::consts::PI, n.max(11));
    let sol = SeriesSolver::new(&map, &r, &w)
        .solve_on(&grid, TOL)
        .map_err(|e| e.to_string())?;
    let base = f(0.0);
    let mut out = grid.clone();
    out.extend_from_slice(sol.v.values());
    out.extend(grid.iter().map(|t| f(*t) - base));
    Ok(out)
}

/// Kernel element from a two-valued step on `[t0, Phi t0)`, sampled on `n`
/// interior points, followed by its oscillation on the three radii
/// `eps/2, eps/20, eps/200` at each endpoint. Layout: `[t; n] [v; n] [osc; 6]`.
pub fn kernel_values(alpha: f64, t0: f64, n: usize) -> Result<Vec<f64>, String> {
    let map = sine(alpha)?;
    let end = map.eval(t0).map_err(|e| e.to_string())?;
    let seed = Seed::Step {
        split: 0.5 * (t0 + end),
        left: 0.0,
        right: 1.0,
    };
    let elem = KernelElement::new(&map, t0, seed).map_err(|e| e.to_string())?;
    let n = n.max(3);
    let grid = uniform_grid(0.0, std::f64::consts::PI, n + 2);
    let inner = &grid[1..=n];
    let mut out = inner.to_vec();
    for &t in inner {
        out.push(elem.eval(&map, t).map_err(|e| e.to_string())?);
    }
    let eps = compute_constants(&map, DELTA)
        .map_err(|e| e.to_string())?
        .eps_phi;
    let radii = [0.5 * eps, 0.05 * eps, 0.005 * eps];
    for side in [Endpoint::Minus, Endpoint::Plus] {
        let prof = oscillation_profile(&map, &elem, side, &radii).map_err(|e| e.to_string())?;
        out.extend(prof.into_iter().map(|(_, o)| o));
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn constants(alpha: f64) -> Result<String, JsError> {
    constants_text(alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn orbit(alpha: f64, t0: f64, k_min: i32, k_max: i32) -> Result<Vec<f64>, JsError> {
    orbit_points(alpha, t0, k_min, k_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn roundtrip(alpha: f64, name: &str, n: usize) -> Result<Vec<f64>, JsError> {
    roundtrip_values(alpha, name, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn kernel(alpha: f64, t0: f64, n: usize) -> Result<Vec<f64>, JsError> {
    kernel_values(alpha, t0, n).map_err(|e| JsError::new(&e))
}
