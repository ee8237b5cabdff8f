//! Subcommand implementations. Each writes its artifacts into the output
//! directory and echoes its key-value report on stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use shiftinv::constants::{compute_constants, scaling_csv, scaling_study, trapezoid_check};
use shiftinv::gram::{gram_for_field, GramWeight};
use shiftinv::grid::{fmt_f64, uniform_grid, GridFunction, ScalarFunction};
use shiftinv::inverse::{default_probes, SeriesSolver, SolvabilityVerdict, DEFAULT_PROBES};
use shiftinv::jets::{contraction_check, cp_bound, propagate, trajectory_csv};
use shiftinv::kernel::{oscillation_profile, verify_invariance, Endpoint, KernelElement, Seed};
use shiftinv::record::Record;
use shiftinv::{Error, ShiftMap};

use crate::config::{named_raw, named_v0, RunConfig};
use crate::svg;

/// A failed command and the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SolvabilityRequired { .. } | Error::NoDecay { .. } => 3,
            Error::NoConvergence { .. }
            | Error::TailStall { .. }
            | Error::ToleranceUnreachable { .. }
            | Error::OrbitExhausted { .. }
            | Error::ContractionNotFound { .. } => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

pub type Outcome = Result<(), Failure>;

pub struct Context {
    pub cfg: RunConfig,
    pub map: ShiftMap,
}

impl Context {
    fn out(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.cfg.output_dir)?;
        Ok(self.cfg.output_dir.join(name))
    }

    fn emit(&self, name: &str, record: &Record) -> Outcome {
        let text = record.to_string();
        fs::write(self.out(name)?, &text)?;
        // a closed stdout (e.g. piped into `head`) is not an error
        let _ = std::io::stdout().lock().write_all(text.as_bytes());
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        uniform_grid(self.map.t_minus(), self.map.t_plus(), self.cfg.grid_points)
    }

    fn plot(&self, name: &str, title: &str, x_label: &str, series: &[svg::Series]) -> Outcome {
        if self.cfg.plots {
            svg::write(&self.out(name)?, title, x_label, series)?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)?;
    Ok(())
}

pub fn constants(ctx: &Context) -> Outcome {
    let report = compute_constants(&ctx.map, ctx.cfg.delta)?;
    let slack = trapezoid_check(&ctx.map, &report, &ctx.grid())?;
    let mut rec = report.to_record();
    rec.push_f64("trapezoid_slack", slack);
    ctx.emit("constants.txt", &rec)?;
    if !ctx.cfg.alphas.is_empty() {
        let rows = scaling_study(ctx.map.field(), ctx.cfg.delta, &ctx.cfg.alphas)?;
        write_text(&ctx.out("scaling.csv")?, &scaling_csv(&rows))?;
        let pts = rows.iter().map(|r| (r.alpha, r.alpha_k_phi)).collect();
        ctx.plot(
            "scaling.svg",
            "alpha * K_phi",
            "alpha",
            &[svg::Series {
                label: "alpha K_phi",
                points: pts,
            }],
        )?;
    }
    Ok(())
}

enum Source {
    Exact(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled(GridFunction),
}

fn source(ctx: &Context) -> Result<Source, Failure> {
    let w = ctx.cfg.w.as_str();
    let (a, b) = (ctx.map.t_minus(), ctx.map.t_plus());
    if let Some(name) = w.strip_prefix("telescope:") {
        let v0 = named_v0(name, a, b)
            .ok_or_else(|| Failure::validation(format!("unknown v0 {name:?} in w = {w:?}")))?;
        let map = ctx.map.clone();
        return Ok(Source::Exact(Box::new(move |t| {
            v0(map.eval(t).expect("grid inside the interval")) - v0(t)
        })));
    }
    if let Some(name) = w.strip_prefix("raw:") {
        let f = named_raw(name)
            .ok_or_else(|| Failure::validation(format!("unknown raw source {name:?}")))?;
        return Ok(Source::Exact(Box::new(f)));
    }
    let g = GridFunction::load(w)?;
    let (g0, g1) = (g.grid()[0], g.grid()[g.len() - 1]);
    if g0 != a || g1 != b {
        return Err(Failure::validation(format!(
            "w grid spans [{g0}, {g1}], expected [{a}, {b}]"
        )));
    }
    Ok(Source::Sampled(g))
}

fn verdict_record(v: &SolvabilityVerdict) -> Record {
    let mut r = Record::new();
    r.push("solvable", v.passed)
        .push_f64("spread", v.spread)
        .push_f64("constant", v.constant)
        .push_f64("w_minus", v.endpoint_decay.0)
        .push_f64("w_plus", v.endpoint_decay.1)
        .push("probes", v.probes.len())
        .push_f64("tol", v.tol);
    r
}

struct Solved {
    grid: Vec<f64>,
    v: GridFunction,
}

fn run_solver<W: ScalarFunction + ?Sized>(
    ctx: &Context,
    w: &W,
    grid: Vec<f64>,
) -> Result<Solved, Failure> {
    let cfg = &ctx.cfg;
    let report = compute_constants(&ctx.map, cfg.delta)?;
    let solver = SeriesSolver::new(&ctx.map, &report, w);
    let probes = default_probes(ctx.map.t_minus(), ctx.map.t_plus(), DEFAULT_PROBES);
    let verdict = solver.check_solvability(&probes, cfg.tol)?;
    ctx.emit("verdict.txt", &verdict_record(&verdict))?;
    if !verdict.passed {
        return Err(Error::SolvabilityRequired {
            spread: verdict.spread,
            w_minus: verdict.endpoint_decay.0,
            w_plus: verdict.endpoint_decay.1,
        }
        .into());
    }
    let sol = solver.solve_on(&grid, cfg.tol)?;
    sol.v.save(ctx.out("v.csv")?)?;
    let mut r = Record::new();
    r.push_f64("residual_sup", sol.residual_sup)
        .push_f64("lip_ratio", sol.lip_ratio)
        .push_f64("K_phi", report.k_phi)
        .push("within_bound", sol.lip_ratio <= report.k_phi)
        .push_f64("constant", sol.constant)
        .push("anchor", sol.anchor.as_str())
        .push("grid_points", grid.len());
    ctx.emit("solution.txt", &r)?;
    Ok(Solved { grid, v: sol.v })
}

pub fn solve(ctx: &Context) -> Outcome {
    let solved = match source(ctx)? {
        Source::Exact(f) => run_solver(ctx, &f, ctx.grid())?,
        Source::Sampled(g) => {
            let grid = g.grid().to_vec();
            run_solver(ctx, &g, grid)?
        }
    };
    let pts = solved
        .grid
        .iter()
        .copied()
        .zip(solved.v.values().iter().copied())
        .collect();
    ctx.plot(
        "v.svg",
        "solution v",
        "t",
        &[svg::Series {
            label: "v",
            points: pts,
        }],
    )
}

pub fn roundtrip(ctx: &Context) -> Outcome {
    let name = ctx.cfg.w.strip_prefix("telescope:").ok_or_else(|| {
        Failure::validation(format!(
            "roundtrip needs w = \"telescope:<v0>\", got {:?}",
            ctx.cfg.w
        ))
    })?;
    let (a, b) = (ctx.map.t_minus(), ctx.map.t_plus());
    let v0 =
        named_v0(name, a, b).ok_or_else(|| Failure::validation(format!("unknown v0 {name:?}")))?;
    let Source::Exact(w) = source(ctx)? else {
        unreachable!("telescope sources are exact")
    };
    let solved = run_solver(ctx, &w, ctx.grid())?;
    let base = v0(a);
    let mut csv = String::from("t,v,v0,diff\n");
    let mut max_error = 0.0f64;
    for (t, v) in solved.grid.iter().zip(solved.v.values()) {
        let exact = v0(*t) - base;
        let diff = v - exact;
        max_error = max_error.max(diff.abs());
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(*t),
            fmt_f64(*v),
            fmt_f64(exact),
            fmt_f64(diff)
        ));
    }
    write_text(&ctx.out("roundtrip.csv")?, &csv)?;
    let mut r = Record::new();
    r.push("v0", name).push_f64("max_error", max_error);
    ctx.emit("roundtrip.txt", &r)?;
    let grid = &solved.grid;
    ctx.plot(
        "roundtrip.svg",
        "recovered v against v0 - v0(t_minus)",
        "t",
        &[
            svg::Series {
                label: "v",
                points: grid
                    .iter()
                    .copied()
                    .zip(solved.v.values().iter().copied())
                    .collect(),
            },
            svg::Series {
                label: "v0",
                points: grid.iter().map(|t| (*t, v0(*t) - base)).collect(),
            },
        ],
    )
}

pub fn orbit(ctx: &Context) -> Outcome {
    let o = &ctx.cfg.orbit;
    let orbit = ctx.map.orbit(o.t0, o.k_min, o.k_max)?;
    let mut csv = String::from("k,t\n");
    for (k, t) in orbit.iter() {
        csv.push_str(&format!("{k},{}\n", fmt_f64(t)));
    }
    write_text(&ctx.out("orbit.csv")?, &csv)?;
    let first = orbit.points[0];
    let last = orbit.points[orbit.points.len() - 1];
    let mut r = Record::new();
    r.push_f64("t0", o.t0)
        .push("k_min", o.k_min)
        .push("k_max", o.k_max)
        .push_f64("first", first)
        .push_f64("last", last)
        .push_f64("gap_t_minus", first - ctx.map.t_minus())
        .push_f64("gap_t_plus", ctx.map.t_plus() - last);
    ctx.emit("orbit.txt", &r)?;
    let pts = orbit.iter().map(|(k, t)| (k as f64, t)).collect();
    ctx.plot(
        "orbit.svg",
        "orbit",
        "k",
        &[svg::Series {
            label: "t_k",
            points: pts,
        }],
    )
}

pub fn kernel(ctx: &Context) -> Outcome {
    let k = &ctx.cfg.kernel;
    let map = &ctx.map;
    let seed = match k.seed.as_str() {
        "constant" => Seed::Constant(k.value),
        "step" => {
            let end = map.eval(k.t0)?;
            Seed::Step {
                split: 0.5 * (k.t0 + end),
                left: 0.0,
                right: k.value,
            }
        }
        path => Seed::load(path)?,
    };
    let elem = KernelElement::new(map, k.t0, seed)?;
    let report = compute_constants(map, ctx.cfg.delta)?;
    if let Some(r) = k
        .radii
        .iter()
        .find(|r| !(**r > 0.0 && **r < report.eps_phi))
    {
        return Err(Failure::validation(format!(
            "kernel radius {r} must lie in (0, eps_phi = {})",
            report.eps_phi
        )));
    }

    let grid = ctx.grid();
    let inner = &grid[1..grid.len() - 1];
    let mut csv = String::from("t,value\n");
    let mut pts = Vec::with_capacity(inner.len());
    for &t in inner {
        let v = elem.eval(map, t)?;
        csv.push_str(&format!("{},{}\n", fmt_f64(t), fmt_f64(v)));
        pts.push((t, v));
    }
    write_text(&ctx.out("kernel.csv")?, &csv)?;

    let mut prof = String::from("endpoint,radius,oscillation\n");
    let mut min_osc = f64::INFINITY;
    for end in [Endpoint::Minus, Endpoint::Plus] {
        for (r, o) in oscillation_profile(map, &elem, end, &k.radii)? {
            min_osc = min_osc.min(o);
            prof.push_str(&format!("{},{},{}\n", end.as_str(), fmt_f64(r), fmt_f64(o)));
        }
    }
    write_text(&ctx.out("oscillation.csv")?, &prof)?;

    let probes = default_probes(map.t_minus(), map.t_plus(), k.probes);
    let defect = verify_invariance(map, &elem, &probes)?;
    let mut r = Record::new();
    r.push_f64("t0", k.t0)
        .push_f64("domain_end", elem.domain_end())
        .push("seed_kind", elem.seed_kind().as_str())
        .push_f64("seed_oscillation", elem.seed_oscillation())
        .push_f64(
            "min_endpoint_oscillation",
            if k.radii.is_empty() { 0.0 } else { min_osc },
        )
        .push_f64("invariance_defect", defect);
    ctx.emit("kernel.txt", &r)?;
    ctx.plot(
        "kernel.svg",
        "kernel element",
        "t",
        &[svg::Series {
            label: "v",
            points: pts,
        }],
    )
}

pub fn jets(ctx: &Context) -> Outcome {
    let j = &ctx.cfg.jets;
    let p = ctx.cfg.p;
    let traj = propagate(&ctx.map, j.t0, p, j.k_max)?;
    write_text(&ctx.out("jets.csv")?, &trajectory_csv(&traj, 1))?;
    let report = compute_constants(&ctx.map, ctx.cfg.delta)?;
    let c = contraction_check(&ctx.map, p, ctx.cfg.delta)?;
    let cp = cp_bound(&ctx.map, p, &report)?;
    let mut r = cp.to_record();
    r.push_f64("eta_forward", c.eta_forward)
        .push_f64("eta_backward", c.eta_backward)
        .push_f64("t0", j.t0)
        .push("k_max", j.k_max)
        .push_f64("final_jet_norm", traj[traj.len() - 1].jet_norm());
    ctx.emit("jets.txt", &r)?;
    let pts = traj
        .iter()
        .enumerate()
        .map(|(k, u)| (k as f64, u.jet_norm().max(1e-300).log10()))
        .collect();
    ctx.plot(
        "jets.svg",
        "log10 |U_hat_k|",
        "k",
        &[svg::Series {
            label: "jet norm",
            points: pts,
        }],
    )
}

pub fn gram(ctx: &Context, modes: Option<usize>) -> Outcome {
    let g = &ctx.cfg.gram;
    let weight = GramWeight::parse(&g.weight)?;
    let modes = modes.unwrap_or(g.modes);
    let report = gram_for_field(ctx.map.field(), ctx.cfg.alpha, modes, weight, g.tol)?;
    write_text(&ctx.out("gram.csv")?, &report.to_csv())?;
    let mut r = Record::new();
    r.push_f64("alpha", ctx.cfg.alpha)
        .push("modes", modes)
        .push("weight", weight.as_str())
        .push_f64("max_off_diagonal", report.max_off_diagonal)
        .push_f64("max_diagonal_defect", report.max_diagonal_defect)
        .push_f64("max_quadrature_error", report.max_quadrature_error);
    ctx.emit("gram.txt", &r)
}
