#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shiftinv::constants::{compute_constants, scaling_study};
use shiftinv::gram::{gram_matrix, GramWeight};
use shiftinv::grid::uniform_grid;
use shiftinv::inverse::{default_probes, SeriesSolver};
use shiftinv::jets::{contraction_check, cp_bound, propagate};
use shiftinv::kernel::{oscillation_profile, verify_invariance, Endpoint, KernelElement, Seed};
use shiftinv::{PerturbationField, ShiftMap};

const TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn sine(alpha: f64) -> ShiftMap {
    ShiftMap::new(PerturbationField::sine(), alpha).expect("alpha below the amplitude bound")
}

fn hat(t: f64) -> f64 {
    (1.0 - (t - 0.5 * PI).abs()).max(0.0)
}

fn damped_sin3(t: f64) -> f64 {
    (3.0 * t).sin() * (1.0 - t / (2.0 * PI))
}

type Named = (&'static str, fn(f64) -> f64);

fn corpus() -> Vec<Named> {
    vec![
        ("cos", f64::cos),
        ("square", |t| t * t),
        ("damped_sin3", damped_sin3),
        ("hat", hat),
    ]
}

struct RoundTrip {
    name: &'static str,
    alpha: f64,
    err: f64,
    lip_ratio: f64,
    k_phi: f64,
    elapsed: Duration,
}

fn round_trips() -> Result<Vec<RoundTrip>, String> {
    let grid = uniform_grid(0.0, PI, 1001);
    let mut out = Vec::new();
    for alpha in [0.05, 0.1, 0.3] {
        let map = sine(alpha);
        let report = compute_constants(&map, 0.1).map_err(|e| e.to_string())?;
        for (name, v0) in corpus() {
            let start = Instant::now();
            let w = move |t: f64| v0(t + alpha * t.sin()) - v0(t);
            let sol = SeriesSolver::new(&map, &report, &w)
                .solve_on(&grid, TOL)
                .map_err(|e| format!("{name}, alpha {alpha}: {e}"))?;
            let elapsed = start.elapsed();
            let err = sol
                .v
                .grid()
                .iter()
                .zip(sol.v.values())
                .map(|(t, v)| (v - (v0(*t) - v0(0.0))).abs())
                .fold(0.0, f64::max);
            out.push(RoundTrip {
                name,
                alpha,
                err,
                lip_ratio: sol.lip_ratio,
                k_phi: report.k_phi,
                elapsed,
            });
        }
    }
    Ok(out)
}

fn criterion_1(runs: &[RoundTrip]) -> Outcome {
    let worst = runs.iter().fold(0.0f64, |m, r| m.max(r.err));
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    let failing: Vec<String> = runs
        .iter()
        .filter(|r| !(r.err <= 1e-8) || r.elapsed > Duration::from_secs(5))
        .map(|r| format!("{}@{}", r.name, r.alpha))
        .collect();
    Outcome {
        pass: failing.is_empty() && runs.len() == 12,
        detail: format!(
            "{} cases, max sup error {worst:.2e} (limit 1e-8), slowest {:.2} s (limit 5 s){}",
            runs.len(),
            slowest.as_secs_f64(),
            if failing.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", failing.join(" "))
            }
        ),
    }
}

fn criterion_2() -> Result<Outcome, String> {
    let start = Instant::now();
    let map = sine(0.1);
    let report = compute_constants(&map, 0.1).map_err(|e| e.to_string())?;
    let w = |t: f64| 0.1 * t.sin();
    let solver = SeriesSolver::new(&map, &report, &w);
    let probes = default_probes(0.0, PI, 32);
    let mut const_err = 0.0f64;
    for &t in &probes {
        let b = solver
            .bilateral_sum(t, TOL / 8.0)
            .map_err(|e| e.to_string())?;
        const_err = const_err.max((b - PI).abs());
    }
    let grid = uniform_grid(0.0, PI, 1001);
    let sol = solver.solve_on(&grid, TOL).map_err(|e| e.to_string())?;
    let v_err = sol
        .v
        .grid()
        .iter()
        .zip(sol.v.values())
        .map(|(t, v)| (v - t).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: const_err <= 1e-10 && v_err <= 1e-10 && elapsed <= 1.0,
        detail: format!(
            "bilateral constant error {const_err:.2e}, |v - t| {v_err:.2e} (limit 1e-10), {elapsed:.2} s (limit 1 s)"
        ),
    })
}

fn criterion_3() -> Result<Outcome, String> {
    let map = sine(0.1);
    let report = compute_constants(&map, 0.1).map_err(|e| e.to_string())?;
    let probes = default_probes(0.0, PI, 32);
    let sin2 = |t: f64| (2.0 * t).sin();
    let v = SeriesSolver::new(&map, &report, &sin2)
        .check_solvability(&probes, TOL)
        .map_err(|e| e.to_string())?;
    let sin2_rejected = !v.passed && v.spread >= 1e3 * TOL;
    let one = |_: f64| 1.0;
    let u = SeriesSolver::new(&map, &report, &one)
        .check_solvability(&probes, TOL)
        .map_err(|e| e.to_string())?;
    let one_rejected = !u.passed && (u.endpoint_decay.0 > TOL || u.endpoint_decay.1 > TOL);
    Ok(Outcome {
        pass: sin2_rejected && one_rejected,
        detail: format!(
            "sin(2t): spread {:.2e} vs required {:.0e}, {}; w = 1: endpoint values ({}, {}), {}",
            v.spread,
            1e3 * TOL,
            if sin2_rejected {
                "rejected"
            } else {
                "not rejected"
            },
            u.endpoint_decay.0,
            u.endpoint_decay.1,
            if one_rejected {
                "rejected"
            } else {
                "not rejected"
            },
        ),
    })
}

fn criterion_4(runs: &[RoundTrip]) -> Outcome {
    let worst = runs
        .iter()
        .map(|r| r.lip_ratio / r.k_phi)
        .fold(0.0f64, f64::max);
    let max_ratio = runs.iter().fold(0.0f64, |m, r| m.max(r.lip_ratio));
    Outcome {
        pass: runs.iter().all(|r| r.lip_ratio <= r.k_phi) && !runs.is_empty(),
        detail: format!(
            "{} cases, largest ||v||_Lip/||w||_Lip {max_ratio:.3}, largest ratio to K_phi {worst:.2e}",
            runs.len()
        ),
    }
}

fn criterion_5() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for alpha in [0.05, 0.1, 0.3] {
        let map = sine(alpha);
        let r = compute_constants(&map, 0.1).map_err(|e| e.to_string())?;
        let margin = r.step_margin();
        for _ in 0..100 {
            let ta = rng.gen_range(r.eps_phi..PI);
            let tb = rng.gen_range(r.eps_phi..PI);
            if ta == tb {
                continue;
            }
            let (mut a, mut b) = (ta, tb);
            let mut sum = 0.0;
            let mut tail_ok = false;
            for _ in 0..r.iteration_cap() {
                sum += (b - a).abs();
                a = map.eval(a).map_err(|e| e.to_string())?;
                b = map.eval(b).map_err(|e| e.to_string())?;
                let (ga, gb) = (PI - a, PI - b);
                if ga <= r.eps_phi && gb <= r.eps_phi && (ga + gb) / margin < 1e-12 {
                    tail_ok = true;
                    break;
                }
            }
            if !tail_ok {
                return Ok(Outcome {
                    pass: false,
                    detail: format!("tail not below 1e-12 for ({ta}, {tb}) at alpha {alpha}"),
                });
            }
            worst = worst.max(sum / (r.v_phi * (tb - ta).abs()));
            pairs += 1;
        }
    }
    Ok(Outcome {
        pass: worst <= 1.0 && pairs == 300,
        detail: format!("{pairs} pairs over alpha in {{0.05, 0.1, 0.3}}, largest sum / (V_phi |t_b - t_a|) = {worst:.2e}"),
    })
}

fn criterion_6() -> Result<Outcome, String> {
    let rows = scaling_study(
        &PerturbationField::sine(),
        0.1,
        &[0.4, 0.2, 0.1, 0.05, 0.025],
    )
    .map_err(|e| e.to_string())?;
    let ak: Vec<f64> = rows.iter().map(|r| r.alpha_k_phi).collect();
    let spread_k =
        ak.iter().copied().fold(0.0, f64::max) / ak.iter().copied().fold(f64::INFINITY, f64::min);
    let mut jet = Vec::new();
    for alpha in [0.2, 0.1, 0.05] {
        let map = sine(alpha);
        let report = compute_constants(&map, 0.1).map_err(|e| e.to_string())?;
        let cp = cp_bound(&map, 1, &report).map_err(|e| e.to_string())?;
        jet.push(alpha * cp.sum_bound);
    }
    let spread_j =
        jet.iter().copied().fold(0.0, f64::max) / jet.iter().copied().fold(f64::INFINITY, f64::min);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(Outcome {
        pass: spread_k < 10.0 && spread_j < 10.0,
        detail: format!(
            "alpha*K_phi [{}] spread {spread_k:.2}x; alpha*sum_bound [{}] spread {spread_j:.2}x (limit 10x)",
            fmt(&ak),
            fmt(&jet)
        ),
    })
}

// fourth-order central differences of t -> Phi^k t, with one Richardson
// step to sixth order
fn fd_derivatives(map: &ShiftMap, t: f64, k: usize) -> [f64; 3] {
    let g = |x: f64| {
        let mut y = x;
        for _ in 0..k {
            y = map.eval(y).expect("inside interval");
        }
        y
    };
    let d1 =
        |h: f64| (g(t - 2.0 * h) - 8.0 * g(t - h) + 8.0 * g(t + h) - g(t + 2.0 * h)) / (12.0 * h);
    let d2 = |h: f64| {
        (-g(t - 2.0 * h) + 16.0 * g(t - h) - 30.0 * g(t) + 16.0 * g(t + h) - g(t + 2.0 * h))
            / (12.0 * h * h)
    };
    let d3 = |h: f64| {
        (g(t - 3.0 * h) - 8.0 * g(t - 2.0 * h) + 13.0 * g(t - h) - 13.0 * g(t + h)
            + 8.0 * g(t + 2.0 * h)
            - g(t + 3.0 * h))
            / (8.0 * h * h * h)
    };
    let rich = |d: &dyn Fn(f64) -> f64, h: f64| (16.0 * d(0.5 * h) - d(h)) / 15.0;
    [rich(&d1, H[0]), rich(&d2, H[1]), rich(&d3, H[2])]
}

const H: [f64; 3] = [2e-3, 8e-3, 1.6e-2];

fn criterion_7() -> Result<Outcome, String> {
    let start = Instant::now();
    let map = sine(0.1);
    let bases: Vec<f64> = (0..9).map(|i| 0.3 + (PI - 0.6) * i as f64 / 8.0).collect();
    let mut worst = 0.0f64;
    let mut at = (0.0, 0, 0);
    for &t0 in &bases {
        for p in 1..=3 {
            let traj = propagate(&map, t0, p, 50).map_err(|e| e.to_string())?;
            for (k, u) in traj.iter().enumerate().skip(1) {
                let fd = fd_derivatives(&map, t0, k);
                // relative error of the jet vector in the l1 norm
                let diff: f64 = (0..p).map(|j| (u.jet[j] - fd[j]).abs()).sum();
                let rel = diff / u.jet_norm();
                if rel > worst {
                    worst = rel;
                    at = (t0, k, p);
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: worst <= 1e-5 && elapsed <= 10.0,
        detail: format!(
            "max relative jet error {worst:.2e} (limit 1e-5) at t0 = {:.3}, k = {}, p = {}; {elapsed:.2} s (limit 10 s)",
            at.0, at.1, at.2
        ),
    })
}

fn criterion_8() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    for alpha in [0.05, 0.1] {
        for p in 1..=3 {
            let c = contraction_check(&sine(alpha), p, 0.1).map_err(|e| e.to_string())?;
            let rel = (c.eta - alpha).abs() / alpha;
            pass &= rel <= 0.25;
            parts.push(format!(
                "alpha {alpha} p {p}: eta {:.4} ({:.1}%)",
                c.eta,
                100.0 * rel
            ));
        }
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (limit 25%)", parts.join("; ")),
    })
}

fn criterion_9() -> Result<Outcome, String> {
    let map = sine(0.1);
    let end = map.eval(1.0).map_err(|e| e.to_string())?;
    let constant = KernelElement::new(&map, 1.0, Seed::Constant(0.5)).map_err(|e| e.to_string())?;
    let step = KernelElement::new(
        &map,
        1.0,
        Seed::Step {
            split: 0.5 * (1.0 + end),
            left: 0.0,
            right: 1.0,
        },
    )
    .map_err(|e| e.to_string())?;
    let radii = [0.1, 0.01, 0.001];
    let mut const_osc = 0.0f64;
    let mut step_min = f64::INFINITY;
    for endpoint in [Endpoint::Minus, Endpoint::Plus] {
        for (_, o) in
            oscillation_profile(&map, &constant, endpoint, &radii).map_err(|e| e.to_string())?
        {
            const_osc = const_osc.max(o);
        }
        for (_, o) in
            oscillation_profile(&map, &step, endpoint, &radii).map_err(|e| e.to_string())?
        {
            step_min = step_min.min(o);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let probes: Vec<f64> = (0..100).map(|_| rng.gen_range(1e-3..PI - 1e-3)).collect();
    let inv = verify_invariance(&map, &constant, &probes)
        .map_err(|e| e.to_string())?
        .max(verify_invariance(&map, &step, &probes).map_err(|e| e.to_string())?);
    let seed_osc = step.seed_oscillation();
    Ok(Outcome {
        pass: const_osc == 0.0 && step_min >= 0.99 * seed_osc && inv == 0.0,
        detail: format!(
            "constant seed oscillation {const_osc}, step seed min oscillation {step_min} vs seed {seed_osc}, invariance defect {inv}"
        ),
    })
}

fn criterion_10() -> Result<Outcome, String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.1, 0.3] {
        let g = gram_matrix(alpha, 16, GramWeight::Jacobian, 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max(g.max_defect());
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: worst <= 1e-8 && elapsed <= 30.0,
        detail: format!("max |G - (pi/2) I| {worst:.2e} (limit 1e-8), {elapsed:.2} s (limit 30 s)"),
    })
}

fn main() {
    let names = [
        "round-trip inversion",
        "telescoping exactness",
        "solvability rejection",
        "certified Lipschitz bound",
        "geometric-sum constant",
        "O(1/alpha) scaling",
        "jet correctness",
        "contraction at the attracting point",
        "kernel dichotomy",
        "Gram isometry",
    ];
    let runs = round_trips();
    let results: Vec<Result<Outcome, String>> = vec![
        runs.as_ref().map(|r| criterion_1(r)).map_err(Clone::clone),
        criterion_2(),
        criterion_3(),
        runs.as_ref().map(|r| criterion_4(r)).map_err(Clone::clone),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let mut failed = 0;
    for (i, (name, res)) in names.iter().zip(results).enumerate() {
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        names.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
