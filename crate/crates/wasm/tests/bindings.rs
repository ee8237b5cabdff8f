use shiftinv_wasm::{constants_text, kernel_values, orbit_points, roundtrip_values};

#[test]
fn constants_report_lists_k_phi() {
    let text = constants_text(0.2).unwrap();
    assert!(text.lines().any(|l| l.starts_with("K_phi=")));
    assert!(constants_text(1.2).unwrap_err().contains("alpha_max"));
}

#[test]
fn orbit_increases_toward_pi() {
    let pts = orbit_points(0.3, 1.0, -10, 40).unwrap();
    assert_eq!(pts.len(), 51);
    assert!(pts.windows(2).all(|w| w[0] < w[1]));
    assert!(std::f64::consts::PI - pts[50] < 1e-3);
}

#[test]
fn roundtrip_matches_v0() {
    for name in ["cos", "square", "damped_sin3", "hat"] {
        let n = 101;
        let out = roundtrip_values(0.2, name, n).unwrap();
        assert_eq!(out.len(), 3 * n);
        let err = (0..n)
            .map(|i| (out[n + i] - out[2 * n + i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{name}: {err}");
    }
    assert!(roundtrip_values(0.2, "nope", 50).is_err());
}

#[test]
fn kernel_step_keeps_oscillating() {
    let n = 200;
    let out = kernel_values(0.2, 1.0, n).unwrap();
    assert_eq!(out.len(), 2 * n + 6);
    assert!(out[n..2 * n].iter().all(|v| *v == 0.0 || *v == 1.0));
    assert!(out[2 * n..].iter().all(|o| (*o - 1.0).abs() < 1e-12));
}
