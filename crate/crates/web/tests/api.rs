use arcert_web::*;

#[test]
fn certify_ar1() {
    let out = certify(r#"{"coeffs": [0.5], "horizon": 5000, "epsilon_fraction": 0.5}"#).unwrap();
    let r: CertifyResponse = serde_json::from_str(&out).unwrap();
    assert_eq!(r.lambda_n, 1.0);
    assert!(r.feasible && !r.vacuous);
    assert!((r.delta - 0.4228238322604).abs() < 1e-10);
    assert!(r.radius.unwrap() > 0.0);
}

#[test]
fn certify_rejects_bad_input() {
    assert!(certify(r#"{"coeffs": [1.2], "horizon": 5000, "epsilon_fraction": 0.5}"#)
        .unwrap_err()
        .contains("Schur"));
    assert!(certify("not json").is_err());
    let out = certify(r#"{"coeffs": [0.5], "horizon": 100, "epsilon_fraction": 1.5}"#).unwrap();
    let r: CertifyResponse = serde_json::from_str(&out).unwrap();
    assert!(!r.feasible && r.radius.is_none());
}

#[test]
fn rate_curve_decreases() {
    let out = rate_curve(r#"{"coeffs": [0.5], "horizon_min": 1000, "horizon_max": 1000000, "points": 7}"#).unwrap();
    let r: RateResponse = serde_json::from_str(&out).unwrap();
    assert_eq!(r.points.len(), 7);
    assert_eq!(r.points[0].horizon, 1000);
    assert_eq!(r.points[6].horizon, 1_000_000);
    let logs: Vec<f64> = r.points.iter().map(|p| p.log_two_delta.unwrap()).collect();
    assert!(logs.windows(2).all(|w| w[1] < w[0]));
    assert!(r.slope.unwrap() < 0.0);
}

#[test]
fn spectrum_peak_bounds_density_and_toeplitz() {
    let out = spectrum(r#"{"coeffs": [0.3, 0.4], "points": 256, "toeplitz_dim": 64}"#).unwrap();
    let r: SpectrumResponse = serde_json::from_str(&out).unwrap();
    assert_eq!(r.omega.len(), 256);
    assert!(r.density.iter().all(|d| *d <= r.density_peak * (1.0 + 1e-12)));
    assert!(r.toeplitz_eigenvalues.iter().all(|e| *e <= r.density_peak * (1.0 + 1e-9)));
    assert_eq!(r.roots.len(), 2);
}
