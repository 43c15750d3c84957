//! Browser demo bindings. Each operation takes and returns JSON text so the
//! page needs no generated type glue; the pure functions are also usable
//! (and tested) natively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use arcert::certificates::{self, unit_vector};
use arcert::linalg::{self, ToeplitzCovariance};
use arcert::process::characteristic_roots;
use arcert::{ArProcess, BoundInputs, StationaryStatistics};
use serde::{Deserialize, Serialize};

fn default_noise() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
pub struct CertifyRequest {
    pub coeffs: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    pub horizon: usize,
    /// `ε / λ_n`.
    pub epsilon_fraction: f64,
    /// Defaults to `e_1`.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertifyResponse {
    pub lambda_n: f64,
    pub epsilon: f64,
    pub feasible: bool,
    pub delta: f64,
    pub log_delta: f64,
    pub two_delta: f64,
    pub vacuous: bool,
    pub radius: Option<f64>,
    pub lemma_terms: [f64; 4],
    pub v_dn: Vec<Vec<f64>>,
    pub v_up: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct RateRequest {
    pub coeffs: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    pub horizon_min: usize,
    pub horizon_max: usize,
    pub points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatePoint {
    pub horizon: usize,
    pub epsilon: f64,
    pub log_two_delta: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RateResponse {
    pub lambda_n: f64,
    pub slope: Option<f64>,
    pub points: Vec<RatePoint>,
}

#[derive(Debug, Deserialize)]
pub struct SpectrumRequest {
    pub coeffs: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    pub points: usize,
    /// Toeplitz dimension for the eigenvalue overlay.
    #[serde(default)]
    pub toeplitz_dim: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumResponse {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub m_phi: f64,
    /// `σ² M_Φ`, the peak of the density.
    pub density_peak: f64,
    pub roots: Vec<[f64; 2]>,
    pub toeplitz_eigenvalues: Vec<f64>,
}

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad request: {e}"))
}

fn emit<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn setup(coeffs: &[f64], noise_variance: f64) -> Result<(ArProcess, StationaryStatistics, f64), String> {
    let p = ArProcess::new(coeffs.to_vec(), noise_variance).map_err(|e| e.to_string())?;
    let stats = StationaryStatistics::for_process(&p).map_err(|e| e.to_string())?;
    let lambda = certificates::max_feasible_epsilon(&p, &stats).map_err(|e| e.to_string())?;
    Ok((p, stats, lambda))
}

pub fn certify(input: &str) -> Result<String, String> {
    let req: CertifyRequest = parse(input)?;
    let (p, stats, lambda_n) = setup(&req.coeffs, req.noise_variance)?;
    if !(req.epsilon_fraction > 0.0) {
        return Err("epsilon_fraction must be positive".into());
    }
    let epsilon = req.epsilon_fraction * lambda_n;
    let inputs = BoundInputs::new(&p, &stats, epsilon, req.horizon).map_err(|e| e.to_string())?;
    let cert = certificates::covariance_certificate(&inputs);
    let radius = if cert.feasible {
        let mut w = vec![0.0; p.order()];
        w[0] = 1.0;
        let w = unit_vector(req.direction.as_deref().unwrap_or(&w)).map_err(|e| e.to_string())?;
        certificates::deviation_radius(&cert, &w, p.noise_variance())
            .map_err(|e| e.to_string())?
            .radius
    } else {
        None
    };
    emit(&CertifyResponse {
        lambda_n,
        epsilon,
        feasible: cert.feasible,
        delta: cert.delta,
        log_delta: cert.log_delta,
        two_delta: 2.0 * cert.delta,
        vacuous: cert.is_vacuous(),
        radius,
        lemma_terms: cert.lemma_terms,
        v_dn: rows(&cert.v_dn),
        v_up: rows(&cert.v_up),
    })
}

pub fn rate_curve(input: &str) -> Result<String, String> {
    let req: RateRequest = parse(input)?;
    let (p, stats, _) = setup(&req.coeffs, req.noise_variance)?;
    if req.points < 1 || req.horizon_min <= p.order() + 1 || req.horizon_max < req.horizon_min {
        return Err("need points >= 1 and order + 1 < horizon_min <= horizon_max".into());
    }
    let (lo, hi) = ((req.horizon_min as f64).ln(), (req.horizon_max as f64).ln());
    let mut grid: Vec<usize> = (0..req.points)
        .map(|i| {
            let t = if req.points == 1 { 0.0 } else { i as f64 / (req.points - 1) as f64 };
            (lo + t * (hi - lo)).exp().round() as usize
        })
        .collect();
    grid.dedup();
    let mut w = vec![0.0; p.order()];
    w[0] = 1.0;
    let w = unit_vector(&w).map_err(|e| e.to_string())?;
    let analysis = certificates::rate_analysis(&p, &stats, &grid, &w).map_err(|e| e.to_string())?;
    emit(&RateResponse {
        lambda_n: analysis.lambda_n,
        slope: analysis.slope,
        points: analysis
            .rows
            .iter()
            .map(|r| RatePoint {
                horizon: r.horizon,
                epsilon: r.epsilon,
                log_two_delta: r.log_total_failure(),
                radius: r.radius,
            })
            .collect(),
    })
}

pub fn spectrum(input: &str) -> Result<String, String> {
    let req: SpectrumRequest = parse(input)?;
    let (p, stats, _) = setup(&req.coeffs, req.noise_variance)?;
    if req.points < 2 {
        return Err("points must be at least 2".into());
    }
    let omega: Vec<f64> = (0..req.points)
        .map(|i| std::f64::consts::PI * i as f64 / (req.points - 1) as f64)
        .collect();
    let density = omega.iter().map(|&w| linalg::spectral_density(&p, w)).collect();
    let toeplitz_eigenvalues = match req.toeplitz_dim {
        Some(d) if d > 0 => ToeplitzCovariance::for_process(&p, d.min(512))
            .map_err(|e| e.to_string())?
            .eigenvalues(),
        _ => Vec::new(),
    };
    emit(&SpectrumResponse {
        omega,
        density,
        m_phi: stats.m_phi,
        density_peak: p.noise_variance() * stats.m_phi,
        roots: characteristic_roots(p.coeffs()).iter().map(|z| [z.re, z.im]).collect(),
        toeplitz_eigenvalues,
    })
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen]
    pub fn certify(input: &str) -> Result<String, JsError> {
        super::certify(input).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = rateCurve)]
    pub fn rate_curve(input: &str) -> Result<String, JsError> {
        super::rate_curve(input).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen]
    pub fn spectrum(input: &str) -> Result<String, JsError> {
        super::spectrum(input).map_err(|e| JsError::new(&e))
    }
}
