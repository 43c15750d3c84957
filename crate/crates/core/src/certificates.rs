//! Closed-form certificates for the least-squares estimate of an AR(n)
//! process.
//!
//! Given a tightness level `ε > 0` and horizon `N`, the covariance sandwich
//!
//! ```text
//! V_dn = (N−n)·[I_n 0](V̄ − εσ²G)[I_n 0]ᵀ ⪯ YᵀY ⪯ (N−n)·[I_n 0](V̄ + εσ²G)[I_n 0]ᵀ = V_up
//! ```
//!
//! fails with probability at most `δ(ε, N)`, the sum of four exponential
//! terms (one for the boundary term, one for the noise energy, two for the
//! noise/state cross term). On top of it, `|wᵀ(θ̂_N − θ⁰)|` exceeds
//!
//! ```text
//! 2σ ‖wᵀ V_dn^{−1/2}‖₂ √( log( det(V_up V_dn⁻¹ + I)^{1/2} / δ ) )
//! ```
//!
//! with probability at most `2δ`.
//!
//! `δ` can underflow for large `N`, so every bound also carries its natural
//! logarithm, and radii are computed from the log.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, StationaryStatistics};
use crate::process::ArProcess;

/// Eigenvalues within this relative distance of `λ_n` count towards its
/// multiplicity.
pub const MULTIPLICITY_RTOL: f64 = 1e-8;
/// `V_dn` condition numbers above this are flagged.
pub const CONDITION_WARNING: f64 = 1e12;
const UNIT_NORM_TOL: f64 = 1e-12;

/// Everything the closed-form bounds depend on.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub process: &'a ArProcess,
    pub stats: &'a StationaryStatistics,
    pub epsilon: f64,
    pub horizon: usize,
}

impl<'a> BoundInputs<'a> {
    pub fn new(
        process: &'a ArProcess,
        stats: &'a StationaryStatistics,
        epsilon: f64,
        horizon: usize,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if horizon <= process.order() {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} must exceed the order {}",
                process.order()
            )));
        }
        if stats.v_bar.nrows() != process.order() + 1 {
            return Err(Error::DimensionMismatch(
                "statistics do not belong to this process".into(),
            ));
        }
        Ok(BoundInputs {
            process,
            stats,
            epsilon,
            horizon,
        })
    }

    fn order(&self) -> f64 {
        self.process.order() as f64
    }

    /// `N − n`.
    fn excess(&self) -> f64 {
        (self.horizon - self.process.order()) as f64
    }

    fn sigma2(&self) -> f64 {
        self.process.noise_variance()
    }
}

/// Exponent of the boundary-term bound: `−(N−n)σ²ε / (24 n E{y₁²})`.
pub fn lemma2_exponent(inputs: &BoundInputs) -> f64 {
    -inputs.excess() * inputs.sigma2() * inputs.epsilon
        / (24.0 * inputs.order() * inputs.stats.y_variance)
}

/// `2√2·exp(−(N−n)σ²ε / (24 n E{y₁²}))`.
pub fn lemma2_bound(inputs: &BoundInputs) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * lemma2_exponent(inputs).exp()
}

/// Exponent of the noise-energy bound: `−(N−n)/2·(1 + ε/3 − √(1 + 2ε/3))`.
pub fn lemma3_exponent(inputs: &BoundInputs) -> f64 {
    let eps = inputs.epsilon;
    -inputs.excess() / 2.0 * (1.0 + eps / 3.0 - (1.0 + 2.0 * eps / 3.0).sqrt())
}

pub fn lemma3_bound(inputs: &BoundInputs) -> f64 {
    2.0 * lemma3_exponent(inputs).exp()
}

/// `β̃ = (n+1)N/(N−n)·[E{y₁²}/(εσ²) + 2M_Φ(1 + ε^{−1/2})/N^{1/4}]`.
pub fn beta_tilde(inputs: &BoundInputs) -> f64 {
    let n = inputs.order();
    let big_n = inputs.horizon as f64;
    let eps = inputs.epsilon;
    (n + 1.0) * big_n / inputs.excess()
        * (inputs.stats.y_variance / (eps * inputs.sigma2())
            + 2.0 * inputs.stats.m_phi * (1.0 + eps.powf(-0.5)) / big_n.powf(0.25))
}

/// The two exponents of the cross-term bound.
pub fn lemma4_exponents(inputs: &BoundInputs) -> (f64, f64) {
    let theta = inputs.process.theta_norm() + 1.0;
    let martingale = -inputs.excess() * inputs.epsilon / (72.0 * theta * theta * beta_tilde(inputs));
    let energy = -inputs.epsilon * (inputs.horizon as f64).sqrt();
    (martingale, energy)
}

/// `2exp(−(N−n)ε / (72(‖θ⁰‖₂+1)²β̃)) + 2exp(−ε√N)`.
pub fn lemma4_bound(inputs: &BoundInputs) -> f64 {
    let (a, b) = lemma4_exponents(inputs);
    2.0 * a.exp() + 2.0 * b.exp()
}

/// `δ(ε, N)` and its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBreakdown {
    pub delta: f64,
    pub log_delta: f64,
    /// The four exponential terms of `δ`, each with its outer factor 2.
    pub lemma_terms: [f64; 4],
    pub log_lemma_terms: [f64; 4],
    pub beta_tilde: f64,
}

impl DeltaBreakdown {
    pub fn lemma2(&self) -> f64 {
        self.lemma_terms[0]
    }

    pub fn lemma3(&self) -> f64 {
        self.lemma_terms[1]
    }

    pub fn lemma4(&self) -> f64 {
        self.lemma_terms[2] + self.lemma_terms[3]
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn delta_total(inputs: &BoundInputs) -> DeltaBreakdown {
    let ln2 = std::f64::consts::LN_2;
    let (l4a, l4b) = lemma4_exponents(inputs);
    let log_lemma_terms = [
        1.5 * ln2 + lemma2_exponent(inputs),
        ln2 + lemma3_exponent(inputs),
        ln2 + l4a,
        ln2 + l4b,
    ];
    let lemma_terms = [
        lemma2_bound(inputs),
        lemma3_bound(inputs),
        2.0 * l4a.exp(),
        2.0 * l4b.exp(),
    ];
    DeltaBreakdown {
        delta: lemma2_bound(inputs) + lemma3_bound(inputs) + lemma4_bound(inputs),
        log_delta: log_sum_exp(&log_lemma_terms),
        lemma_terms,
        log_lemma_terms,
        beta_tilde: beta_tilde(inputs),
    }
}

/// Covariance sandwich `V_dn ⪯ YᵀY ⪯ V_up` holding with probability `≥ 1 − δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCertificate {
    pub epsilon: f64,
    pub horizon: usize,
    #[serde(with = "crate::serde_matrix")]
    pub v_dn: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub v_up: DMatrix<f64>,
    pub delta: f64,
    pub log_delta: f64,
    pub lemma_terms: [f64; 4],
    pub beta_tilde: f64,
    /// `V_dn ≻ 0`.
    pub feasible: bool,
    pub min_eigenvalue_v_dn: f64,
}

impl CovarianceCertificate {
    pub fn order(&self) -> usize {
        self.v_dn.nrows()
    }

    /// `δ ≥ 1`: formally valid but uninformative.
    pub fn is_vacuous(&self) -> bool {
        self.delta >= 1.0
    }
}

pub fn covariance_certificate(inputs: &BoundInputs) -> CovarianceCertificate {
    let breakdown = delta_total(inputs);
    let scale = inputs.excess();
    let spread = &inputs.stats.gramian * (inputs.epsilon * inputs.sigma2());
    let v_dn = linalg::top_block(&(&inputs.stats.v_bar - &spread)) * scale;
    let v_up = linalg::top_block(&(&inputs.stats.v_bar + &spread)) * scale;
    let min_eig = linalg::min_eigenvalue(&v_dn);
    CovarianceCertificate {
        epsilon: inputs.epsilon,
        horizon: inputs.horizon,
        v_dn,
        v_up,
        delta: breakdown.delta,
        log_delta: breakdown.log_delta,
        lemma_terms: breakdown.lemma_terms,
        beta_tilde: breakdown.beta_tilde,
        feasible: min_eig > 0.0,
        min_eigenvalue_v_dn: min_eig,
    }
}

/// Spectrum of the Gramian-whitened stationary covariance
/// `W⁻¹ Ṽ̄ W⁻ᵀ`, where `WWᵀ = Γ̄ = σ²[I_n 0]G[I_n 0]ᵀ`.
#[derive(Debug, Clone)]
struct WhitenedSpectrum {
    /// Descending.
    eigenvalues: Vec<f64>,
    /// Columns match `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    chol_factor: DMatrix<f64>,
}

impl WhitenedSpectrum {
    fn new(process: &ArProcess, stats: &StationaryStatistics) -> Result<Self> {
        let gamma = stats.gramian_top() * process.noise_variance();
        let chol = gamma
            .cholesky()
            .ok_or_else(|| Error::Numerical("whitening Gramian block is not positive definite".into()))?;
        let w = chol.l();
        let w_inv = w
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let whitened = linalg::symmetrize(&(&w_inv * stats.v_bar_top() * w_inv.transpose()));
        let eig = SymmetricEigen::new(whitened);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        if !(eigenvalues.last().copied().unwrap_or(0.0) > 0.0) {
            return Err(Error::Numerical("whitened covariance is not positive definite".into()));
        }
        Ok(WhitenedSpectrum {
            eigenvalues,
            eigenvectors,
            chol_factor: w,
        })
    }

    fn lambda_n(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    fn multiplicity(&self) -> usize {
        let l = self.lambda_n();
        self.eigenvalues
            .iter()
            .filter(|&&v| (v - l).abs() <= MULTIPLICITY_RTOL * l)
            .count()
    }
}

/// `λ_n`, the smallest eigenvalue of the whitened covariance; `V_dn ≻ 0`
/// exactly when `ε < λ_n`.
pub fn max_feasible_epsilon(process: &ArProcess, stats: &StationaryStatistics) -> Result<f64> {
    Ok(WhitenedSpectrum::new(process, stats)?.lambda_n())
}

/// Deviation bound for one direction `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCertificate {
    pub direction: Vec<f64>,
    /// `None` when the log argument is `≤ 1`.
    pub radius: Option<f64>,
    /// `2δ`.
    pub total_failure: f64,
    pub log_total_failure: f64,
    /// `log(det(V_up V_dn⁻¹ + I)^{1/2} / δ)`.
    pub log_argument: f64,
    /// `‖wᵀ V_dn^{−1/2}‖₂`.
    pub weighted_norm: f64,
    pub vacuous: bool,
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

impl DeviationCertificate {
    /// A finite radius whose failure probability `2δ` is below one.
    pub fn is_informative(&self) -> bool {
        self.radius.is_some() && self.total_failure < 1.0
    }
}

pub fn unit_vector(values: &[f64]) -> Result<DVector<f64>> {
    let v = DVector::from_column_slice(values);
    let norm = v.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidInput("direction must be a non-zero finite vector".into()));
    }
    Ok(v / norm)
}

/// Parts of the deviation bound shared with the Monte Carlo checkers.
pub(crate) struct DnFactor {
    pub inv_sqrt: DMatrix<f64>,
    pub condition_number: f64,
}

pub(crate) fn dn_factor(v_dn: &DMatrix<f64>) -> Result<DnFactor> {
    let eig = SymmetricEigen::new(linalg::symmetrize(v_dn));
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 0.0) {
        return Err(Error::Precondition("V_dn is not positive definite".into()));
    }
    let d = eig.eigenvalues.map(|v| v.powf(-0.5));
    let inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
    Ok(DnFactor {
        inv_sqrt,
        condition_number: max / min,
    })
}

/// `log det(V_up V_dn⁻¹ + I)`, evaluated through the congruent symmetric
/// matrix `V_dn^{−1/2} V_up V_dn^{−1/2} + I`.
pub(crate) fn log_det_up_over_dn(factor: &DnFactor, v_up: &DMatrix<f64>) -> f64 {
    let s = linalg::symmetrize(&(&factor.inv_sqrt * v_up * &factor.inv_sqrt));
    linalg::symmetric_eigenvalues(&s).iter().map(|v| (v + 1.0).ln()).sum()
}

pub fn deviation_radius(
    cert: &CovarianceCertificate,
    w: &DVector<f64>,
    sigma2: f64,
) -> Result<DeviationCertificate> {
    if !cert.feasible {
        return Err(Error::Precondition(format!(
            "certificate at epsilon={} is infeasible (V_dn not positive definite)",
            cert.epsilon
        )));
    }
    if w.len() != cert.order() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, expected {}",
            w.len(),
            cert.order()
        )));
    }
    if (w.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidInput(format!(
            "direction must have unit norm, got {}",
            w.norm()
        )));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!("noise variance must be positive, got {sigma2}")));
    }
    let factor = dn_factor(&cert.v_dn)?;
    let weighted_norm = (&factor.inv_sqrt * w).norm();
    let log_argument = 0.5 * log_det_up_over_dn(&factor, &cert.v_up) - cert.log_delta;
    let vacuous = !(log_argument > 0.0);
    let radius = (!vacuous).then(|| 2.0 * sigma2.sqrt() * weighted_norm * log_argument.sqrt());
    Ok(DeviationCertificate {
        direction: w.iter().copied().collect(),
        radius,
        total_failure: 2.0 * cert.delta,
        log_total_failure: std::f64::consts::LN_2 + cert.log_delta,
        log_argument,
        weighted_norm,
        vacuous,
        condition_number: factor.condition_number,
        ill_conditioned: factor.condition_number > CONDITION_WARNING,
    })
}

/// One horizon of a decay-rate sweep with `ε_N = λ_n − N^{−1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub horizon: usize,
    pub epsilon: f64,
    pub feasible: bool,
    pub delta: Option<f64>,
    pub log_delta: Option<f64>,
    pub radius: Option<f64>,
    /// `‖wᵀ Ṽ_dn^{−1/2}‖₂ = ‖wᵀ V_dn^{−1/2}‖₂·√(N−n)`.
    pub normalized_weighted_norm: Option<f64>,
}

impl RateRow {
    /// `log(2δ)`.
    pub fn log_total_failure(&self) -> Option<f64> {
        self.log_delta.map(|l| l + std::f64::consts::LN_2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAnalysis {
    pub lambda_n: f64,
    pub multiplicity_k: usize,
    /// Whitened spectrum `λ₁ ≥ … ≥ λ_n`.
    pub eigenvalues: Vec<f64>,
    /// `V₂ = W⁻ᵀ U diag(0, I_k) Uᵀ W⁻¹`; its complement carries `V₁`.
    #[serde(with = "crate::serde_matrix")]
    pub v2: DMatrix<f64>,
    /// Orthonormal basis of `range(V₂)` (k vectors).
    pub v2_basis: Vec<Vec<f64>>,
    /// Orthonormal basis of `{w : wᵀV₂w = 0}` (n − k vectors).
    pub fast_directions: Vec<Vec<f64>>,
    pub direction: Vec<f64>,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log(2δ)` against `√N` over feasible rows.
    pub slope: Option<f64>,
}

impl RateAnalysis {
    pub fn slope_relative_error(&self) -> Option<f64> {
        self.slope.map(|s| (s + self.lambda_n).abs() / self.lambda_n)
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn rate_analysis(
    process: &ArProcess,
    stats: &StationaryStatistics,
    horizon_grid: &[usize],
    direction: &DVector<f64>,
) -> Result<RateAnalysis> {
    let n = process.order();
    if horizon_grid.is_empty() {
        return Err(Error::InvalidInput("horizon grid is empty".into()));
    }
    if horizon_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("horizon grid must be strictly increasing".into()));
    }
    if horizon_grid[0] <= n {
        return Err(Error::InvalidInput(format!(
            "every horizon must exceed the order {n}"
        )));
    }
    if direction.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, expected {n}",
            direction.len()
        )));
    }

    let spectrum = WhitenedSpectrum::new(process, stats)?;
    let lambda_n = spectrum.lambda_n();
    let k = spectrum.multiplicity();

    let w_inv = spectrum
        .chol_factor
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let u_k = spectrum.eigenvectors.columns(n - k, k).into_owned();
    let left = w_inv.transpose() * &u_k;
    let v2 = linalg::symmetrize(&(&left * left.transpose()));
    let v2_eig = SymmetricEigen::new(v2.clone());
    let v2_max = v2_eig.eigenvalues.amax();
    let mut v2_basis = Vec::new();
    let mut fast_directions = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| v2_eig.eigenvalues[j].total_cmp(&v2_eig.eigenvalues[i]));
    for (rank, &i) in idx.iter().enumerate() {
        let col: Vec<f64> = v2_eig.eigenvectors.column(i).iter().copied().collect();
        if rank < k && v2_eig.eigenvalues[i] > 1e-10 * v2_max {
            v2_basis.push(col);
        } else {
            fast_directions.push(col);
        }
    }

    let mut rows = Vec::with_capacity(horizon_grid.len());
    for &horizon in horizon_grid {
        let epsilon = lambda_n - (horizon as f64).powf(-0.5);
        if epsilon <= 0.0 {
            rows.push(RateRow {
                horizon,
                epsilon,
                feasible: false,
                delta: None,
                log_delta: None,
                radius: None,
                normalized_weighted_norm: None,
            });
            continue;
        }
        let inputs = BoundInputs::new(process, stats, epsilon, horizon)?;
        let cert = covariance_certificate(&inputs);
        let (radius, norm) = if cert.feasible {
            let dc = deviation_radius(&cert, direction, process.noise_variance())?;
            (dc.radius, Some(dc.weighted_norm * ((horizon - n) as f64).sqrt()))
        } else {
            (None, None)
        };
        rows.push(RateRow {
            horizon,
            epsilon,
            feasible: cert.feasible,
            delta: Some(cert.delta),
            log_delta: Some(cert.log_delta),
            radius,
            normalized_weighted_norm: norm,
        });
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.feasible)
        .filter_map(|r| r.log_total_failure().map(|l| ((r.horizon as f64).sqrt(), l)))
        .unzip();
    let slope = fitted_slope(&xs, &ys);

    Ok(RateAnalysis {
        lambda_n,
        multiplicity_k: k,
        eigenvalues: spectrum.eigenvalues,
        v2,
        v2_basis,
        fast_directions,
        direction: direction.iter().copied().collect(),
        rows,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Setup {
        process: ArProcess,
        stats: StationaryStatistics,
    }

    fn setup(coeffs: &[f64], sigma2: f64) -> Setup {
        let process = ArProcess::new(coeffs.to_vec(), sigma2).unwrap();
        let stats = StationaryStatistics::for_process(&process).unwrap();
        Setup { process, stats }
    }

    impl Setup {
        fn inputs(&self, epsilon: f64, horizon: usize) -> BoundInputs<'_> {
            BoundInputs::new(&self.process, &self.stats, epsilon, horizon).unwrap()
        }
    }

    #[test]
    fn bound_inputs_validation() {
        let s = setup(&[0.3, 0.4], 1.0);
        assert!(BoundInputs::new(&s.process, &s.stats, 0.0, 100).is_err());
        assert!(BoundInputs::new(&s.process, &s.stats, -1.0, 100).is_err());
        assert!(BoundInputs::new(&s.process, &s.stats, 0.1, 2).is_err());
        let other = setup(&[0.5], 1.0);
        assert!(BoundInputs::new(&s.process, &other.stats, 0.1, 100).is_err());
    }

    #[test]
    fn lemma2_examples() {
        let s = setup(&[0.5], 1.0);
        let b = lemma2_bound(&s.inputs(0.1, 101));
        assert_relative_eq!(b, 2.0 * 2f64.sqrt() * (-0.3125f64).exp(), max_relative = 1e-14);

        let mut stats = s.stats.clone();
        stats.y_variance = 1e300;
        let inputs = BoundInputs { process: &s.process, stats: &stats, epsilon: 0.1, horizon: 101 };
        assert_relative_eq!(lemma2_bound(&inputs), 2.0 * 2f64.sqrt(), max_relative = 1e-12);

        let c = 2.0 * 2f64.sqrt();
        let one = lemma2_bound(&s.inputs(0.1, 101)) / c;
        let two = lemma2_bound(&s.inputs(0.1, 201)) / c;
        assert_relative_eq!(two, one * one, max_relative = 1e-13);
    }

    #[test]
    fn lemma3_examples() {
        let s = setup(&[0.5], 1.0);
        let inputs = BoundInputs { process: &s.process, stats: &s.stats, epsilon: 0.0, horizon: 101 };
        assert_eq!(lemma3_bound(&inputs), 2.0);
        let b = lemma3_bound(&s.inputs(3.0, 3));
        assert_relative_eq!(b, 2.0 * (-(2.0 - 3f64.sqrt())).exp(), max_relative = 1e-14);
        for i in 0..=2000 {
            let eps = i as f64 * 0.05;
            assert!(1.0 + eps / 3.0 - (1.0 + 2.0 * eps / 3.0).sqrt() >= 0.0);
        }
    }

    #[test]
    fn lemma4_example() {
        let s = setup(&[0.5], 1.0);
        let inputs = s.inputs(0.1, 101);
        let beta = (2.0 * 101.0 / 100.0)
            * ((4.0 / 3.0) / 0.1 + 2.0 * 4.0 * (1.0 + 0.1f64.powf(-0.5)) / 101f64.powf(0.25));
        assert_relative_eq!(beta_tilde(&inputs), beta, max_relative = 1e-9);
        let expected = 2.0 * (-100.0 * 0.1 / (72.0 * 2.25 * beta)).exp() + 2.0 * (-0.1 * 101f64.sqrt()).exp();
        assert_relative_eq!(lemma4_bound(&inputs), expected, max_relative = 1e-9);
        // frozen from a 30-digit evaluation
        assert_relative_eq!(beta_tilde(&inputs), 48.150_728_305_404_7, max_relative = 1e-12);
        assert_relative_eq!(lemma4_bound(&inputs), 2.729_536_052_919_558, max_relative = 1e-12);
    }

    #[test]
    fn lemma4_large_epsilon_limit_and_monotone_beta() {
        let s = setup(&[0.3, 0.4], 1.0);
        let (_, b) = lemma4_exponents(&s.inputs(1e4, 1000));
        assert_eq!(b.exp(), 0.0);
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let beta = beta_tilde(&s.inputs(i as f64 * 0.01, 500));
            assert!(beta < prev);
            prev = beta;
        }
    }

    #[test]
    fn delta_is_sum_of_lemmas() {
        let s = setup(&[0.5], 1.0);
        let inputs = s.inputs(0.2, 10_000);
        let d = delta_total(&inputs);
        let sum = lemma2_bound(&inputs) + lemma3_bound(&inputs) + lemma4_bound(&inputs);
        assert!((d.delta - sum).abs() <= 1e-15 * sum);
        let terms: f64 = d.lemma_terms.iter().sum();
        assert!((d.delta - terms).abs() <= 1e-15 * terms);
        assert_relative_eq!(d.log_delta, d.delta.ln(), max_relative = 1e-13);
        assert!(d.delta > 0.0);
    }

    #[test]
    fn delta_bounded_and_decreasing_in_horizon() {
        let s = setup(&[0.3, 0.4], 1.0);
        for &eps in &[0.01, 0.1, 0.3] {
            let mut prev = f64::INFINITY;
            for horizon in (3..20_000).step_by(97) {
                let d = delta_total(&s.inputs(eps, horizon)).delta;
                assert!(d <= 2.0 * (2f64.sqrt() + 3.0));
                assert!(d < prev);
                prev = d;
            }
        }
    }

    #[test]
    fn log_delta_survives_underflow() {
        let s = setup(&[0.5], 1.0);
        let d = delta_total(&s.inputs(0.999, 1_000_000));
        assert_eq!(d.delta, 0.0);
        assert!(d.log_delta.is_finite());
        // dominated by 2exp(−ε√N)
        assert_relative_eq!(d.log_delta, 2f64.ln() - 999.0, max_relative = 1e-9);
    }

    #[test]
    fn certificate_at_zero_epsilon_collapses() {
        let s = setup(&[0.3, 0.4], 1.0);
        let inputs = BoundInputs { process: &s.process, stats: &s.stats, epsilon: 0.0, horizon: 500 };
        let cert = covariance_certificate(&inputs);
        assert_eq!(cert.v_dn, cert.v_up);
        let expected = s.stats.v_bar_top() * 498.0;
        assert!((&cert.v_dn - expected).norm() < 1e-10);
    }

    #[test]
    fn certificate_spread_identity() {
        let s = setup(&[1.2, -0.5, 0.1], 2.0);
        let cert = covariance_certificate(&s.inputs(0.05, 800));
        let spread = &cert.v_up - &cert.v_dn;
        let expected = s.stats.gramian_top() * (2.0 * 797.0 * 0.05 * 2.0);
        assert!((&spread - &expected).norm() <= 1e-10 * expected.norm());
        assert!(linalg::min_eigenvalue(&spread) >= 0.0);
    }

    #[test]
    fn ar1_feasibility_threshold() {
        let s = setup(&[0.5], 1.0);
        // top blocks of V̄ and G are both 4/3
        let lambda = max_feasible_epsilon(&s.process, &s.stats).unwrap();
        assert_relative_eq!(lambda, (4.0 / 3.0) / s.stats.gramian[(0, 0)], max_relative = 1e-12);
        assert_relative_eq!(lambda, 1.0, max_relative = 1e-12);
        let w = setup(&[0.0], 1.0);
        assert_relative_eq!(max_feasible_epsilon(&w.process, &w.stats).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn feasibility_boundary_is_lambda_n() {
        for coeffs in [vec![0.5], vec![0.3, 0.4], vec![1.2, -0.5, 0.1], vec![0.0, 0.0, 0.5]] {
            let s = setup(&coeffs, 1.0);
            let lambda = max_feasible_epsilon(&s.process, &s.stats).unwrap();
            assert!(covariance_certificate(&s.inputs(0.99 * lambda, 1000)).feasible);
            assert!(!covariance_certificate(&s.inputs(1.01 * lambda, 1000)).feasible);
            assert!(covariance_certificate(&s.inputs(lambda * (1.0 - 1e-7), 1000)).feasible);
            assert!(!covariance_certificate(&s.inputs(lambda * (1.0 + 1e-7), 1000)).feasible);
        }
    }

    #[test]
    fn lambda_n_is_noise_scale_free() {
        let base = setup(&[0.3, 0.4], 1.0);
        let l0 = max_feasible_epsilon(&base.process, &base.stats).unwrap();
        for sigma2 in [0.1, 10.0] {
            let s = setup(&[0.3, 0.4], sigma2);
            assert_relative_eq!(max_feasible_epsilon(&s.process, &s.stats).unwrap(), l0, max_relative = 1e-10);
        }
    }

    #[test]
    fn radius_is_noise_scale_free() {
        // V_dn carries σ², so the leading 2σ cancels against ‖wᵀV_dn^{−1/2}‖.
        let w = unit_vector(&[1.0, -2.0]).unwrap();
        let base = setup(&[0.3, 0.4], 1.0);
        let r0 = deviation_radius(&covariance_certificate(&base.inputs(0.3, 5000)), &w, 1.0)
            .unwrap()
            .radius
            .unwrap();
        for sigma2 in [0.25, 4.0, 9.0] {
            let s = setup(&[0.3, 0.4], sigma2);
            let r = deviation_radius(&covariance_certificate(&s.inputs(0.3, 5000)), &w, sigma2)
                .unwrap()
                .radius
                .unwrap();
            assert_relative_eq!(r / r0, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn radius_ar1_hand_value() {
        let s = setup(&[0.5], 1.0);
        let cert = covariance_certificate(&s.inputs(0.5, 5000));
        let dc = deviation_radius(&cert, &unit_vector(&[1.0]).unwrap(), 1.0).unwrap();
        // V_dn = 4999·2/3, V_up = 4999·2, det(V_up/V_dn + 1)^{1/2} = 2
        let v_dn: f64 = 4999.0 * 2.0 / 3.0;
        let expected = 2.0 / v_dn.sqrt() * (2f64.ln() - cert.delta.ln()).sqrt();
        assert_relative_eq!(dc.radius.unwrap(), expected, max_relative = 1e-10);
        assert_relative_eq!(dc.total_failure, 2.0 * cert.delta);
        assert!(dc.is_informative());
    }

    #[test]
    fn radius_exchange_symmetry() {
        let v_dn = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]);
        let v_up = DMatrix::from_row_slice(2, 2, &[9.0, 2.0, 2.0, 9.0]);
        let cert = CovarianceCertificate {
            epsilon: 0.1,
            horizon: 100,
            v_dn,
            v_up,
            delta: 0.05,
            log_delta: 0.05f64.ln(),
            lemma_terms: [0.0, 0.0, 0.0, 0.05],
            beta_tilde: 1.0,
            feasible: true,
            min_eigenvalue_v_dn: 2.0,
        };
        let r1 = deviation_radius(&cert, &unit_vector(&[1.0, 0.0]).unwrap(), 1.0).unwrap();
        let r2 = deviation_radius(&cert, &unit_vector(&[0.0, 1.0]).unwrap(), 1.0).unwrap();
        assert!((r1.radius.unwrap() - r2.radius.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn radius_vanishes_as_delta_reaches_det_term() {
        let s = setup(&[0.3, 0.4], 1.0);
        let mut cert = covariance_certificate(&s.inputs(0.2, 2000));
        let w = unit_vector(&[1.0, 1.0]).unwrap();
        let factor = dn_factor(&cert.v_dn).unwrap();
        let half_log_det = 0.5 * log_det_up_over_dn(&factor, &cert.v_up);
        let mut prev = f64::INFINITY;
        for gap in [1.0, 1e-2, 1e-4, 1e-8] {
            cert.log_delta = half_log_det - gap;
            cert.delta = cert.log_delta.exp();
            let r = deviation_radius(&cert, &w, 1.0).unwrap().radius.unwrap();
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-3);
        cert.log_delta = half_log_det + 0.1;
        let dc = deviation_radius(&cert, &w, 1.0).unwrap();
        assert!(dc.vacuous && dc.radius.is_none());
    }

    #[test]
    fn radius_monotone_in_delta() {
        let s = setup(&[0.3, 0.4], 1.0);
        let mut cert = covariance_certificate(&s.inputs(0.2, 2000));
        let w = unit_vector(&[0.3, -1.0]).unwrap();
        let mut prev = 0.0;
        for log_delta in [-1.0, -5.0, -20.0, -100.0] {
            cert.log_delta = log_delta;
            cert.delta = log_delta.exp();
            let r = deviation_radius(&cert, &w, 1.0).unwrap().radius.unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn deviation_radius_errors() {
        let s = setup(&[0.3, 0.4], 1.0);
        let lambda = max_feasible_epsilon(&s.process, &s.stats).unwrap();
        let bad = covariance_certificate(&s.inputs(2.0 * lambda, 1000));
        let w = unit_vector(&[1.0, 0.0]).unwrap();
        assert!(matches!(deviation_radius(&bad, &w, 1.0), Err(Error::Precondition(_))));
        let good = covariance_certificate(&s.inputs(0.5 * lambda, 1000));
        assert!(matches!(
            deviation_radius(&good, &DVector::from_vec(vec![1.0, 1.0]), 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            deviation_radius(&good, &unit_vector(&[1.0]).unwrap(), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn certificate_json_roundtrip() {
        let s = setup(&[0.3, 0.4], 1.0);
        let cert = covariance_certificate(&s.inputs(0.1, 5000));
        let json = serde_json::to_string(&cert).unwrap();
        let back: CovarianceCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn fitted_slope_exact_line() {
        assert_relative_eq!(fitted_slope(&[1.0, 2.0, 3.0], &[5.0, 3.0, 1.0]).unwrap(), -2.0);
        assert!(fitted_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn rate_grid_validation() {
        let s = setup(&[0.5], 1.0);
        let w = unit_vector(&[1.0]).unwrap();
        assert!(rate_analysis(&s.process, &s.stats, &[], &w).is_err());
        assert!(rate_analysis(&s.process, &s.stats, &[100, 50], &w).is_err());
        assert!(rate_analysis(&s.process, &s.stats, &[1, 50], &w).is_err());
        let one = rate_analysis(&s.process, &s.stats, &[1000], &w).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert!(one.slope.is_none());
    }

    #[test]
    fn rate_rows_infeasible_for_small_horizon() {
        // λ_n = 1 for AR(1): N = 1 gives ε_N = 0
        let s = setup(&[0.5], 1.0);
        let w = unit_vector(&[1.0]).unwrap();
        let ra = rate_analysis(&s.process, &s.stats, &[2, 4], &w).unwrap();
        assert!(ra.rows.iter().all(|r| r.epsilon > 0.0));
        let s2 = setup(&[0.3, 0.4], 1.0);
        let l = max_feasible_epsilon(&s2.process, &s2.stats).unwrap();
        let tiny = (1.0 / (l * l)).floor() as usize;
        if tiny > 2 {
            let ra = rate_analysis(&s2.process, &s2.stats, &[tiny], &unit_vector(&[1.0, 0.0]).unwrap()).unwrap();
            assert!(!ra.rows[0].feasible && ra.rows[0].delta.is_none());
        }
    }
}
