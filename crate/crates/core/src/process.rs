//! AR(n) processes, their companion state space and exact-stationary
//! simulation.
//!
//! The model is `y_t = θ₁ y_{t−1} + … + θ_n y_{t−n} + e_t` with
//! `e_t ~ N(0, σ²)` i.i.d. Its state-space form uses the state
//! `x_t = [y_t, y_{t−1}, …, y_{t−n}]ᵀ ∈ ℝ^{n+1}`:
//!
//! ```text
//! x_{t+1} = A x_t + B e_{t+1},   A = [ θᵀ  0 ]   B = e₁
//!                                    [ I_n 0 ]
//! ```

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Roots must satisfy `|z| < 1 − STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Ground-truth Gaussian AR(n) system. Always Schur-stable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess", into = "RawProcess")]
pub struct ArProcess {
    coeffs: Vec<f64>,
    noise_variance: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProcess {
    coeffs: Vec<f64>,
    noise_variance: f64,
}

impl TryFrom<RawProcess> for ArProcess {
    type Error = Error;

    fn try_from(raw: RawProcess) -> Result<Self> {
        ArProcess::new(raw.coeffs, raw.noise_variance)
    }
}

impl From<ArProcess> for RawProcess {
    fn from(p: ArProcess) -> Self {
        RawProcess {
            coeffs: p.coeffs,
            noise_variance: p.noise_variance,
        }
    }
}

impl ArProcess {
    pub fn new(coeffs: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise_variance must be positive and finite, got {noise_variance}"
            )));
        }
        if !check_schur_stable(&coeffs)? {
            let rho = characteristic_roots(&coeffs)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            return Err(Error::Unstable(format!(
                "characteristic polynomial has a root of modulus {rho:.6}; \
                 all roots must lie strictly inside the unit circle (Schur condition)"
            )));
        }
        Ok(ArProcess {
            coeffs,
            noise_variance,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn theta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coeffs)
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn sigma(&self) -> f64 {
        self.noise_variance.sqrt()
    }

    /// `‖θ⁰‖₂`.
    pub fn theta_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Same coefficients, different noise variance.
    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        ArProcess::new(self.coeffs.clone(), noise_variance)
    }

    pub fn companion(&self) -> CompanionStateSpace {
        build_companion(self)
    }
}

fn validate_coeffs(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("coeffs must be non-empty".into()));
    }
    if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "coeffs must be finite, got {c}"
        )));
    }
    Ok(())
}

/// The n×n companion matrix of `p(x) = xⁿ − θ₁xⁿ⁻¹ − … − θ_n`.
fn polynomial_companion(coeffs: &[f64]) -> DMatrix<f64> {
    let n = coeffs.len();
    DMatrix::from_fn(n, n, |i, j| match i {
        0 => coeffs[j],
        _ if j + 1 == i => 1.0,
        _ => 0.0,
    })
}

/// Roots of the characteristic polynomial (the AR poles).
pub fn characteristic_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    linalg::complex_eigenvalues(&polynomial_companion(coeffs)).unwrap_or_else(|| vec![Complex::new(f64::NAN, 0.0); coeffs.len()])
}

/// True iff every root of `p` has modulus below `1 − STABILITY_MARGIN`.
pub fn check_schur_stable(coeffs: &[f64]) -> Result<bool> {
    validate_coeffs(coeffs)?;
    // Cheap sufficient condition, avoids an eigensolve for tiny coefficients.
    if coeffs.iter().map(|c| c.abs()).sum::<f64>() < 1.0 - STABILITY_MARGIN {
        return Ok(true);
    }
    let roots = characteristic_roots(coeffs);
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("eigenvalue computation failed".into()));
    }
    Ok(roots.iter().all(|z| z.norm() < 1.0 - STABILITY_MARGIN))
}

/// Companion realization `(A, B)` of an AR(n) process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionStateSpace {
    #[serde(with = "crate::serde_matrix")]
    pub a_matrix: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub b_vector: DVector<f64>,
}

impl CompanionStateSpace {
    /// AR order `n`; the state dimension is `n + 1`.
    pub fn order(&self) -> usize {
        self.a_matrix.nrows() - 1
    }

    pub fn state_dim(&self) -> usize {
        self.a_matrix.nrows()
    }

    /// First row of `A` without the trailing zero, i.e. `θ⁰`.
    pub fn coeffs(&self) -> Vec<f64> {
        (0..self.order()).map(|j| self.a_matrix[(0, j)]).collect()
    }
}

pub fn build_companion(process: &ArProcess) -> CompanionStateSpace {
    let n = process.order();
    let a_matrix = DMatrix::from_fn(n + 1, n + 1, |i, j| match i {
        0 if j < n => process.coeffs[j],
        0 => 0.0,
        _ if j + 1 == i => 1.0,
        _ => 0.0,
    });
    let mut b_vector = DVector::zeros(n + 1);
    b_vector[0] = 1.0;
    CompanionStateSpace { a_matrix, b_vector }
}

/// Sampled output `{y_t}` with the realized innovations.
///
/// Samples are aligned so that the last entry is `y_N`; the first stored
/// time index is [`Trajectory::first_time`]. Simulated trajectories start at
/// `t = −n` (the initial stationary state `x₀`), so every state
/// `x_t = [y_t … y_{t−n}]` with `0 ≤ t ≤ N` is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<f64>,
    /// `e_1 … e_N` when known (empty for data imported from outside).
    noise: Vec<f64>,
    horizon: usize,
    seed: Option<u64>,
}

impl Trajectory {
    /// Wrap externally obtained samples ending at `y_N`.
    pub fn from_samples(samples: Vec<f64>, horizon: usize) -> Result<Self> {
        if samples.len() < horizon {
            return Err(Error::InsufficientSamples(format!(
                "{} samples cannot cover horizon {horizon}",
                samples.len()
            )));
        }
        if samples.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        Ok(Trajectory {
            samples,
            noise: Vec::new(),
            horizon,
            seed: None,
        })
    }

    /// Run the recursion from `initial_state = [y_0, y_{−1}, …, y_{−n}]`
    /// with the given innovations `e_1 … e_N`.
    pub fn from_recursion(coeffs: &[f64], initial_state: &[f64], noise: Vec<f64>) -> Result<Self> {
        validate_coeffs(coeffs)?;
        let n = coeffs.len();
        if initial_state.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "initial state has length {}, expected {}",
                initial_state.len(),
                n + 1
            )));
        }
        let horizon = noise.len();
        let mut samples = Vec::with_capacity(horizon + n + 1);
        samples.extend(initial_state.iter().rev());
        for e in &noise {
            let len = samples.len();
            let y = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * samples[len - 1 - k])
                .sum::<f64>()
                + e;
            samples.push(y);
        }
        Ok(Trajectory {
            samples,
            noise,
            horizon,
            seed: None,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time index of `samples()[0]`.
    pub fn first_time(&self) -> i64 {
        self.horizon as i64 + 1 - self.samples.len() as i64
    }

    /// `y_t`, if stored.
    pub fn y(&self, t: i64) -> Option<f64> {
        let idx = t - self.first_time();
        if idx < 0 {
            return None;
        }
        self.samples.get(idx as usize).copied()
    }

    pub fn has_noise(&self) -> bool {
        self.noise.len() == self.horizon
    }

    /// `e_1 … e_N`.
    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    /// `e_t` for `1 ≤ t ≤ N`.
    pub fn e(&self, t: i64) -> Option<f64> {
        if t < 1 {
            return None;
        }
        self.noise.get(t as usize - 1).copied()
    }

    /// State `x_t = [y_t, …, y_{t−n}]ᵀ`.
    pub fn state(&self, t: i64, order: usize) -> Option<DVector<f64>> {
        let mut x = DVector::zeros(order + 1);
        for k in 0..=order {
            x[k] = self.y(t - k as i64)?;
        }
        Some(x)
    }

    /// Multiply every sample (and innovation) by `c`.
    pub fn scaled(&self, c: f64) -> Trajectory {
        Trajectory {
            samples: self.samples.iter().map(|y| c * y).collect(),
            noise: self.noise.iter().map(|e| c * e).collect(),
            horizon: self.horizon,
            seed: self.seed,
        }
    }

    /// Single-column CSV with header `y`, one stored sample per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 20 + 2);
        out.push_str("y\n");
        for y in &self.samples {
            out.push_str(&format!("{y}\n"));
        }
        out
    }
}

/// Draws exact-stationary trajectories of one process.
///
/// The initial state `x₀` is sampled from `N(0, V̄)` through a Cholesky
/// factor of the stationary covariance, so no burn-in is needed.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    process: ArProcess,
    chol_factor: DMatrix<f64>,
}

impl StationarySampler {
    pub fn new(process: &ArProcess) -> Result<Self> {
        let ss = build_companion(process);
        let stats = linalg::stationary_stats(&ss, process.noise_variance())?;
        Self::with_covariance(process, &stats.v_bar)
    }

    pub fn with_covariance(process: &ArProcess, v_bar: &DMatrix<f64>) -> Result<Self> {
        let chol_factor = match v_bar.clone().cholesky() {
            Some(c) => c.l(),
            None => linalg::psd_sqrt(v_bar)?,
        };
        Ok(StationarySampler {
            process: process.clone(),
            chol_factor,
        })
    }

    pub fn process(&self) -> &ArProcess {
        &self.process
    }

    pub fn sample<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Result<Trajectory> {
        let n = self.process.order();
        if horizon <= n {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} must exceed the order {n}"
            )));
        }
        let z = DVector::from_fn(n + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x0 = &self.chol_factor * z;
        let sigma = self.process.sigma();
        let noise: Vec<f64> = (0..horizon)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Trajectory::from_recursion(self.process.coeffs(), x0.as_slice(), noise)
    }
}

/// Deterministic function of `(process, horizon, seed)`.
pub fn simulate_stationary(process: &ArProcess, horizon: usize, seed: u64) -> Result<Trajectory> {
    let sampler = StationarySampler::new(process)?;
    let mut rng = rng::seeded(seed);
    let mut traj = sampler.sample(horizon, &mut rng)?;
    traj.seed = Some(seed);
    Ok(traj)
}

/// JSON document describing a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub coeffs: Vec<f64>,
    pub noise_variance: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn process(&self) -> Result<ArProcess> {
        ArProcess::new(self.coeffs.clone(), self.noise_variance)
    }

    pub fn simulate(&self) -> Result<Trajectory> {
        simulate_stationary(&self.process()?, self.horizon, self.seed)
    }
}
