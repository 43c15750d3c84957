//! Per-trial evaluation of the events behind the covariance sandwich and the
//! deviation bound, plus coverage campaigns that compare empirical failure
//! frequencies with the closed-form bounds.
//!
//! For a trajectory with states `x_t = [y_t … y_{t−n}]ᵀ` and
//! `X = Σ_{i=n}^{N−1} x_i x_iᵀ` (so that `[I_n 0]X[I_n 0]ᵀ = YᵀY`),
//!
//! ```text
//! X = A X Aᵀ + A(x_{n−1}x_{n−1}ᵀ − x_{N−1}x_{N−1}ᵀ)Aᵀ
//!       + Σ_{i=n−1}^{N−2} e_{i+1}(A x_i Bᵀ + B x_iᵀ Aᵀ) + Σ e_{i+1}² BBᵀ.
//! ```
//!
//! The three events bound the spectral radius of the boundary, cross and
//! noise-energy parts by `εσ²(N−n)/3` each.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificates::{
    self, covariance_certificate, dn_factor, log_det_up_over_dn, BoundInputs, CovarianceCertificate,
    DnFactor,
};
use crate::error::{Error, Result};
use crate::estimation::{build_regressors, ols_fit, RegressorSet};
use crate::linalg::{self, StationaryStatistics};
use crate::process::{ArProcess, CompanionStateSpace, StationarySampler, Trajectory};
use crate::rng;

pub const MIN_TRIALS: usize = 100;
/// Campaigns fail when more than this fraction of trials hit a numerical error.
pub const MAX_ERROR_FRACTION: f64 = 1e-3;

/// Evaluated inequality `value ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub holds: bool,
    pub value: f64,
    pub threshold: f64,
}

impl EventCheck {
    fn new(value: f64, threshold: f64) -> Self {
        EventCheck {
            holds: value <= threshold,
            value,
            threshold,
        }
    }
}

fn component_threshold(inputs: &BoundInputs) -> f64 {
    let excess = (inputs.horizon - inputs.process.order()) as f64;
    inputs.epsilon * inputs.process.noise_variance() * excess / 3.0
}

fn state(traj: &Trajectory, t: usize, n: usize) -> Result<DVector<f64>> {
    traj.state(t as i64, n).ok_or_else(|| {
        Error::InsufficientSamples(format!(
            "state x_{t} needs y_{} … y_{t}, trajectory starts at y_{}",
            t as i64 - n as i64,
            traj.first_time()
        ))
    })
}

fn innovation(traj: &Trajectory, t: usize) -> Result<f64> {
    traj.e(t as i64)
        .ok_or_else(|| Error::Precondition(format!("innovation e_{t} is not recorded")))
}

/// Boundary event: `ρ[A(x_{n−1}x_{n−1}ᵀ − x_{N−1}x_{N−1}ᵀ)Aᵀ] ≤ εσ²(N−n)/3`.
pub fn check_event_e1(traj: &Trajectory, ss: &CompanionStateSpace, inputs: &BoundInputs) -> Result<EventCheck> {
    let n = ss.order();
    let a = &ss.a_matrix;
    let first = a * state(traj, n - 1, n)?;
    let last = a * state(traj, inputs.horizon - 1, n)?;
    let m = &first * first.transpose() - &last * last.transpose();
    let rho = linalg::symmetric_spectral_radius(&linalg::symmetrize(&m));
    Ok(EventCheck::new(rho, component_threshold(inputs)))
}

/// Noise-energy event in scalar form:
/// `|Σ e_i²/(N−n) − σ²| ≤ σ²ε/3` over `noise = e_n … e_{N−1}`.
pub fn check_event_e2(noise: &[f64], inputs: &BoundInputs) -> Result<EventCheck> {
    let excess = inputs.horizon - inputs.process.order();
    if noise.len() != excess {
        return Err(Error::DimensionMismatch(format!(
            "expected N − n = {excess} innovations, got {}",
            noise.len()
        )));
    }
    let sigma2 = inputs.process.noise_variance();
    let mean_sq = noise.iter().map(|e| e * e).sum::<f64>() / excess as f64;
    Ok(EventCheck::new((mean_sq - sigma2).abs(), sigma2 * inputs.epsilon / 3.0))
}

/// `v = Σ_{i=n−1}^{N−2} e_{i+1} A x_i`.
pub fn cross_term_vector(traj: &Trajectory, ss: &CompanionStateSpace, horizon: usize) -> Result<DVector<f64>> {
    let n = ss.order();
    let mut v = DVector::zeros(n + 1);
    for i in (n - 1)..=(horizon - 2) {
        let x = state(traj, i, n)?;
        v.axpy(innovation(traj, i + 1)?, &(&ss.a_matrix * x), 1.0);
    }
    Ok(v)
}

/// Dense `v Bᵀ + B vᵀ`.
pub fn cross_term_matrix(v: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    v * b.transpose() + b * v.transpose()
}

/// Cross event: `ρ[Σ e_{i+1}(A x_i Bᵀ + B x_iᵀAᵀ)] ≤ εσ²(N−n)/3`.
///
/// With `B = e₁` the matrix has eigenvalues `v₁ ± ‖v‖₂` (and zeros), so the
/// spectral radius is `|v₁| + ‖v‖₂`.
pub fn check_event_e3(traj: &Trajectory, ss: &CompanionStateSpace, inputs: &BoundInputs) -> Result<EventCheck> {
    let v = cross_term_vector(traj, ss, inputs.horizon)?;
    Ok(EventCheck::new(v[0].abs() + v.norm(), component_threshold(inputs)))
}

/// `V_dn ⪯ YᵀY ⪯ V_up`.
pub fn check_event_pm(reg: &RegressorSet, cert: &CovarianceCertificate) -> Result<bool> {
    if !cert.feasible {
        return Err(Error::Precondition(
            "sandwich event is undefined for an infeasible certificate".into(),
        ));
    }
    linalg::psd_order_holds(&cert.v_dn, &reg.normal_matrix, &cert.v_up)
}

fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Self-normalized event with `S = YᵀE`:
/// `Sᵀ(YᵀY + V_dn)⁻¹S ≤ 2σ²[½ log det(YᵀY + V_dn) − ½ log det V_dn − log δ]`.
pub fn check_event_sn(
    reg: &RegressorSet,
    noise: &DVector<f64>,
    cert: &CovarianceCertificate,
    sigma2: f64,
) -> Result<EventCheck> {
    if !cert.feasible {
        return Err(Error::Precondition(
            "self-normalized event needs a feasible certificate".into(),
        ));
    }
    if noise.len() != reg.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} innovations for {} regressor rows",
            noise.len(),
            reg.rows()
        )));
    }
    let s = reg.y_matrix.tr_mul(noise);
    let shifted = &reg.normal_matrix + &cert.v_dn;
    let chol = shifted
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("YᵀY + V_dn is not positive definite".into()))?;
    let lhs = s.dot(&chol.solve(&s));
    let log_det_shifted = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let log_det_dn = log_det_spd(&cert.v_dn, "V_dn")?;
    let threshold = 2.0 * sigma2 * (0.5 * log_det_shifted - 0.5 * log_det_dn - cert.log_delta);
    Ok(EventCheck::new(lhs, threshold))
}

/// Everything evaluated on one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e_pm: bool,
    pub e_sn: bool,
    /// One entry per campaign direction.
    pub deviation_ok: Vec<bool>,
    /// `|wᵀ(θ̂ − θ⁰)|` per direction.
    pub deviations: Vec<f64>,
    /// Spectral radii of the boundary, noise-energy and cross parts (each
    /// unnormalized, compared with `εσ²(N−n)/3`).
    pub component_radii: [f64; 3],
}

impl TrialOutcome {
    /// `(e1 ∧ e2 ∧ e3) ⇒ e_pm`.
    pub fn sandwich_chain_holds(&self) -> bool {
        !(self.e1 && self.e2 && self.e3) || self.e_pm
    }

    /// `(e_pm ∧ e_sn) ⇒ deviation_ok` for every direction.
    pub fn deviation_chain_holds(&self) -> bool {
        !(self.e_pm && self.e_sn) || self.deviation_ok.iter().all(|&ok| ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub process: ArProcess,
    pub horizon: usize,
    pub epsilon: f64,
    /// Directions `w`, normalized before use.
    pub directions: Vec<Vec<f64>>,
    pub trials: usize,
    pub master_seed: u64,
    /// Accept `δ ≥ 1` or a missing radius instead of refusing the campaign.
    #[serde(default)]
    pub allow_vacuous: bool,
}

/// Precomputed, trial-independent state of a campaign.
#[derive(Debug, Clone)]
pub struct TrialContext {
    process: ArProcess,
    ss: CompanionStateSpace,
    stats: StationaryStatistics,
    epsilon: f64,
    horizon: usize,
    cert: CovarianceCertificate,
    directions: Vec<DVector<f64>>,
    radii: Vec<Option<f64>>,
    lambda_n: f64,
    sampler: StationarySampler,
}

impl TrialContext {
    pub fn new(config: &CampaignConfig) -> Result<Self> {
        let process = config.process.clone();
        let n = process.order();
        if config.horizon <= n + 1 {
            return Err(Error::Config(format!(
                "horizon {} must exceed order + 1 = {}",
                config.horizon,
                n + 1
            )));
        }
        if config.directions.is_empty() {
            return Err(Error::Config("at least one direction is required".into()));
        }
        let ss = process.companion();
        let stats = StationaryStatistics::for_process(&process)?;
        let lambda_n = certificates::max_feasible_epsilon(&process, &stats)?;
        if !(config.epsilon.is_finite() && config.epsilon > 0.0 && config.epsilon < lambda_n) {
            return Err(Error::Config(format!(
                "epsilon {} must lie in (0, lambda_n = {lambda_n})",
                config.epsilon
            )));
        }
        let inputs = BoundInputs::new(&process, &stats, config.epsilon, config.horizon)?;
        let cert = covariance_certificate(&inputs);
        if !cert.feasible {
            return Err(Error::Config(format!(
                "V_dn is not positive definite at epsilon {}",
                config.epsilon
            )));
        }
        if cert.is_vacuous() && !config.allow_vacuous {
            return Err(Error::Config(format!(
                "delta = {} is at least 1; set allow_vacuous to run anyway",
                cert.delta
            )));
        }
        let mut directions = Vec::with_capacity(config.directions.len());
        let mut radii = Vec::with_capacity(config.directions.len());
        for (k, w) in config.directions.iter().enumerate() {
            if w.len() != n {
                return Err(Error::Config(format!(
                    "direction {k} has length {}, expected {n}",
                    w.len()
                )));
            }
            let w = certificates::unit_vector(w).map_err(|e| Error::Config(format!("direction {k}: {e}")))?;
            let dev = certificates::deviation_radius(&cert, &w, process.noise_variance())?;
            if dev.radius.is_none() && !config.allow_vacuous {
                return Err(Error::Config(format!(
                    "direction {k} has no radius (log argument {} ≤ 0); set allow_vacuous to run anyway",
                    dev.log_argument
                )));
            }
            directions.push(w);
            radii.push(dev.radius);
        }
        let sampler = StationarySampler::with_covariance(&process, &stats.v_bar)?;
        Ok(TrialContext {
            process,
            ss,
            stats,
            epsilon: config.epsilon,
            horizon: config.horizon,
            cert,
            directions,
            radii,
            lambda_n,
            sampler,
        })
    }

    pub fn certificate(&self) -> &CovarianceCertificate {
        &self.cert
    }

    pub fn radii(&self) -> &[Option<f64>] {
        &self.radii
    }

    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    pub fn inputs(&self) -> BoundInputs<'_> {
        BoundInputs {
            process: &self.process,
            stats: &self.stats,
            epsilon: self.epsilon,
            horizon: self.horizon,
        }
    }

    /// Draw trial `index` from substream `index` of `master_seed`.
    pub fn simulate(&self, master_seed: u64, index: u64) -> Result<Trajectory> {
        let mut rng = rng::substream(master_seed, index);
        self.sampler.sample(self.horizon, &mut rng)
    }

    /// Evaluate every event on a trajectory that records its innovations.
    pub fn evaluate(&self, traj: &Trajectory) -> Result<TrialOutcome> {
        if traj.horizon() != self.horizon || !traj.has_noise() {
            return Err(Error::Precondition(
                "trajectory must match the campaign horizon and record its innovations".into(),
            ));
        }
        let n = self.process.order();
        let inputs = self.inputs();
        let e1 = check_event_e1(traj, &self.ss, &inputs)?;
        let e2 = check_event_e2(&traj.noise()[n - 1..self.horizon - 1], &inputs)?;
        let e3 = check_event_e3(traj, &self.ss, &inputs)?;

        let reg = build_regressors(traj, n)?;
        let e_pm = check_event_pm(&reg, &self.cert)?;
        let residuals = reg.residuals(&self.process.theta())?;
        let e_sn = check_event_sn(&reg, &residuals, &self.cert, self.process.noise_variance())?;

        let est = ols_fit(&reg)?;
        let error = &est.theta_hat - self.process.theta();
        let deviations: Vec<f64> = self.directions.iter().map(|w| w.dot(&error).abs()).collect();
        let deviation_ok = deviations
            .iter()
            .zip(&self.radii)
            .map(|(d, r)| r.is_some_and(|r| *d <= r))
            .collect();
        Ok(TrialOutcome {
            e1: e1.holds,
            e2: e2.holds,
            e3: e3.holds,
            e_pm,
            e_sn: e_sn.holds,
            deviation_ok,
            deviations,
            component_radii: [e1.value, e2.value * (self.horizon - n) as f64, e3.value],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Respected,
    Violated,
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Respected => "respected",
            Verdict::Violated => "violated",
            Verdict::Vacuous => "vacuous",
        }
    }
}

/// Failure statistics of a single event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub event: String,
    pub failures: usize,
    pub successes: usize,
    pub errors: usize,
    /// `failures / (failures + successes)`.
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl EventSummary {
    fn new(event: String, failures: usize, successes: usize, errors: usize, bound: f64) -> Self {
        let evaluated = failures + successes;
        let frequency = if evaluated == 0 { 0.0 } else { failures as f64 / evaluated as f64 };
        let stderr = if evaluated == 0 {
            0.0
        } else {
            (frequency * (1.0 - frequency) / evaluated as f64).sqrt()
        };
        let verdict = if !(bound < 1.0) {
            Verdict::Vacuous
        } else if frequency - 3.0 * stderr > bound {
            Verdict::Violated
        } else {
            Verdict::Respected
        };
        EventSummary {
            event,
            failures,
            successes,
            errors,
            frequency,
            stderr,
            bound,
            verdict,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainViolations {
    /// Trials with `e1 ∧ e2 ∧ e3` but not `e_pm`.
    pub sandwich: usize,
    /// Trials with `e_pm ∧ e_sn` but some deviation outside its radius.
    pub deviation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: usize,
    pub errors: usize,
    pub master_seed: u64,
    pub coeffs: Vec<f64>,
    pub noise_variance: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub lambda_n: f64,
    pub lemma_bounds: [f64; 3],
    pub delta: f64,
    pub log_delta: f64,
    pub two_delta: f64,
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<Option<f64>>,
    pub events: Vec<EventSummary>,
    pub chain_violations: ChainViolations,
    /// Largest observed `|wᵀ(θ̂ − θ⁰)|` per direction.
    pub max_deviations: Vec<f64>,
}

impl CoverageReport {
    pub fn event(&self, name: &str) -> Option<&EventSummary> {
        self.events.iter().find(|e| e.event == name)
    }

    pub fn all_respected(&self) -> bool {
        self.events.iter().all(|e| e.verdict != Verdict::Violated)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serializing report: {e}")))
    }
}

fn run_trials(ctx: &TrialContext, trials: usize, master_seed: u64) -> Vec<Result<TrialOutcome>> {
    let one = |i: usize| ctx.simulate(master_seed, i as u64).and_then(|traj| ctx.evaluate(&traj));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(one).collect()
    }
}

/// Trials run on the current rayon pool when the `parallel` feature is on;
/// results do not depend on the thread count.
pub fn run_campaign(config: &CampaignConfig) -> Result<CoverageReport> {
    if config.trials < MIN_TRIALS {
        return Err(Error::Config(format!(
            "trials must be at least {MIN_TRIALS}, got {}",
            config.trials
        )));
    }
    let ctx = TrialContext::new(config)?;
    let outcomes = run_trials(&ctx, config.trials, config.master_seed);

    let k = ctx.directions.len();
    let mut fails = [0usize; 5];
    let mut dev_fails = vec![0usize; k];
    let mut max_dev = vec![0.0f64; k];
    let mut chain = ChainViolations::default();
    let mut errors = 0usize;
    let mut first_error = None;
    for outcome in &outcomes {
        match outcome {
            Ok(o) => {
                for (slot, holds) in fails.iter_mut().zip([o.e1, o.e2, o.e3, o.e_pm, o.e_sn]) {
                    *slot += usize::from(!holds);
                }
                for j in 0..k {
                    dev_fails[j] += usize::from(!o.deviation_ok[j]);
                    max_dev[j] = max_dev[j].max(o.deviations[j]);
                }
                chain.sandwich += usize::from(!o.sandwich_chain_holds());
                chain.deviation += usize::from(!o.deviation_chain_holds());
            }
            Err(e) => {
                errors += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if errors as f64 > MAX_ERROR_FRACTION * config.trials as f64 {
        return Err(Error::Numerical(format!(
            "{errors} of {} trials failed; first error: {}",
            config.trials,
            first_error.unwrap_or_default()
        )));
    }

    let inputs = ctx.inputs();
    let cert = &ctx.cert;
    let lemma_bounds = [
        certificates::lemma2_bound(&inputs),
        certificates::lemma3_bound(&inputs),
        certificates::lemma4_bound(&inputs),
    ];
    let evaluated = config.trials - errors;
    let named = ["e1", "e2", "e3", "e_pm", "e_sn"];
    let bounds = [lemma_bounds[0], lemma_bounds[1], lemma_bounds[2], cert.delta, cert.delta];
    let mut events: Vec<EventSummary> = named
        .iter()
        .zip(fails)
        .zip(bounds)
        .map(|((name, f), b)| EventSummary::new(name.to_string(), f, evaluated - f, errors, b))
        .collect();
    for (j, f) in dev_fails.iter().enumerate() {
        events.push(EventSummary::new(
            format!("deviation_{j}"),
            *f,
            evaluated - f,
            errors,
            2.0 * cert.delta,
        ));
    }

    Ok(CoverageReport {
        trials: config.trials,
        errors,
        master_seed: config.master_seed,
        coeffs: ctx.process.coeffs().to_vec(),
        noise_variance: ctx.process.noise_variance(),
        horizon: config.horizon,
        epsilon: config.epsilon,
        lambda_n: ctx.lambda_n,
        lemma_bounds,
        delta: cert.delta,
        log_delta: cert.log_delta,
        two_delta: 2.0 * cert.delta,
        directions: ctx.directions.iter().map(|w| w.iter().copied().collect()).collect(),
        radii: ctx.radii.clone(),
        events,
        chain_violations: chain,
        max_deviations: max_dev,
    })
}

/// `½ log det(V_dn^{−1/2} V_up V_dn^{−1/2} + I)`, exposed for diagnostics.
pub fn half_log_det_ratio(cert: &CovarianceCertificate) -> Result<f64> {
    let factor: DnFactor = dn_factor(&cert.v_dn)?;
    Ok(0.5 * log_det_up_over_dn(&factor, &cert.v_up))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_discrete_lyapunov;
    use approx::assert_relative_eq;

    fn config(coeffs: Vec<f64>, horizon: usize, frac: f64, trials: usize, seed: u64) -> CampaignConfig {
        let process = ArProcess::new(coeffs, 1.0).unwrap();
        let stats = StationaryStatistics::for_process(&process).unwrap();
        let lambda = certificates::max_feasible_epsilon(&process, &stats).unwrap();
        let n = process.order();
        let directions = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .chain(std::iter::once(vec![1.0; n]))
            .collect();
        CampaignConfig {
            process,
            horizon,
            epsilon: frac * lambda,
            directions,
            trials,
            master_seed: seed,
            allow_vacuous: true,
        }
    }

    #[test]
    fn decomposition_reproduces_normal_matrix() {
        // Lyapunov solve of E_N built from the three parts recovers YᵀY.
        let cfg = config(vec![0.3, 0.4], 400, 0.5, 100, 1);
        let ctx = TrialContext::new(&cfg).unwrap();
        let traj = ctx.simulate(7, 0).unwrap();
        let (n, big_n) = (2usize, 400usize);
        let a = &ctx.ss.a_matrix;
        let b = &ctx.ss.b_vector;
        let x0 = a * traj.state(n as i64 - 1, n).unwrap();
        let x1 = a * traj.state(big_n as i64 - 1, n).unwrap();
        let v = cross_term_vector(&traj, &ctx.ss, big_n).unwrap();
        let energy: f64 = (n..big_n).map(|t| traj.e(t as i64).unwrap().powi(2)).sum();
        let e_n = (&x0 * x0.transpose() - &x1 * x1.transpose() + cross_term_matrix(&v, b) + b * b.transpose() * energy)
            / (big_n - n) as f64;
        let v_n = solve_discrete_lyapunov(a, &e_n).unwrap();
        let reg = build_regressors(&traj, n).unwrap();
        let rebuilt = linalg::top_block(&v_n) * (big_n - n) as f64;
        assert!((&rebuilt - &reg.normal_matrix).norm() <= 1e-9 * reg.normal_matrix.norm());
    }

    #[test]
    fn cross_term_radius_matches_dense_eigensolve() {
        for (coeffs, seed) in [(vec![0.5], 3u64), (vec![0.3, 0.4], 4), (vec![1.2, -0.5, 0.1], 5)] {
            let cfg = config(coeffs, 300, 0.5, 100, 1);
            let ctx = TrialContext::new(&cfg).unwrap();
            let traj = ctx.simulate(seed, 0).unwrap();
            let inputs = ctx.inputs();
            let closed = check_event_e3(&traj, &ctx.ss, &inputs).unwrap().value;
            let v = cross_term_vector(&traj, &ctx.ss, 300).unwrap();
            let dense = linalg::symmetric_spectral_radius(&cross_term_matrix(&v, &ctx.ss.b_vector));
            assert_relative_eq!(closed, dense, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_trajectory_events() {
        let cfg = config(vec![0.5], 200, 0.5, 100, 1);
        let ctx = TrialContext::new(&cfg).unwrap();
        let traj = Trajectory::from_recursion(&[0.5], &[0.0, 0.0], vec![0.0; 200]).unwrap();
        let inputs = ctx.inputs();
        let e1 = check_event_e1(&traj, &ctx.ss, &inputs).unwrap();
        assert!(e1.holds && e1.value == 0.0);
        assert!(check_event_e3(&traj, &ctx.ss, &inputs).unwrap().holds);
        let e2 = check_event_e2(&[1.0; 199], &inputs).unwrap();
        assert!(e2.holds && e2.value == 0.0);
    }

    #[test]
    fn zero_noise_in_sn_event() {
        // δ must sit below the log-det term for the threshold to be positive
        let cfg = config(vec![0.5], 5000, 0.5, 100, 1);
        let ctx = TrialContext::new(&cfg).unwrap();
        assert!(ctx.cert.delta < 1.0);
        let traj = ctx.simulate(1, 0).unwrap();
        let reg = build_regressors(&traj, 1).unwrap();
        let zero = DVector::zeros(reg.rows());
        let check = check_event_sn(&reg, &zero, &ctx.cert, 1.0).unwrap();
        assert_eq!(check.value, 0.0);
        assert!(check.holds);
    }

    #[test]
    fn thresholds_monotone_in_epsilon() {
        let small = config(vec![0.3, 0.4], 1000, 0.2, 100, 1);
        let large = config(vec![0.3, 0.4], 1000, 0.4, 100, 1);
        let cs = TrialContext::new(&small).unwrap();
        let cl = TrialContext::new(&large).unwrap();
        for i in 0..20 {
            let traj = cs.simulate(2, i).unwrap();
            let (is, il) = (cs.inputs(), cl.inputs());
            for (s, l) in [
                (check_event_e1(&traj, &cs.ss, &is).unwrap(), check_event_e1(&traj, &cl.ss, &il).unwrap()),
                (check_event_e3(&traj, &cs.ss, &is).unwrap(), check_event_e3(&traj, &cl.ss, &il).unwrap()),
                (
                    check_event_e2(&traj.noise()[1..999], &is).unwrap(),
                    check_event_e2(&traj.noise()[1..999], &il).unwrap(),
                ),
            ] {
                assert!(!s.holds || l.holds);
            }
        }
    }

    #[test]
    fn infeasible_certificate_refused() {
        let mut cfg = config(vec![0.5], 200, 0.5, 100, 1);
        let ctx = TrialContext::new(&cfg).unwrap();
        let traj = ctx.simulate(0, 0).unwrap();
        let reg = build_regressors(&traj, 1).unwrap();
        let mut cert = ctx.cert.clone();
        cert.feasible = false;
        assert!(matches!(check_event_pm(&reg, &cert), Err(Error::Precondition(_))));
        cfg.epsilon = 1.5;
        assert!(matches!(TrialContext::new(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn trial_count_validated() {
        let cfg = config(vec![0.5], 200, 0.5, 0, 1);
        assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
        let cfg = config(vec![0.5], 200, 0.5, 99, 1);
        assert!(run_campaign(&cfg).is_err());
    }

    #[test]
    fn vacuous_needs_opt_in() {
        let mut cfg = config(vec![0.5], 200, 0.5, 100, 1);
        cfg.allow_vacuous = false;
        assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
        cfg.allow_vacuous = true;
        let report = run_campaign(&cfg).unwrap();
        assert!(report.event("e_pm").unwrap().verdict == Verdict::Vacuous);
    }

    #[test]
    fn campaign_is_deterministic_and_totals_add_up() {
        let cfg = config(vec![0.3, 0.4], 800, 0.5, 150, 42);
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(a, b);
        for e in &a.events {
            assert_eq!(e.failures + e.successes + e.errors, a.trials);
            assert!((0.0..=1.0).contains(&e.frequency));
        }
        assert_eq!(a.chain_violations, ChainViolations::default());
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(EventSummary::new("x".into(), 0, 100, 0, 0.5).verdict, Verdict::Respected);
        assert_eq!(EventSummary::new("x".into(), 100, 0, 0, 0.5).verdict, Verdict::Violated);
        assert_eq!(EventSummary::new("x".into(), 100, 0, 0, 1.0).verdict, Verdict::Vacuous);
        // 0.6 ± 3·0.049 overlaps 0.5
        assert_eq!(EventSummary::new("x".into(), 60, 40, 0, 0.5).verdict, Verdict::Respected);
    }
}
