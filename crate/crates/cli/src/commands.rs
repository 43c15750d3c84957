use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use arcert::certificates::{self, DeviationCertificate, RateAnalysis};
use arcert::montecarlo::{self, CampaignConfig, CoverageReport};
use arcert::process::SimulationSpec;
use arcert::{BoundInputs, CovarianceCertificate, StationaryStatistics};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::{EpsilonPolicy, ExperimentConfig};
use crate::error::CliError;

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunOptions {
    fn output_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn seed(&self, cfg: &ExperimentConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDeviation {
    pub label: String,
    pub certificate: DeviationCertificate,
}

/// Contents of `certificate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutput {
    pub coeffs: Vec<f64>,
    pub noise_variance: f64,
    pub horizon: usize,
    pub epsilon_policy: EpsilonPolicy,
    pub epsilon: f64,
    pub lambda_n: f64,
    pub m_phi: f64,
    pub y_variance: f64,
    pub feasible: bool,
    /// Absent when the resolved `ε` is not positive.
    pub certificate: Option<CovarianceCertificate>,
    pub deviations: Vec<LabeledDeviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub lambda_n: f64,
    pub multiplicity_k: usize,
    pub direction: Vec<f64>,
    pub slope: Option<f64>,
    pub slope_relative_error: Option<f64>,
    pub v2_basis: Vec<Vec<f64>>,
    pub fast_directions: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct RateCsvRow {
    #[serde(rename = "N")]
    horizon: usize,
    epsilon: f64,
    delta: Option<f64>,
    log_delta: Option<f64>,
    radius: Option<f64>,
    feasible: bool,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    unix_time: u64,
    seed: Option<u64>,
    threads: Option<usize>,
    files: Vec<String>,
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<String, CliError> {
    fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", dir.join(name).display())))?;
    Ok(name.to_string())
}

fn write_metadata(dir: &Path, command: &str, opts: &RunOptions, seed: Option<u64>, files: &[String]) -> Result<(), CliError> {
    let unix_time = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        unix_time,
        seed,
        threads: opts.threads,
        files: files.to_vec(),
    };
    write_file(dir, "metadata.json", serde_json::to_string_pretty(&meta)?.as_bytes())?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

fn stationary(cfg: &ExperimentConfig) -> Result<(StationaryStatistics, f64), CliError> {
    let stats = StationaryStatistics::for_process(&cfg.process)?;
    let lambda_n = certificates::max_feasible_epsilon(&cfg.process, &stats)?;
    Ok((stats, lambda_n))
}

pub fn certify(cfg: &ExperimentConfig) -> Result<CertifyOutput, CliError> {
    let horizon = cfg.require_horizon()?;
    let policy = cfg.require_epsilon()?;
    let directions = cfg.resolved_directions()?;
    let (stats, lambda_n) = stationary(cfg)?;
    let epsilon = policy.resolve(lambda_n, horizon);
    let p = &cfg.process;

    let mut out = CertifyOutput {
        coeffs: p.coeffs().to_vec(),
        noise_variance: p.noise_variance(),
        horizon,
        epsilon_policy: policy,
        epsilon,
        lambda_n,
        m_phi: stats.m_phi,
        y_variance: stats.y_variance,
        feasible: false,
        certificate: None,
        deviations: Vec::new(),
    };
    if epsilon <= 0.0 {
        return Ok(out);
    }
    let inputs = BoundInputs::new(p, &stats, epsilon, horizon)
        .map_err(|e| CliError::config("epsilon", e.to_string()))?;
    let cert = certificates::covariance_certificate(&inputs);
    out.feasible = cert.feasible;
    if cert.feasible {
        for (label, w) in directions {
            let w = DVector::from_vec(w);
            let certificate = certificates::deviation_radius(&cert, &w, p.noise_variance())?;
            out.deviations.push(LabeledDeviation { label, certificate });
        }
    }
    out.certificate = Some(cert);
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "none".into())
}

pub fn certify_summary(out: &CertifyOutput) -> String {
    let mut s = String::new();
    s.push_str(&format!("process        AR({}) coeffs={:?} sigma2={}\n", out.coeffs.len(), out.coeffs, out.noise_variance));
    s.push_str(&format!("horizon        N={}\n", out.horizon));
    s.push_str(&format!("lambda_n       {:.6}\n", out.lambda_n));
    s.push_str(&format!("epsilon        {:.6}\n", out.epsilon));
    s.push_str(&format!("feasible       {}\n", if out.feasible { "yes" } else { "infeasible" }));
    if let Some(cert) = &out.certificate {
        s.push_str(&format!("delta          {:.6e} (log {:.6})\n", cert.delta, cert.log_delta));
        s.push_str(&format!("2*delta        {:.6e}\n", 2.0 * cert.delta));
        s.push_str(&format!("vacuous        {}\n", if cert.is_vacuous() { "yes" } else { "no" }));
    }
    for d in &out.deviations {
        s.push_str(&format!("radius[{}]  {}\n", d.label, fmt_opt(d.certificate.radius)));
    }
    s
}

pub fn cmd_certify(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CertifyOutput, CliError> {
    let out = certify(cfg)?;
    let dir = opts.output_dir(cfg);
    prepare_dir(&dir)?;
    let files = vec![
        write_file(&dir, "certificate.json", serde_json::to_string_pretty(&out)?.as_bytes())?,
        write_file(&dir, "summary.txt", certify_summary(&out).as_bytes())?,
    ];
    write_metadata(&dir, "certify", opts, None, &files)?;
    Ok(out)
}

/// Validates the campaign settings with field-level messages before running.
pub fn campaign_config(cfg: &ExperimentConfig, seed: u64) -> Result<CampaignConfig, CliError> {
    let horizon = cfg.require_horizon()?;
    let policy = cfg.require_epsilon()?;
    let trials = cfg
        .trials
        .ok_or_else(|| CliError::config("trials", "missing required field"))?;
    if trials < montecarlo::MIN_TRIALS {
        return Err(CliError::config(
            "trials",
            format!("must be at least {}, got {trials}", montecarlo::MIN_TRIALS),
        ));
    }
    let (stats, lambda_n) = stationary(cfg)?;
    let epsilon = policy.resolve(lambda_n, horizon);
    if !(epsilon > 0.0 && epsilon < lambda_n) {
        return Err(CliError::config(
            "epsilon",
            format!("resolved value {epsilon} is outside (0, lambda_n = {lambda_n})"),
        ));
    }
    let inputs = BoundInputs::new(&cfg.process, &stats, epsilon, horizon)?;
    let delta = certificates::delta_total(&inputs).delta;
    if delta >= 1.0 && !cfg.allow_vacuous {
        return Err(CliError::config(
            "allow_vacuous",
            format!("delta = {delta} is at least 1; set allow_vacuous to run a vacuous campaign"),
        ));
    }
    Ok(CampaignConfig {
        process: cfg.process.clone(),
        horizon,
        epsilon,
        directions: cfg.resolved_directions()?.into_iter().map(|(_, w)| w).collect(),
        trials,
        master_seed: seed,
        allow_vacuous: cfg.allow_vacuous,
    })
}

pub fn report_csv(report: &CoverageReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for e in &report.events {
        w.serialize(e)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_montecarlo(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CoverageReport, CliError> {
    let seed = opts.seed(cfg);
    let campaign = campaign_config(cfg, seed)?;
    let report = montecarlo::run_campaign(&campaign)?;
    let dir = opts.output_dir(cfg);
    prepare_dir(&dir)?;
    let files = vec![
        write_file(&dir, "report.json", report.to_json()?.as_bytes())?,
        write_file(&dir, "report.csv", &report_csv(&report)?)?,
    ];
    write_metadata(&dir, "montecarlo", opts, Some(seed), &files)?;
    Ok(report)
}

pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<RateAnalysis, CliError> {
    if let Some(p) = cfg.epsilon {
        if p != EpsilonPolicy::Corollary {
            return Err(CliError::config("epsilon", "rate-sweep always uses the corollary policy"));
        }
    }
    let grid = match (&cfg.horizon_grid, cfg.horizon) {
        (Some(g), _) => g.clone(),
        (None, Some(h)) => vec![h],
        (None, None) => return Err(CliError::config("horizon_grid", "missing required field")),
    };
    let (_, w) = cfg.resolved_directions()?.swap_remove(0);
    let (stats, _) = stationary(cfg)?;
    Ok(certificates::rate_analysis(&cfg.process, &stats, &grid, &DVector::from_vec(w))?)
}

pub fn rate_csv(analysis: &RateAnalysis) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in &analysis.rows {
        w.serialize(RateCsvRow {
            horizon: r.horizon,
            epsilon: r.epsilon,
            delta: r.delta,
            log_delta: r.log_delta,
            radius: r.radius,
            feasible: r.feasible,
        })?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_rate_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RateAnalysis, CliError> {
    let analysis = rate_sweep(cfg)?;
    let fit = RateFit {
        lambda_n: analysis.lambda_n,
        multiplicity_k: analysis.multiplicity_k,
        direction: analysis.direction.clone(),
        slope: analysis.slope,
        slope_relative_error: analysis.slope_relative_error(),
        v2_basis: analysis.v2_basis.clone(),
        fast_directions: analysis.fast_directions.clone(),
    };
    let dir = opts.output_dir(cfg);
    prepare_dir(&dir)?;
    let files = vec![
        write_file(&dir, "rate.csv", &rate_csv(&analysis)?)?,
        write_file(&dir, "rate_fit.json", serde_json::to_string_pretty(&fit)?.as_bytes())?,
    ];
    write_metadata(&dir, "rate-sweep", opts, None, &files)?;
    Ok(analysis)
}

pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(), CliError> {
    let seed = opts.seed(cfg);
    let spec = SimulationSpec {
        coeffs: cfg.process.coeffs().to_vec(),
        noise_variance: cfg.process.noise_variance(),
        horizon: cfg.require_horizon()?,
        seed,
    };
    let traj = spec.simulate()?;
    let dir = opts.output_dir(cfg);
    prepare_dir(&dir)?;
    let files = vec![write_file(&dir, "trajectory.csv", traj.to_csv().as_bytes())?];
    write_metadata(&dir, "simulate", opts, Some(seed), &files)?;
    Ok(())
}
