//! Finite-sample confidence certificates for ordinary least-squares
//! estimation of Gaussian AR(n) processes.
//!
//! The crate covers the whole pipeline:
//!
//! - [`process`]: AR(n) models, Schur stability, companion state space and
//!   exactly stationary simulation.
//! - [`linalg`]: discrete Lyapunov solves, Gramians, `M_Φ`, Toeplitz
//!   autocovariances and PSD ordering tests.
//! - [`certificates`]: the closed-form failure probabilities, the covariance
//!   sandwich `V_dn ⪯ YᵀY ⪯ V_up`, deviation radii and decay-rate analysis.
//! - [`estimation`]: regressors and the least-squares fit.
//! - [`tail_bounds`]: χ² tail thresholds and the auxiliary inequalities,
//!   with Monte Carlo falsification helpers.
//! - [`montecarlo`]: per-trial event checks and coverage campaigns.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod montecarlo;
pub mod process;
pub mod rng;
mod serde_matrix;
pub mod tail_bounds;

pub use certificates::{
    covariance_certificate, delta_total, deviation_radius, lemma2_bound, lemma3_bound,
    lemma4_bound, max_feasible_epsilon, rate_analysis, BoundInputs, CovarianceCertificate,
    DeltaBreakdown, DeviationCertificate, RateAnalysis, RateRow,
};
pub use error::{Error, Result};
pub use estimation::{build_regressors, ols_fit, weighted_deviation, OlsEstimate, RegressorSet};
pub use linalg::{
    autocovariance_sequence, compute_m_phi, psd_order_holds, solve_discrete_lyapunov,
    spectral_radius, stationary_stats, StationaryStatistics, ToeplitzCovariance,
};
pub use montecarlo::{run_campaign, CampaignConfig, CoverageReport, TrialOutcome, Verdict};
pub use process::{
    build_companion, check_schur_stable, simulate_stationary, ArProcess, CompanionStateSpace,
    StationarySampler, Trajectory,
};
