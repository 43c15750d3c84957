//! Regressors and the ordinary least-squares estimate.
//!
//! Row `t` of `Y` (for `t = n+1 … N`) is `[y_{t−1}, …, y_{t−n}]` and the
//! matching target is `y_t`, so the first regressor is `Y_n` and the first
//! target `y_{n+1}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::process::{ArProcess, Trajectory};

/// Normal matrices with a condition number at or above this fall back to
/// the pseudo-inverse.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSet {
    /// `(N−n)×n`.
    pub y_matrix: DMatrix<f64>,
    /// `y_{n+1} … y_N`.
    pub target: DVector<f64>,
    /// `YᵀY`.
    pub normal_matrix: DMatrix<f64>,
}

impl RegressorSet {
    pub fn from_parts(y_matrix: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        if y_matrix.nrows() != target.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} regressor rows but {} targets",
                y_matrix.nrows(),
                target.len()
            )));
        }
        let normal_matrix = y_matrix.tr_mul(&y_matrix);
        Ok(RegressorSet {
            y_matrix,
            target,
            normal_matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.y_matrix.ncols()
    }

    pub fn rows(&self) -> usize {
        self.y_matrix.nrows()
    }

    /// `Yᵀy`.
    pub fn moment(&self) -> DVector<f64> {
        self.y_matrix.tr_mul(&self.target)
    }

    /// `target − Yθ`; with the true `θ⁰` these are exactly `e_{n+1} … e_N`.
    pub fn residuals(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.order()
            )));
        }
        Ok(&self.target - &self.y_matrix * theta)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stacked(&self, other: &RegressorSet) -> Result<RegressorSet> {
        if self.order() != other.order() {
            return Err(Error::DimensionMismatch("regressor orders differ".into()));
        }
        let rows = self.rows() + other.rows();
        let y = DMatrix::from_fn(rows, self.order(), |i, j| {
            if i < self.rows() {
                self.y_matrix[(i, j)]
            } else {
                other.y_matrix[(i - self.rows(), j)]
            }
        });
        let t = DVector::from_iterator(rows, self.target.iter().chain(other.target.iter()).copied());
        RegressorSet::from_parts(y, t)
    }
}

pub fn build_regressors(traj: &Trajectory, n: usize) -> Result<RegressorSet> {
    let big_n = traj.horizon();
    if n == 0 {
        return Err(Error::InvalidInput("order must be positive".into()));
    }
    if big_n <= n {
        return Err(Error::InsufficientSamples(format!(
            "horizon {big_n} must exceed the order {n}"
        )));
    }
    if traj.len() < big_n + n {
        return Err(Error::InsufficientSamples(format!(
            "need at least N + n = {} samples, got {}",
            big_n + n,
            traj.len()
        )));
    }
    let rows = big_n - n;
    let first = n as i64 + 1;
    let sample = |t: i64| traj.y(t).expect("index range checked above");
    let y_matrix = DMatrix::from_fn(rows, n, |r, k| sample(first + r as i64 - 1 - k as i64));
    let target = DVector::from_fn(rows, |r, _| sample(first + r as i64));
    RegressorSet::from_parts(y_matrix, target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsEstimate {
    pub theta_hat: DVector<f64>,
    pub normal_matrix_rank_ok: bool,
    /// Condition number of `YᵀY`.
    pub condition_number: f64,
}

/// Least squares through a QR factorization of `Y`; falls back to the
/// minimum-norm pseudo-inverse solution when `YᵀY` is numerically singular.
pub fn ols_fit(reg: &RegressorSet) -> Result<OlsEstimate> {
    let n = reg.order();
    if reg.rows() < n {
        return Err(Error::InsufficientSamples(format!(
            "{} rows cannot identify {n} parameters",
            reg.rows()
        )));
    }
    let qr = reg.y_matrix.clone().qr();
    let r = qr.r();
    let qty = qr.q().tr_mul(&reg.target);
    let svd = r.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition_number = if s_min > 0.0 { (s_max / s_min).powi(2) } else { f64::INFINITY };
    let rank_ok = condition_number < MAX_CONDITION;

    let theta_hat = if rank_ok {
        r.solve_upper_triangular(&qty)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?
    } else {
        let eps = s_max * f64::EPSILON * n as f64;
        svd.solve(&qty, eps)
            .map_err(|e| Error::Numerical(format!("pseudo-inverse solve failed: {e}")))?
    };
    if theta_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite least-squares estimate".into()));
    }
    Ok(OlsEstimate {
        theta_hat,
        normal_matrix_rank_ok: rank_ok,
        condition_number,
    })
}

/// `wᵀ(θ̂ − θ⁰)`.
pub fn weighted_deviation(est: &OlsEstimate, truth: &ArProcess, w: &DVector<f64>) -> Result<f64> {
    if w.len() != truth.order() || est.theta_hat.len() != truth.order() {
        return Err(Error::DimensionMismatch(format!(
            "direction length {}, estimate length {}, order {}",
            w.len(),
            est.theta_hat.len(),
            truth.order()
        )));
    }
    Ok(w.dot(&(&est.theta_hat - truth.theta())))
}
