//! χ² tail thresholds and two matrix/product inequalities, each paired with
//! an empirical falsification helper.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Default Monte Carlo sample count per grid cell.
pub const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTail {
    pub dof: usize,
    pub x: f64,
}

impl ChiSquareTail {
    pub fn new(dof: usize, x: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidInput("degrees of freedom must be positive".into()));
        }
        check_level(x)?;
        Ok(ChiSquareTail { dof, x })
    }

    pub fn upper(&self) -> f64 {
        let d = self.dof as f64;
        d + 2.0 * (d * self.x).sqrt() + 2.0 * self.x
    }

    pub fn lower(&self) -> f64 {
        let d = self.dof as f64;
        d - 2.0 * (d * self.x).sqrt()
    }

    /// `e^{−x}`, the bound on either exceedance probability.
    pub fn probability_bound(&self) -> f64 {
        (-self.x).exp()
    }
}

fn check_level(x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidInput(format!("x must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// `D + 2√(Dx) + 2x`: `P(U ≥ threshold) ≤ e^{−x}` for `U ~ χ²_D`.
pub fn laurent_upper_threshold(dof: usize, x: f64) -> Result<f64> {
    Ok(ChiSquareTail::new(dof, x)?.upper())
}

/// `D − 2√(Dx)`: `P(U ≤ threshold) ≤ e^{−x}`.
pub fn laurent_lower_threshold(dof: usize, x: f64) -> Result<f64> {
    Ok(ChiSquareTail::new(dof, x)?.lower())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(a) = weights.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be non-negative, got {a}")));
    }
    Ok(())
}

fn norms(weights: &[f64]) -> (f64, f64) {
    let l2 = weights.iter().map(|a| a * a).sum::<f64>().sqrt();
    let linf = weights.iter().copied().fold(0.0, f64::max);
    (l2, linf)
}

/// `2‖a‖₂√x + 2‖a‖_∞x`: `P(Σ aᵢ(Yᵢ² − 1) ≥ threshold) ≤ e^{−x}`.
pub fn weighted_chi2_upper_threshold(weights: &[f64], x: f64) -> Result<f64> {
    check_weights(weights)?;
    check_level(x)?;
    let (l2, linf) = norms(weights);
    Ok(2.0 * l2 * x.sqrt() + 2.0 * linf * x)
}

/// `−2‖a‖₂√x`: `P(Σ aᵢ(Yᵢ² − 1) ≤ threshold) ≤ e^{−x}`.
pub fn weighted_chi2_lower_threshold(weights: &[f64], x: f64) -> Result<f64> {
    check_weights(weights)?;
    check_level(x)?;
    let (l2, _) = norms(weights);
    Ok(-2.0 * l2 * x.sqrt())
}

/// `1 − Σλ_k`, a lower bound on `Π(1 − λ_k)` for `λ_k ∈ [0, 1]`.
pub fn weierstrass_lower_bound(lambdas: &[f64]) -> Result<f64> {
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidInput(format!("every lambda must lie in [0, 1], got {l}")));
    }
    Ok(1.0 - lambdas.iter().sum::<f64>())
}

pub fn weierstrass_product(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|l| 1.0 - l).product()
}

/// `ρ(a + b) ≤ ρ(a) + ρ(b)` for symmetric `a`, `b`.
pub fn spectral_radius_subadditive_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected equal square matrices, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    for (m, name) in [(a, "a"), (b, "b")] {
        let asym = (m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("{name} is not symmetric")));
        }
    }
    let ra = linalg::symmetric_spectral_radius(a);
    let rb = linalg::symmetric_spectral_radius(b);
    let rab = linalg::symmetric_spectral_radius(&(a + b));
    let tol = 1e-12 * (ra + rb) + f64::MIN_POSITIVE;
    Ok(rab <= ra + rb + tol)
}

/// Empirical exceedance frequency against its theoretical bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub label: String,
    pub x: f64,
    pub samples: usize,
    pub exceedances: usize,
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
}

impl TailCheck {
    fn new(label: String, x: f64, samples: usize, exceedances: usize) -> Self {
        let frequency = exceedances as f64 / samples as f64;
        TailCheck {
            label,
            x,
            samples,
            exceedances,
            frequency,
            stderr: (frequency * (1.0 - frequency) / samples as f64).sqrt(),
            bound: (-x).exp(),
        }
    }

    /// `frequency ≤ bound + 3·stderr`.
    pub fn respected(&self) -> bool {
        self.frequency <= self.bound + 3.0 * self.stderr
    }
}

/// Upper and lower Laurent-Massart checks for one `(D, x)` cell.
pub fn falsify_chi2_cell(dof: usize, x: f64, samples: usize, seed: u64) -> Result<[TailCheck; 2]> {
    let tail = ChiSquareTail::new(dof, x)?;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidInput(format!("chi-square distribution: {e}")))?;
    let mut rng = rng::seeded(seed);
    let (upper, lower) = (tail.upper(), tail.lower());
    let (mut above, mut below) = (0usize, 0usize);
    for _ in 0..samples {
        let u: f64 = dist.sample(&mut rng);
        // bounds are stated for U − D ≥ 2√(Dx) + 2x and U − D ≤ −2√(Dx)
        above += usize::from(u >= upper);
        below += usize::from(u <= lower);
    }
    Ok([
        TailCheck::new(format!("chi2_upper[D={dof}]"), x, samples, above),
        TailCheck::new(format!("chi2_lower[D={dof}]"), x, samples, below),
    ])
}

/// Upper and lower checks of `Z = Σ aᵢ(Yᵢ² − 1)` for one level `x`.
pub fn falsify_weighted_cell(weights: &[f64], x: f64, samples: usize, seed: u64) -> Result<[TailCheck; 2]> {
    let upper = weighted_chi2_upper_threshold(weights, x)?;
    let lower = weighted_chi2_lower_threshold(weights, x)?;
    let mut rng = rng::seeded(seed);
    let (mut above, mut below) = (0usize, 0usize);
    for _ in 0..samples {
        let z: f64 = weights
            .iter()
            .map(|a| {
                let y: f64 = rng.sample(StandardNormal);
                a * (y * y - 1.0)
            })
            .sum();
        above += usize::from(z >= upper);
        below += usize::from(z <= lower);
    }
    let d = weights.len();
    Ok([
        TailCheck::new(format!("weighted_upper[D={d}]"), x, samples, above),
        TailCheck::new(format!("weighted_lower[D={d}]"), x, samples, below),
    ])
}

/// Runs `falsify_chi2_cell` over a `(D, x)` grid; cell `i` uses substream `i`
/// of `master_seed`.
pub fn falsify_chi2_grid(dofs: &[usize], xs: &[f64], samples: usize, master_seed: u64) -> Result<Vec<TailCheck>> {
    let cells: Vec<(usize, f64)> = dofs.iter().flat_map(|&d| xs.iter().map(move |&x| (d, x))).collect();
    let run = |(i, &(d, x)): (usize, &(usize, f64))| {
        let seed = rng::substream(master_seed, i as u64).random::<u64>();
        falsify_chi2_cell(d, x, samples, seed)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<[TailCheck; 2]>> = {
        use rayon::prelude::*;
        cells.par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<[TailCheck; 2]>> = cells.iter().enumerate().map(run).collect();
    let mut out = Vec::with_capacity(2 * cells.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Weighted checks across levels `xs`, cell `i` on substream `i`.
pub fn falsify_weighted_grid(weights: &[f64], xs: &[f64], samples: usize, master_seed: u64) -> Result<Vec<TailCheck>> {
    let run = |(i, &x): (usize, &f64)| {
        let seed = rng::substream(master_seed, i as u64).random::<u64>();
        falsify_weighted_cell(weights, x, samples, seed)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<[TailCheck; 2]>> = {
        use rayon::prelude::*;
        xs.par_iter().enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<[TailCheck; 2]>> = xs.iter().enumerate().map(run).collect();
    let mut out = Vec::with_capacity(2 * xs.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
