//! Dense matrix computations used by the bounds.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{build_companion, check_schur_stable, ArProcess, CompanionStateSpace};

/// Required relative residual of Lyapunov solutions.
pub const LYAPUNOV_TOL: f64 = 1e-10;
const LYAPUNOV_MAX_DOUBLINGS: usize = 80;

/// Uniform grid size on `[0, π]` for the `M_Φ` search.
const SCHUR_MAX_ITER: usize = 10_000;
const GELFAND_SQUARINGS: usize = 40;

pub const M_PHI_GRID: usize = 4096;
/// Bracket width in ω at which golden-section refinement stops.
const GOLDEN_WIDTH: f64 = 1e-10;

fn ensure_square(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn ensure_finite(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Ok(())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    match complex_eigenvalues(m) {
        Some(eig) => Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        None => Ok(gelfand_radius(m)),
    }
}

/// Eigenvalues through a bounded Schur iteration; `None` if it stalls,
/// which happens for some defective matrices such as nilpotent shifts.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let schur = m.clone().try_schur(f64::EPSILON, SCHUR_MAX_ITER)?;
    let eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(eig)
}

/// `‖m^{2^k}‖^{1/2^k}` by repeated normalized squaring.
fn gelfand_radius(m: &DMatrix<f64>) -> f64 {
    let mut p = m.clone();
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..GELFAND_SQUARINGS {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        p /= norm;
        log_scale += norm.ln() / power;
        p = &p * &p;
        power *= 2.0;
    }
    let norm = p.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (log_scale + norm.ln() / power).exp()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `ρ(H) = max(−λ_min, λ_max)` for symmetric `H`.
pub fn symmetric_spectral_radius(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clamped).
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Solve `X = a X aᵀ + q` by Smith doubling.
///
/// Iterates `X ← X + A_k X A_kᵀ`, `A_k ← A_k²`, so after `k` steps `X`
/// holds the first `2ᵏ` terms of `Σ aⁱ q aᵀⁱ`. Requires `ρ(a) < 1`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(a, "a")?;
    ensure_square(q, "q")?;
    if a.nrows() != q.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "a is {}x{} but q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite(q, "q")?;
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::Unstable(format!(
            "Lyapunov solve needs spectral radius < 1, got {rho}"
        )));
    }

    let mut x = symmetrize(q);
    let mut ak = a.clone();
    for _ in 0..LYAPUNOV_MAX_DOUBLINGS {
        let inc = &ak * &x * ak.transpose();
        x += &inc;
        ak = &ak * &ak;
        let inc_norm = inc.norm();
        if inc_norm <= f64::EPSILON * x.norm() || ak.norm() == 0.0 {
            break;
        }
    }
    let x = symmetrize(&x);

    let residual = (&x - a * &x * a.transpose() - q).norm();
    let scale = x.norm().max(q.norm()).max(f64::MIN_POSITIVE);
    if !(residual / scale <= LYAPUNOV_TOL) {
        return Err(Error::Convergence(format!(
            "Lyapunov relative residual {:.3e} exceeds {LYAPUNOV_TOL:.0e}",
            residual / scale
        )));
    }
    Ok(x)
}

/// Stationary quantities of a companion system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryStatistics {
    /// `V̄ = σ² Σ Aⁱ B Bᵀ Aᵀⁱ`.
    #[serde(with = "crate::serde_matrix")]
    pub v_bar: DMatrix<f64>,
    /// `G = Σ Aⁱ Aᵀⁱ`.
    #[serde(with = "crate::serde_matrix")]
    pub gramian: DMatrix<f64>,
    /// `E{y₁²} = V̄₁₁`.
    pub y_variance: f64,
    pub m_phi: f64,
}

impl StationaryStatistics {
    pub fn for_process(process: &ArProcess) -> Result<Self> {
        stationary_stats(&build_companion(process), process.noise_variance())
    }

    /// `[I_n 0] V̄ [I_n 0]ᵀ`.
    pub fn v_bar_top(&self) -> DMatrix<f64> {
        top_block(&self.v_bar)
    }

    /// `[I_n 0] G [I_n 0]ᵀ`.
    pub fn gramian_top(&self) -> DMatrix<f64> {
        top_block(&self.gramian)
    }
}

/// Leading `n×n` block of an `(n+1)×(n+1)` matrix.
pub fn top_block(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows().saturating_sub(1);
    m.view((0, 0), (n, n)).into_owned()
}

pub fn stationary_stats(ss: &CompanionStateSpace, sigma2: f64) -> Result<StationaryStatistics> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let dim = ss.state_dim();
    let bbt = &ss.b_vector * ss.b_vector.transpose() * sigma2;
    let v_bar = solve_discrete_lyapunov(&ss.a_matrix, &bbt)?;
    let gramian = solve_discrete_lyapunov(&ss.a_matrix, &DMatrix::identity(dim, dim))?;
    let y_variance = v_bar[(0, 0)];
    if !(y_variance > 0.0) {
        return Err(Error::Numerical(format!(
            "stationary variance must be positive, got {y_variance}"
        )));
    }
    let m_phi = compute_m_phi(&ss.coeffs())?;
    Ok(StationaryStatistics {
        v_bar,
        gramian,
        y_variance,
        m_phi,
    })
}

/// `|p(e^{jω})|²`, which equals `|1 − Σ θ_k e^{−jωk}|²`.
pub fn char_poly_modulus_sq(coeffs: &[f64], omega: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (k, c) in coeffs.iter().enumerate() {
        let phase = omega * (k + 1) as f64;
        re -= c * phase.cos();
        im += c * phase.sin();
    }
    re * re + im * im
}

/// Spectral density `σ² / |p(e^{jω})|²` of the process output.
pub fn spectral_density(process: &ArProcess, omega: f64) -> f64 {
    process.noise_variance() / char_poly_modulus_sq(process.coeffs(), omega)
}

/// `M_Φ = max_ω |p(e^{jω})|⁻²`.
pub fn compute_m_phi(coeffs: &[f64]) -> Result<f64> {
    compute_m_phi_with_grid(coeffs, M_PHI_GRID)
}

/// Grid search over `[0, π]` followed by golden-section refinement of every
/// grid-local minimum of `|p(e^{jω})|²`.
pub fn compute_m_phi_with_grid(coeffs: &[f64], grid: usize) -> Result<f64> {
    if !check_schur_stable(coeffs)? {
        return Err(Error::Unstable(
            "M_Φ is only defined for Schur-stable coefficients".into(),
        ));
    }
    if grid < 3 {
        return Err(Error::InvalidInput("grid needs at least 3 points".into()));
    }
    let step = std::f64::consts::PI / (grid - 1) as f64;
    let values: Vec<f64> = (0..grid)
        .map(|i| char_poly_modulus_sq(coeffs, i as f64 * step))
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..grid {
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = if i + 1 == grid { f64::INFINITY } else { values[i + 1] };
        if values[i] <= left && values[i] <= right {
            let lo = i.saturating_sub(1) as f64 * step;
            let hi = ((i + 1).min(grid - 1)) as f64 * step;
            let refined = golden_section_min(|w| char_poly_modulus_sq(coeffs, w), lo, hi);
            best = best.min(refined).min(values[i]);
        }
    }
    if !(best > 0.0 && best.is_finite()) {
        return Err(Error::Numerical(format!(
            "characteristic polynomial vanishes on the unit circle (min {best})"
        )));
    }
    Ok(1.0 / best)
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = f(lo).min(f(hi));
    while hi - lo > GOLDEN_WIDTH {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best
}

/// `γ(k) = (Aᵏ V̄)₁₁` for `k = 0 … max_lag`.
pub fn autocovariance_sequence(process: &ArProcess, max_lag: usize) -> Result<Vec<f64>> {
    let ss = build_companion(process);
    let stats = stationary_stats(&ss, process.noise_variance())?;
    Ok(autocovariances_from(&ss, &stats.v_bar, max_lag))
}

pub fn autocovariances_from(ss: &CompanionStateSpace, v_bar: &DMatrix<f64>, max_lag: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut m = v_bar.clone();
    for _ in 0..=max_lag {
        out.push(m[(0, 0)]);
        m = &ss.a_matrix * m;
    }
    out
}

/// Symmetric Toeplitz matrix `R_D = [γ(|i−j|)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCovariance {
    pub matrix: DMatrix<f64>,
}

impl ToeplitzCovariance {
    pub fn from_autocovariances(gammas: &[f64]) -> Self {
        let d = gammas.len();
        ToeplitzCovariance {
            matrix: DMatrix::from_fn(d, d, |i, j| gammas[i.abs_diff(j)]),
        }
    }

    pub fn for_process(process: &ArProcess, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let gammas = autocovariance_sequence(process, dimension - 1)?;
        Ok(Self::from_autocovariances(&gammas))
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

/// `lower ⪯ middle ⪯ upper`, each side up to `10⁻⁸·‖middle‖₂`.
pub fn psd_order_holds(lower: &DMatrix<f64>, middle: &DMatrix<f64>, upper: &DMatrix<f64>) -> Result<bool> {
    for (m, name) in [(lower, "lower"), (middle, "middle"), (upper, "upper")] {
        ensure_square(m, name)?;
        ensure_finite(m, name)?;
    }
    if lower.nrows() != middle.nrows() || upper.nrows() != middle.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrices are {}, {} and {} square",
            lower.nrows(),
            middle.nrows(),
            upper.nrows()
        )));
    }
    let tol = 1e-8 * symmetric_spectral_radius(middle);
    Ok(min_eigenvalue(&(middle - lower)) >= -tol && min_eigenvalue(&(upper - middle)) >= -tol)
}

/// Comma-separated rows, one line per matrix row.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn truncated_series(a: &DMatrix<f64>, q: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let mut sum = DMatrix::zeros(q.nrows(), q.ncols());
        let mut p = DMatrix::identity(a.nrows(), a.ncols());
        for _ in 0..=terms {
            sum += &p * q * p.transpose();
            p = a * p;
        }
        sum
    }

    fn ar(coeffs: &[f64]) -> ArProcess {
        ArProcess::new(coeffs.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn lyapunov_fixed_points() {
        let x = solve_discrete_lyapunov(&DMatrix::zeros(3, 3), &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(x, DMatrix::identity(3, 3));
        let x = solve_discrete_lyapunov(&DMatrix::from_element(1, 1, 0.5), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_relative_eq!(x[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_matches_truncated_series_ar2() {
        let ss = build_companion(&ar(&[0.3, 0.4]));
        let bbt = &ss.b_vector * ss.b_vector.transpose();
        let x = solve_discrete_lyapunov(&ss.a_matrix, &bbt).unwrap();
        let oracle = truncated_series(&ss.a_matrix, &bbt, 200);
        assert!((&x - &oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            solve_discrete_lyapunov(&a, &DMatrix::identity(1, 1)),
            Err(Error::Unstable(_))
        ));
        assert!(matches!(
            solve_discrete_lyapunov(&DMatrix::zeros(2, 2), &DMatrix::identity(3, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn lyapunov_near_unit_circle() {
        let ss = build_companion(&ar(&[0.999]));
        let bbt = &ss.b_vector * ss.b_vector.transpose();
        let x = solve_discrete_lyapunov(&ss.a_matrix, &bbt).unwrap();
        assert_relative_eq!(x[(0, 0)], 1.0 / (1.0 - 0.999f64.powi(2)), max_relative = 1e-10);
    }

    #[test]
    fn stationary_stats_ar1() {
        let ss = build_companion(&ar(&[0.5]));
        let stats = stationary_stats(&ss, 1.0).unwrap();
        assert_relative_eq!(stats.y_variance, 4.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(stats.m_phi, 4.0, max_relative = 1e-10);
        // G₁₁ = 1/(1−θ²), G₁₂ = θ G₁₁, G₂₂ = G₁₁ + 1
        assert_relative_eq!(stats.gramian[(0, 0)], 4.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(stats.gramian[(0, 1)], 2.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(stats.gramian[(1, 1)], 7.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn stationary_stats_white_noise() {
        for n in 1..5 {
            let p = ArProcess::new(vec![0.0; n], 2.5).unwrap();
            let stats = StationaryStatistics::for_process(&p).unwrap();
            let expected = DMatrix::identity(n + 1, n + 1) * 2.5;
            assert!((&stats.v_bar - expected).norm() < 1e-14);
            assert_relative_eq!(stats.m_phi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_invariants_hold() {
        for coeffs in [vec![0.5], vec![0.3, 0.4], vec![1.2, -0.5, 0.1], vec![-0.9]] {
            let p = ar(&coeffs);
            let ss = build_companion(&p);
            let stats = stationary_stats(&ss, 1.7).unwrap();
            let a = &ss.a_matrix;
            let bbt = &ss.b_vector * ss.b_vector.transpose() * 1.7;
            let r = (&stats.v_bar - a * &stats.v_bar * a.transpose() - bbt).norm() / stats.v_bar.norm();
            assert!(r <= 1e-10);
            let dim = ss.state_dim();
            let eye = DMatrix::identity(dim, dim);
            let r = (&stats.gramian - a * &stats.gramian * a.transpose() - &eye).norm() / stats.gramian.norm();
            assert!(r <= 1e-10);
            assert!(min_eigenvalue(&(&stats.gramian - &eye)) >= -1e-12);
            let crude = 1.0 / (1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>()).powi(2);
            assert!(stats.m_phi >= crude && stats.m_phi.is_finite());
        }
    }

    #[test]
    fn m_phi_examples() {
        assert_relative_eq!(compute_m_phi(&[0.5]).unwrap(), 4.0, max_relative = 1e-10);
        assert_relative_eq!(compute_m_phi(&[-0.5]).unwrap(), 4.0, max_relative = 1e-10);
        assert_relative_eq!(compute_m_phi(&[0.0]).unwrap(), 1.0, max_relative = 1e-12);
        assert!(matches!(compute_m_phi(&[1.5]), Err(Error::Unstable(_))));
    }

    #[test]
    fn m_phi_matches_dense_grid_oracle() {
        for coeffs in [vec![0.3, 0.4], vec![1.2, -0.5, 0.1], vec![0.0, 0.81], vec![1.5, -0.9]] {
            let dense = 1.0
                / (0..=400_000)
                    .map(|i| char_poly_modulus_sq(&coeffs, std::f64::consts::PI * i as f64 / 400_000.0))
                    .fold(f64::INFINITY, f64::min);
            let m = compute_m_phi(&coeffs).unwrap();
            assert!(m >= dense * (1.0 - 1e-12));
            assert_relative_eq!(m, dense, max_relative = 1e-8);
        }
    }

    #[test]
    fn m_phi_grid_doubling_invariance() {
        for coeffs in [vec![0.3, 0.4], vec![1.5, -0.9], vec![0.1, -0.2, 0.3, 0.25]] {
            let a = compute_m_phi_with_grid(&coeffs, M_PHI_GRID).unwrap();
            let b = compute_m_phi_with_grid(&coeffs, 2 * M_PHI_GRID).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn autocovariance_examples() {
        let g = autocovariance_sequence(&ar(&[0.5]), 10).unwrap();
        for (k, v) in g.iter().enumerate() {
            assert_relative_eq!(*v, 4.0 / 3.0 * 0.5f64.powi(k as i32), epsilon = 1e-13);
        }
        let p = ar(&[0.3, 0.4]);
        let stats = StationaryStatistics::for_process(&p).unwrap();
        assert_eq!(autocovariance_sequence(&p, 0).unwrap()[0], stats.v_bar[(0, 0)]);
        let g = autocovariance_sequence(&ArProcess::new(vec![0.0, 0.0], 1.0).unwrap(), 5).unwrap();
        assert_eq!(g[0], 1.0);
        assert!(g[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn autocovariances_satisfy_yule_walker() {
        let p = ar(&[0.3, 0.4]);
        let g = autocovariance_sequence(&p, 8).unwrap();
        for k in 2..=8 {
            assert_relative_eq!(g[k], 0.3 * g[k - 1] + 0.4 * g[k - 2], epsilon = 1e-13);
        }
    }

    #[test]
    fn toeplitz_structure_and_eigen_bound() {
        for coeffs in [vec![0.5], vec![-0.5], vec![0.3, 0.4], vec![1.5, -0.9]] {
            let p = ArProcess::new(coeffs.clone(), 0.7).unwrap();
            let r = ToeplitzCovariance::for_process(&p, 128).unwrap();
            assert_eq!(r.matrix, r.matrix.transpose());
            let ev = r.eigenvalues();
            assert!(ev[0] > 0.0);
            let bound = 0.7 * compute_m_phi(&coeffs).unwrap();
            assert!(*ev.last().unwrap() <= bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn psd_order_examples() {
        let z = DMatrix::zeros(2, 2);
        let i = DMatrix::identity(2, 2);
        assert!(psd_order_holds(&z, &i, &(&i * 2.0)).unwrap());
        assert!(!psd_order_holds(&i, &z, &(&i * 2.0)).unwrap());
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
        let m = &b * b.transpose();
        assert!(psd_order_holds(&m, &m, &m).unwrap());
        assert!(matches!(
            psd_order_holds(&z, &DMatrix::zeros(3, 3), &z),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(spectral_radius(&DMatrix::identity(3, 3)).unwrap(), 1.0, epsilon = 1e-14);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
        let ss = build_companion(&ar(&[0.3, 0.4]));
        assert_relative_eq!(spectral_radius(&ss.a_matrix).unwrap(), 0.8, epsilon = 1e-12);
        // zero-coefficient companion: a 3×3 nilpotent shift
        let shift = build_companion(&ar(&[0.0, 0.0])).a_matrix;
        assert!(spectral_radius(&shift).unwrap() <= 1e-6);
        let bad = DMatrix::from_element(1, 1, f64::NAN);
        assert!(spectral_radius(&bad).is_err());
    }

    #[test]
    fn csv_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -2.0, 3.0]);
        assert_eq!(matrix_to_csv(&m), "1,0.5\n-2,3\n");
    }
}
