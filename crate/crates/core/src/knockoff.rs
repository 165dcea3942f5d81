//! Second-order Gaussian knockoffs.
//!
//! For rows `z ~ N(μ, Σ)` a knockoff row is drawn from
//!
//! ```text
//! z̃ | z  ~  N( z − D Σ⁻¹ (z − μ),  2D − D Σ⁻¹ D ),   D = diag(s̃)
//! ```
//!
//! so that `[z, z̃]` has covariance `[[Σ, Σ − D], [Σ − D, Σ]]`. The
//! decorrelation weights `s` are chosen on the correlation scale, where
//! `corr(z_j, z̃_j) = 1 − s_j`, and rescaled by the variances.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, correlation, is_pd_with_jitter, min_eigenvalue, psd_cholesky};
use crate::rng;
use crate::series::MultivariateSeries;

/// Jitter used by every feasibility check.
pub const FEASIBILITY_JITTER: f64 = 1e-10;

/// Shrinkage intensities tried, in order, by [`Shrinkage::Auto`].
pub const SHRINKAGE_GRID: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.2];

/// Smallest eigenvalue, relative to the mean variance, accepted for `Σ`.
pub const MIN_EIGENVALUE: f64 = 1e-6;

const SWEEP_TOL: f64 = 1e-6;
const MAX_SWEEPS: usize = 100;
const BISECTION_TOL: f64 = 1e-10;
const BARRIER_START: f64 = 0.5;
const BARRIER_DECAY: f64 = 0.5;
const BARRIER_END: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shrinkage {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SMethod {
    Equicorrelated,
    #[default]
    SdpCoordinate,
}

#[derive(Debug, Clone)]
pub struct KnockoffModel {
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    /// Decorrelation weights on the correlation scale.
    pub s: Vec<f64>,
    pub shrinkage: f64,
    pub method: SMethod,
    /// `diag(s̃) Σ⁻¹`; the conditional mean is `z − shift · (z − μ)`.
    shift: DMatrix<f64>,
    cond_cov_chol: DMatrix<f64>,
}

impl KnockoffModel {
    /// Builds the conditional sampler for given moments and weights.
    pub fn from_parts(
        mu: Vec<f64>,
        sigma: DMatrix<f64>,
        s: Vec<f64>,
        method: SMethod,
    ) -> Result<Self> {
        let n = mu.len();
        if sigma.nrows() != n || sigma.ncols() != n || s.len() != n {
            return Err(Error::Shape(format!(
                "mean has {n} entries, covariance is {}x{}, s has {}",
                sigma.nrows(),
                sigma.ncols(),
                s.len()
            )));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("knockoff covariance".into()))?;
        let sigma_inv = chol.inverse();
        let s_cov = DVector::from_iterator(n, (0..n).map(|j| s[j] * sigma[(j, j)]));
        let d = DMatrix::from_diagonal(&s_cov);
        let shift = &d * &sigma_inv;
        let mut cond_cov = &d * 2.0 - &shift * &d;
        linalg::symmetrize(&mut cond_cov);
        let cond_cov_chol = match psd_cholesky(&cond_cov, FEASIBILITY_JITTER) {
            Some(l) => l,
            None => factor_near_psd(&cond_cov)?,
        };
        Ok(Self {
            mu,
            sigma,
            s,
            shrinkage: 0.0,
            method,
            shift,
            cond_cov_chol,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.mu.len()
    }

    /// `(Σ − diag(s̃)) Σ⁻¹`.
    pub fn cond_mean_mat(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n_vars(), self.n_vars()) - &self.shift
    }

    /// Lower-triangular factor of the conditional covariance.
    pub fn cond_cov_chol(&self) -> &DMatrix<f64> {
        &self.cond_cov_chol
    }

    /// Draws one knockoff row per row of `rows` (row-major, `n_vars` wide).
    pub fn sample_rows(&self, rows: &[f64], rng: &mut rng::Rng) -> Vec<f64> {
        let n = self.n_vars();
        let mut out = Vec::with_capacity(rows.len());
        let mut centered = vec![0.0; n];
        let mut eps = vec![0.0; n];
        for z in rows.chunks_exact(n) {
            for j in 0..n {
                centered[j] = z[j] - self.mu[j];
            }
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(rng);
            }
            for i in 0..n {
                let mut shift = 0.0;
                let mut noise = 0.0;
                for j in 0..n {
                    shift += self.shift[(i, j)] * centered[j];
                }
                for j in 0..=i {
                    noise += self.cond_cov_chol[(i, j)] * eps[j];
                }
                out.push(z[i] - shift + noise);
            }
        }
        out
    }
}

/// Factors a matrix that is positive semidefinite up to rounding, as
/// happens when `s` sits on the boundary of the feasible set and `Σ` is
/// poorly conditioned. Negative eigenvalues down to `−1e-6·max|λ|` are
/// clipped to zero; anything more negative is an error.
fn factor_near_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -1e-6 * scale {
        return Err(Error::NotPositiveDefinite(format!(
            "knockoff conditional covariance has eigenvalue {min:e}"
        )));
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let mut repaired =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    linalg::symmetrize(&mut repaired);
    psd_cholesky(&repaired, 1e-8)
        .ok_or_else(|| Error::NotPositiveDefinite("knockoff conditional covariance".into()))
}

/// Fits mean and (optionally shrunk) covariance, solves for `s` and
/// precomputes the conditional sampler.
pub fn fit_gaussian(
    series: &MultivariateSeries,
    shrinkage: Shrinkage,
    method: SMethod,
) -> Result<KnockoffModel> {
    if series.len() < 2 {
        return Err(Error::InvalidSeries(
            "knockoff fit needs at least 2 observations".into(),
        ));
    }
    let n = series.n_vars();
    let (mu, cov) = linalg::sample_covariance(series.values(), n);
    let mean_var = cov.diagonal().mean();
    let floor = MIN_EIGENVALUE * mean_var;

    let shrink = |lambda: f64| {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                cov[(i, i)]
            } else {
                (1.0 - lambda) * cov[(i, j)]
            }
        })
    };
    let candidates: Vec<f64> = match shrinkage {
        Shrinkage::Fixed(l) if (0.0..=1.0).contains(&l) => vec![l],
        Shrinkage::Fixed(l) => {
            return Err(Error::Config(format!("shrinkage {l} outside [0, 1]")));
        }
        Shrinkage::Auto => SHRINKAGE_GRID.to_vec(),
    };
    let (lambda, sigma) = candidates
        .into_iter()
        .map(|l| (l, shrink(l)))
        .find(|(_, s)| min_eigenvalue(s) >= floor)
        .ok_or_else(|| {
            Error::NotPositiveDefinite(format!(
                "sample covariance has an eigenvalue below {floor:e} for every shrinkage tried"
            ))
        })?;

    let sd: Vec<f64> = (0..n).map(|i| sigma[(i, i)].sqrt()).collect();
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            sigma[(i, j)] / (sd[i] * sd[j])
        }
    });
    let s = solve_s(&corr, method)?;
    let mut model = KnockoffModel::from_parts(mu, sigma, s, method)?;
    model.shrinkage = lambda;
    Ok(model)
}

fn check_correlation(c: &DMatrix<f64>) -> Result<()> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::Shape("correlation matrix is not square".into()));
    }
    for i in 0..n {
        if (c[(i, i)] - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!(
                "correlation matrix has diagonal entry {} at {i}",
                c[(i, i)]
            )));
        }
        for j in i + 1..n {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-10 {
                return Err(Error::Config(format!(
                    "correlation matrix is asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// True if `2·corr − diag(s)` is positive semidefinite, up to the jitter.
pub fn is_feasible(corr: &DMatrix<f64>, s: &[f64]) -> bool {
    let mut m = corr * 2.0;
    for (j, &sj) in s.iter().enumerate() {
        m[(j, j)] -= sj;
    }
    is_pd_with_jitter(&m, FEASIBILITY_JITTER)
}

/// Decorrelation weights for a correlation matrix.
///
/// `Equicorrelated` takes `s_j = min(2·λ_min, 1)`. `SdpCoordinate` runs
/// cyclic coordinate ascent on a log-barrier relaxation of
/// `max Σ s_j` subject to `0 ≤ s ≤ 1` and `2·corr − diag(s) ⪰ 0`, finding
/// each coordinate's largest feasible value by bisection, and sweeps until
/// no coordinate moves by more than `1e-6`. A final sweep starts from the
/// equicorrelated solution instead if that has the larger sum.
pub fn solve_s(corr: &DMatrix<f64>, method: SMethod) -> Result<Vec<f64>> {
    check_correlation(corr)?;
    let n = corr.nrows();
    let lambda_min = min_eigenvalue(corr);
    if lambda_min <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "correlation matrix has smallest eigenvalue {lambda_min:e}"
        )));
    }
    let equi = vec![(2.0 * lambda_min).min(1.0); n];
    if method == SMethod::Equicorrelated {
        return Ok(equi);
    }

    // Plain coordinate ascent stalls at the first boundary point where all
    // coordinates are active. Each step here instead maximizes
    // `s_j + μ·log(u_j − s_j)`, whose optimum is `u_j − μ`, with `u_j` the
    // largest feasible value found by bisection. Shrinking `μ` every sweep
    // follows the barrier path towards the maximal sum.
    let mut s = vec![0.0; n];
    let mut mu = BARRIER_START;
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..n {
            let next = (largest_feasible(corr, &s, j) - mu).clamp(0.0, 1.0);
            max_change = max_change.max((next - s[j]).abs());
            s[j] = next;
        }
        if mu <= BARRIER_END && max_change < SWEEP_TOL {
            break;
        }
        mu = (mu * BARRIER_DECAY).max(BARRIER_END);
    }
    // The barrier leaves every coordinate `μ` inside the boundary. A last
    // sweep without it, started from whichever of the barrier point and the
    // equicorrelated point has the larger sum, moves onto the boundary; it
    // only raises coordinates, so the result dominates both.
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    if !(is_feasible(corr, &s) && sum(&s) >= sum(&equi)) {
        s = equi.clone();
    }
    for j in 0..n {
        s[j] = largest_feasible(corr, &s, j).min(1.0).max(s[j]);
    }
    if is_feasible(corr, &s) {
        Ok(s)
    } else {
        Ok(equi)
    }
}

/// Largest `s_j` keeping `s` feasible, by bisection on `[s_j, 2]`; the
/// diagonal of `2·corr` bounds it by 2.
fn largest_feasible(corr: &DMatrix<f64>, s: &[f64], j: usize) -> f64 {
    let mut trial = s.to_vec();
    let (mut lo, mut hi) = (s[j], 2.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        trial[j] = mid;
        if is_feasible(corr, &trial) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One knockoff realization of every row of `series`.
pub fn sample_knockoffs(
    model: &KnockoffModel,
    series: &MultivariateSeries,
    seed: u64,
) -> Result<MultivariateSeries> {
    if series.n_vars() != model.n_vars() {
        return Err(Error::Shape(format!(
            "knockoff model has {} variables, series has {}",
            model.n_vars(),
            series.n_vars()
        )));
    }
    let mut rng = rng::stream(seed, 3);
    series.with_values(model.sample_rows(series.values(), &mut rng))
}

/// Sample-correlation checks of second-order exchangeability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoffDiagnostics {
    /// Max `|corr(z̃_i, z̃_j) − corr(z_i, z_j)|` over `i ≠ j`.
    pub knockoff_corr_dev: f64,
    /// Max `|corr(z_i, z̃_j) − corr(z_i, z_j)|` over `i ≠ j`.
    pub cross_corr_dev: f64,
    /// `corr(z_j, z̃_j)` per variable.
    pub self_corr: Vec<f64>,
}

pub fn diagnostics(
    originals: &MultivariateSeries,
    knockoffs: &MultivariateSeries,
) -> Result<KnockoffDiagnostics> {
    let n = originals.n_vars();
    if knockoffs.n_vars() != n || knockoffs.len() != originals.len() {
        return Err(Error::Shape(format!(
            "originals are {}x{n}, knockoffs are {}x{}",
            originals.len(),
            knockoffs.len(),
            knockoffs.n_vars()
        )));
    }
    let mut joint = Vec::with_capacity(2 * originals.values().len());
    for t in 0..originals.len() {
        joint.extend_from_slice(originals.row(t));
        joint.extend_from_slice(knockoffs.row(t));
    }
    let c = correlation(&joint, 2 * n);
    let mut knockoff_corr_dev: f64 = 0.0;
    let mut cross_corr_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                knockoff_corr_dev = knockoff_corr_dev.max((c[(n + i, n + j)] - c[(i, j)]).abs());
                cross_corr_dev = cross_corr_dev.max((c[(i, n + j)] - c[(i, j)]).abs());
            }
        }
    }
    Ok(KnockoffDiagnostics {
        knockoff_corr_dev,
        cross_corr_dev,
        self_corr: (0..n).map(|j| c[(j, n + j)]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr2(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn equicorrelated_closed_forms() {
        assert_eq!(
            solve_s(&corr2(0.5), SMethod::Equicorrelated).unwrap(),
            vec![1.0, 1.0]
        );
        let s = solve_s(&corr2(0.9), SMethod::Equicorrelated).unwrap();
        assert!(s.iter().all(|v| (v - 0.2).abs() < 1e-9));
    }

    #[test]
    fn identity_gives_unit_weights() {
        for n in 1..6 {
            let id = DMatrix::identity(n, n);
            for method in [SMethod::Equicorrelated, SMethod::SdpCoordinate] {
                let s = solve_s(&id, method).unwrap();
                assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-9), "{method:?} {s:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_correlation_input() {
        let mut c = corr2(0.3);
        c[(0, 0)] = 2.0;
        assert!(solve_s(&c, SMethod::Equicorrelated).is_err());
        let mut c = corr2(0.3);
        c[(0, 1)] = 0.4;
        assert!(solve_s(&c, SMethod::SdpCoordinate).is_err());
    }

    #[test]
    fn coordinate_dominates_equicorrelated_on_unequal_correlations() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.8, 0.1, 0.8, 1.0, 0.1, 0.1, 0.1, 1.0]);
        let equi = solve_s(&c, SMethod::Equicorrelated).unwrap();
        let sdp = solve_s(&c, SMethod::SdpCoordinate).unwrap();
        assert!(is_feasible(&c, &sdp));
        assert!(sdp.iter().sum::<f64>() > equi.iter().sum::<f64>() + 0.1);
    }

    #[test]
    fn zero_weights_copy_the_originals() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let m = KnockoffModel::from_parts(
            vec![0.1, -0.7],
            sigma,
            vec![0.0, 0.0],
            SMethod::Equicorrelated,
        )
        .unwrap();
        let s = MultivariateSeries::from_rows(&[vec![0.3, 1.1], vec![-5.0, 2.25]]).unwrap();
        assert_eq!(sample_knockoffs(&m, &s, 9).unwrap(), s);
    }

    #[test]
    fn dimension_mismatch() {
        let m = KnockoffModel::from_parts(
            vec![0.0; 3],
            DMatrix::identity(3, 3),
            vec![1.0; 3],
            SMethod::Equicorrelated,
        )
        .unwrap();
        let s = MultivariateSeries::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sample_knockoffs(&m, &s, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn duplicated_column_without_shrinkage_is_singular() {
        let a: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| ((i * 13) % 7) as f64).collect();
        let s = MultivariateSeries::from_columns(&[a.clone(), a, b]).unwrap();
        assert!(matches!(
            fit_gaussian(&s, Shrinkage::Fixed(0.0), SMethod::SdpCoordinate),
            Err(Error::NotPositiveDefinite(_))
        ));
        let m = fit_gaussian(&s, Shrinkage::Auto, SMethod::SdpCoordinate).unwrap();
        assert!(m.shrinkage > 0.0);
    }

    #[test]
    fn fit_needs_two_rows() {
        let s = MultivariateSeries::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(fit_gaussian(&s, Shrinkage::Auto, SMethod::SdpCoordinate).is_err());
    }

    #[test]
    fn diagnostics_of_exact_copies() {
        let s = MultivariateSeries::from_rows(&[vec![0.0, 1.0], vec![1.0, 3.0], vec![2.0, 2.0]])
            .unwrap();
        let d = diagnostics(&s, &s).unwrap();
        assert!(d.knockoff_corr_dev.abs() < 1e-12);
        assert!(d.self_corr.iter().all(|c| (c - 1.0).abs() < 1e-12));
    }
}
