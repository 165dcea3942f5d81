use nalgebra::{DMatrix, SymmetricEigen};

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// True if `m + jitter·I` admits a Cholesky factorization.
pub(crate) fn is_pd_with_jitter(m: &DMatrix<f64>, jitter: f64) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] += jitter;
    }
    // Plain Cholesky; nalgebra's accepts the same inputs but allocates the
    // decomposition object, and this runs inside the bisection loop.
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    true
}

/// Lower-triangular `L` with `L·Lᵀ ≈ m` for a positive semidefinite `m`.
///
/// Pivots below `tol · max(diag)` are treated as zero and their column is
/// dropped, so exactly singular inputs (including the zero matrix) factor
/// without perturbation. Returns `None` when a pivot is clearly negative.
pub(crate) fn psd_cholesky(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (0..n)
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let cutoff = tol * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -cutoff {
            return None;
        }
        if d <= cutoff {
            continue;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Sample covariance (denominator `T − 1`) of row-major data with `n` columns.
pub(crate) fn sample_covariance(rows: &[f64], n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let t = rows.len() / n;
    let mut mean = vec![0.0; n];
    for row in rows.chunks_exact(n) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for row in rows.chunks_exact(n) {
        for i in 0..n {
            let di = row[i] - mean[i];
            for j in i..n {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (t.max(2) - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Pearson correlation matrix of row-major data. Constant columns get zero
/// correlation with everything, including themselves.
pub(crate) fn correlation(rows: &[f64], n: usize) -> DMatrix<f64> {
    let (_, cov) = sample_covariance(rows, n);
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = sd[i] * sd[j];
        if d > 0.0 {
            (cov[(i, j)] / d).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_cholesky_of_zero_is_zero() {
        let l = psd_cholesky(&DMatrix::zeros(3, 3), 1e-10).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psd_cholesky_of_rank_one() {
        let v = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, -1.0]);
        let m = &v * v.transpose();
        let l = psd_cholesky(&m, 1e-10).unwrap();
        assert!((&l * l.transpose() - m).abs().max() < 1e-12);
    }

    #[test]
    fn psd_cholesky_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_cholesky(&m, 1e-10).is_none());
        assert!(!is_pd_with_jitter(&m, 1e-10));
    }
}
