//! Dense routines for the small systems that appear in estimators and QPs.
//! Matrices are row-major `n × n` slices.

use alloc::vec::Vec;
use libm::sqrt;

use crate::error::{Error, Result};

/// In-place Cholesky factorization `A = L Lᵀ`; the lower triangle of `a`
/// receives `L`. Fails when a pivot is not positive relative to `tol`.
pub fn cholesky(a: &mut [f64], n: usize, tol: f64) -> Result<()> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > tol * scale) {
            return Err(Error::Singular("matrix is not positive definite"));
        }
        let d = sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solve `L x = b` in place.
pub fn forward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `Lᵀ x = b` in place.
pub fn backward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `A x = b` given the Cholesky factor of `A`.
pub fn chol_solve(l: &[f64], n: usize, b: &mut [f64]) {
    forward(l, n, b);
    backward(l, n, b);
}

/// Numerical rank of the rows of an `m × n` row-major matrix via Householder
/// QR with column pivoting, applied to the transpose.
pub fn row_rank(rows: &[f64], m: usize, n: usize, tol: f64) -> usize {
    if m == 0 || n == 0 {
        return 0;
    }
    // Work on Aᵀ (n × m), columns are the original rows.
    let mut a: Vec<f64> = alloc::vec![0.0; n * m];
    for i in 0..m {
        for j in 0..n {
            a[j * m + i] = rows[i * n + j];
        }
    }
    let (r, c) = (n, m);
    let mut norms: Vec<f64> = (0..c)
        .map(|j| (0..r).map(|i| a[i * c + j] * a[i * c + j]).sum::<f64>())
        .collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    if max_norm == 0.0 {
        return 0;
    }
    let thresh = tol * sqrt(max_norm);
    let mut rank = 0;
    for k in 0..r.min(c) {
        let (p, &best) = norms
            .iter()
            .enumerate()
            .skip(k)
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap();
        if sqrt(best.max(0.0)) <= thresh {
            break;
        }
        if p != k {
            for i in 0..r {
                a.swap(i * c + k, i * c + p);
            }
            norms.swap(k, p);
        }
        let alpha = sqrt((k..r).map(|i| a[i * c + k] * a[i * c + k]).sum::<f64>());
        if alpha <= thresh {
            break;
        }
        rank += 1;
        let sign = if a[k * c + k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..r).map(|i| a[i * c + k]).collect();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..c {
                let dot: f64 = (k..r).map(|i| v[i - k] * a[i * c + j]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..r {
                    a[i * c + j] -= f * v[i - k];
                }
            }
        }
        for j in (k + 1)..c {
            norms[j] = (k + 1..r).map(|i| a[i * c + j] * a[i * c + j]).sum();
        }
    }
    rank
}

/// Least-squares solution of `A x ≈ b` for a full-column-rank `m × n`
/// row-major `A` (`m ≥ n`) by Householder QR. Fails when a diagonal entry
/// of `R` is below `tol` times the largest column norm.
pub fn lstsq(a: &[f64], m: usize, n: usize, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if m < n {
        return Err(Error::Singular("underdetermined least squares"));
    }
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    let scale = (0..n)
        .map(|j| sqrt((0..m).map(|i| r[i * n + j] * r[i * n + j]).sum::<f64>()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Singular("zero design"));
    }
    for k in 0..n {
        let alpha = sqrt((k..m).map(|i| r[i * n + k] * r[i * n + k]).sum::<f64>());
        if alpha <= tol * scale {
            return Err(Error::Singular("rank-deficient least squares"));
        }
        let sign = if r[k * n + k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| r[i * n + k]).collect();
        v[0] += sign * alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let f = 2.0 * (k..m).map(|i| v[i - k] * r[i * n + j]).sum::<f64>() / vn;
            for i in k..m {
                r[i * n + j] -= f * v[i - k];
            }
        }
        let f = 2.0 * (k..m).map(|i| v[i - k] * y[i]).sum::<f64>() / vn;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| r[i * n + j] * x[j]).sum();
        x[i] = (y[i] - s) / r[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves() {
        let mut a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let orig = a;
        cholesky(&mut a, 3, 1e-14).unwrap();
        let mut b = [1.0, -2.0, 0.5];
        chol_solve(&a, 3, &mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| orig[i * 3 + j] * b[j]).sum();
            assert!((r - [1.0, -2.0, 0.5][i]).abs() < 1e-13);
        }
        let mut s = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky(&mut s, 2, 1e-12).is_err());
    }

    #[test]
    fn rank_of_rows() {
        let rows = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        assert_eq!(row_rank(&rows, 3, 3, 1e-10), 2);
        assert_eq!(row_rank(&rows[..3], 1, 3, 1e-10), 1);
        assert_eq!(row_rank(&[0.0; 4], 2, 2, 1e-10), 0);
        let wide = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        assert_eq!(row_rank(&wide, 2, 3, 1e-10), 1);
    }

    #[test]
    fn lstsq_fits_line() {
        // y = 1 + 2x exactly, plus one row that pulls the fit
        let a = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let b = [1.0, 3.0, 5.0, 8.0];
        let x = lstsq(&a, 4, 2, &b, 1e-12).unwrap();
        // normal equations: [[4, 6], [6, 14]] x = [17, 37]
        let det = 4.0 * 14.0 - 36.0;
        assert!((x[0] - (14.0 * 17.0 - 6.0 * 37.0) / det).abs() < 1e-12);
        assert!((x[1] - (4.0 * 37.0 - 6.0 * 17.0) / det).abs() < 1e-12);
        assert!(lstsq(&[1.0, 2.0, 2.0, 4.0], 2, 2, &[1.0, 1.0], 1e-12).is_err());
    }
}
