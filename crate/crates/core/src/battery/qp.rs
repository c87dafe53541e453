//! Lawson-Hanson NNLS and the least-distance program built on it.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::linalg::lstsq;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpError {
    /// Iteration budget exhausted.
    NoConvergence,
    /// The constraint set is empty.
    Infeasible,
    Singular,
}

const MAX_ITER: usize = 500;

/// `min ‖E x − f‖` subject to `x ≥ 0`, for a row-major `m × n` matrix `E`.
pub fn nnls(e: &[f64], m: usize, n: usize, f: &[f64]) -> Result<Vec<f64>, QpError> {
    let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale * scale * (m.max(n) as f64);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let grad = |x: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = (0..m)
            .map(|i| f[i] - (0..n).map(|j| e[i * n + j] * x[j]).sum::<f64>())
            .collect();
        (0..n).map(|j| (0..m).map(|i| e[i * n + j] * r[i]).sum()).collect()
    };
    let solve_passive = |passive: &[bool]| -> Result<Vec<f64>, QpError> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let k = idx.len();
        let mut a = vec![0.0; m * k];
        for i in 0..m {
            for (c, &j) in idx.iter().enumerate() {
                a[i * k + c] = e[i * n + j];
            }
        }
        let sol = lstsq(&a, m, k, f, 1e-12).map_err(|_| QpError::Singular)?;
        let mut z = vec![0.0; n];
        for (c, &j) in idx.iter().enumerate() {
            z[j] = sol[c];
        }
        Ok(z)
    };
    let mut iter = 0;
    loop {
        let w = grad(&x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let Some(t) = cand else { return Ok(x) };
        passive[t] = true;
        loop {
            iter += 1;
            if iter > MAX_ITER {
                return Err(QpError::NoConvergence);
            }
            let z = solve_passive(&passive)?;
            if (0..n).all(|j| !passive[j] || z[j] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for j in 0..n {
                if passive[j] && z[j] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[j]));
                }
            }
            for j in 0..n {
                x[j] += alpha * (z[j] - x[j]);
                if passive[j] && x[j] <= 1e-14 * scale {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
}

/// Least-distance program `min ‖v‖` subject to `G v ≥ h`, with `G` an
/// `m × n` row-major matrix.
pub fn ldp(g: &[f64], m: usize, n: usize, h: &[f64]) -> Result<Vec<f64>, QpError> {
    if m == 0 || h.iter().all(|&v| v <= 0.0) {
        return Ok(vec![0.0; n]);
    }
    // E = [Gᵀ; hᵀ] is (n+1) × m, f = (0, …, 0, 1)
    let mut e = vec![0.0; (n + 1) * m];
    for i in 0..m {
        for j in 0..n {
            e[j * m + i] = g[i * n + j];
        }
        e[n * m + i] = h[i];
    }
    let mut f = vec![0.0; n + 1];
    f[n] = 1.0;
    let u = nnls(&e, n + 1, m, &f)?;
    let r: Vec<f64> = (0..=n)
        .map(|i| (0..m).map(|j| e[i * m + j] * u[j]).sum::<f64>() - f[i])
        .collect();
    let rn = sqrt(r.iter().map(|v| v * v).sum::<f64>());
    if rn < 1e-12 || !(r[n].abs() > 1e-14) {
        return Err(QpError::Infeasible);
    }
    Ok((0..n).map(|i| -r[i] / r[n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_small() {
        // unconstrained optimum (1, −1) → clipped problem
        let e = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let f = [1.0, -1.0, 0.0];
        let x = nnls(&e, 3, 2, &f).unwrap();
        // with x2 = 0: minimize (x1−1)² + x1² → x1 = 0.5
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1] == 0.0);
        let x = nnls(&e, 3, 2, &[1.0, 2.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ldp_projects_onto_halfspaces() {
        // v1 + v2 ≥ 2 → (1, 1)
        let v = ldp(&[1.0, 1.0], 1, 2, &[2.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        // v1 ≥ 1, v2 ≥ −5 → (1, 0)
        let v = ldp(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[1.0, -5.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        // v1 ≥ 1 and −v1 ≥ 0 is empty
        assert_eq!(ldp(&[1.0, -1.0], 2, 1, &[1.0, 0.0]), Err(QpError::Infeasible));
    }

    #[test]
    fn ldp_matches_brute_force() {
        // three constraints in the plane; brute force over a fine grid
        let g = [1.0, 2.0, -1.0, 1.0, 0.5, -1.0];
        let h = [2.0, -1.0, -3.0];
        let v = ldp(&g, 3, 2, &h).unwrap();
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let mut best = f64::INFINITY;
        for i in -400..=400 {
            for j in -400..=400 {
                let (a, b) = (i as f64 * 0.005, j as f64 * 0.005);
                if (0..3).all(|r| g[2 * r] * a + g[2 * r + 1] * b >= h[r]) {
                    best = best.min((a * a + b * b).sqrt());
                }
            }
        }
        assert!((0..3).all(|r| g[2 * r] * v[0] + g[2 * r + 1] * v[1] >= h[r] - 1e-10));
        assert!(norm <= best + 1e-12 && norm > best - 0.01);
    }
}
