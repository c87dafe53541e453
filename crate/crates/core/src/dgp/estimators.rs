//! Estimators used by the simulated researchers. Regressions have no
//! intercept, and error variances are divided by `N` without small-sample
//! corrections.

use alloc::vec::Vec;
use libm::{log, sqrt};

use crate::analytic::Sided;
use crate::error::{domain, Error, Result};
use crate::linalg::{chol_solve, cholesky};
use crate::numkit::norm_sf;

const PIVOT_TOL: f64 = 1e-12;

/// One estimated specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub beta_hat: f64,
    pub se: f64,
    pub tstat: f64,
    pub pvalue: f64,
    /// Control/instrument bitmask, lag count or cluster count.
    pub spec_id: u32,
    pub fstat_first_stage: Option<f64>,
}

/// p-value of a standard normal test statistic.
pub fn pvalue(t: f64, sided: Sided) -> f64 {
    match sided {
        Sided::One => norm_sf(t),
        Sided::Two => (2.0 * norm_sf(t.abs())).min(1.0),
    }
}

fn finish(beta: f64, se: f64, spec_id: u32, f: Option<f64>, sided: Sided) -> Result<FitResult> {
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::Singular("non-positive variance estimate"));
    }
    let t = beta / se;
    Ok(FitResult {
        beta_hat: beta,
        se,
        tstat: t,
        pvalue: pvalue(t, sided),
        spec_id,
        fstat_first_stage: f,
    })
}

/// Cross products of a set of columns.
#[derive(Debug, Clone)]
pub struct Gram {
    pub dim: usize,
    /// `DᵀD`, row-major.
    pub xx: Vec<f64>,
    /// `Dᵀy`.
    pub xy: Vec<f64>,
    pub yy: f64,
    pub n: usize,
}

impl Gram {
    pub fn new(columns: &[&[f64]], y: &[f64]) -> Self {
        let dim = columns.len();
        let n = y.len();
        let mut xx = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let s: f64 = columns[i].iter().zip(columns[j]).map(|(a, b)| a * b).sum();
                xx[i * dim + j] = s;
                xx[j * dim + i] = s;
            }
        }
        let xy = columns
            .iter()
            .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect();
        let yy = y.iter().map(|v| v * v).sum();
        Gram { dim, xx, xy, yy, n }
    }

    fn sub(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let m = idx.len();
        let mut a = alloc::vec![0.0; m * m];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * m + c] = self.xx[i * self.dim + j];
            }
        }
        (a, idx.iter().map(|&i| self.xy[i]).collect())
    }

    /// OLS of `y` on the columns in `idx`; the coefficient of `idx[0]` is
    /// tested with homoskedastic `σ̂² = RSS/N`.
    pub fn ols(&self, idx: &[usize], spec_id: u32, sided: Sided) -> Result<FitResult> {
        let m = idx.len();
        if m == 0 || self.n <= m {
            return Err(Error::Insufficient("regression needs more observations than regressors"));
        }
        let (mut l, rhs) = self.sub(idx);
        cholesky(&mut l, m, PIVOT_TOL)?;
        let mut b = rhs.clone();
        chol_solve(&l, m, &mut b);
        let rss = (self.yy - b.iter().zip(&rhs).map(|(x, y)| x * y).sum::<f64>()).max(0.0);
        let mut e0 = alloc::vec![0.0; m];
        e0[0] = 1.0;
        chol_solve(&l, m, &mut e0);
        let var = rss / self.n as f64 * e0[0];
        finish(b[0], sqrt(var), spec_id, None, sided)
    }
}

/// OLS of `y` on `x` and `controls`, testing the coefficient on `x`.
pub fn ols_fit(y: &[f64], x: &[f64], controls: &[&[f64]], sided: Sided) -> Result<FitResult> {
    let mut cols: Vec<&[f64]> = Vec::with_capacity(controls.len() + 1);
    cols.push(x);
    cols.extend_from_slice(controls);
    check_lengths(&cols, y.len())?;
    let g = Gram::new(&cols, y);
    let idx: Vec<usize> = (0..cols.len()).collect();
    g.ols(&idx, 0, sided)
}

fn check_lengths(cols: &[&[f64]], n: usize) -> Result<()> {
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Config("regressor lengths differ from the outcome".into()));
    }
    Ok(())
}

/// Cross products for IV fits: columns are the instruments, plus `x` and `y`.
#[derive(Debug, Clone)]
pub struct IvGram {
    k: usize,
    zz: Vec<f64>,
    zx: Vec<f64>,
    zy: Vec<f64>,
    xx: f64,
    xy: f64,
    yy: f64,
    n: usize,
}

impl IvGram {
    pub fn new(instruments: &[&[f64]], x: &[f64], y: &[f64]) -> Self {
        let g = Gram::new(instruments, x);
        let zy = instruments
            .iter()
            .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect();
        IvGram {
            k: instruments.len(),
            zz: g.xx,
            zx: g.xy,
            zy,
            xx: g.yy,
            xy: x.iter().zip(y).map(|(a, b)| a * b).sum(),
            yy: y.iter().map(|v| v * v).sum(),
            n: y.len(),
        }
    }

    /// 2SLS with the instruments in `idx`.
    pub fn fit(&self, idx: &[usize], spec_id: u32, sided: Sided) -> Result<FitResult> {
        let m = idx.len();
        if m == 0 || self.n <= m {
            return Err(Error::Insufficient("IV fit needs instruments and spare observations"));
        }
        let mut a = alloc::vec![0.0; m * m];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * m + c] = self.zz[i * self.k + j];
            }
        }
        cholesky(&mut a, m, PIVOT_TOL)?;
        let zx: Vec<f64> = idx.iter().map(|&i| self.zx[i]).collect();
        let zy: Vec<f64> = idx.iter().map(|&i| self.zy[i]).collect();
        let mut coef = zx.clone();
        chol_solve(&a, m, &mut coef);
        let xpx: f64 = coef.iter().zip(&zx).map(|(c, v)| c * v).sum();
        let xpy: f64 = coef.iter().zip(&zy).map(|(c, v)| c * v).sum();
        if !(xpx > PIVOT_TOL * self.xx) {
            return Err(Error::Degenerate("no first-stage variation"));
        }
        let beta = xpy / xpx;
        let uu = (self.yy - 2.0 * beta * self.xy + beta * beta * self.xx).max(0.0);
        let sigma2 = uu / self.n as f64;
        let rss1 = (self.xx - xpx).max(0.0);
        let f = if rss1 > 0.0 {
            (xpx / m as f64) / (rss1 / (self.n - m) as f64)
        } else {
            f64::INFINITY
        };
        finish(beta, sqrt(sigma2 / xpx), spec_id, Some(f), sided)
    }
}

/// 2SLS of `y` on `x` with the given excluded instruments.
pub fn iv_2sls_fit(y: &[f64], x: &[f64], instruments: &[&[f64]], sided: Sided) -> Result<FitResult> {
    check_lengths(instruments, y.len())?;
    check_lengths(&[x], y.len())?;
    let g = IvGram::new(instruments, x, y);
    let idx: Vec<usize> = (0..instruments.len()).collect();
    g.fit(&idx, (1u32 << instruments.len()) - 1, sided)
}

/// Autocovariance sums `Σ_t v_t v_{t−l}` for `l = 0..=max_lag`.
pub fn autocov_sums(v: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|l| v[l..].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Bartlett long-run sum of scores from precomputed autocovariance sums.
pub fn bartlett_sum(gammas: &[f64], lags: usize) -> f64 {
    let mut s = gammas[0];
    for l in 1..=lags {
        s += 2.0 * (1.0 - l as f64 / (lags as f64 + 1.0)) * gammas[l];
    }
    s
}

/// Newey-West standard error of the slope in a no-intercept regression of
/// `y` on `x`, given residuals.
pub fn newey_west_se(resid: &[f64], x: &[f64], lags: usize) -> Result<f64> {
    if resid.len() != x.len() || lags >= resid.len() {
        return Err(domain("lag count", lags as f64));
    }
    let v: Vec<f64> = resid.iter().zip(x).map(|(u, x)| u * x).collect();
    let s = bartlett_sum(&autocov_sums(&v, lags), lags);
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(s > 0.0) {
        return Err(Error::Singular("non-positive long-run variance"));
    }
    Ok(sqrt(s) / sxx)
}

/// Cluster-robust (CR0) standard error with `group_count` contiguous blocks.
pub fn cluster_se(resid: &[f64], x: &[f64], group_count: usize) -> Result<f64> {
    let n = resid.len();
    if group_count == 0 || n % group_count != 0 || x.len() != n {
        return Err(domain("cluster count", group_count as f64));
    }
    let size = n / group_count;
    let meat: f64 = resid
        .chunks(size)
        .zip(x.chunks(size))
        .map(|(u, x)| {
            let s: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
            s * s
        })
        .sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(meat > 0.0 && sxx > 0.0) {
        return Err(Error::Singular("degenerate cluster sandwich"));
    }
    Ok(sqrt(meat) / sxx)
}

/// BIC choice of AR order in `0..=max_lags`, fitted without intercept on the
/// common sample `t ≥ max_lags`.
pub fn bic_lag_select(series: &[f64], max_lags: usize) -> usize {
    let n = series.len();
    if max_lags == 0 || n <= 2 * max_lags + 1 {
        return 0;
    }
    let m = n - max_lags;
    let target = &series[max_lags..];
    let lagged: Vec<&[f64]> = (1..=max_lags).map(|l| &series[max_lags - l..n - l]).collect();
    let g = Gram::new(&lagged, target);
    let mf = m as f64;
    let mut best = (0, mf * log(g.yy / mf));
    for p in 1..=max_lags {
        let idx: Vec<usize> = (0..p).collect();
        let (mut a, rhs) = g.sub(&idx);
        if cholesky(&mut a, p, PIVOT_TOL).is_err() {
            continue;
        }
        let mut b = rhs.clone();
        chol_solve(&a, p, &mut b);
        let rss = g.yy - b.iter().zip(&rhs).map(|(x, y)| x * y).sum::<f64>();
        if !(rss > 0.0) {
            continue;
        }
        let bic = mf * log(rss / mf) + p as f64 * log(mf);
        if bic < best.1 {
            best = (p, bic);
        }
    }
    best.0
}
