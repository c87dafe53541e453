use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::rng::{stream, Purpose};

const CELLS: usize = 2048;

/// Simulated law of the first-order residual autocovariance
/// `ρ̂ = (N−1)⁻¹ Σ Û_t Û_{t−1}` of demeaned i.i.d. normal noise.
///
/// The density is piecewise linear between cell edges, and the CDF is its
/// exact integral, so the two are consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoHatLaw {
    /// Cell edges on `[−1, 1]`.
    pub grid: Vec<f64>,
    pub cdf_vals: Vec<f64>,
    pub pdf_vals: Vec<f64>,
    pub n: usize,
    pub draws: usize,
    mean: f64,
    variance: f64,
}

/// Autocovariance statistic of one demeaned series.
pub(crate) fn rho_hat(u: &mut [f64]) -> f64 {
    let n = u.len();
    let mean = u.iter().sum::<f64>() / n as f64;
    u.iter_mut().for_each(|x| *x -= mean);
    let s: f64 = u.windows(2).map(|w| w[0] * w[1]).sum();
    s / (n - 1) as f64
}

/// Build the law of `ρ̂` for series of length `n` from `draws` simulations.
pub fn build_rhohat_law(n: usize, draws: usize, seed: u64) -> Result<RhoHatLaw> {
    if n < 10 {
        return Err(domain("series length", n as f64));
    }
    if draws < 100_000 {
        return Err(domain("simulation draws", draws as f64));
    }
    let mut rng = stream(seed, Purpose::RhoHat, n as u64);
    let mut counts = alloc::vec![0u64; CELLS];
    let mut u = alloc::vec![0.0; n];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let width = 2.0 / CELLS as f64;
    for _ in 0..draws {
        u.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
        let r = rho_hat(&mut u);
        sum += r;
        sum_sq += r * r;
        let cell = (((r + 1.0) / width) as usize).min(CELLS - 1);
        counts[cell] += 1;
    }
    let total = draws as f64;
    let mean = sum / total;
    let variance = sum_sq / total - mean * mean;
    let dens: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let grid: Vec<f64> = (0..=CELLS).map(|i| -1.0 + i as f64 * width).collect();
    // Edge values average the neighbouring cells; total mass is preserved.
    let pdf_vals: Vec<f64> = (0..=CELLS)
        .map(|i| {
            let left = if i > 0 { dens[i - 1] } else { 0.0 };
            let right = if i < CELLS { dens[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let mut cdf_vals = Vec::with_capacity(CELLS + 1);
    let mut acc = 0.0;
    cdf_vals.push(0.0);
    for i in 0..CELLS {
        acc += 0.5 * width * (pdf_vals[i] + pdf_vals[i + 1]);
        cdf_vals.push(acc);
    }
    Ok(RhoHatLaw {
        grid,
        cdf_vals,
        pdf_vals,
        n,
        draws,
        mean,
        variance,
    })
}

impl RhoHatLaw {
    fn width(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let w = self.width();
        let pos = (r - self.grid[0]) / w;
        let i = (pos as usize).min(self.grid.len() - 2);
        (i, r - self.grid[i])
    }

    /// Sample mean of the simulated draws.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance of the simulated draws.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `η_N(r)`.
    pub fn pdf(&self, r: f64) -> f64 {
        if r <= self.grid[0] || r >= self.grid[self.grid.len() - 1] {
            return 0.0;
        }
        let (i, t) = self.locate(r);
        let s = t / self.width();
        self.pdf_vals[i] * (1.0 - s) + self.pdf_vals[i + 1] * s
    }

    /// `H_N(r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.grid[0] {
            return 0.0;
        }
        if r >= self.grid[self.grid.len() - 1] {
            return self.cdf_vals[self.cdf_vals.len() - 1];
        }
        let (i, t) = self.locate(r);
        let w = self.width();
        let slope = (self.pdf_vals[i + 1] - self.pdf_vals[i]) / w;
        self.cdf_vals[i] + self.pdf_vals[i] * t + 0.5 * slope * t * t
    }

    /// `∫_a^b f(r) η_N(r) dr` with a Gauss-Legendre rule on every cell that
    /// carries mass.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        let lo_edge = self.grid[0];
        let hi_edge = self.grid[self.grid.len() - 1];
        let a = a.max(lo_edge);
        let b = b.min(hi_edge);
        if !(a < b) {
            return Ok(0.0);
        }
        let (nodes, weights) = gl4();
        let (ia, _) = self.locate(a);
        let (ib, _) = self.locate(b);
        let mut total = 0.0;
        for i in ia..=ib.min(self.grid.len() - 2) {
            if self.pdf_vals[i] == 0.0 && self.pdf_vals[i + 1] == 0.0 {
                continue;
            }
            let lo = self.grid[i].max(a);
            let hi = self.grid[i + 1].min(b);
            if !(lo < hi) {
                continue;
            }
            let c = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let mut s = 0.0;
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let r = c + half * x;
                let v = f(r) * self.pdf(r);
                if !v.is_finite() {
                    return Err(crate::Error::NonFinite { at: r });
                }
                s += w * v;
            }
            total += s * half;
        }
        Ok(total)
    }
}

fn gl4() -> ([f64; 4], [f64; 4]) {
    const X: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    (X, W)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_bounds() {
        let law = build_rhohat_law(200, 200_000, 3).unwrap();
        let n = 200.0;
        let se = libm::sqrt(law.variance() / law.draws as f64);
        assert!((law.mean() + 1.0 / n).abs() < 3.0 * se, "mean {}", law.mean());
        assert!((law.variance() * n - 1.0).abs() < 0.1);
        assert_eq!(law.cdf(-1.0), 0.0);
        assert!((law.cdf(1.0) - 1.0).abs() < 1e-12);
        let mass = law.integrate(|_| 1.0, -1.0, 1.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        // CDF and integral of the density agree.
        let part = law.integrate(|_| 1.0, -1.0, 0.013).unwrap();
        assert!((part - law.cdf(0.013)).abs() < 1e-12);
        assert!(law.pdf_vals.iter().all(|&d| d >= 0.0));
        assert!(law.cdf_vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn preconditions() {
        assert!(build_rhohat_law(5, 200_000, 1).is_err());
        assert!(build_rhohat_law(200, 10, 1).is_err());
    }
}
