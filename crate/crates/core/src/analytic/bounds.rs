use libm::{exp, expm1, log, log1p};

use crate::error::{domain, Result};
use crate::numkit::{inv_upper, norm_sf, Quadrature};

/// One- or two-sided tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Sided {
    One,
    #[default]
    Two,
}

const H_MAX: f64 = 40.0;
const GRID: usize = 240;
const LN2: f64 = core::f64::consts::LN_2;
// ln √(2π)
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_phi(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + log1p(exp(-2.0 * a)) - LN2
}

fn ln_sinh(x: f64) -> f64 {
    // x > 0
    x + log(-expm1(-2.0 * x)) - LN2
}

/// Log of the single-effect quantity of the given order divided by `G_h(cap)`;
/// `None` when the quantity is not positive.
fn log_ratio(h: f64, z: f64, zc: f64, order: u8, sided: Sided) -> Option<f64> {
    match sided {
        Sided::One => {
            let lg = log(norm_sf(zc - h));
            let core = h * z - 0.5 * h * h - lg;
            match order {
                0 => Some(core),
                1 if h > 0.0 => Some(log(h) + core - ln_phi(z)),
                2 if h > 0.0 && z + h > 0.0 => {
                    Some(log(h * (z + h)) + core - 2.0 * ln_phi(z))
                }
                _ => None,
            }
        }
        Sided::Two => {
            let lg = log(norm_sf(zc - h) + norm_sf(zc + h));
            let e = -0.5 * h * h - lg;
            let lphi = ln_phi(z);
            match order {
                0 => Some(e + ln_cosh(h * z)),
                1 if h > 0.0 && z > 0.0 => Some(e + log(h) + ln_sinh(h * z) - LN2 - lphi),
                2 if h > 0.0 => {
                    let hz = h * z;
                    let inner = if z > 0.0 {
                        // h cosh(hz) + z sinh(hz), factoring cosh out
                        ln_cosh(hz) + log(h + z * libm::tanh(hz))
                    } else {
                        ln_cosh(hz) + log(h)
                    };
                    Some(e + log(h) + inner - 2.0 * LN2 - 2.0 * lphi)
                }
                _ => None,
            }
        }
    }
}

/// Upper bound on the null p-curve (order 0), on minus its slope (order 1)
/// or on its curvature (order 2) at `p`, conditional on `p ≤ cap`.
///
/// The bound is the supremum over `h ∈ [0, 40]` of the single-effect value
/// divided by `G_h(cap)`; mixtures over effects cannot exceed it.
pub fn null_upper_bound(p: f64, order: u8, sided: Sided, interval_cap: f64) -> Result<f64> {
    if !(interval_cap > 0.0 && interval_cap <= 1.0) {
        return Err(domain("interval cap", interval_cap));
    }
    if !(p > 0.0 && p <= interval_cap) || (sided == Sided::One && p >= 1.0) {
        return Err(domain("p-value", p));
    }
    if order > 2 {
        return Err(domain("bound order", order as f64));
    }
    let (z, zc) = match sided {
        Sided::One => (inv_upper(p), inv_upper(interval_cap)),
        Sided::Two => (inv_upper(0.5 * p), inv_upper(0.5 * interval_cap)),
    };
    let lb = ln_bound_at_z(z, zc, order, sided);
    Ok(if lb == f64::NEG_INFINITY { 0.0 } else { exp(lb) })
}

/// Log of the bound at the normal quantile `z` of `p` (of `p/2` when
/// two-sided); `−∞` when the bound is zero.
fn ln_bound_at_z(z: f64, zc: f64, order: u8, sided: Sided) -> f64 {
    let f = |h: f64| log_ratio(h, z, zc, order, sided).unwrap_or(f64::NEG_INFINITY);
    let mut hs = [0.0; GRID + 1];
    for (i, h) in hs.iter_mut().enumerate().skip(1) {
        // log-spaced from 1e-3 to H_MAX
        let t = (i - 1) as f64 / (GRID - 1) as f64;
        *h = 1e-3 * exp(t * log(H_MAX / 1e-3));
    }
    let (mut best_i, mut best) = (0, f(0.0));
    for (i, &h) in hs.iter().enumerate().skip(1) {
        let v = f(h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { 0.0 } else { hs[best_i - 1] };
    let hi = if best_i == GRID { H_MAX } else { hs[best_i + 1] };
    let (mut a, mut b) = (lo, hi);
    let gr = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        if b - a < 1e-12 * (1.0 + b) {
            break;
        }
    }
    best = best.max(fc).max(fd).max(f(0.5 * (a + b)));
    best
}

/// Piecewise-polynomial weights over equal bins of width `w` starting at
/// `lo`. They turn pointwise bounds on the p-curve and its derivatives into
/// bounds on bin masses and their differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinKernel {
    /// Indicator of `[lo, lo + w]`: bounds a bin mass.
    Box { lo: f64, w: f64 },
    /// Triangle on `[lo, lo + 2w]` peaking at `w`: bounds `π_j − π_{j+1}`.
    Tent { lo: f64, w: f64 },
    /// Quadratic B-spline on `[lo, lo + 3w]` with mass `w³`: bounds
    /// `π_j − 2π_{j+1} + π_{j+2}`.
    Spline2 { lo: f64, w: f64 },
}

impl BinKernel {
    fn parts(&self) -> (f64, f64, usize) {
        match *self {
            BinKernel::Box { lo, w } => (lo, w, 1),
            BinKernel::Tent { lo, w } => (lo, w, 2),
            BinKernel::Spline2 { lo, w } => (lo, w, 3),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        let (lo, w, m) = self.parts();
        (lo, lo + m as f64 * w)
    }

    /// Log of the weight at `p`; `ln_p` is used instead of `p − lo` when
    /// `lo = 0`, where `p` itself may underflow.
    fn ln_value(&self, p: f64, ln_p: f64) -> f64 {
        let (lo, w, m) = self.parts();
        let d = p - lo;
        let ln_d = if lo == 0.0 { ln_p } else { log(d) };
        let t = d / w;
        if !(t >= 0.0) || t > m as f64 {
            return f64::NEG_INFINITY;
        }
        match m {
            1 => 0.0,
            2 if t <= 1.0 => ln_d,
            2 => log(w * (2.0 - t)),
            _ if t <= 1.0 => 2.0 * ln_d - LN2,
            _ if t <= 2.0 => log(w * w * 0.5 * (-2.0 * t * t + 6.0 * t - 3.0)),
            _ => log(w * w * 0.5 * (3.0 - t) * (3.0 - t)),
        }
    }
}

/// `ln Φ̄(z)` without underflow.
fn ln_norm_sf(z: f64) -> f64 {
    if z < 30.0 {
        log(norm_sf(z))
    } else {
        let r = 1.0 / (z * z);
        ln_phi(z) - log(z) + log1p(-r * (1.0 - 3.0 * r * (1.0 - 5.0 * r)))
    }
}

/// `∫ B(p)·k(p) dp` over the support of `k`, for the bound `B` of
/// [`null_upper_bound`] with the given order. The support must lie in
/// `[0, interval_cap]`. The integral is taken in the normal quantile of `p`
/// and in logs, so supports starting at 0 are handled exactly.
pub fn null_bound_integral(order: u8, sided: Sided, interval_cap: f64, kernel: BinKernel) -> Result<f64> {
    if !(interval_cap > 0.0 && interval_cap <= 1.0) {
        return Err(domain("interval cap", interval_cap));
    }
    let (lo, hi) = kernel.support();
    let (_, w, m) = kernel.parts();
    if !(lo >= 0.0 && w > 0.0 && hi <= interval_cap * (1.0 + 1e-12)) {
        return Err(domain("kernel support", hi));
    }
    if order > 2 {
        return Err(domain("bound order", order as f64));
    }
    let hi = hi.min(interval_cap);
    let (scale, zc) = match sided {
        Sided::One => (1.0, inv_upper(interval_cap)),
        Sided::Two => (2.0, inv_upper(0.5 * interval_cap)),
    };
    let ln_scale = log(scale);
    // beyond this the largest effect on the grid has a Gaussian tail in z
    let z_top = H_MAX + 12.0;
    let za = inv_upper(hi / scale);
    let zb = if lo == 0.0 { z_top } else { inv_upper(lo / scale).min(z_top) };
    let breaks: alloc::vec::Vec<f64> = (1..m)
        .map(|i| lo + i as f64 * w)
        .filter(|&x| x > 0.0 && x < hi)
        .map(|x| inv_upper(x / scale))
        .collect();
    let quad = Quadrature::with_tol(10, 1e-10);
    quad.integrate(
        |z| {
            let ln_p = ln_scale + ln_norm_sf(z);
            let lk = kernel.ln_value(scale * norm_sf(z), ln_p);
            Ok(exp(ln_bound_at_z(z, zc, order, sided) + ln_phi(z) + ln_scale + lk))
        },
        za,
        zb,
        &breaks,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::null_pcurve;
    use crate::numkit::norm_pdf;
    use libm::{cosh, sinh};

    #[test]
    fn unconditional_one_sided() {
        assert!((null_upper_bound(0.5, 0, Sided::One, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let z = inv_upper(0.05);
        let v = null_upper_bound(0.05, 0, Sided::One, 1.0).unwrap();
        assert!((v - exp(0.5 * z * z)).abs() < 1e-9);
        assert!((v - 3.870).abs() < 5e-3);
    }

    #[test]
    fn grid_sup_oracle() {
        for sided in [Sided::One, Sided::Two] {
            for order in 0..=2u8 {
                for &p in &[0.003, 0.02, 0.07, 0.149] {
                    let (z, zc) = match sided {
                        Sided::One => (inv_upper(p), inv_upper(0.15)),
                        Sided::Two => (inv_upper(p / 2.0), inv_upper(0.075)),
                    };
                    // direct (non-log) evaluation over a fine grid
                    let mut best: f64 = 0.0;
                    for i in 0..=40_000 {
                        let h = i as f64 * 0.001;
                        let (g, den) = match sided {
                            Sided::One => {
                                let e = exp(h * z - h * h / 2.0);
                                let q = [e, h * e / norm_pdf(z), h * (z + h) * e / norm_pdf(z).powi(2)];
                                (q[order as usize], norm_sf(zc - h))
                            }
                            Sided::Two => {
                                let e = exp(-h * h / 2.0);
                                let f = norm_pdf(z);
                                let q = [
                                    e * cosh(h * z),
                                    e * h * sinh(h * z) / (2.0 * f),
                                    e * h * (h * cosh(h * z) + z * sinh(h * z)) / (4.0 * f * f),
                                ];
                                (q[order as usize], norm_sf(zc - h) + norm_sf(zc + h))
                            }
                        };
                        best = best.max(g / den);
                    }
                    let got = null_upper_bound(p, order, sided, 0.15).unwrap();
                    assert!(
                        got >= best * (1.0 - 1e-9) && got <= best * (1.0 + 1e-5) + 1e-12,
                        "{sided:?} order {order} p {p}: {got} vs {best}"
                    );
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // Two-sided single-h density and its p-derivatives.
        let h = 1.3;
        let g = |p: f64| {
            let z = inv_upper(p / 2.0);
            exp(-h * h / 2.0) * cosh(h * z)
        };
        let p = 0.04;
        let z = inv_upper(p / 2.0);
        let f = norm_pdf(z);
        let d1 = -exp(-h * h / 2.0) * h * sinh(h * z) / (2.0 * f);
        let d2 = exp(-h * h / 2.0) * h * (h * cosh(h * z) + z * sinh(h * z)) / (4.0 * f * f);
        let e = 1e-5;
        assert!(((g(p + e) - g(p - e)) / (2.0 * e) / d1 - 1.0).abs() < 1e-6);
        let e = 1e-4;
        assert!(((g(p + e) - 2.0 * g(p) + g(p - e)) / (e * e) / d2 - 1.0).abs() < 1e-4);
        // One-sided.
        let g1 = |p: f64| null_pcurve(p, h).unwrap();
        let z = inv_upper(p);
        let d1 = -h * exp(h * z - h * h / 2.0) / norm_pdf(z);
        let d2 = h * (z + h) * exp(h * z - h * h / 2.0) / norm_pdf(z).powi(2);
        let e = 1e-5;
        assert!(((g1(p + e) - g1(p - e)) / (2.0 * e) / d1 - 1.0).abs() < 1e-6);
        let e = 1e-4;
        assert!(((g1(p + e) - 2.0 * g1(p) + g1(p - e)) / (e * e) / d2 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn mixtures_respect_bound() {
        let cap = 0.15;
        let hs = [0.0, 0.5, 1.0, 2.0, 3.5];
        let ws = [0.3, 0.1, 0.25, 0.2, 0.15];
        let g_cap = |h: f64| norm_sf(inv_upper(cap) - h);
        let den: f64 = hs.iter().zip(&ws).map(|(h, w)| w * g_cap(*h)).sum();
        for i in 1..=150 {
            let p = i as f64 * 0.001;
            let num: f64 = hs.iter().zip(&ws).map(|(h, w)| w * null_pcurve(p, *h).unwrap()).sum();
            assert!(num / den <= null_upper_bound(p, 0, Sided::One, cap).unwrap() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn domain_errors() {
        assert!(null_upper_bound(0.2, 0, Sided::One, 0.15).is_err());
        assert!(null_upper_bound(0.1, 3, Sided::One, 0.15).is_err());
        assert!(null_upper_bound(0.1, 0, Sided::One, 0.0).is_err());
    }

    /// ln Φ̄(z) by the Mills-ratio continued fraction for large z.
    fn ln_tail(z: f64) -> f64 {
        if z < 20.0 {
            return norm_sf(z).ln();
        }
        let mut cf = z;
        for k in (1..200).rev() {
            cf = z + k as f64 / cf;
        }
        -0.5 * z * z - LN_SQRT_2PI - cf.ln()
    }

    fn grid_bound_integral(order: usize, sided: Sided, lo: f64, hi: f64, ln_weight: impl Fn(f64) -> f64) -> f64 {
        let scale: f64 = if sided == Sided::One { 1.0 } else { 2.0 };
        let zc = inv_upper(0.15 / scale);
        let za = inv_upper(hi / scale);
        let zb = if lo == 0.0 { 52.0 } else { inv_upper(lo / scale) };
        let steps = 4000;
        let dz = (zb - za) / steps as f64;
        let f = |z: f64| {
            let mut best = f64::NEG_INFINITY;
            let lphi = -0.5 * z * z - LN_SQRT_2PI;
            for i in 0..=4000 {
                let h = i as f64 * 0.01;
                let v = match sided {
                    Sided::One => {
                        let core = h * z - h * h / 2.0 - norm_sf(zc - h).ln();
                        [core, h.ln() + core - lphi, (h * (z + h)).ln() + core - 2.0 * lphi][order]
                    }
                    Sided::Two => {
                        let e = -h * h / 2.0 - (norm_sf(zc - h) + norm_sf(zc + h)).ln();
                        // cosh and sinh in logs: hz ≤ 40·52
                        let hz = h * z;
                        let lc = hz + (-2.0 * hz).exp().ln_1p() - LN2;
                        let ls = if hz > 0.0 { hz + (-(-2.0 * hz).exp()).ln_1p() - LN2 } else { f64::NEG_INFINITY };
                        let q = [
                            lc,
                            h.ln() + ls - LN2 - lphi,
                            h.ln() + lc + (h + z * hz.tanh()).ln() - 2.0 * LN2 - 2.0 * lphi,
                        ];
                        e + q[order]
                    }
                };
                if v > best {
                    best = v;
                }
            }
            let ln_p = scale.ln() + ln_tail(z);
            (best + lphi + scale.ln() + ln_weight(ln_p)).exp()
        };
        let mut s = f(za) + f(zb);
        for i in 1..steps {
            s += f(za + i as f64 * dz) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * dz / 3.0
    }

    #[test]
    fn bin_integrals_match_grid_oracle() {
        // tent on [0, 0.02]
        let ln_tent = |ln_p: f64| {
            let p = ln_p.exp();
            if p < 0.01 { ln_p } else { (0.02 - p).max(0.0).ln() }
        };
        for sided in [Sided::One, Sided::Two] {
            let got = null_bound_integral(0, sided, 0.15, BinKernel::Box { lo: 0.0, w: 0.01 }).unwrap();
            let want = grid_bound_integral(0, sided, 0.0, 0.01, |_| 0.0);
            assert!((got - want).abs() < 1e-4, "{sided:?} order 0: {got} vs {want}");
            let got = null_bound_integral(0, sided, 0.15, BinKernel::Box { lo: 0.04, w: 0.01 }).unwrap();
            let want = grid_bound_integral(0, sided, 0.04, 0.05, |_| 0.0);
            assert!((got - want).abs() < 1e-4, "{sided:?} order 0 bin 5: {got} vs {want}");
            let got = null_bound_integral(1, sided, 0.15, BinKernel::Tent { lo: 0.0, w: 0.01 }).unwrap();
            let want = grid_bound_integral(1, sided, 0.0, 0.02, ln_tent);
            assert!((got - want).abs() < 1e-4, "{sided:?} order 1: {got} vs {want}");
        }
        assert!(null_bound_integral(0, Sided::One, 0.15, BinKernel::Box { lo: 0.1, w: 0.1 }).is_err());
    }

    #[test]
    fn kernels_have_expected_mass() {
        let w = 0.01;
        for (k, mass) in [
            (BinKernel::Box { lo: 0.02, w }, w),
            (BinKernel::Tent { lo: 0.02, w }, w * w),
            (BinKernel::Spline2 { lo: 0.02, w }, w * w * w),
        ] {
            let (a, b) = k.support();
            let n = 30_000;
            let d = (b - a) / n as f64;
            let s: f64 = (0..n).map(|i| k.ln_value(a + (i as f64 + 0.5) * d, 0.0).exp() * d).sum();
            assert!((s / mass - 1.0).abs() < 1e-6, "{k:?}: {s}");
        }
    }
}
