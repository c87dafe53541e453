//! Bivariate normal CDF by the Drezner-Wesolowsky method with Genz's
//! refinements for high correlation.
#![allow(clippy::excessive_precision)]

use libm::{asin, exp, sin, sqrt};

use super::normal::{norm_cdf, SQRT_2PI};
use crate::error::{domain, Result};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

// (weight, abscissa) on [-1, 1]; only the negative half is stored.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

/// `P(X > h, Y > k)` for correlation `r ∈ [0, 1)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let quad: &[(f64, f64)] = if r < 0.3 {
        &GL6
    } else if r < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let hk = h * k;
    if r <= 0.925 {
        let mut bvn = 0.0;
        if r > 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = 0.5 * asin(r);
            for &(w, x) in quad {
                for s in [-1.0, 1.0] {
                    let sn = sin(asr * (s * x + 1.0));
                    bvn += w * exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn *= asr / TWO_PI;
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }
    let a2 = (1.0 - r) * (1.0 + r);
    let mut a = sqrt(a2);
    let b2 = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let mut bvn = 0.0;
    let asr = -0.5 * (b2 / a2 + hk);
    if asr > -100.0 {
        bvn = a
            * exp(asr)
            * (1.0 - c * (b2 - a2) * (1.0 - d * b2 / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
    }
    if -hk < 100.0 {
        let b = (h - k).abs();
        bvn -= exp(-0.5 * hk)
            * SQRT_2PI
            * norm_cdf(-b / a)
            * b
            * (1.0 - c * b2 * (1.0 - d * b2 / 5.0) / 3.0);
    }
    a *= 0.5;
    for &(w, x) in quad {
        for s in [-1.0, 1.0] {
            let xs = a * (s * x + 1.0);
            let xs2 = xs * xs;
            let rs = sqrt(1.0 - xs2);
            let asr = -0.5 * (b2 / xs2 + hk);
            if asr > -100.0 {
                bvn += a
                    * w
                    * exp(asr)
                    * (exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                        - (1.0 + c * xs2 * (1.0 + d * xs2)));
            }
        }
    }
    -bvn / TWO_PI + norm_cdf(-h.max(k))
}

/// `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `rho`.
/// Infinite limits are allowed.
pub fn bvn_cdf(x: f64, y: f64, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(domain("correlation", rho));
    }
    if x.is_nan() || y.is_nan() {
        return Err(domain("bivariate normal limit", f64::NAN));
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(norm_cdf(y));
    }
    if y == f64::INFINITY {
        return Ok(norm_cdf(x));
    }
    let p = if rho == 1.0 {
        norm_cdf(x.min(y))
    } else if rho == -1.0 {
        (norm_cdf(x) + norm_cdf(y) - 1.0).max(0.0)
    } else if rho >= 0.0 {
        upper_orthant(-x, -y, rho)
    } else {
        // P(X≤x, Y≤y; ρ) = Φ(x) − P(X≤x, Y≤−y; −ρ)
        norm_cdf(x) - upper_orthant(-x, y, -rho)
    };
    Ok(p.clamp(0.0, 1.0))
}
