//! Standard normal distribution function, its inverse and truncated moments.
//!
//! The inverse uses Wichura's AS241 rational approximation (about 1e-16
//! relative accuracy) followed by one Halley step against `erfc`. `erfc` comes from `libm`, which
//! is accurate to about one ulp; a less careful `erfc` caps the quantile at the
//! same relative error.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Quantiles are clamped to `[-Z_CLAMP, Z_CLAMP]`.
pub const Z_CLAMP: f64 = 8.2;

pub fn pdf(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Φ(z).
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), accurate in the upper tail.
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

fn poly(coef: &[f64], r: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// AS241 for a lower-tail probability `p ∈ (0, 0.5]`; returns z ≤ 0.
fn as241_lower(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = (-p.ln()).sqrt();
    if r <= 5.0 {
        let r = r - 1.6;
        -poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        -poly(&E, r) / poly(&F, r)
    }
}

/// Lower-tail quantile with a Halley polish; `p ∈ (0, 0.5]`.
fn lower_quantile(p: f64) -> f64 {
    let x = as241_lower(p);
    if !x.is_finite() {
        return x;
    }
    let e = cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Φ⁻¹(p), unclamped (±∞ at the endpoints).
pub fn inv_cdf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    }
}

/// Quantile of the upper-tail probability `q = 1 − p`, without forming `1 − q`.
pub fn inv_sf(q: f64) -> f64 {
    -inv_cdf(q)
}

/// Quantile from a split representation: `lower` is the mass below the point
/// and `upper = 1 − lower` the mass above it; whichever is smaller is used so
/// both tails keep full relative precision. The result is clamped to
/// `[-Z_CLAMP, Z_CLAMP]`.
pub fn clamped_quantile(lower: f64, upper: f64) -> f64 {
    let z = if lower <= upper {
        inv_cdf(lower.max(0.0))
    } else {
        inv_sf(upper.max(0.0))
    };
    z.clamp(-Z_CLAMP, Z_CLAMP)
}

/// ∫_a^b z^j φ(z) dz for j = 0, 1, 2 (endpoints may be infinite).
pub fn partial_moments(a: f64, b: f64) -> [f64; 3] {
    let mass = if a >= 0.0 {
        sf(a) - sf(b)
    } else {
        cdf(b) - cdf(a)
    };
    let first = pdf(a) - pdf(b);
    let zp = |z: f64| if z.is_infinite() { 0.0 } else { z * pdf(z) };
    let second = mass - (zp(b) - zp(a));
    [mass, first, second]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_quantiles() {
        // High-precision reference values.
        assert_relative_eq!(
            inv_cdf(0.25),
            -0.674_489_750_196_081_7,
            max_relative = 1e-14
        );
        assert_relative_eq!(inv_cdf(0.975), 1.959_963_984_540_054, max_relative = 1e-14);
        assert_relative_eq!(inv_cdf(1e-10), -6.361_340_902_404_056, max_relative = 1e-13);
        assert_relative_eq!(inv_cdf(0.5), 0.0);
        assert_relative_eq!(inv_cdf(1e-300), -37.047_096_299_361_2, max_relative = 1e-12);
    }

    #[test]
    fn round_trip() {
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let z = inv_cdf(p);
            assert_relative_eq!(cdf(z), p, max_relative = 1e-13);
        }
        for e in 1..300 {
            let q = 10f64.powi(-e);
            assert_relative_eq!(sf(inv_sf(q)), q, max_relative = 1e-12);
        }
    }

    #[test]
    fn clamping() {
        assert_eq!(clamped_quantile(0.0, 1.0), -Z_CLAMP);
        assert_eq!(clamped_quantile(1.0, 0.0), Z_CLAMP);
        assert_eq!(clamped_quantile(1.0 - 1e-20, 1e-20), Z_CLAMP);
        assert!(clamped_quantile(0.3, 0.7) < 0.0);
    }

    #[test]
    fn moments_of_full_line() {
        let [m0, m1, m2] = partial_moments(f64::NEG_INFINITY, f64::INFINITY);
        assert_relative_eq!(m0, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(m2, 1.0, epsilon = 1e-15);
        let [h0, h1, h2] = partial_moments(0.0, f64::INFINITY);
        assert_relative_eq!(h0, 0.5, epsilon = 1e-15);
        assert_relative_eq!(h1, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(h2, 0.5, epsilon = 1e-15);
    }
}
