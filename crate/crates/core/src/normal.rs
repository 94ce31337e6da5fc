//! High-accuracy inverse CDF of the standard normal distribution.
//!
//! Rational minimax approximations over three regions (central, tail, far
//! tail), good to roughly a unit of double precision over the full open
//! interval — far tighter than the 1e-9 absolute accuracy the simulation
//! contract asks for. One uniform maps to one normal variate, so stream
//! index arithmetic stays exact; rejection-style transforms would consume a
//! data-dependent number of uniforms and break the per-path index
//! assignment.

// Coefficients and reference values are transcribed verbatim at full
// published precision.
#![allow(clippy::excessive_precision)]

/// Central region |u - 0.5| <= 0.425: z = q * A(r)/B(r), r = 0.180625 - q².
const A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];

/// Tail region 1.6 < r <= 5 (i.e. min(u, 1-u) down to ~1.4e-11),
/// r = sqrt(-ln(min(u, 1-u))).
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];

/// Far-tail region r > 5 (min(u, 1-u) below ~1.4e-11).
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_502_3e-2,
    7.868_691_311_456_132_947_9e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn rational(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
    let mut p = num[7];
    let mut q = den[7];
    for i in (0..7).rev() {
        p = p * r + num[i];
        q = q * r + den[i];
    }
    p / q
}

/// Inverse standard normal CDF Φ⁻¹(u).
///
/// # Panics
/// Panics unless `0 < u < 1`; NaN and the endpoints are precondition
/// violations, not values with meaningful quantiles here.
pub fn normal_inverse_cdf(u: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0, "normal_inverse_cdf requires 0 < u < 1, got {u}");
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * rational(&A, &B, r);
    }
    let tail = if q < 0.0 { u } else { 1.0 - u };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        rational(&C, &D, r - 1.6)
    } else {
        rational(&E, &F, r - 5.0)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry_at_half() {
        assert_eq!(normal_inverse_cdf(0.5), 0.0);
    }

    /// Reference quantiles computed with 40-digit arithmetic at the exact
    /// binary64 value of each `u` literal (independent multiprecision
    /// implementation; frozen).
    const REFERENCE: [(f64, f64); 19] = [
        (1e-15, -7.94134532617099677133),
        (1e-12, -7.03448382530113193261),
        (1e-9, -5.99780701500768686145),
        (1e-6, -4.75342430882289895734),
        (1e-4, -3.71901648545568055229),
        (0.0025, -2.80703376834380411052),
        (0.02425, -1.9729610513118848376),
        (0.025, -1.95996398454005421178),
        (0.1, -1.28155156554460043533),
        (0.31, -0.495850347347453332861),
        (0.5, 0.0),
        (0.69, 0.495850347347453175513),
        (0.9, 1.28155156554460059349),
        (0.975, 1.9599639845400538556),
        (0.97575, 1.9729610513118849594),
        (0.9975, 2.80703376834381098379),
        (0.9999, 3.71901648545570838672),
        (0.999999, 4.75342430881708776569),
        (0.999999999, 5.99780701960163742642),
    ];

    #[test]
    fn matches_multiprecision_reference() {
        for &(u, expected) in &REFERENCE {
            let z = normal_inverse_cdf(u);
            assert!(
                (z - expected).abs() <= 1e-12,
                "ppf({u}) = {z:.17e}, want {expected:.17e}"
            );
        }
        // Contract-level bound over the stated domain.
        for &(u, expected) in &REFERENCE {
            assert!((normal_inverse_cdf(u) - expected).abs() <= 1e-9);
        }
        // Smallest uniform the generator can produce.
        let z = normal_inverse_cdf(1.0 / (1u64 << 54) as f64);
        assert!((z - -8.29236107581359553823).abs() <= 1e-12);
    }

    #[test]
    fn antisymmetry() {
        for i in 1..500 {
            let u = i as f64 / 500.0 * 0.998 + 0.001;
            let a = normal_inverse_cdf(u);
            let b = normal_inverse_cdf(1.0 - u);
            assert!((a + b).abs() <= 1e-9, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn monotone_on_a_grid() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let z = normal_inverse_cdf(i as f64 / 10_000.0);
            assert!(z >= prev);
            prev = z;
        }
    }

    #[test]
    #[should_panic(expected = "requires 0 < u < 1")]
    fn rejects_zero() {
        normal_inverse_cdf(0.0);
    }

    #[test]
    #[should_panic(expected = "requires 0 < u < 1")]
    fn rejects_one() {
        normal_inverse_cdf(1.0);
    }
}
