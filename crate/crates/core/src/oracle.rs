//! Exact reference arithmetic for sums, means, and variances.
//!
//! Every finite float is a dyadic rational, so sums and sums of squares of
//! a float stream have exact rational values. [`exact_sum`] and
//! [`exact_mean_variance`] compute those values exactly and expose
//! correctly-rounded conversions back to either working precision, which is
//! what the error reports and bit-identity audits compare against.
//!
//! Internally the fold runs on a fixed-point signed-limb accumulator (one
//! shifted-mantissa add per sample, no rational normalization in the loop),
//! which keeps the oracle usable on 5e7-sample corpora. The accumulator's
//! exactness is itself pinned against direct rational folds in the tests.
//!
//! Not intended for hot paths: this module trades speed for being
//! trustworthy, and the simulation engine never calls into it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::float::IeeeFloat;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("non-finite input at position {0}")]
    NonFinite(usize),
    #[error("empty input: mean/variance undefined")]
    Empty,
}

/// An exact arbitrary-precision rational. Construction from any finite
/// float is lossless.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExactNumber(BigRational);

impl ExactNumber {
    pub fn zero() -> Self {
        ExactNumber(BigRational::zero())
    }

    pub fn from_float<F: IeeeFloat>(x: F) -> Self {
        assert!(x.is_finite(), "ExactNumber requires a finite float");
        let (mantissa, exponent, sign) = x.integer_decode();
        let mut num = BigInt::from(mantissa);
        if sign < 0 {
            num = -num;
        }
        let ratio = if exponent >= 0 {
            BigRational::from_integer(num << exponent as usize)
        } else {
            BigRational::new(num, BigInt::from(1) << (-exponent) as usize)
        };
        ExactNumber(ratio)
    }

    pub fn from_u64(n: u64) -> Self {
        ExactNumber(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        ExactNumber(self.0.abs())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        ExactNumber(&self.0 + &rhs.0)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        ExactNumber(&self.0 - &rhs.0)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        ExactNumber(&self.0 * &rhs.0)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        ExactNumber(&self.0 / &rhs.0)
    }

    pub fn div_u64(&self, n: u64) -> Self {
        ExactNumber(&self.0 / BigRational::from_integer(BigInt::from(n)))
    }

    /// Correctly-rounded (nearest, ties to even) conversion to precision `F`.
    pub fn round_to<F: IeeeFloat>(&self) -> F {
        if self.0.is_zero() {
            return F::zero();
        }
        let negative = self.0.is_negative();
        let a = self.0.abs();
        let e = floor_log2(&a);
        let mb = i64::from(F::MANTISSA_BITS);
        // Grid spacing: normal numbers use the binade's ulp, the subnormal
        // range has a fixed one.
        let mut spacing = if e < i64::from(F::EXP_MIN_NORMAL) {
            i64::from(F::EXP_MIN_NORMAL) - mb
        } else {
            e - mb
        };
        let mut m = round_div_half_even(scale_num(&a, spacing), scale_den(&a, spacing));
        // Rounding can push the significand to the next binade.
        if m.bits() as i64 > mb + 1 {
            m >>= 1;
            spacing += 1;
        }
        let top_exp = spacing + m.bits() as i64 - 1;
        if top_exp > i64::from(F::EXP_MAX_NORMAL) {
            let inf = F::infinity();
            return if negative { -inf } else { inf };
        }
        let mag = F::from_u64(m.to_u64().expect("significand fits in u64")) * pow2::<F>(spacing);
        if negative {
            -mag
        } else {
            mag
        }
    }

    /// Shorthand for `round_to::<f64>`.
    pub fn to_f64_nearest(&self) -> f64 {
        self.round_to::<f64>()
    }
}

impl<F: IeeeFloat> From<F> for ExactNumber {
    fn from(x: F) -> Self {
        ExactNumber::from_float(x)
    }
}

impl std::fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// floor(log2(a)) for positive rational `a`.
fn floor_log2(a: &BigRational) -> i64 {
    let (n, d) = (a.numer().magnitude(), a.denom().magnitude());
    let mut e = n.bits() as i64 - d.bits() as i64;
    // Candidate is within one; fix up by exact comparison 2^e <= n/d < 2^(e+1).
    while !pow2_le(d, n, e) {
        e -= 1;
    }
    while pow2_le(d, n, e + 1) {
        e += 1;
    }
    e
}

/// Exact test `2^e <= n/d`, i.e. `d << e <= n` (for either sign of e).
fn pow2_le(d: &num_bigint::BigUint, n: &num_bigint::BigUint, e: i64) -> bool {
    if e >= 0 {
        (d << e as usize) <= *n
    } else {
        *d <= (n << (-e) as usize)
    }
}

/// Numerator of `a / 2^spacing` as an integer-division problem.
fn scale_num(a: &BigRational, spacing: i64) -> BigInt {
    let n = a.numer().clone();
    if spacing <= 0 {
        n << (-spacing) as usize
    } else {
        n
    }
}

fn scale_den(a: &BigRational, spacing: i64) -> BigInt {
    let d = a.denom().clone();
    if spacing > 0 {
        d << spacing as usize
    } else {
        d
    }
}

/// num and den are both positive here.
fn round_div_half_even(num: BigInt, den: BigInt) -> BigInt {
    let q = &num / &den;
    let r = num - &q * &den;
    let twice = r << 1;
    if twice > den || (twice == den && q.bit(0)) {
        q + 1
    } else {
        q
    }
}

/// Exact power of two at precision `F`; `k` stays within `F`'s representable
/// range by construction of the callers.
fn pow2<F: IeeeFloat>(k: i64) -> F {
    // Split so the intermediate stays normal even for subnormal targets.
    if k >= -1000 {
        F::from_f64(2f64.powi(k as i32))
    } else {
        F::from_f64(2f64.powi(-1000) * 2f64.powi((k + 1000) as i32))
    }
}

const LIMB_BITS: u64 = 64;
/// 2^-BIAS_BITS is below the square of the smallest subnormal of either format.
const BIAS_BITS: u64 = 2176;
const NUM_LIMBS: usize = 70;

/// Fixed-point exact accumulator: value = (sum of limbs[i] * 2^(64 i)) * 2^-BIAS.
///
/// Limbs are signed i128 partial sums, so up to 2^63 shifted-mantissa adds
/// can be folded before any carry propagation is needed; carries are
/// resolved once at extraction.
#[derive(Clone)]
struct DyadicAccumulator {
    limbs: Vec<i128>,
}

impl DyadicAccumulator {
    fn new() -> Self {
        DyadicAccumulator {
            limbs: vec![0i128; NUM_LIMBS],
        }
    }

    #[inline]
    fn add_word(&mut self, bit_pos: u64, word: u64, negative: bool) {
        if word == 0 {
            return;
        }
        let limb = (bit_pos / LIMB_BITS) as usize;
        let off = bit_pos % LIMB_BITS;
        let wide = (word as u128) << off;
        let (lo, hi) = (wide as u64 as i128, (wide >> 64) as i128);
        if negative {
            self.limbs[limb] -= lo;
            self.limbs[limb + 1] -= hi;
        } else {
            self.limbs[limb] += lo;
            self.limbs[limb + 1] += hi;
        }
    }

    /// Adds `sign * mantissa * 2^exponent` exactly.
    #[inline]
    fn add_scaled(&mut self, mantissa: u64, exponent: i64, negative: bool) {
        let pos = exponent + BIAS_BITS as i64;
        debug_assert!(pos >= 0);
        self.add_word(pos as u64, mantissa, negative);
    }

    /// Adds `(mantissa * 2^exponent)^2` exactly (always nonnegative).
    #[inline]
    fn add_scaled_square(&mut self, mantissa: u64, exponent: i64) {
        let sq = (mantissa as u128) * (mantissa as u128);
        let pos = 2 * exponent + BIAS_BITS as i64;
        debug_assert!(pos >= 0);
        self.add_word(pos as u64, sq as u64, false);
        self.add_word(pos as u64 + 64, (sq >> 64) as u64, false);
    }

    fn extract(&self) -> BigRational {
        let mut total = BigInt::zero();
        for &limb in self.limbs.iter().rev() {
            total = (total << LIMB_BITS as usize) + BigInt::from(limb);
        }
        if total.is_zero() {
            return BigRational::zero();
        }
        BigRational::new(total, BigInt::from(1) << BIAS_BITS as usize)
    }
}

fn decode<F: IeeeFloat>(x: F) -> (u64, i64, bool) {
    let (mantissa, exponent, sign) = x.integer_decode();
    (mantissa, i64::from(exponent), sign < 0)
}

/// Exact sum of a float stream. Errors on any non-finite element.
pub fn exact_sum<F: IeeeFloat>(xs: &[F]) -> Result<ExactNumber, OracleError> {
    let mut acc = DyadicAccumulator::new();
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(OracleError::NonFinite(i));
        }
        let (m, e, neg) = decode(x);
        if m != 0 {
            acc.add_scaled(m, e, neg);
        }
    }
    Ok(ExactNumber(acc.extract()))
}

/// Exact population mean and variance: `mean = Σx/n`,
/// `variance = Σx²/n − mean²`, both as rationals. Errors on empty input or
/// non-finite elements.
pub fn exact_mean_variance<F: IeeeFloat>(
    xs: &[F],
) -> Result<(ExactNumber, ExactNumber), OracleError> {
    if xs.is_empty() {
        return Err(OracleError::Empty);
    }
    let mut sums = DyadicAccumulator::new();
    let mut squares = DyadicAccumulator::new();
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(OracleError::NonFinite(i));
        }
        let (m, e, neg) = decode(x);
        if m != 0 {
            sums.add_scaled(m, e, neg);
            squares.add_scaled_square(m, e);
        }
    }
    let n = BigRational::from_integer(BigInt::from(xs.len() as u64));
    let mean = sums.extract() / &n;
    let variance = squares.extract() / &n - &mean * &mean;
    Ok((ExactNumber(mean), ExactNumber(variance)))
}

/// Distance of a computed value from its exact reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// |approx − exact|.
    pub absolute: f64,
    /// absolute / |exact|; equals `absolute` when exact = 0.
    pub relative: f64,
    /// |approx − exact| in units of the exact value's ulp at precision `P`
    /// (one ulp = the spacing of `P`-floats in the exact value's binade).
    pub ulps: f64,
}

/// Compares `approx` (at precision `F`) against an exact reference.
pub fn error_report<F: IeeeFloat>(approx: F, exact: &ExactNumber) -> ErrorReport {
    assert!(approx.is_finite(), "error_report requires a finite approx");
    let diff = ExactNumber::from_float(approx).sub(exact).abs();
    let absolute = diff.to_f64_nearest();
    if exact.is_zero() {
        return ErrorReport {
            absolute,
            relative: absolute,
            ulps: if absolute == 0.0 { 0.0 } else { f64::INFINITY },
        };
    }
    let relative = diff.div(&exact.abs()).to_f64_nearest();
    let e = floor_log2(&exact.as_ratio().abs());
    let ulp_exp = e - i64::from(F::MANTISSA_BITS);
    // ulps = |diff| * 2^-ulp_exp, computed exactly then rounded once.
    let scaled = if ulp_exp >= 0 {
        ExactNumber(diff.as_ratio() / BigRational::from_integer(BigInt::from(1) << ulp_exp as usize))
    } else {
        ExactNumber(diff.as_ratio() * BigRational::from_integer(BigInt::from(1) << (-ulp_exp) as usize))
    };
    ErrorReport {
        absolute,
        relative,
        ulps: scaled.to_f64_nearest(),
    }
}
