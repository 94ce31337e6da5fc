//! Precision abstraction over the two IEEE 754 binary formats.
//!
//! Every kernel in this crate is generic over [`IeeeFloat`] so the same
//! transcription of an update rule runs in pure binary32 or pure binary64
//! arithmetic. Rust guarantees that `f32`/`f64` operations round to
//! nearest-even at their own precision with no hidden extended-precision
//! intermediates, which is exactly the semantics the accumulators rely on.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_traits::Float;

/// An IEEE 754 binary floating-point format (`f32` or `f64`).
pub trait IeeeFloat:
    Float
    + Debug
    + Display
    + LowerExp
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    /// Explicit significand bits (23 for binary32, 52 for binary64).
    const MANTISSA_BITS: u32;
    /// Smallest normal binade exponent (-126 for binary32, -1022 for binary64).
    const EXP_MIN_NORMAL: i32;
    /// Largest finite binade exponent (127 for binary32, 1023 for binary64).
    const EXP_MAX_NORMAL: i32;
    /// Decimal digits needed to round-trip (9 for binary32, 17 for binary64).
    const ROUNDTRIP_DIGITS: usize;
    /// Short format name used in reports ("binary32" / "binary64").
    const FORMAT_NAME: &'static str;

    /// Nearest representable value of `x` (exact when `Self = f64`).
    fn from_f64(x: f64) -> Self;

    /// Exact widening; every `f32` is exactly representable as `f64`.
    fn to_f64(self) -> f64;

    /// Nearest representable value of the integer `n`.
    fn from_u64(n: u64) -> Self;

    /// Raw IEEE encoding, zero-extended to 64 bits.
    fn to_bits_u64(self) -> u64;

    fn from_bits_u64(bits: u64) -> Self;

    /// Maps 64 uniform random bits onto the open interval (0, 1).
    ///
    /// The top `MANTISSA_BITS + 1` bits form a fixed-point fraction; an
    /// all-zero draw is replaced by half the smallest step so 0.0 is never
    /// produced and 1.0 is unreachable by construction.
    fn unit_open_from_u64(bits: u64) -> Self;

    /// IEEE encoding rendered as an `0x`-prefixed hex string.
    fn bits_hex(self) -> String;
}

impl IeeeFloat for f64 {
    const MANTISSA_BITS: u32 = 52;
    const EXP_MIN_NORMAL: i32 = -1022;
    const EXP_MAX_NORMAL: i32 = 1023;
    const ROUNDTRIP_DIGITS: usize = 17;
    const FORMAT_NAME: &'static str = "binary64";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_u64(n: u64) -> Self {
        n as f64
    }

    #[inline]
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }

    #[inline]
    fn from_bits_u64(bits: u64) -> Self {
        f64::from_bits(bits)
    }

    #[inline]
    fn unit_open_from_u64(bits: u64) -> Self {
        let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u == 0.0 {
            1.0 / (1u64 << 54) as f64
        } else {
            u
        }
    }

    fn bits_hex(self) -> String {
        format!("0x{:016x}", self.to_bits())
    }
}

impl IeeeFloat for f32 {
    const MANTISSA_BITS: u32 = 23;
    const EXP_MIN_NORMAL: i32 = -126;
    const EXP_MAX_NORMAL: i32 = 127;
    const ROUNDTRIP_DIGITS: usize = 9;
    const FORMAT_NAME: &'static str = "binary32";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_u64(n: u64) -> Self {
        n as f32
    }

    #[inline]
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }

    #[inline]
    fn from_bits_u64(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }

    #[inline]
    fn unit_open_from_u64(bits: u64) -> Self {
        let u = (bits >> 40) as f32 * (1.0 / (1u32 << 24) as f32);
        if u == 0.0 {
            1.0 / (1u32 << 25) as f32
        } else {
            u
        }
    }

    fn bits_hex(self) -> String {
        format!("0x{:08x}", self.to_bits())
    }
}

/// Number of representable values between `a` and `b` (same sign required;
/// `u64::MAX` for NaN or sign mismatch). Used by tests asserting bit-level
/// agreement.
pub fn ulp_distance<F: IeeeFloat>(a: F, b: F) -> u64 {
    if a.is_nan() || b.is_nan() {
        return u64::MAX;
    }
    if a == b {
        return 0;
    }
    let (a_bits, b_bits) = (a.to_bits_u64() as i64, b.to_bits_u64() as i64);
    if (a_bits < 0) != (b_bits < 0) {
        return u64::MAX;
    }
    a_bits.abs_diff(b_bits)
}
