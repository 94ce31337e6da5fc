//! Error-free transformations and compensated running-sum kernels.
//!
//! Four accumulation strategies over a stream of floats, all generic over
//! [`IeeeFloat`]:
//!
//! * [`naive_sum`] — plain left-to-right addition.
//! * [`KahanSum`] — classic feedback compensation: the rounding error of
//!   each addition is subtracted from the next addend, so the correction is
//!   continuously re-injected into the stream.
//! * [`KleinSum`] — second-order compensation with two correction
//!   accumulators, folded into the sum once at finalization.
//! * [`KnuthSum`] — exact per-step error capture via [`two_sum`] with the
//!   errors accumulated in a side register applied once at finalization.
//!
//! The finalize-time corrections (Klein, Knuth) capture each step's rounding
//! error exactly but accumulate those errors naively, so they degrade on
//! adversarial orderings (e.g. ascending sorts of long streams) where the
//! error terms themselves carry systematic mass. Kahan's feedback form does
//! not, which the test corpus pins down.
//!
//! NaN inputs poison the running state (the sum becomes NaN); infinities
//! propagate per IEEE. Neither is trapped.

use crate::float::IeeeFloat;

/// Branch-free error-free addition: returns `(s, err)` with `s = fl(a + b)`
/// and `s + err == a + b` exactly, for any magnitude ordering of finite
/// inputs without intermediate overflow.
#[inline]
pub fn two_sum<F: IeeeFloat>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Magnitude-branched error-free addition (half the flops of [`two_sum`]
/// plus a compare): the larger-magnitude operand absorbs, the smaller
/// one's lost bits come back in `err`.
#[inline]
pub fn two_sum_branched<F: IeeeFloat>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let err = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, err)
}

/// Plain running sum: `state + x` rounded once.
#[inline]
pub fn naive_add<F: IeeeFloat>(state: F, x: F) -> F {
    state + x
}

/// Left-to-right uncompensated sum of a slice.
pub fn naive_sum<F: IeeeFloat>(xs: &[F]) -> F {
    let mut s = F::zero();
    for &x in xs {
        s = naive_add(s, x);
    }
    s
}

/// Kahan-compensated running sum.
///
/// State is `(S, S*)`; each update executes, in order and each rounded once:
/// `y = x - S*; t = S + y; S* = (t - S) - y; S = t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KahanSum<F: IeeeFloat> {
    sum: F,
    correction: F,
}

impl<F: IeeeFloat> KahanSum<F> {
    pub fn new() -> Self {
        KahanSum {
            sum: F::zero(),
            correction: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let y = x - self.correction;
        let t = self.sum + y;
        self.correction = (t - self.sum) - y;
        self.sum = t;
    }

    /// The running sum register `S`.
    #[inline]
    pub fn value(self) -> F {
        self.sum
    }

    /// The correction register `S*` (pending subtraction from the next addend).
    #[inline]
    pub fn correction(self) -> F {
        self.correction
    }

    /// Rebuilds a state from raw registers; used by block merging.
    #[inline]
    pub(crate) fn from_parts(sum: F, correction: F) -> Self {
        KahanSum { sum, correction }
    }

    pub fn fold(xs: &[F]) -> F {
        let mut acc = Self::new();
        for &x in xs {
            acc.add(x);
        }
        acc.value()
    }
}

/// Second-order compensated sum: one correction stream for the sum and a
/// second for the corrections themselves, both applied at finalization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KleinSum<F: IeeeFloat> {
    sum: F,
    cs: F,
    ccs: F,
}

impl<F: IeeeFloat> KleinSum<F> {
    pub fn new() -> Self {
        KleinSum {
            sum: F::zero(),
            cs: F::zero(),
            ccs: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let (t, c) = two_sum_branched(self.sum, x);
        let (cs, cc) = two_sum_branched(self.cs, c);
        self.sum = t;
        self.cs = cs;
        self.ccs += cc;
    }

    /// `(S + cs) + ccs`, evaluated in the working precision.
    #[inline]
    pub fn finalize(self) -> F {
        (self.sum + self.cs) + self.ccs
    }

    #[inline]
    pub(crate) fn parts(self) -> (F, F, F) {
        (self.sum, self.cs, self.ccs)
    }

    #[inline]
    pub(crate) fn from_parts(sum: F, cs: F, ccs: F) -> Self {
        KleinSum { sum, cs, ccs }
    }

    pub fn fold(xs: &[F]) -> F {
        let mut acc = Self::new();
        for &x in xs {
            acc.add(x);
        }
        acc.finalize()
    }
}

/// Two-sum accumulation: per step `(S, e) = two_sum(S, x); c += e`, with
/// `S + c` returned at finalization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KnuthSum<F: IeeeFloat> {
    sum: F,
    errors: F,
}

impl<F: IeeeFloat> KnuthSum<F> {
    pub fn new() -> Self {
        KnuthSum {
            sum: F::zero(),
            errors: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let (s, err) = two_sum(self.sum, x);
        self.sum = s;
        self.errors += err;
    }

    /// `S + c`, evaluated in the working precision.
    #[inline]
    pub fn finalize(self) -> F {
        self.sum + self.errors
    }

    pub fn fold(xs: &[F]) -> F {
        let mut acc = Self::new();
        for &x in xs {
            acc.add(x);
        }
        acc.finalize()
    }
}

/// The pure-sum kernel set, as selectable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumAlgorithm {
    Naive,
    Kahan,
    Klein,
    Knuth,
}

impl SumAlgorithm {
    pub const ALL: [SumAlgorithm; 4] = [
        SumAlgorithm::Naive,
        SumAlgorithm::Kahan,
        SumAlgorithm::Klein,
        SumAlgorithm::Knuth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SumAlgorithm::Naive => "naive",
            SumAlgorithm::Kahan => "kahan",
            SumAlgorithm::Klein => "klein",
            SumAlgorithm::Knuth => "knuth",
        }
    }

    /// Folds a slice with this kernel and returns the finalized sum.
    pub fn sum<F: IeeeFloat>(self, xs: &[F]) -> F {
        match self {
            SumAlgorithm::Naive => naive_sum(xs),
            SumAlgorithm::Kahan => KahanSum::fold(xs),
            SumAlgorithm::Klein => KleinSum::fold(xs),
            SumAlgorithm::Knuth => KnuthSum::fold(xs),
        }
    }
}

impl std::str::FromStr for SumAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(SumAlgorithm::Naive),
            "kahan" => Ok(SumAlgorithm::Kahan),
            "klein" => Ok(SumAlgorithm::Klein),
            "knuth" => Ok(SumAlgorithm::Knuth),
            other => Err(format!(
                "unknown sum algorithm '{other}' (expected naive|kahan|klein|knuth)"
            )),
        }
    }
}

impl std::fmt::Display for SumAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
