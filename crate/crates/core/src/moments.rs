//! Single-pass mean/variance accumulators in seven variants, plus block
//! merging for parallel reduction.
//!
//! The variants differ along two axes: how the center is tracked (raw sums,
//! shifted sums, or a running mean) and whether each running sum carries a
//! Kahan/Klein correction. Update rules are transcribed operation-for-
//! operation — the order of rounded operations is semantically significant
//! in floating point, and the unit tests pin each variant against a
//! hand-rolled IEEE trace.
//!
//! All variances are population variances (divisor n); a sample-variance
//! rescale is available at finalization. Counts live in `u64` and enter the
//! arithmetic via a single rounded conversion wherever the update rule
//! divides by `k`.
//!
//! Merging combines per-block states into a state equivalent to having
//! processed both blocks. Sum-based state merges by compensated pair
//! addition, mean-based state by pairwise mean/variance combination carried
//! in double-width arithmetic. Bit-equivalence with sequential processing is
//! not claimed — only oracle-relative accuracy, plus the observable fact
//! (pinned by the engine tests) that the compensated variants' means are
//! reproducible across merge orders and block sizes.

use thiserror::Error;

use crate::float::IeeeFloat;
use crate::sum::{two_sum, KahanSum, KleinSum};

#[derive(Debug, Error, PartialEq)]
pub enum MomentError {
    #[error("empty accumulator: mean/variance undefined at k = 0")]
    Empty,
    #[error("cannot merge accumulators with different algorithms ({left} vs {right})")]
    AlgorithmMismatch {
        left: MomentAlgorithm,
        right: MomentAlgorithm,
    },
}

/// The seven single-pass algorithm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentAlgorithm {
    /// Running `S += x`, `T += x²`; `V = T/n - M²`.
    Naive,
    /// Naive sums with Kahan-corrected accumulation of both S and T.
    NaiveKahan,
    /// First observation subtracted as a constant shift before the naive
    /// Kahan recursion; undoes the shift at finalization.
    ShiftedNaiveKahan,
    /// Running mean `M += (x-M)/k` and centered `T += (k-1)(x-M)²/k`,
    /// uncompensated.
    Ling,
    /// The running-mean recursion with Kahan corrections on M and T.
    LingKahan,
    /// Kahan-corrected raw sum for the mean, centered Kahan-corrected T
    /// for the variance (mean recomputed as S/k each step).
    ChanLewisKahan,
    /// Naive sums accumulated with the second-order Klein correction.
    NaiveKlein,
}

impl MomentAlgorithm {
    pub const ALL: [MomentAlgorithm; 7] = [
        MomentAlgorithm::Naive,
        MomentAlgorithm::NaiveKahan,
        MomentAlgorithm::ShiftedNaiveKahan,
        MomentAlgorithm::Ling,
        MomentAlgorithm::LingKahan,
        MomentAlgorithm::ChanLewisKahan,
        MomentAlgorithm::NaiveKlein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MomentAlgorithm::Naive => "naive",
            MomentAlgorithm::NaiveKahan => "naive-kahan",
            MomentAlgorithm::ShiftedNaiveKahan => "shifted-naive-kahan",
            MomentAlgorithm::Ling => "ling",
            MomentAlgorithm::LingKahan => "ling-kahan",
            MomentAlgorithm::ChanLewisKahan => "chan-lewis-kahan",
            MomentAlgorithm::NaiveKlein => "naive-klein",
        }
    }

    /// The variants whose mean (and anything derived from it) is expected to
    /// be bit-reproducible under reordered parallel reduction.
    pub fn has_order_stable_mean(self) -> bool {
        matches!(
            self,
            MomentAlgorithm::NaiveKahan
                | MomentAlgorithm::LingKahan
                | MomentAlgorithm::ChanLewisKahan
        )
    }

    /// Whether finalization reports the raw running sum.
    pub fn has_sum(self) -> bool {
        matches!(
            self,
            MomentAlgorithm::Naive
                | MomentAlgorithm::NaiveKahan
                | MomentAlgorithm::ChanLewisKahan
                | MomentAlgorithm::NaiveKlein
        )
    }
}

impl std::str::FromStr for MomentAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept both kebab-case and snake_case spellings.
        let norm = s.replace('_', "-");
        MomentAlgorithm::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| {
                format!(
                    "unknown algorithm '{s}' (expected one of: {})",
                    MomentAlgorithm::ALL.map(|a| a.name()).join(", ")
                )
            })
    }
}

impl std::fmt::Display for MomentAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Finalized statistics. `variance` uses divisor `n` (population); `sum` is
/// present only for the sum-based variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats<F: IeeeFloat> {
    pub n: u64,
    pub mean: F,
    pub variance: F,
    pub sum: Option<F>,
}

impl<F: IeeeFloat> SummaryStats<F> {
    /// Sample variance (divisor n-1), rescaled from the population value.
    pub fn sample_variance(&self) -> Option<F> {
        if self.n < 2 {
            return None;
        }
        Some(self.variance * F::from_u64(self.n) / F::from_u64(self.n - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State<F: IeeeFloat> {
    Naive {
        s: F,
        t: F,
    },
    NaiveKahan {
        s: KahanSum<F>,
        t: KahanSum<F>,
    },
    ShiftedNaiveKahan {
        shift: F,
        s: KahanSum<F>,
        t: KahanSum<F>,
    },
    Ling {
        m: F,
        t: F,
    },
    LingKahan {
        m: KahanSum<F>,
        t: KahanSum<F>,
    },
    ChanLewisKahan {
        m: F,
        s: KahanSum<F>,
        t: KahanSum<F>,
    },
    NaiveKlein {
        s: KleinSum<F>,
        t: KleinSum<F>,
    },
}

/// A single-pass mean/variance accumulator tagged with its algorithm.
///
/// Plain value semantics: accumulators move freely between threads, one
/// writer at a time. NaN input poisons the state; infinities propagate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAccumulator<F: IeeeFloat> {
    k: u64,
    state: State<F>,
}

impl<F: IeeeFloat> MomentAccumulator<F> {
    pub fn new(algorithm: MomentAlgorithm) -> Self {
        let state = match algorithm {
            MomentAlgorithm::Naive => State::Naive {
                s: F::zero(),
                t: F::zero(),
            },
            MomentAlgorithm::NaiveKahan => State::NaiveKahan {
                s: KahanSum::new(),
                t: KahanSum::new(),
            },
            MomentAlgorithm::ShiftedNaiveKahan => State::ShiftedNaiveKahan {
                shift: F::zero(),
                s: KahanSum::new(),
                t: KahanSum::new(),
            },
            MomentAlgorithm::Ling => State::Ling {
                m: F::zero(),
                t: F::zero(),
            },
            MomentAlgorithm::LingKahan => State::LingKahan {
                m: KahanSum::new(),
                t: KahanSum::new(),
            },
            MomentAlgorithm::ChanLewisKahan => State::ChanLewisKahan {
                m: F::zero(),
                s: KahanSum::new(),
                t: KahanSum::new(),
            },
            MomentAlgorithm::NaiveKlein => State::NaiveKlein {
                s: KleinSum::new(),
                t: KleinSum::new(),
            },
        };
        MomentAccumulator { k: 0, state }
    }

    pub fn algorithm(&self) -> MomentAlgorithm {
        match self.state {
            State::Naive { .. } => MomentAlgorithm::Naive,
            State::NaiveKahan { .. } => MomentAlgorithm::NaiveKahan,
            State::ShiftedNaiveKahan { .. } => MomentAlgorithm::ShiftedNaiveKahan,
            State::Ling { .. } => MomentAlgorithm::Ling,
            State::LingKahan { .. } => MomentAlgorithm::LingKahan,
            State::ChanLewisKahan { .. } => MomentAlgorithm::ChanLewisKahan,
            State::NaiveKlein { .. } => MomentAlgorithm::NaiveKlein,
        }
    }

    /// Number of observations folded in so far.
    pub fn count(&self) -> u64 {
        self.k
    }

    /// Folds one observation. Each arm is a literal transcription of its
    /// update rule; do not reorder operations.
    #[inline]
    pub fn update(&mut self, x: F) {
        self.k += 1;
        let k = self.k;
        match &mut self.state {
            State::Naive { s, t } => {
                *s += x;
                *t += x * x;
            }
            State::NaiveKahan { s, t } => {
                s.add(x);
                t.add(x * x);
            }
            State::ShiftedNaiveKahan { shift, s, t } => {
                if k == 1 {
                    *shift = x;
                }
                let d = x - *shift;
                s.add(d);
                t.add(d * d);
            }
            State::Ling { m, t } => {
                let d = x - *m;
                let z = (F::from_u64(k - 1) * (d * d)) / F::from_u64(k);
                *t += z;
                let z = d / F::from_u64(k);
                *m += z;
            }
            State::LingKahan { m, t } => {
                let d = x - m.value();
                let z = (F::from_u64(k - 1) * (d * d)) / F::from_u64(k);
                t.add(z);
                let z = d / F::from_u64(k);
                m.add(z);
            }
            State::ChanLewisKahan { m, s, t } => {
                // Variance increment uses the mean of the first k-1 samples,
                // so it is computed before the mean update.
                let d = x - *m;
                let z = (F::from_u64(k - 1) * (d * d)) / F::from_u64(k);
                t.add(z);
                s.add(x);
                *m = s.value() / F::from_u64(k);
            }
            State::NaiveKlein { s, t } => {
                s.add(x);
                t.add(x * x);
            }
        }
    }

    /// Closes the accumulator into summary statistics.
    pub fn finalize(&self) -> Result<SummaryStats<F>, MomentError> {
        if self.k == 0 {
            return Err(MomentError::Empty);
        }
        let n = F::from_u64(self.k);
        let (mean, variance, sum) = match &self.state {
            State::Naive { s, t } => {
                let m = *s / n;
                (m, *t / n - m * m, Some(*s))
            }
            State::NaiveKahan { s, t } => {
                let m = s.value() / n;
                (m, t.value() / n - m * m, Some(s.value()))
            }
            State::ShiftedNaiveKahan { shift, s, t } => {
                let m = s.value() / n + *shift;
                let d = m - *shift;
                (m, t.value() / n - d * d, None)
            }
            State::Ling { m, t } => (*m, *t / n, None),
            State::LingKahan { m, t } => (m.value(), t.value() / n, None),
            State::ChanLewisKahan { m, s, t } => (*m, t.value() / n, Some(s.value())),
            State::NaiveKlein { s, t } => {
                let sf = s.finalize();
                let m = sf / n;
                (m, t.finalize() / n - m * m, Some(sf))
            }
        };
        Ok(SummaryStats {
            n: self.k,
            mean,
            variance,
            sum,
        })
    }

    /// Combines two block states into one equivalent to having processed
    /// both blocks. Requires matching algorithms (precision already matches
    /// by type). An empty side is an identity element and returns the other
    /// side unchanged.
    pub fn merge(&self, other: &Self) -> Result<Self, MomentError> {
        if self.algorithm() != other.algorithm() {
            return Err(MomentError::AlgorithmMismatch {
                left: self.algorithm(),
                right: other.algorithm(),
            });
        }
        if other.k == 0 {
            return Ok(*self);
        }
        if self.k == 0 {
            return Ok(*other);
        }
        let k = self.k + other.k;
        let state = match (&self.state, &other.state) {
            (State::Naive { s: sa, t: ta }, State::Naive { s: sb, t: tb }) => State::Naive {
                s: *sa + *sb,
                t: *ta + *tb,
            },
            (State::NaiveKahan { s: sa, t: ta }, State::NaiveKahan { s: sb, t: tb }) => {
                State::NaiveKahan {
                    s: merge_kahan(*sa, *sb),
                    t: merge_kahan(*ta, *tb),
                }
            }
            (
                State::ShiftedNaiveKahan {
                    shift: ka,
                    s: sa,
                    t: ta,
                },
                State::ShiftedNaiveKahan {
                    shift: kb,
                    s: sb,
                    t: tb,
                },
            ) => {
                // Rebase the right block onto the left shift:
                // sum(x - Ka) = Sb + kb (Kb - Ka),
                // sum((x - Ka)^2) = Tb + 2 (Kb - Ka) Sb + kb (Kb - Ka)^2.
                let dk = *kb - *ka;
                let mut s = merge_kahan(*sa, *sb);
                let mut t = merge_kahan(*ta, *tb);
                if dk != F::zero() {
                    s.add(F::from_u64(other.k) * dk);
                    t.add((dk + dk) * sb.value());
                    t.add(F::from_u64(other.k) * (dk * dk));
                }
                State::ShiftedNaiveKahan {
                    shift: *ka,
                    s,
                    t,
                }
            }
            (State::Ling { m: ma, t: ta }, State::Ling { m: mb, t: tb }) => {
                let delta = *mb - *ma;
                let m = *ma + delta * (F::from_u64(other.k) / F::from_u64(k));
                let t = (*ta + *tb) + chan_cross_term(delta, self.k, other.k, k);
                State::Ling { m, t }
            }
            (State::LingKahan { m: ma, t: ta }, State::LingKahan { m: mb, t: tb }) => {
                // Mean combination runs in double-width arithmetic on the
                // (M, M*) pairs; plain arithmetic here would re-introduce a
                // merge-order dependence in the last bit.
                let pa = dd_from_kahan(*ma);
                let pb = dd_from_kahan(*mb);
                let delta = dd_add(pb, (-pa.0, -pa.1));
                let f = F::from_u64(other.k) / F::from_u64(k);
                let m = dd_to_kahan(dd_add(pa, dd_mul_scalar(delta, f)));
                let mut t = merge_kahan(*ta, *tb);
                t.add(chan_cross_term(mb.value() - ma.value(), self.k, other.k, k));
                State::LingKahan { m, t }
            }
            (
                State::ChanLewisKahan { m: ma, s: sa, t: ta },
                State::ChanLewisKahan { m: mb, s: sb, t: tb },
            ) => {
                let s = merge_kahan(*sa, *sb);
                let mut t = merge_kahan(*ta, *tb);
                t.add(chan_cross_term(*mb - *ma, self.k, other.k, k));
                State::ChanLewisKahan {
                    m: s.value() / F::from_u64(k),
                    s,
                    t,
                }
            }
            (State::NaiveKlein { s: sa, t: ta }, State::NaiveKlein { s: sb, t: tb }) => {
                State::NaiveKlein {
                    s: merge_klein(*sa, *sb),
                    t: merge_klein(*ta, *tb),
                }
            }
            _ => unreachable!("algorithm equality checked above"),
        };
        Ok(MomentAccumulator { k, state })
    }
}

/// delta^2 * ka * kb / k, the pairwise variance cross term.
#[inline]
fn chan_cross_term<F: IeeeFloat>(delta: F, ka: u64, kb: u64, k: u64) -> F {
    (delta * delta) * ((F::from_u64(ka) / F::from_u64(k)) * F::from_u64(kb))
}

/// Compensated addition of two Kahan pairs. The pair value is
/// `sum - correction`; the result is renormalized so the sum register is
/// the correctly-rounded pair value.
fn merge_kahan<F: IeeeFloat>(a: KahanSum<F>, b: KahanSum<F>) -> KahanSum<F> {
    if b.correction() == F::zero() {
        // Correction-free right side (e.g. a single-observation block)
        // merges as an ordinary Kahan update, which keeps a chain of
        // size-one merges literally identical to sequential accumulation.
        let mut merged = a;
        merged.add(b.value());
        return merged;
    }
    let (s, e) = two_sum(a.value(), b.value());
    let pending = (e - a.correction()) - b.correction();
    let (hi, lo) = two_sum(s, pending);
    KahanSum::from_parts(hi, -lo)
}

/// Compensated addition of two Klein triples (value = s + cs + ccs).
fn merge_klein<F: IeeeFloat>(a: KleinSum<F>, b: KleinSum<F>) -> KleinSum<F> {
    let (sa, csa, ccsa) = a.parts();
    let (sb, csb, ccsb) = b.parts();
    if csb == F::zero() && ccsb == F::zero() {
        let mut merged = a;
        merged.add(sb);
        return merged;
    }
    let (s, e1) = two_sum(sa, sb);
    let (cs, e2) = two_sum(csa, csb);
    let (cs, e3) = two_sum(cs, e1);
    let ccs = ((ccsa + ccsb) + e2) + e3;
    KleinSum::from_parts(s, cs, ccs)
}

// Minimal double-width helpers for the mean-pair combination. A pair
// (hi, lo) represents hi + lo with |lo| at most half an ulp of hi.

fn dd_from_kahan<F: IeeeFloat>(k: KahanSum<F>) -> (F, F) {
    two_sum(k.value(), -k.correction())
}

fn dd_to_kahan<F: IeeeFloat>(p: (F, F)) -> KahanSum<F> {
    KahanSum::from_parts(p.0, -p.1)
}

fn dd_add<F: IeeeFloat>(a: (F, F), b: (F, F)) -> (F, F) {
    let (s, e) = two_sum(a.0, b.0);
    two_sum(s, (e + a.1) + b.1)
}

fn dd_mul_scalar<F: IeeeFloat>(a: (F, F), f: F) -> (F, F) {
    let p = a.0 * f;
    let err = a.0.mul_add(f, -p);
    two_sum(p, a.1 * f + err)
}
