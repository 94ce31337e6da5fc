//! Order-robust streaming statistics and a reproducible parallel
//! Monte-Carlo engine.
//!
//! Parallel simulations that fold their results in running manner inherit a
//! hidden dependence on summation order from IEEE floating point: the same
//! samples reduced in a different order give a slightly different mean, and
//! finite-difference sensitivities amplify the difference. This crate
//! provides the pieces to demonstrate the effect and to remove it:
//!
//! * [`sum`] — error-free transformations and compensated running sums
//!   (Kahan feedback, second-order Klein, two-sum/Knuth accumulation).
//! * [`moments`] — seven single-pass mean/variance accumulator variants with
//!   block merging for parallel reduction.
//! * [`oracle`] — exact rational reference sums/means/variances and
//!   ulp-level error reports, for tests and experiment audits.
//! * [`rng`] — a counter-based generator with O(1) skip-ahead and a
//!   deterministic (path, coordinate) → stream-index map, so the set of
//!   random numbers consumed per path is independent of thread count.
//! * [`normal`] — high-accuracy inverse normal CDF (one uniform per
//!   variate, keeping stream indexing exact).
//! * [`engine`] — block-based parallel Monte-Carlo pricer for binary
//!   options with common-random-number bump revaluation and an explicit,
//!   seedable reduction order.

pub mod engine;
pub mod float;
pub mod moments;
pub mod normal;
pub mod oracle;
pub mod rng;
pub mod sum;

pub use engine::{
    gamma_fd, BlockResult, EngineOutput, GammaEstimate, PayoffKind, PayoffSpec, ReductionOrder,
    RunRecord, SimulationPlan,
};
pub use float::{ulp_distance, IeeeFloat};
pub use moments::{MomentAccumulator, MomentAlgorithm, MomentError, SummaryStats};
pub use normal::normal_inverse_cdf;
pub use oracle::{exact_mean_variance, exact_sum, error_report, ErrorReport, ExactNumber, OracleError};
pub use rng::{uniform_at, CounterRng, PathStream, StreamIndex};
pub use sum::{naive_sum, two_sum, KahanSum, KleinSum, KnuthSum, SumAlgorithm};
