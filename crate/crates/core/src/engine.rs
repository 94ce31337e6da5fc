//! Reproducible parallel Monte-Carlo pricer.
//!
//! Paths are grouped into fixed blocks; each block is a pure function of
//! `(plan, payoff, block index)` — its random numbers come from the
//! counter-based stream at indices owned by its paths, so any worker can
//! evaluate any block at any time and produce identical bits. The only
//! ordering freedom in a run is the order in which block statistics are
//! merged, and that order is an explicit parameter rather than an accident
//! of scheduling: `Natural` merges blocks in index order, `ByCompletion`
//! merges in a seeded pseudo-random order that stands in for the operating
//! system's completion timing, making the nondeterminism experiment itself
//! reproducible.
//!
//! Pricing is single-factor Black-Scholes with zero drift; each path's
//! normal draw is reused for all three spot bumps (common random numbers),
//! so the finite-difference Gamma subtracts correlated noise.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::IeeeFloat;
use crate::moments::{MomentAccumulator, MomentAlgorithm, SummaryStats};
use crate::normal::normal_inverse_cdf;
use crate::rng::{shuffled_indices, PathStream};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),
}

/// Binary option flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    /// Pays `quantity * S(T)` if `S(T) >= strike`, else nothing.
    AssetOrNothing,
    /// Pays `quantity` if `S(T) >= strike`, else the rebate.
    CashOrNothing,
}

impl PayoffKind {
    pub fn name(self) -> &'static str {
        match self {
            PayoffKind::AssetOrNothing => "asset-or-nothing",
            PayoffKind::CashOrNothing => "cash-or-nothing",
        }
    }
}

/// Contract and model parameters for one pricing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    /// Strike (written K elsewhere; distinct from any summation shift).
    pub strike: f64,
    /// Maturity in years.
    pub maturity: f64,
    /// Contract quantity q.
    pub quantity: f64,
    /// Cash paid below the strike (CashOrNothing only).
    pub rebate: f64,
    /// Initial asset price S0.
    pub spot: f64,
    /// Volatility per sqrt(year).
    pub sigma: f64,
}

impl PayoffSpec {
    // Negated comparisons so NaN parameters fail validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::InvalidPayoff(msg));
        if !(self.strike > 0.0) {
            return fail(format!("strike must be > 0, got {}", self.strike));
        }
        if !(self.maturity > 0.0) {
            return fail(format!("maturity must be > 0, got {}", self.maturity));
        }
        if !(self.quantity >= 0.0) {
            return fail(format!("quantity must be >= 0, got {}", self.quantity));
        }
        if !(self.rebate >= 0.0) {
            return fail(format!("rebate must be >= 0, got {}", self.rebate));
        }
        if !(self.spot > 0.0) {
            return fail(format!("spot must be > 0, got {}", self.spot));
        }
        if !(self.sigma >= 0.0) {
            return fail(format!("sigma must be >= 0, got {}", self.sigma));
        }
        Ok(())
    }
}

/// Terminal price of driftless geometric Brownian motion:
/// `S(T) = S0 * exp(-sigma^2 T / 2 + sigma sqrt(T) z)`.
#[inline]
pub fn gbm_terminal(s0: f64, sigma: f64, maturity: f64, z: f64) -> f64 {
    s0 * (-sigma * sigma * maturity / 2.0 + sigma * maturity.sqrt() * z).exp()
}

/// Payoff at expiry; the at-strike boundary pays (the indicator is >=).
#[inline]
pub fn payoff(spec: &PayoffSpec, s_terminal: f64) -> f64 {
    match spec.kind {
        PayoffKind::AssetOrNothing => {
            if s_terminal >= spec.strike {
                spec.quantity * s_terminal
            } else {
                0.0
            }
        }
        PayoffKind::CashOrNothing => {
            if s_terminal >= spec.strike {
                spec.quantity
            } else {
                spec.rebate
            }
        }
    }
}

/// How many paths, how they are cut into blocks, and how the stream is keyed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    /// Path count N.
    pub paths: u64,
    /// Dimensions consumed per time step (d).
    pub dims_per_step: u64,
    /// Time steps per path (M).
    pub steps: u64,
    /// Paths per work unit.
    pub block_size: u64,
    /// Concurrent workers; affects timing only, never values.
    pub workers: usize,
    /// Generator key.
    pub seed: u64,
    /// Global stream-index offset, for giving independent runs disjoint
    /// counter ranges under one key.
    pub stream_offset: u64,
    /// Accumulator variant used for the three per-block statistics.
    pub algorithm: MomentAlgorithm,
    /// Relative spot bump for the finite-difference Gamma; 0 disables
    /// bumping (all three levels then see identical inputs).
    pub epsilon: f64,
}

pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 14;

impl SimulationPlan {
    pub fn new(paths: u64, seed: u64, algorithm: MomentAlgorithm) -> Self {
        SimulationPlan {
            paths,
            dims_per_step: 1,
            steps: 1,
            block_size: DEFAULT_BLOCK_SIZE,
            workers: 1,
            seed,
            stream_offset: 0,
            algorithm,
            epsilon: 0.01,
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::InvalidPlan(msg));
        if self.paths == 0 || self.dims_per_step == 0 || self.steps == 0 {
            return fail(format!(
                "paths/dims/steps must all be >= 1, got {}/{}/{}",
                self.paths, self.dims_per_step, self.steps
            ));
        }
        if self.block_size == 0 {
            return fail("block size must be >= 1".into());
        }
        if self.workers == 0 {
            return fail("worker count must be >= 1".into());
        }
        if !(self.epsilon >= 0.0) {
            return fail(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        Ok(())
    }

    /// Uniforms consumed per path (M * d).
    pub fn dims_per_path(&self) -> u64 {
        self.steps * self.dims_per_step
    }

    pub fn num_blocks(&self) -> u64 {
        self.paths.div_ceil(self.block_size)
    }

    /// 1-based inclusive path range covered by 0-based block `b`.
    pub fn block_paths(&self, b: u64) -> std::ops::RangeInclusive<u64> {
        let first = b * self.block_size + 1;
        let last = ((b + 1) * self.block_size).min(self.paths);
        first..=last
    }
}

/// Bump levels in ascending order: down, mid, up.
pub const BUMP_LEVELS: usize = 3;

/// Per-block statistics for the three bump levels. A deterministic function
/// of `(plan, spec, block_index)` alone.
#[derive(Debug, Clone, Copy)]
pub struct BlockResult<F: IeeeFloat> {
    pub block_index: u64,
    /// Accumulators indexed down(0) / mid(1) / up(2).
    pub accumulators: [MomentAccumulator<F>; BUMP_LEVELS],
}

/// Spot-independent terminal growth factor for one path (the exponential
/// carries all the randomness, so the three bumped spots reuse it).
#[inline]
fn terminal_growth(plan: &SimulationPlan, spec: &PayoffSpec, path: u64) -> f64 {
    let mut stream = PathStream::for_path(
        plan.seed,
        path,
        plan.dims_per_step,
        plan.steps,
        plan.stream_offset,
    );
    let mut z_total = 0.0f64;
    for _step in 0..plan.steps {
        for dim in 0..plan.dims_per_step {
            let u = stream.next_uniform();
            // Single-factor model: the first coordinate of each step drives
            // the Brownian increment, the rest of the step's slots are
            // reserved by the stream layout.
            if dim == 0 {
                z_total += normal_inverse_cdf(u);
            }
        }
    }
    let z_eff = z_total / (plan.steps as f64).sqrt();
    gbm_terminal(1.0, spec.sigma, spec.maturity, z_eff)
}

/// Evaluates one block: every path in ascending order, each folding its
/// three bumped payoffs into the block's three accumulators.
pub fn run_block<F: IeeeFloat>(
    plan: &SimulationPlan,
    spec: &PayoffSpec,
    block_index: u64,
) -> BlockResult<F> {
    let mut accumulators = [MomentAccumulator::<F>::new(plan.algorithm); BUMP_LEVELS];
    let bumps = [-plan.epsilon, 0.0, plan.epsilon];
    for path in plan.block_paths(block_index) {
        let growth = terminal_growth(plan, spec, path);
        for (acc, bump) in accumulators.iter_mut().zip(bumps) {
            let s_terminal = (spec.spot * (1.0 + bump)) * growth;
            acc.update(F::from_f64(payoff(spec, s_terminal)));
        }
    }
    BlockResult {
        block_index,
        accumulators,
    }
}

/// Evaluates all blocks on `plan.workers` threads pulling block indices
/// from a shared queue. Results land in their index slot, so scheduling
/// cannot influence anything downstream.
pub fn compute_blocks<F: IeeeFloat>(
    plan: &SimulationPlan,
    spec: &PayoffSpec,
) -> Vec<BlockResult<F>> {
    let num_blocks = plan.num_blocks();
    let slots: Vec<OnceLock<BlockResult<F>>> =
        (0..num_blocks).map(|_| OnceLock::new()).collect();
    let next = AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..plan.workers.min(num_blocks as usize) {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::Relaxed);
                if b >= num_blocks {
                    break;
                }
                let result = run_block::<F>(plan, spec, b);
                assert!(
                    slots[b as usize].set(result).is_ok(),
                    "block {b} computed twice"
                );
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("all blocks computed"))
        .collect()
}

/// The reduction step's merge order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionOrder {
    /// Ascending block index (the array order of the block-statistics table).
    Natural,
    /// Deterministic pseudo-random order derived from a seed, simulating the
    /// order in which an OS scheduler completes batches.
    ByCompletion(u64),
}

impl ReductionOrder {
    pub fn name(&self) -> &'static str {
        match self {
            ReductionOrder::Natural => "natural",
            ReductionOrder::ByCompletion(_) => "by-completion",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ReductionOrder::Natural => None,
            ReductionOrder::ByCompletion(s) => Some(*s),
        }
    }
}

/// Merges per-block accumulators in the requested order.
pub fn reduce_blocks<F: IeeeFloat>(
    algorithm: MomentAlgorithm,
    blocks: &[BlockResult<F>],
    order: ReductionOrder,
) -> [MomentAccumulator<F>; BUMP_LEVELS] {
    let sequence: Vec<usize> = match order {
        ReductionOrder::Natural => (0..blocks.len()).collect(),
        ReductionOrder::ByCompletion(seed) => shuffled_indices(seed, blocks.len()),
    };
    let mut merged = [MomentAccumulator::<F>::new(algorithm); BUMP_LEVELS];
    for &b in &sequence {
        for (acc, block_acc) in merged.iter_mut().zip(&blocks[b].accumulators) {
            *acc = acc
                .merge(block_acc)
                .expect("block accumulators share the plan's algorithm");
        }
    }
    merged
}

/// Central second difference of the bumped means:
/// `(v_up - 2 v_mid + v_down) / (S0^2 epsilon^2)`, one binary64 expression.
pub fn gamma_fd(v_up: f64, v_mid: f64, v_down: f64, s0: f64, epsilon: f64) -> GammaEstimate {
    assert!(epsilon > 0.0, "gamma_fd requires epsilon > 0");
    GammaEstimate {
        v_up,
        v_mid,
        v_down,
        gamma: (v_up - 2.0 * v_mid + v_down) / (s0 * s0 * epsilon * epsilon),
        epsilon,
    }
}

/// Finite-difference sensitivity estimate with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub v_up: f64,
    pub v_mid: f64,
    pub v_down: f64,
    /// Per-price² sensitivity.
    pub gamma: f64,
    /// Relative bump used.
    pub epsilon: f64,
}

/// Full output of a parallel run: per-bump statistics plus Gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOutput<F: IeeeFloat> {
    pub down: SummaryStats<F>,
    pub mid: SummaryStats<F>,
    pub up: SummaryStats<F>,
    pub gamma: GammaEstimate,
}

/// Runs the full plan: blocks on the worker pool, then a single reduction
/// in the requested order. Worker panics abort the run with the offending
/// block in the message.
pub fn run_parallel<F: IeeeFloat>(
    plan: &SimulationPlan,
    spec: &PayoffSpec,
    order: ReductionOrder,
) -> Result<EngineOutput<F>, EngineError> {
    plan.validate()?;
    spec.validate()?;
    let blocks = compute_blocks::<F>(plan, spec);
    let merged = reduce_blocks(plan.algorithm, &blocks, order);
    output_from_accumulators(plan, spec, &merged)
}

/// Finalizes reduced accumulators into the engine output.
pub fn output_from_accumulators<F: IeeeFloat>(
    plan: &SimulationPlan,
    spec: &PayoffSpec,
    merged: &[MomentAccumulator<F>; BUMP_LEVELS],
) -> Result<EngineOutput<F>, EngineError> {
    let finalize = |acc: &MomentAccumulator<F>| {
        acc.finalize()
            .map_err(|e| EngineError::InvalidPlan(format!("empty reduction: {e}")))
    };
    let down = finalize(&merged[0])?;
    let mid = finalize(&merged[1])?;
    let up = finalize(&merged[2])?;
    let gamma = if plan.epsilon > 0.0 {
        gamma_fd(
            up.mean.to_f64(),
            mid.mean.to_f64(),
            down.mean.to_f64(),
            spec.spot,
            plan.epsilon,
        )
    } else {
        // Degenerate bump: Gamma is undefined, the bump levels only exist
        // to witness common-random-number coupling.
        GammaEstimate {
            v_up: up.mean.to_f64(),
            v_mid: mid.mean.to_f64(),
            v_down: down.mean.to_f64(),
            gamma: f64::NAN,
            epsilon: 0.0,
        }
    };
    Ok(EngineOutput {
        down,
        mid,
        up,
        gamma,
    })
}

/// The three bumped payoff streams materialized as arrays in path order,
/// for experiments that need to re-feed the same samples in different
/// orderings. Values are bit-identical to what [`run_block`] folds.
#[derive(Debug, Clone)]
pub struct BumpedPayoffs {
    pub down: Vec<f64>,
    pub mid: Vec<f64>,
    pub up: Vec<f64>,
}

pub fn materialize_payoffs(plan: &SimulationPlan, spec: &PayoffSpec) -> BumpedPayoffs {
    let n = plan.paths as usize;
    let mut out = BumpedPayoffs {
        down: Vec::with_capacity(n),
        mid: Vec::with_capacity(n),
        up: Vec::with_capacity(n),
    };
    let bumps = [-plan.epsilon, 0.0, plan.epsilon];
    for path in 1..=plan.paths {
        let growth = terminal_growth(plan, spec, path);
        let level = |bump: f64| payoff(spec, (spec.spot * (1.0 + bump)) * growth);
        out.down.push(level(bumps[0]));
        out.mid.push(level(bumps[1]));
        out.up.push(level(bumps[2]));
    }
    out
}

/// One JSON-lines audit record per run: statistics both as decimal and as
/// raw IEEE bits so bit-identity across runs is checkable with a diff.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub run: u64,
    pub algorithm: String,
    pub ordering: String,
    pub order_seed: Option<u64>,
    pub workers: usize,
    pub block_size: u64,
    pub mean_hex: String,
    pub variance_hex: String,
    pub gamma_hex: String,
    pub mean: f64,
    pub variance: f64,
    pub gamma: f64,
}

impl RunRecord {
    pub fn new<F: IeeeFloat>(
        run: u64,
        plan: &SimulationPlan,
        order: ReductionOrder,
        output: &EngineOutput<F>,
    ) -> Self {
        RunRecord {
            run,
            algorithm: plan.algorithm.name().to_string(),
            ordering: order.name().to_string(),
            order_seed: order.seed(),
            workers: plan.workers,
            block_size: plan.block_size,
            mean_hex: output.mid.mean.bits_hex(),
            variance_hex: output.mid.variance.bits_hex(),
            gamma_hex: output.gamma.gamma.bits_hex(),
            mean: output.mid.mean.to_f64(),
            variance: output.mid.variance.to_f64(),
            gamma: output.gamma.gamma,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_aon() -> PayoffSpec {
        PayoffSpec {
            kind: PayoffKind::AssetOrNothing,
            strike: 1.5,
            maturity: 1.0,
            quantity: 1e6,
            rebate: 0.0,
            spot: 1.0,
            sigma: 0.5,
        }
    }

    #[test]
    fn payoff_boundary_is_inclusive() {
        let spec = spec_aon();
        assert_eq!(payoff(&spec, 1.5), 1.5e6);
        assert_eq!(payoff(&spec, 1.4999999), 0.0);
        let cash = PayoffSpec {
            kind: PayoffKind::CashOrNothing,
            ..spec
        };
        assert_eq!(payoff(&cash, 1.49), 0.0);
        assert_eq!(payoff(&cash, 1.5), 1e6);
        let rebated = PayoffSpec { rebate: 0.01, ..cash };
        assert_eq!(payoff(&rebated, 1.49), 0.01);
    }

    #[test]
    fn gbm_degenerate_and_reference_points() {
        for z in [-3.0, 0.0, 1.7] {
            assert_eq!(gbm_terminal(2.5, 0.0, 1.0, z), 2.5);
        }
        // exp(-0.125) cross-checked against a multiprecision evaluation.
        let s = gbm_terminal(1.0, 0.5, 1.0, 0.0);
        assert!((s - 0.8824969025845954).abs() <= 1e-15);
    }

    #[test]
    fn gbm_is_a_martingale_in_sample() {
        // Driftless terminal prices average to S0 within 3 standard errors.
        let plan = SimulationPlan::new(1_000_000, 7, MomentAlgorithm::NaiveKahan);
        let rng = crate::rng::CounterRng::new(plan.seed);
        let mut acc = MomentAccumulator::<f64>::new(MomentAlgorithm::NaiveKahan);
        for g in 1..=plan.paths {
            let z = normal_inverse_cdf(rng.uniform_at(g));
            acc.update(gbm_terminal(1.0, 0.5, 1.0, z));
        }
        let stats = acc.finalize().unwrap();
        let se = (stats.variance / plan.paths as f64).sqrt();
        assert!(
            (stats.mean - 1.0).abs() < 3.0 * se,
            "mean {} se {se}",
            stats.mean
        );
    }

    #[test]
    fn gamma_fd_hand_cases() {
        let flat = gamma_fd(1.0, 1.0, 1.0, 1.0, 0.01);
        assert_eq!(flat.gamma, 0.0);
        let bowl = gamma_fd(1.0001, 1.0, 1.0001, 1.0, 0.01);
        assert!((bowl.gamma - 2.0).abs() <= 1e-9);
    }

    #[test]
    #[should_panic(expected = "epsilon > 0")]
    fn gamma_fd_rejects_zero_bump() {
        gamma_fd(1.0, 1.0, 1.0, 1.0, 0.0);
    }

    #[test]
    fn block_results_are_deterministic() {
        let mut plan = SimulationPlan::new(10_000, 42, MomentAlgorithm::ChanLewisKahan);
        plan.block_size = 1024;
        let spec = spec_aon();
        let a = run_block::<f64>(&plan, &spec, 3);
        let b = run_block::<f64>(&plan, &spec, 3);
        assert_eq!(a.accumulators, b.accumulators);
        assert_eq!(a.block_index, 3);
    }

    #[test]
    fn block_ranges_tile_the_path_space() {
        let mut plan = SimulationPlan::new(100, 1, MomentAlgorithm::Naive);
        plan.block_size = 7;
        let mut covered = Vec::new();
        for b in 0..plan.num_blocks() {
            covered.extend(plan.block_paths(b));
        }
        assert_eq!(covered, (1..=100).collect::<Vec<_>>());
    }

    #[test]
    fn consumed_stream_indices_have_no_gaps_or_overlap() {
        // Index audit at N = 100, d = 2, M = 3: the union of all blocks'
        // per-path index slices is exactly 1..=N*M*d.
        let mut plan = SimulationPlan::new(100, 5, MomentAlgorithm::Naive);
        plan.dims_per_step = 2;
        plan.steps = 3;
        plan.block_size = 9;
        let per_path = plan.dims_per_path();
        let total = plan.paths * per_path;
        let mut seen = vec![false; total as usize + 1];
        for b in 0..plan.num_blocks() {
            for path in plan.block_paths(b) {
                let mut stream =
                    PathStream::for_path(plan.seed, path, plan.dims_per_step, plan.steps, 0);
                for _ in 0..per_path {
                    let g = stream.position();
                    assert!(g >= 1 && g <= total, "index {g} out of range");
                    assert!(!seen[g as usize], "index {g} consumed twice");
                    seen[g as usize] = true;
                    let _ = stream.next_uniform();
                }
            }
        }
        assert!(seen[1..].iter().all(|&s| s), "gaps in consumed indices");
    }

    #[test]
    fn zero_bump_collapses_the_three_levels() {
        let mut plan = SimulationPlan::new(5_000, 11, MomentAlgorithm::LingKahan);
        plan.epsilon = 0.0;
        let out = run_parallel::<f64>(&plan, &spec_aon(), ReductionOrder::Natural).unwrap();
        assert_eq!(out.down.mean.to_bits(), out.mid.mean.to_bits());
        assert_eq!(out.up.mean.to_bits(), out.mid.mean.to_bits());
        assert_eq!(out.down.variance.to_bits(), out.mid.variance.to_bits());
        assert!(out.gamma.gamma.is_nan());
    }

    #[test]
    fn single_block_single_worker_equals_sequential_fold() {
        let mut plan = SimulationPlan::new(20_000, 3, MomentAlgorithm::ChanLewisKahan);
        plan.block_size = plan.paths;
        plan.workers = 1;
        let spec = spec_aon();
        let out = run_parallel::<f64>(&plan, &spec, ReductionOrder::Natural).unwrap();
        let payoffs = materialize_payoffs(&plan, &spec);
        let mut acc = MomentAccumulator::<f64>::new(plan.algorithm);
        for &v in &payoffs.mid {
            acc.update(v);
        }
        let direct = acc.finalize().unwrap();
        assert_eq!(out.mid.mean.to_bits(), direct.mean.to_bits());
        assert_eq!(out.mid.variance.to_bits(), direct.variance.to_bits());
    }

    #[test]
    fn worker_count_never_changes_bits() {
        let spec = spec_aon();
        let mut plan = SimulationPlan::new(30_000, 9, MomentAlgorithm::ChanLewisKahan);
        plan.block_size = 1 << 10;
        plan.workers = 1;
        let one = run_parallel::<f64>(&plan, &spec, ReductionOrder::Natural).unwrap();
        plan.workers = 8;
        let eight = run_parallel::<f64>(&plan, &spec, ReductionOrder::Natural).unwrap();
        assert_eq!(one.mid.mean.to_bits(), eight.mid.mean.to_bits());
        assert_eq!(one.gamma.gamma.to_bits(), eight.gamma.gamma.to_bits());
        assert_eq!(one.down.variance.to_bits(), eight.down.variance.to_bits());
    }

    #[test]
    fn completion_order_is_seed_deterministic() {
        let spec = spec_aon();
        let mut plan = SimulationPlan::new(20_000, 13, MomentAlgorithm::Naive);
        plan.block_size = 512;
        plan.workers = 2;
        let a = run_parallel::<f64>(&plan, &spec, ReductionOrder::ByCompletion(77)).unwrap();
        let b = run_parallel::<f64>(&plan, &spec, ReductionOrder::ByCompletion(77)).unwrap();
        assert_eq!(a.mid.mean.to_bits(), b.mid.mean.to_bits());
        assert_eq!(a.gamma.gamma.to_bits(), b.gamma.gamma.to_bits());
    }

    #[test]
    fn run_record_round_trips_json() {
        let plan = SimulationPlan::new(1_000, 21, MomentAlgorithm::LingKahan);
        let out = run_parallel::<f64>(&plan, &spec_aon(), ReductionOrder::Natural).unwrap();
        let rec = RunRecord::new(0, &plan, ReductionOrder::Natural, &out);
        let line = rec.to_json_line();
        let back: RunRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.mean_hex, out.mid.mean.bits_hex());
    }

    #[test]
    fn validation_rejects_nonsense() {
        let mut plan = SimulationPlan::new(0, 1, MomentAlgorithm::Naive);
        assert!(plan.validate().is_err());
        plan.paths = 10;
        plan.workers = 0;
        assert!(plan.validate().is_err());
        let mut spec = spec_aon();
        spec.strike = -1.0;
        assert!(spec.validate().is_err());
        spec.strike = 1.0;
        spec.maturity = 0.0;
        assert!(spec.validate().is_err());
    }
}
