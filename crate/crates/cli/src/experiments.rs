//! The four batch experiments.
//!
//! Each experiment generates its sample set once per run, evaluates every
//! requested algorithm on every requested ordering of those same samples,
//! computes the exact references once per run, and emits report rows. The
//! exact column is ordering-invariant by construction (the oracle sees a
//! multiset).
//!
//! Runs are independent: run `r` keys the generator with `seed + r`, so
//! each run draws from a disjoint stream. Run-level parallelism never
//! affects values, only wall time.

use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::OnceLock;

use repromc_core::engine::{
    self, gamma_fd, materialize_payoffs, reduce_blocks, ReductionOrder, RunRecord, SimulationPlan,
};
use repromc_core::moments::{MomentAccumulator, MomentAlgorithm};
use repromc_core::normal::normal_inverse_cdf;
use repromc_core::oracle::{exact_mean_variance, ExactNumber};
use repromc_core::rng::{permute_in_place, CounterRng};
use repromc_core::sum::KnuthSum;
use repromc_core::IeeeFloat;

use crate::report::{stat_row, ReportRow};
use crate::CliError;

/// A requested sample ordering. `Permuted(None)` derives a per-run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingSpec {
    Raw,
    Sorted,
    Permuted(Option<u64>),
}

impl OrderingSpec {
    pub fn parse_list(text: &str) -> Result<Vec<OrderingSpec>, CliError> {
        text.split(',')
            .map(|item| {
                let item = item.trim();
                if item == "raw" {
                    Ok(OrderingSpec::Raw)
                } else if item == "sorted" {
                    Ok(OrderingSpec::Sorted)
                } else if item == "permuted" {
                    Ok(OrderingSpec::Permuted(None))
                } else if let Some(seed) = item.strip_prefix("permuted:") {
                    seed.parse()
                        .map(|s| OrderingSpec::Permuted(Some(s)))
                        .map_err(|e| CliError::Config(format!("bad permuted seed '{seed}': {e}")))
                } else {
                    Err(CliError::Config(format!(
                        "unknown ordering '{item}' (expected raw|sorted|permuted[:seed])"
                    )))
                }
            })
            .collect()
    }

    /// Per-run concrete ordering; auto permutation seeds mix the base seed
    /// with the run index.
    fn resolve(self, base_seed: u64, run: u64) -> ResolvedOrdering {
        match self {
            OrderingSpec::Raw => ResolvedOrdering::Raw,
            OrderingSpec::Sorted => ResolvedOrdering::Sorted,
            OrderingSpec::Permuted(Some(seed)) => ResolvedOrdering::Permuted(seed),
            OrderingSpec::Permuted(None) => ResolvedOrdering::Permuted(
                base_seed ^ (run.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ResolvedOrdering {
    Raw,
    Sorted,
    Permuted(u64),
}

impl ResolvedOrdering {
    fn label(&self) -> String {
        match self {
            ResolvedOrdering::Raw => "raw".to_string(),
            ResolvedOrdering::Sorted => "sorted".to_string(),
            ResolvedOrdering::Permuted(seed) => format!("permuted:{seed}"),
        }
    }

    fn apply<F: IeeeFloat>(&self, xs: &[F]) -> Vec<F> {
        let mut out = xs.to_vec();
        match self {
            ResolvedOrdering::Raw => {}
            ResolvedOrdering::Sorted => {
                out.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            }
            ResolvedOrdering::Permuted(seed) => permute_in_place(&mut out, *seed),
        }
        out
    }
}

fn fold<F: IeeeFloat>(algo: MomentAlgorithm, xs: &[F]) -> MomentAccumulator<F> {
    let mut acc = MomentAccumulator::new(algo);
    for &x in xs {
        acc.update(x);
    }
    acc
}

/// Runs `f` for every run index on up to `workers` threads, flattening the
/// per-run outputs back into run order.
fn map_runs<T: Send + Sync>(runs: u64, workers: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let slots: Vec<OnceLock<T>> = (0..runs).map(|_| OnceLock::new()).collect();
    let next = AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(runs as usize) {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, AtomicOrdering::Relaxed);
                if r >= runs {
                    break;
                }
                let value = f(r);
                assert!(slots[r as usize].set(value).is_ok());
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("run computed"))
        .collect()
}

pub struct NormalConfig {
    pub n: u64,
    pub mu: f64,
    pub sigma: f64,
    pub runs: u64,
    pub seed: u64,
    pub orderings: Vec<OrderingSpec>,
    pub algos: Vec<MomentAlgorithm>,
    pub workers: usize,
}

/// Samples n normals with a large mean in binary64 and reports per-
/// algorithm mean/variance errors on each ordering.
pub fn run_normal(cfg: &NormalConfig) -> Result<Vec<ReportRow>, CliError> {
    validate_common(cfg.n, cfg.runs, &cfg.orderings, &cfg.algos)?;
    let per_run = map_runs(cfg.runs, cfg.workers, |run| {
        let rng = CounterRng::new(cfg.seed + run);
        let xs: Vec<f64> = (1..=cfg.n)
            .map(|g| cfg.mu + cfg.sigma * normal_inverse_cdf(rng.uniform_at(g)))
            .collect();
        let (exact_mean, exact_var) = exact_mean_variance(&xs).expect("finite corpus");
        let mut rows = Vec::new();
        for ordering in &cfg.orderings {
            let resolved = ordering.resolve(cfg.seed, run);
            let label = resolved.label();
            let data = resolved.apply(&xs);
            for &algo in &cfg.algos {
                let stats = fold(algo, &data).finalize().expect("non-empty");
                rows.push(stat_row(
                    "normal", run, algo.name(), &label, "M", stats.mean, &exact_mean,
                ));
                rows.push(stat_row(
                    "normal", run, algo.name(), &label, "V", stats.variance, &exact_var,
                ));
            }
        }
        rows
    });
    Ok(per_run.into_iter().flatten().collect())
}

pub struct UniformConfig {
    pub n: u64,
    pub runs: u64,
    pub seed: u64,
    pub orderings: Vec<OrderingSpec>,
    pub algos: Vec<MomentAlgorithm>,
    pub workers: usize,
}

/// Sums long binary32 uniform streams: all accumulator arithmetic runs in
/// binary32 (samples are the binary64 draws rounded once), the oracle stays
/// exact. Emits S/M/V rows per algorithm plus S/M rows for the standalone
/// two-sum kernel, which has no moment-algorithm counterpart.
pub fn run_uniform32(cfg: &UniformConfig) -> Result<Vec<ReportRow>, CliError> {
    validate_common(cfg.n, cfg.runs, &cfg.orderings, &cfg.algos)?;
    let per_run = map_runs(cfg.runs, cfg.workers, |run| {
        let rng = CounterRng::new(cfg.seed + run);
        let xs: Vec<f32> = (1..=cfg.n).map(|g| rng.uniform_at(g) as f32).collect();
        let (exact_mean, exact_var) = exact_mean_variance(&xs).expect("finite corpus");
        let exact_sum = exact_mean.mul(&ExactNumber::from_u64(cfg.n));
        let mut rows = Vec::new();
        for ordering in &cfg.orderings {
            let resolved = ordering.resolve(cfg.seed, run);
            let label = resolved.label();
            let data = resolved.apply(&xs);
            for &algo in &cfg.algos {
                let stats = fold(algo, &data).finalize().expect("non-empty");
                if let Some(sum) = stats.sum {
                    rows.push(stat_row(
                        "uniform32", run, algo.name(), &label, "S", sum, &exact_sum,
                    ));
                }
                rows.push(stat_row(
                    "uniform32", run, algo.name(), &label, "M", stats.mean, &exact_mean,
                ));
                rows.push(stat_row(
                    "uniform32", run, algo.name(), &label, "V", stats.variance, &exact_var,
                ));
            }
            let knuth = KnuthSum::fold(&data);
            rows.push(stat_row(
                "uniform32", run, "knuth", &label, "S", knuth, &exact_sum,
            ));
            rows.push(stat_row(
                "uniform32",
                run,
                "knuth",
                &label,
                "M",
                knuth / cfg.n as f32,
                &exact_mean,
            ));
        }
        rows
    });
    Ok(per_run.into_iter().flatten().collect())
}

pub struct McConfig {
    pub kind: engine::PayoffKind,
    pub paths: u64,
    pub runs: u64,
    pub seed: u64,
    pub orderings: Vec<OrderingSpec>,
    pub algos: Vec<MomentAlgorithm>,
    pub workers: usize,
    pub block_size: u64,
    pub epsilon: f64,
    pub rebate: f64,
    /// Emit engine audit records: natural order plus this many seeded
    /// completion orders per (run, algorithm).
    pub order_seeds: u64,
    pub jsonl: bool,
}

impl McConfig {
    pub fn payoff_spec(&self) -> engine::PayoffSpec {
        engine::PayoffSpec {
            kind: self.kind,
            strike: 1.5,
            maturity: 1.0,
            quantity: 1e6,
            rebate: self.rebate,
            spot: 1.0,
            sigma: 0.5,
        }
    }

    fn plan(&self, run: u64, algorithm: MomentAlgorithm) -> SimulationPlan {
        SimulationPlan {
            paths: self.paths,
            dims_per_step: 1,
            steps: 1,
            block_size: self.block_size,
            workers: self.workers,
            seed: self.seed + run,
            stream_offset: 0,
            algorithm,
            epsilon: self.epsilon,
        }
    }
}

/// Prices the binary option over the requested orderings and, optionally,
/// emits JSON-lines engine records for the reduction-order audit.
pub fn run_mc(cfg: &McConfig) -> Result<(Vec<ReportRow>, Vec<String>), CliError> {
    validate_common(cfg.paths, cfg.runs, &cfg.orderings, &cfg.algos)?;
    let spec = cfg.payoff_spec();
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    cfg.plan(0, MomentAlgorithm::Naive)
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let experiment = cfg.kind.name();

    let per_run = map_runs(cfg.runs, cfg.workers, |run| {
        let plan = cfg.plan(run, MomentAlgorithm::Naive);
        let payoffs = materialize_payoffs(&plan, &spec);
        let (exact_mid_mean, exact_mid_var) =
            exact_mean_variance(&payoffs.mid).expect("finite payoffs");
        let (exact_down_mean, _) = exact_mean_variance(&payoffs.down).expect("finite payoffs");
        let (exact_up_mean, _) = exact_mean_variance(&payoffs.up).expect("finite payoffs");
        // Gamma reference: the finite-difference expression evaluated on the
        // correctly rounded exact means (exact sums closed in binary64).
        let gamma_reference = gamma_fd(
            exact_up_mean.round_to::<f64>(),
            exact_mid_mean.round_to::<f64>(),
            exact_down_mean.round_to::<f64>(),
            spec.spot,
            cfg.epsilon,
        )
        .gamma;
        let gamma_exact = ExactNumber::from_float(gamma_reference);

        let mut rows = Vec::new();
        for ordering in &cfg.orderings {
            let resolved = ordering.resolve(cfg.seed, run);
            let label = resolved.label();
            let down = resolved.apply(&payoffs.down);
            let mid = resolved.apply(&payoffs.mid);
            let up = resolved.apply(&payoffs.up);
            for &algo in &cfg.algos {
                let mid_stats = fold(algo, &mid).finalize().expect("non-empty");
                let down_mean = fold(algo, &down).finalize().expect("non-empty").mean;
                let up_mean = fold(algo, &up).finalize().expect("non-empty").mean;
                let gamma = gamma_fd(up_mean, mid_stats.mean, down_mean, spec.spot, cfg.epsilon);
                rows.push(stat_row(
                    experiment, run, algo.name(), &label, "M", mid_stats.mean, &exact_mid_mean,
                ));
                rows.push(stat_row(
                    experiment,
                    run,
                    algo.name(),
                    &label,
                    "V",
                    mid_stats.variance,
                    &exact_mid_var,
                ));
                rows.push(stat_row(
                    experiment, run, algo.name(), &label, "Γ", gamma.gamma, &gamma_exact,
                ));
            }
        }

        let mut records = Vec::new();
        if cfg.jsonl {
            for &algo in &cfg.algos {
                let plan = cfg.plan(run, algo);
                let blocks = engine::compute_blocks::<f64>(&plan, &spec);
                let mut orders = vec![ReductionOrder::Natural];
                orders.extend((0..cfg.order_seeds).map(ReductionOrder::ByCompletion));
                for order in orders {
                    let merged = reduce_blocks(algo, &blocks, order);
                    let output = engine::output_from_accumulators(&plan, &spec, &merged)
                        .expect("non-empty reduction");
                    records.push(RunRecord::new(run, &plan, order, &output).to_json_line());
                }
            }
        }
        (rows, records)
    });

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (r, j) in per_run {
        rows.extend(r);
        records.extend(j);
    }
    Ok((rows, records))
}

fn validate_common(
    n: u64,
    runs: u64,
    orderings: &[OrderingSpec],
    algos: &[MomentAlgorithm],
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config("sample/path count must be >= 1".into()));
    }
    if runs == 0 {
        return Err(CliError::Config("run count must be >= 1".into()));
    }
    if orderings.is_empty() {
        return Err(CliError::Config("at least one ordering required".into()));
    }
    if algos.is_empty() {
        return Err(CliError::Config("at least one algorithm required".into()));
    }
    Ok(())
}
