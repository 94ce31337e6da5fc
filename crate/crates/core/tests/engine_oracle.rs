//! Engine statistics against the exact oracle on the same samples.

use repromc_core::engine::{
    materialize_payoffs, run_parallel, PayoffKind, PayoffSpec, ReductionOrder, SimulationPlan,
};
use repromc_core::moments::MomentAlgorithm;
use repromc_core::oracle::{error_report, exact_mean_variance};

fn aon_plan(paths: u64) -> (SimulationPlan, PayoffSpec) {
    let plan = SimulationPlan {
        paths,
        dims_per_step: 1,
        steps: 1,
        block_size: 1 << 12,
        workers: 2,
        seed: 2024,
        stream_offset: 0,
        algorithm: MomentAlgorithm::ChanLewisKahan,
        epsilon: 0.01,
    };
    let spec = PayoffSpec {
        kind: PayoffKind::AssetOrNothing,
        strike: 1.5,
        maturity: 1.0,
        quantity: 1e6,
        rebate: 0.0,
        spot: 1.0,
        sigma: 0.5,
    };
    (plan, spec)
}

/// The engine's variance estimate is positive and tracks the exact oracle
/// computed on the same payoff samples; the mean agrees at oracle level.
#[test]
fn engine_statistics_track_the_oracle() {
    let (plan, spec) = aon_plan(100_000);
    let out = run_parallel::<f64>(&plan, &spec, ReductionOrder::Natural).unwrap();
    let payoffs = materialize_payoffs(&plan, &spec);
    let (exact_mean, exact_var) = exact_mean_variance(&payoffs.mid).unwrap();

    assert!(out.mid.variance > 0.0);
    let var_rel = error_report(out.mid.variance, &exact_var).relative;
    assert!(var_rel < 0.10, "variance off the oracle by {var_rel:e}");
    // Merged compensated mean is far tighter than 10%.
    let mean_rel = error_report(out.mid.mean, &exact_mean).relative;
    assert!(mean_rel < 1e-14, "mean off the oracle by {mean_rel:e}");

    // About 14% of paths finish above the strike for these parameters
    // (the hit probability is the normal CDF at the log-moneyness point).
    let in_the_money = payoffs.mid.iter().filter(|&&v| v > 0.0).count();
    let fraction = in_the_money as f64 / plan.paths as f64;
    assert!((0.13..0.16).contains(&fraction), "ITM fraction {fraction}");
}
