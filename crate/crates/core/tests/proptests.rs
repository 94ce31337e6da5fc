//! Property tests for the kernel and oracle invariants.

use proptest::prelude::*;
use repromc_core::moments::{MomentAccumulator, MomentAlgorithm};
use repromc_core::oracle::{exact_sum, ExactNumber};
use repromc_core::sum::{two_sum, two_sum_branched};

fn finite_f64(limit: f64) -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_filter("bounded", move |x| x.is_finite() && x.abs() < limit)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Error-free transform: s + err == a + b exactly, any magnitudes.
    #[test]
    fn two_sum_is_error_free(a in finite_f64(1e100), b in finite_f64(1e100)) {
        let (s, err) = two_sum(a, b);
        prop_assume!(s.is_finite());
        let lhs = ExactNumber::from_float(s).add(&ExactNumber::from_float(err));
        let rhs = ExactNumber::from_float(a).add(&ExactNumber::from_float(b));
        prop_assert!(lhs == rhs);
    }

    #[test]
    fn branched_two_sum_is_error_free(a in finite_f64(1e100), b in finite_f64(1e100)) {
        let (s, err) = two_sum_branched(a, b);
        prop_assume!(s.is_finite());
        let lhs = ExactNumber::from_float(s).add(&ExactNumber::from_float(err));
        let rhs = ExactNumber::from_float(a).add(&ExactNumber::from_float(b));
        prop_assert!(lhs == rhs);
    }

    /// Oracle round-trip over arbitrary finite doubles (including subnormals).
    #[test]
    fn oracle_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(ExactNumber::from_float(x).round_to::<f64>(), x);
    }

    #[test]
    fn oracle_round_trip_f32(bits in any::<u32>()) {
        let x = f32::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(ExactNumber::from_float(x).round_to::<f32>(), x);
    }

    /// Permutation invariance of the exact sum.
    #[test]
    fn exact_sum_permutation_invariant(
        mut xs in prop::collection::vec(finite_f64(1e50), 0..64),
        seed in any::<u64>(),
    ) {
        let original = exact_sum(&xs).unwrap();
        repromc_core::rng::permute_in_place(&mut xs, seed);
        prop_assert!(exact_sum(&xs).unwrap() == original);
    }

    /// Centered accumulators never report a negative variance.
    #[test]
    fn centered_variance_nonnegative(
        xs in prop::collection::vec(finite_f64(1e12), 1..200),
    ) {
        for algo in [
            MomentAlgorithm::Ling,
            MomentAlgorithm::LingKahan,
            MomentAlgorithm::ChanLewisKahan,
        ] {
            let mut acc = MomentAccumulator::new(algo);
            for &x in &xs {
                acc.update(x);
            }
            let stats = acc.finalize().unwrap();
            prop_assert!(stats.variance >= 0.0, "{}: {}", algo, stats.variance);
        }
    }

    /// Counts add under merge and empty is the identity.
    #[test]
    fn merge_counts_and_identity(
        xs in prop::collection::vec(finite_f64(1e9), 0..128),
        cut in any::<prop::sample::Index>(),
    ) {
        for algo in MomentAlgorithm::ALL {
            let cut = cut.index(xs.len() + 1);
            let mut a = MomentAccumulator::new(algo);
            for &x in &xs[..cut] {
                a.update(x);
            }
            let mut b = MomentAccumulator::new(algo);
            for &x in &xs[cut..] {
                b.update(x);
            }
            let merged = a.merge(&b).unwrap();
            prop_assert_eq!(merged.count(), xs.len() as u64);
            let empty = MomentAccumulator::new(algo);
            prop_assert_eq!(empty.merge(&merged).unwrap(), merged);
            prop_assert_eq!(merged.merge(&empty).unwrap(), merged);
        }
    }

    /// Stable sort and seeded shuffle preserve the multiset (audited via the
    /// exact oracle, which is ordering-blind).
    #[test]
    fn reorderings_preserve_the_multiset(
        xs in prop::collection::vec(finite_f64(1e9), 1..128),
        seed in any::<u64>(),
    ) {
        let fingerprint = exact_sum(&xs).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert!(exact_sum(&sorted).unwrap() == fingerprint);
        let mut shuffled = xs.clone();
        repromc_core::rng::permute_in_place(&mut shuffled, seed);
        prop_assert!(exact_sum(&shuffled).unwrap() == fingerprint);
    }
}
