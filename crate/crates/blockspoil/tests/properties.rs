//! Randomized invariants spanning the whole library: entropy orderings,
//! spoiling-partition guarantees, chain-rule lemmas, sampler bookkeeping,
//! and extractor linearity.

use blockspoil::chain::{check_chain_rule, lemma_block_chaining, lemma_conditioning_reduces, lemma_leakage};
use blockspoil::entropy::{
    cond_min_entropy_avg, cond_min_entropy_worst, min_entropy, shannon_entropy,
    smooth_min_entropy,
};
use blockspoil::sampling::{
    hoeffding_bound, nz_experiment, sample_indices, sampler_failure_estimate, SamplerKind,
    SamplerSpec, ToeplitzExtractor,
};
use blockspoil::spoiling::{
    partition_bit_length, prune_tiny_parts, spoil, validate_partition, verify_flatness,
};
use blockspoil::{EventSet, JointDistribution, SpoilParams};
use proptest::prelude::*;

fn normalized(asz: usize, blocks: usize, weights: Vec<f64>) -> JointDistribution {
    let sum: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / sum).collect();
    JointDistribution::from_probabilities(asz, blocks, probs).unwrap()
}

/// Fully supported distribution over `asz^blocks` outcomes.
fn dense_dist(asz: usize, blocks: usize) -> impl Strategy<Value = JointDistribution> {
    let len = asz.pow(blocks as u32);
    proptest::collection::vec(1e-3_f64..1.0, len)
        .prop_map(move |w| normalized(asz, blocks, w))
}

/// Distribution where a good fraction of outcomes carry zero mass.
fn sparse_dist(asz: usize, blocks: usize) -> impl Strategy<Value = JointDistribution> {
    let len = asz.pow(blocks as u32);
    proptest::collection::vec(
        prop_oneof![2 => Just(0.0_f64), 3 => 1e-3_f64..1.0],
        len,
    )
    .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
    .prop_map(move |w| normalized(asz, blocks, w))
}

fn any_dense() -> impl Strategy<Value = JointDistribution> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(a, b)| dense_dist(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn surprise_components_sum_to_total(dist in any_dense(), sel in any::<proptest::sample::Index>()) {
        let idx = sel.index(dist.len());
        let pm = dist.prefix_marginals();
        let sv = pm.surprise_at(idx).unwrap();
        let total: f64 = sv.per_block().iter().sum();
        prop_assert!((total - sv.total()).abs() < 1e-9);
        prop_assert!((sv.total() + dist.probs()[idx].log2()).abs() < 1e-9);
    }

    #[test]
    fn min_entropy_never_exceeds_shannon(dist in any_dense()) {
        prop_assert!(min_entropy(dist.probs()) <= shannon_entropy(dist.probs()) + 1e-9);
    }

    #[test]
    fn average_conditional_at_least_worst_case(
        dist in dense_dist(3, 3),
        x_block in 0usize..3,
    ) {
        let y: Vec<usize> = (0..3).filter(|&b| b != x_block).collect();
        let worst = cond_min_entropy_worst(&dist, &[x_block], &y).unwrap();
        let avg = cond_min_entropy_avg(&dist, &[x_block], &y).unwrap();
        prop_assert!(avg >= worst - 1e-9, "avg {avg} < worst {worst}");
    }

    #[test]
    fn smoothing_gains_monotonically_in_epsilon(
        dist in any_dense(),
        eps_lo in 1e-4_f64..0.3,
        bump in 1.01_f64..3.0,
    ) {
        let eps_hi = (eps_lo * bump).min(0.9);
        let plain = min_entropy(dist.probs());
        let (lo, w_lo) = smooth_min_entropy(dist.probs(), eps_lo).unwrap();
        let (hi, _) = smooth_min_entropy(dist.probs(), eps_hi).unwrap();
        prop_assert!(lo >= plain - 1e-12);
        prop_assert!(hi >= lo - 1e-12);
        prop_assert!(w_lo.tv_used <= eps_lo + 1e-12);
        let sum: f64 = w_lo.trimmed.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spoil_prune_pipeline_guarantees(
        dist in (2usize..=3, 2usize..=3).prop_flat_map(|(a, b)| sparse_dist(a, b)),
        epsilon in 0.005_f64..0.2,
        delta in prop::sample::select(vec![1.0_f64, 0.5, 0.25]),
    ) {
        let partition = prune_tiny_parts(
            &spoil(&dist, SpoilParams::new(epsilon / 2.0, delta).unwrap()),
            epsilon,
        );
        validate_partition(&dist, &partition).unwrap();
        prop_assert!(partition.covered_mass() >= 1.0 - epsilon);

        let report = verify_flatness(&dist, &partition).unwrap();
        prop_assert!(report.global_max_ratio <= (2.0 * delta).exp2() * (1.0 + 1e-9));
        prop_assert!(partition_bit_length(&partition).1);

        // Parts and uncovered together tile the support exactly.
        let mut seen: Vec<usize> = partition
            .parts()
            .values()
            .flat_map(|part| part.indices().iter().copied())
            .chain(partition.uncovered().indices().iter().copied())
            .collect();
        seen.sort_unstable();
        let support: Vec<usize> = (0..dist.len()).filter(|&i| dist.probs()[i] > 0.0).collect();
        prop_assert_eq!(seen, support);
    }

    #[test]
    fn refining_delta_never_raises_flatness_ratio(
        dist in (2usize..=3, 2usize..=3).prop_flat_map(|(a, b)| dense_dist(a, b)),
        delta in prop::sample::select(vec![2.0_f64, 1.0, 0.5]),
    ) {
        let coarse = verify_flatness(
            &dist,
            &spoil(&dist, SpoilParams::new(0.01, delta).unwrap()),
        )
        .unwrap();
        let fine = verify_flatness(
            &dist,
            &spoil(&dist, SpoilParams::new(0.01, delta / 2.0).unwrap()),
        )
        .unwrap();
        prop_assert!(fine.global_max_ratio <= coarse.global_max_ratio * (1.0 + 1e-9));
    }

    #[test]
    fn spoil_is_reproducible(dist in any_dense()) {
        let a = spoil(&dist, SpoilParams::new(0.01, 0.5).unwrap());
        let b = spoil(&dist, SpoilParams::new(0.01, 0.5).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn single_cell_gap_within_cell_width(
        weights in proptest::collection::vec(0.1_f64..1.0, 27),
        delta in prop::sample::select(vec![4.5_f64, 8.0]),
    ) {
        // Every conditional surprise stays below log2(270) < 9, so a cell
        // side of 2δ ≥ 9 puts the entire support into one part. With the
        // whole distribution in a single cell and complete prefixes, the
        // average and worst conditional entropies both land inside the same
        // 2δ-wide band, bounding their gap by the width.
        let dist = normalized(3, 3, weights);
        let partition = spoil(&dist, SpoilParams::new(1e-4, delta).unwrap());
        prop_assert_eq!(partition.part_count(), 1);
        prop_assert!(partition.uncovered().is_empty());
        for block in 0..dist.blocks() {
            let given: Vec<usize> = (0..block).collect();
            for report in check_chain_rule(&dist, &partition, block, &given).unwrap() {
                prop_assert!(report.gap_avg_worst <= 2.0 * delta + 1e-9);
                prop_assert!(report.gap_chain.is_finite());
            }
        }
    }

    #[test]
    fn lemmas_hold_on_random_three_block_splits(
        dist in dense_dist(3, 3),
        perm in prop::sample::select(vec![
            [0usize, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ]),
    ) {
        let [x, y, z] = perm;
        let cond = lemma_conditioning_reduces(&dist, &[x], &[y], &[z]).unwrap();
        prop_assert!(cond.holds, "conditioning: {} > {}", cond.lhs, cond.rhs);
        let chain = lemma_block_chaining(&dist, &[x], &[y], &[z]).unwrap();
        prop_assert!(chain.holds, "chaining: {} < {}", chain.lhs, chain.rhs);
        let no_z = lemma_block_chaining(&dist, &[x, z], &[y], &[]).unwrap();
        prop_assert!(no_z.holds, "chaining, empty z: {} < {}", no_z.lhs, no_z.rhs);
    }

    #[test]
    fn leakage_lemma_holds_on_random_events(
        dist in any_dense(),
        raw_a in proptest::collection::vec(any::<proptest::sample::Index>(), 1..6),
        raw_b in proptest::collection::vec(any::<proptest::sample::Index>(), 1..6),
        shared in any::<proptest::sample::Index>(),
    ) {
        // One common outcome keeps the intersection nonempty.
        let pin = shared.index(dist.len());
        let mut ia: Vec<usize> = raw_a.iter().map(|s| s.index(dist.len())).collect();
        let mut ib: Vec<usize> = raw_b.iter().map(|s| s.index(dist.len())).collect();
        ia.push(pin);
        ib.push(pin);
        let a = EventSet::from_indices(&dist, &ia).unwrap();
        let b = EventSet::from_indices(&dist, &ib).unwrap();
        let report = lemma_leakage(&dist, &a, &b).unwrap();
        prop_assert!(report.holds, "leakage: {} < {}", report.lhs, report.rhs);
    }

    #[test]
    fn toeplitz_extract_is_linear(
        n in 1u32..=8,
        m_off in 0u32..8,
        picks in proptest::collection::vec(any::<u64>(), 4),
    ) {
        let m = 1 + m_off % n;
        let ext = ToeplitzExtractor::new(n, m).unwrap();
        let seed_mask = (1u64 << ext.seed_bits()) - 1;
        let x_mask = (1u64 << n) - 1;
        let (s1, s2) = (picks[0] & seed_mask, picks[1] & seed_mask);
        let (x, y) = (picks[2] & x_mask, picks[3] & x_mask);
        prop_assert_eq!(
            ext.extract(x ^ y, s1).unwrap(),
            ext.extract(x, s1).unwrap() ^ ext.extract(y, s1).unwrap()
        );
        prop_assert_eq!(
            ext.extract(x, s1 ^ s2).unwrap(),
            ext.extract(x, s1).unwrap() ^ ext.extract(x, s2).unwrap()
        );
    }
}

proptest! {
    // Seed enumeration makes these cases pricier; fewer of them suffice.
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samplers_stay_in_range(
        t in 2usize..=8,
        ell_off in 0usize..8,
        kind_pick in 0usize..3,
        seed_sel in any::<proptest::sample::Index>(),
    ) {
        // t^ell must stay within the enumerable-seed cap for every kind.
        let ell = 1 + ell_off % t.min(6);
        let kind = match kind_pick {
            0 => SamplerKind::WithReplacement,
            1 => SamplerKind::DistinctSubset { seed_bits: 10 },
            _ => SamplerKind::Exhaustive,
        };
        let spec = SamplerSpec::new(kind, t, ell).unwrap();
        let count = spec.seed_count().unwrap();
        prop_assert!(count <= 1 << spec.seed_bits().unwrap());
        let seed = seed_sel.index(count as usize) as u64;
        let sample = sample_indices(&spec, seed).unwrap();
        prop_assert_eq!(sample.len(), ell);
        prop_assert!(sample.iter().all(|&i| i < t));
        prop_assert_eq!(&sample, &sample_indices(&spec, seed).unwrap());
        if !matches!(kind, SamplerKind::WithReplacement) {
            let mut dedup = sample.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), ell);
        }
    }

    #[test]
    fn failure_estimate_obeys_hoeffding(
        f in proptest::collection::vec(0.0_f64..=1.0, 6),
        ell in 1usize..=4,
        theta in 0.05_f64..0.9,
    ) {
        let spec = SamplerSpec::new(SamplerKind::WithReplacement, 6, ell).unwrap();
        let mu = f.iter().sum::<f64>() / 6.0;
        let failure = sampler_failure_estimate(&spec, &f, mu, theta).unwrap();
        prop_assert!(failure <= hoeffding_bound(ell, theta) + 1e-12);
    }

    #[test]
    fn sampled_rates_are_valid_rates(
        dist in sparse_dist(3, 4),
        ell in 1usize..=3,
    ) {
        let partition = prune_tiny_parts(
            &spoil(&dist, SpoilParams::new(0.005, 0.5).unwrap()),
            0.01,
        );
        let spec = SamplerSpec::new(SamplerKind::Exhaustive, 4, ell).unwrap();
        let report = nz_experiment(&dist, &partition, &spec, 0.01).unwrap();
        prop_assert!(report.per_seed_rates.iter().all(|r| (0.0..=1.0 + 1e-12).contains(r)));
        let mut sorted = report.per_seed_rates.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(report.beta, sorted[0]);
        prop_assert!(report.err_spoil > 0.0 && report.err_samp > 0.0);
    }
}
