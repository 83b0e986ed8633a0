//! Surprise-grid partitions.
//!
//! Bucketing outcomes by their quantized surprise vectors splits the domain
//! into parts inside which every conditional block probability is flat up to
//! a factor `2^{2δ}`: revealing the (few-bit) part index turns an arbitrary
//! source into a near-block-source. The cell side is `2δ` bits, so each part
//! sits inside an ℓ∞ ball of radius `δ` around its cell center.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dist::{EventSet, JointDistribution, PrefixMarginals, MASS_TOL};
use crate::error::{Error, Result};
use crate::math;

/// Coordinates of a grid cell: one quantized surprise per block.
pub type CellIndex = Vec<u32>;

/// Construction parameters: mass budget `epsilon` and flatness scale `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpoilParams {
    epsilon: f64,
    delta: f64,
}

impl SpoilParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidEpsilon { value: epsilon });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidDelta { value: delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Grid cell side in bits; within-part surprises differ by at most this.
    pub fn cell_side(&self) -> f64 {
        2.0 * self.delta
    }
}

/// Disjoint outcome sets indexed by grid cell, plus the low-mass remainder.
///
/// Invariants (checked by [`validate_partition`]):
/// * parts are pairwise disjoint, disjoint from `uncovered`, and their union
///   with `uncovered` is exactly the support of the source distribution;
/// * every part is nonempty and its members share the part's cell index;
/// * part masses match the distribution to within [`MASS_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpoilingPartition {
    alphabet_size: usize,
    blocks: usize,
    params: SpoilParams,
    simplex_side: f64,
    parts: BTreeMap<CellIndex, EventSet>,
    uncovered: EventSet,
}

impl SpoilingPartition {
    /// Reassembles a partition from its pieces (e.g. parsed from a file).
    ///
    /// Only structural consistency is checked here; run
    /// [`validate_partition`] against the source distribution to confirm the
    /// pieces actually describe it.
    pub fn from_parts(
        alphabet_size: usize,
        blocks: usize,
        params: SpoilParams,
        parts: BTreeMap<CellIndex, EventSet>,
        uncovered: EventSet,
    ) -> Result<Self> {
        let table_len = table_len(alphabet_size, blocks)?;
        for (cell, part) in &parts {
            if cell.len() != blocks {
                return Err(Error::PartitionMismatch {
                    detail: "cell index length differs from block count",
                });
            }
            if part.is_empty() {
                return Err(Error::PartitionMismatch {
                    detail: "empty part",
                });
            }
            if part.table_len() != table_len {
                return Err(Error::PartitionMismatch {
                    detail: "part table length differs from domain size",
                });
            }
        }
        if uncovered.table_len() != table_len {
            return Err(Error::PartitionMismatch {
                detail: "uncovered table length differs from domain size",
            });
        }
        let mut seen = alloc::vec![false; table_len];
        let members = parts
            .values()
            .flat_map(|part| part.indices())
            .chain(uncovered.indices());
        for &idx in members {
            if seen[idx] {
                return Err(Error::PartitionMismatch {
                    detail: "overlapping outcome sets",
                });
            }
            seen[idx] = true;
        }
        Ok(Self {
            alphabet_size,
            blocks,
            params,
            simplex_side: simplex_side(alphabet_size, blocks, params.epsilon),
            parts,
            uncovered,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn params(&self) -> SpoilParams {
        self.params
    }

    /// Side length `L = t·log2|X| + log2(1/ε)` of the simplex the surprise
    /// vectors of covered outcomes live in.
    pub fn simplex_side(&self) -> f64 {
        self.simplex_side
    }

    pub fn parts(&self) -> &BTreeMap<CellIndex, EventSet> {
        &self.parts
    }

    pub fn uncovered(&self) -> &EventSet {
        &self.uncovered
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// Total mass of all parts; at least `1 − ε` by construction.
    pub fn covered_mass(&self) -> f64 {
        self.parts.values().map(EventSet::mass).sum()
    }

    /// Bits needed to index the parts: `⌈log2 |parts|⌉`.
    pub fn bit_length(&self) -> u32 {
        ceil_log2(self.parts.len())
    }
}

/// Outcomes whose probability reaches `ε/|X|^t`; misses at most `ε` mass.
pub fn significant_set(dist: &JointDistribution, epsilon: f64) -> Result<EventSet> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon { value: epsilon });
    }
    let threshold = epsilon / dist.len() as f64;
    let mut indices = Vec::new();
    let mut mass = 0.0;
    for (idx, &p) in dist.probs().iter().enumerate() {
        if p >= threshold {
            indices.push(idx);
            mass += p;
        }
    }
    Ok(EventSet::from_sorted_indices_unchecked(
        dist.len(),
        indices,
        mass,
    ))
}

/// Builds the partition: every significant outcome goes to the grid cell of
/// its surprise vector, the rest of the support goes to `uncovered`.
///
/// Deterministic; outcomes with zero probability appear in neither place.
pub fn spoil(dist: &JointDistribution, params: SpoilParams) -> SpoilingPartition {
    let threshold = params.epsilon / dist.len() as f64;
    let pm = dist.prefix_marginals();
    let mut groups: BTreeMap<CellIndex, (Vec<usize>, f64)> = BTreeMap::new();
    let mut uncovered_indices = Vec::new();
    let mut uncovered_mass = 0.0;
    for idx in 0..dist.len() {
        let p = pm.prob_at(idx);
        if p <= 0.0 {
            continue;
        }
        if p < threshold {
            uncovered_indices.push(idx);
            uncovered_mass += p;
            continue;
        }
        let cell = cell_of(&pm, idx, params.cell_side()).expect("positive-mass outcome");
        let slot = groups.entry(cell).or_insert_with(|| (Vec::new(), 0.0));
        slot.0.push(idx);
        slot.1 += p;
    }
    let parts = groups
        .into_iter()
        .map(|(cell, (indices, mass))| {
            (
                cell,
                EventSet::from_sorted_indices_unchecked(dist.len(), indices, mass),
            )
        })
        .collect();
    SpoilingPartition {
        alphabet_size: dist.alphabet_size(),
        blocks: dist.blocks(),
        params,
        simplex_side: simplex_side(dist.alphabet_size(), dist.blocks(), params.epsilon),
        parts,
        uncovered: EventSet::from_sorted_indices_unchecked(
            dist.len(),
            uncovered_indices,
            uncovered_mass,
        ),
    }
}

/// Moves every part of mass below `ε/(2·|parts|)` into `uncovered`.
///
/// `epsilon` is the final leftover budget: build the partition with budget
/// `ε/2` first, then prune with `ε`, and the covered mass stays ≥ `1 − ε`
/// while surviving parts are never negligible. Construction parameters are
/// left untouched — they record how the parts were built.
pub fn prune_tiny_parts(partition: &SpoilingPartition, epsilon: f64) -> SpoilingPartition {
    let count = partition.parts.len();
    let mut out = partition.clone();
    if count == 0 {
        return out;
    }
    let threshold = epsilon / (2.0 * count as f64);
    let mut moved_indices: Vec<usize> = Vec::new();
    let mut moved_mass = 0.0;
    out.parts.retain(|_, part| {
        if part.mass() < threshold {
            moved_indices.extend_from_slice(part.indices());
            moved_mass += part.mass();
            false
        } else {
            true
        }
    });
    if moved_indices.is_empty() {
        return out;
    }
    moved_indices.extend_from_slice(out.uncovered.indices());
    moved_indices.sort_unstable();
    out.uncovered = EventSet::from_sorted_indices_unchecked(
        out.uncovered.table_len(),
        moved_indices,
        out.uncovered.mass() + moved_mass,
    );
    out
}

/// Per-part, per-block flatness certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    /// For each part and block: max ratio of conditional block probabilities
    /// between two members. Always ≥ 1; the construction caps it at `2^{2δ}`.
    pub per_part_per_block_max_ratio: BTreeMap<CellIndex, Vec<f64>>,
    pub global_max_ratio: f64,
    /// `⌈log2 |parts|⌉`.
    pub bit_length: u32,
    /// Grid bound on the bits needed: `t·(log2(L/(2δ)) + 1)`.
    pub bound_bits: f64,
}

/// Measures within-part conditional flatness after checking that the
/// partition really describes `dist`.
pub fn verify_flatness(
    dist: &JointDistribution,
    partition: &SpoilingPartition,
) -> Result<FlatnessReport> {
    validate_partition(dist, partition)?;
    let pm = dist.prefix_marginals();
    let mut table = BTreeMap::new();
    let mut global: f64 = 1.0;
    for (cell, part) in &partition.parts {
        let mut ratios = Vec::with_capacity(partition.blocks);
        for block in 0..partition.blocks {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0_f64;
            for &idx in part.indices() {
                let c = pm
                    .conditional_at(idx, block)
                    .expect("validated member has positive prefixes");
                lo = lo.min(c);
                hi = hi.max(c);
            }
            let ratio = hi / lo;
            global = global.max(ratio);
            ratios.push(ratio);
        }
        table.insert(cell.clone(), ratios);
    }
    Ok(FlatnessReport {
        per_part_per_block_max_ratio: table,
        global_max_ratio: global,
        bit_length: ceil_log2(partition.parts.len()),
        bound_bits: partition.blocks as f64
            * (math::log2(partition.simplex_side / partition.params.cell_side()) + 1.0),
    })
}

/// Bits needed to index the parts, and whether that stays within the grid
/// bound `t·⌈log2(L/(2δ)) + 1⌉`.
pub fn partition_bit_length(partition: &SpoilingPartition) -> (u32, bool) {
    let bit_length = ceil_log2(partition.parts.len());
    let per_block = math::ceil(
        math::log2(partition.simplex_side / partition.params.cell_side()) + 1.0,
    );
    let bound = partition.blocks as f64 * per_block;
    (bit_length, bit_length as f64 <= bound)
}

/// Checks that `partition` is a faithful decomposition of `dist`: matching
/// dimensions, disjoint sets covering exactly the support, masses that agree
/// with the table, members above the build-time significance threshold, and
/// cell keys that reproduce under recomputation.
pub fn validate_partition(dist: &JointDistribution, partition: &SpoilingPartition) -> Result<()> {
    if partition.alphabet_size != dist.alphabet_size() || partition.blocks != dist.blocks() {
        return Err(Error::PartitionMismatch {
            detail: "distribution dimensions differ",
        });
    }
    if partition.uncovered.table_len() != dist.len()
        || partition.parts.values().any(|p| p.table_len() != dist.len())
    {
        return Err(Error::PartitionMismatch {
            detail: "table length differs from domain size",
        });
    }
    let pm = dist.prefix_marginals();
    let threshold = partition.params.epsilon / dist.len() as f64;
    let side = partition.params.cell_side();
    let mut seen = alloc::vec![false; dist.len()];
    for (cell, part) in &partition.parts {
        if part.is_empty() {
            return Err(Error::PartitionMismatch { detail: "empty part" });
        }
        let mut mass = 0.0;
        for &idx in part.indices() {
            let p = pm.prob_at(idx);
            if p < threshold {
                // Covers p == 0 too: parts hold significant outcomes only.
                return Err(Error::PartitionMismatch {
                    detail: "part member below significance threshold",
                });
            }
            if seen[idx] {
                return Err(Error::PartitionMismatch {
                    detail: "overlapping outcome sets",
                });
            }
            seen[idx] = true;
            mass += p;
            let recomputed = cell_of(&pm, idx, side).expect("positive-mass outcome");
            if recomputed != *cell {
                return Err(Error::PartitionMismatch {
                    detail: "cell key does not match member surprises",
                });
            }
        }
        if math::abs(mass - part.mass()) > MASS_TOL {
            return Err(Error::PartitionMismatch {
                detail: "part mass does not match distribution",
            });
        }
    }
    let mut uncovered_mass = 0.0;
    for &idx in partition.uncovered.indices() {
        let p = pm.prob_at(idx);
        if p <= 0.0 {
            return Err(Error::PartitionMismatch {
                detail: "uncovered member outside support",
            });
        }
        if seen[idx] {
            return Err(Error::PartitionMismatch {
                detail: "overlapping outcome sets",
            });
        }
        seen[idx] = true;
        uncovered_mass += p;
    }
    if math::abs(uncovered_mass - partition.uncovered.mass()) > MASS_TOL {
        return Err(Error::PartitionMismatch {
            detail: "uncovered mass does not match distribution",
        });
    }
    for (idx, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 && !seen[idx] {
            return Err(Error::PartitionMismatch {
                detail: "support outcome missing from partition",
            });
        }
    }
    Ok(())
}

/// Grid cell of the outcome at `idx`: `⌊r_i / side⌋` per block. Surprises on
/// an exact cell boundary land in the higher-index cell.
fn cell_of(pm: &PrefixMarginals, idx: usize, side: f64) -> Result<CellIndex> {
    let surprise = pm.surprise_at(idx)?;
    Ok(surprise
        .per_block()
        .iter()
        .map(|&r| math::floor(r / side) as u32) // saturating cast
        .collect())
}

fn simplex_side(alphabet_size: usize, blocks: usize, epsilon: f64) -> f64 {
    blocks as f64 * math::log2(alphabet_size as f64) - math::log2(epsilon)
}

fn ceil_log2(count: usize) -> u32 {
    if count <= 1 {
        0
    } else {
        count.next_power_of_two().trailing_zeros()
    }
}

fn table_len(alphabet_size: usize, blocks: usize) -> Result<usize> {
    if alphabet_size < 2 || blocks == 0 {
        return Err(Error::InvalidParams("alphabet_size >= 2 and blocks >= 1"));
    }
    let outcomes = (alphabet_size as u128).checked_pow(blocks as u32);
    match outcomes {
        Some(n) if n <= crate::dist::MAX_OUTCOMES as u128 => Ok(n as usize),
        Some(n) => Err(Error::TooLarge {
            outcomes: n,
            cap: crate::dist::MAX_OUTCOMES,
        }),
        None => Err(Error::TooLarge {
            outcomes: u128::MAX,
            cap: crate::dist::MAX_OUTCOMES,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist_half_quarter_eighths() -> JointDistribution {
        JointDistribution::from_probabilities(2, 2, vec![0.5, 0.25, 0.125, 0.125]).unwrap()
    }

    #[test]
    fn params_reject_bad_ranges() {
        assert!(matches!(
            SpoilParams::new(0.0, 0.5),
            Err(Error::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            SpoilParams::new(1.0, 0.5),
            Err(Error::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            SpoilParams::new(0.5, 0.0),
            Err(Error::InvalidDelta { .. })
        ));
        assert!(matches!(
            SpoilParams::new(0.5, f64::INFINITY),
            Err(Error::InvalidDelta { .. })
        ));
        let p = SpoilParams::new(0.01, 0.25).unwrap();
        assert_eq!(p.cell_side(), 0.5);
    }

    #[test]
    fn significant_set_uniform_is_everything() {
        let dist = JointDistribution::uniform(2, 2).unwrap();
        let a = significant_set(&dist, 0.99).unwrap();
        assert_eq!(a.indices(), &[0, 1, 2, 3]);
        assert_eq!(a.mass(), 1.0);
    }

    #[test]
    fn significant_set_drops_light_outcomes() {
        let dist = dist_half_quarter_eighths();
        // threshold 0.6/4 = 0.15 cuts both 0.125 outcomes
        let a = significant_set(&dist, 0.6).unwrap();
        assert_eq!(a.indices(), &[0, 1]);
        assert!((a.mass() - 0.75).abs() < 1e-12);
        assert!(a.mass() >= 1.0 - 0.6);
    }

    #[test]
    fn significant_set_point_mass() {
        let dist = JointDistribution::point(2, 2, &[1, 0]).unwrap();
        let a = significant_set(&dist, 0.5).unwrap();
        assert_eq!(a.indices(), &[2]);
        assert_eq!(a.mass(), 1.0);
    }

    #[test]
    fn spoil_uniform_single_cell() {
        let dist = JointDistribution::uniform(2, 2).unwrap();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.5).unwrap());
        assert_eq!(partition.part_count(), 1);
        let (cell, part) = partition.parts().iter().next().unwrap();
        assert_eq!(cell, &vec![1, 1]);
        assert_eq!(part.indices(), &[0, 1, 2, 3]);
        assert!(partition.uncovered().is_empty());
        assert_eq!(partition.covered_mass(), 1.0);
    }

    #[test]
    fn spoil_worked_cells() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        assert_eq!(partition.part_count(), 3);
        assert_eq!(partition.parts()[&vec![0, 1]].indices(), &[0]);
        assert_eq!(partition.parts()[&vec![0, 3]].indices(), &[1]);
        assert_eq!(partition.parts()[&vec![4, 2]].indices(), &[2, 3]);
        assert!(partition.uncovered().is_empty());
    }

    #[test]
    fn spoil_large_epsilon_uncovers_light_outcomes() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.6, 0.25).unwrap());
        assert_eq!(partition.part_count(), 2);
        assert!(partition.parts().contains_key(&vec![0, 1]));
        assert!(partition.parts().contains_key(&vec![0, 3]));
        assert_eq!(partition.uncovered().indices(), &[2, 3]);
        assert!((partition.uncovered().mass() - 0.25).abs() < 1e-12);
        assert!(partition.covered_mass() >= 1.0 - 0.6);
    }

    #[test]
    fn spoil_skips_zero_probability_outcomes() {
        let dist = JointDistribution::from_probabilities(2, 2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.5).unwrap());
        let mut members: Vec<usize> = partition
            .parts()
            .values()
            .flat_map(|p| p.indices().to_vec())
            .chain(partition.uncovered().indices().to_vec())
            .collect();
        members.sort_unstable();
        assert_eq!(members, vec![0, 1]);
        validate_partition(&dist, &partition).unwrap();
    }

    #[test]
    fn spoil_is_deterministic() {
        let dist = dist_half_quarter_eighths();
        let params = SpoilParams::new(0.01, 0.25).unwrap();
        assert_eq!(spoil(&dist, params), spoil(&dist, params));
    }

    // Four singleton parts of masses ~(.6, .3, .0999, .0001).
    fn four_part_partition() -> (JointDistribution, SpoilingPartition) {
        let dist =
            JointDistribution::from_probabilities(4, 1, vec![0.6, 0.3, 0.0999, 0.0001]).unwrap();
        let partition = spoil(&dist, SpoilParams::new(0.0004, 0.25).unwrap());
        assert_eq!(partition.part_count(), 4);
        (dist, partition)
    }

    #[test]
    fn prune_moves_sub_threshold_parts() {
        let (dist, partition) = four_part_partition();
        // threshold 0.01/8 = 0.00125 exceeds the 0.0001 part
        let pruned = prune_tiny_parts(&partition, 0.01);
        assert_eq!(pruned.part_count(), 3);
        assert!((pruned.covered_mass() - 0.9999).abs() < 1e-9);
        assert!((pruned.uncovered().mass() - 0.0001).abs() < 1e-9);
        assert!(pruned.covered_mass() >= 1.0 - 0.01);
        assert_eq!(pruned.params(), partition.params());
        validate_partition(&dist, &pruned).unwrap();
    }

    #[test]
    fn prune_large_budget_drops_two_parts() {
        let (_, partition) = four_part_partition();
        // threshold 0.8/8 = 0.1 exceeds both the 0.0999 and 0.0001 parts
        let pruned = prune_tiny_parts(&partition, 0.8);
        assert_eq!(pruned.part_count(), 2);
        assert!((pruned.covered_mass() - 0.9).abs() < 1e-9);
        assert!(pruned.covered_mass() >= 1.0 - 0.8);
        for part in pruned.parts().values() {
            assert!(part.mass() >= 0.1);
        }
    }

    #[test]
    fn prune_keeps_heavy_parts_untouched() {
        let (_, partition) = four_part_partition();
        // threshold 0.0001/8 is below every part mass
        let pruned = prune_tiny_parts(&partition, 0.0001);
        assert_eq!(pruned, partition);

        let uniform = JointDistribution::uniform(2, 2).unwrap();
        let single = spoil(&uniform, SpoilParams::new(0.01, 0.5).unwrap());
        assert_eq!(prune_tiny_parts(&single, 0.99), single);
    }

    #[test]
    fn flatness_uniform_all_ratios_one() {
        let dist = JointDistribution::uniform(2, 2).unwrap();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.5).unwrap());
        let report = verify_flatness(&dist, &partition).unwrap();
        assert_eq!(report.global_max_ratio, 1.0);
        assert_eq!(report.bit_length, 0);
        for ratios in report.per_part_per_block_max_ratio.values() {
            assert_eq!(ratios, &vec![1.0, 1.0]);
        }
    }

    #[test]
    fn flatness_worked_example() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let report = verify_flatness(&dist, &partition).unwrap();
        assert_eq!(report.global_max_ratio, 1.0);
        assert!(report.global_max_ratio <= (2.0_f64).powf(0.5) * (1.0 + 1e-9));
        assert_eq!(report.bit_length, 2);
        // t·(log2(L/(2δ)) + 1) with L = 2 + log2(100) ≈ 8.644 → ≈ 10.22
        assert!(report.bound_bits > 10.2 && report.bound_bits < 10.25);
    }

    #[test]
    fn bit_length_within_grid_bound() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let (bits, within) = partition_bit_length(&partition);
        assert_eq!(bits, 2);
        assert!(within);

        let uniform = JointDistribution::uniform(2, 2).unwrap();
        let single = spoil(&uniform, SpoilParams::new(0.01, 0.5).unwrap());
        assert_eq!(partition_bit_length(&single), (0, true));
    }

    #[test]
    fn part_count_bounded_by_grid_and_support() {
        let dist = dist_half_quarter_eighths();
        let params = SpoilParams::new(0.01, 0.25).unwrap();
        let partition = spoil(&dist, params);
        let grid_cells =
            (math::floor(partition.simplex_side() / params.cell_side()) + 1.0) as usize;
        let cap = grid_cells.pow(2).min(4);
        assert!(partition.part_count() <= cap);
    }

    #[test]
    fn covered_surprises_live_in_simplex() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let pm = dist.prefix_marginals();
        for part in partition.parts().values() {
            for &idx in part.indices() {
                let r = pm.surprise_at(idx).unwrap();
                assert!(r.per_block().iter().all(|&ri| ri >= 0.0));
                assert!(r.total() <= partition.simplex_side() + 1e-9);
            }
        }
    }

    #[test]
    fn shrinking_delta_never_raises_max_ratio() {
        let probs = vec![0.18, 0.17, 0.15, 0.14, 0.12, 0.10, 0.08, 0.06];
        let dist = JointDistribution::from_probabilities(2, 3, probs).unwrap();
        let mut last = f64::INFINITY;
        for delta in [0.5, 0.25, 0.125] {
            let partition = spoil(&dist, SpoilParams::new(0.01, delta).unwrap());
            let report = verify_flatness(&dist, &partition).unwrap();
            assert!(report.global_max_ratio <= (2.0_f64).powf(2.0 * delta) * (1.0 + 1e-9));
            assert!(report.global_max_ratio <= last);
            last = report.global_max_ratio;
        }
    }

    #[test]
    fn validate_rejects_foreign_distribution() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let other = JointDistribution::uniform(2, 2).unwrap();
        assert!(matches!(
            verify_flatness(&other, &partition),
            Err(Error::PartitionMismatch { .. })
        ));
    }

    #[test]
    fn from_parts_round_trip() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let rebuilt = SpoilingPartition::from_parts(
            partition.alphabet_size(),
            partition.blocks(),
            partition.params(),
            partition.parts().clone(),
            partition.uncovered().clone(),
        )
        .unwrap();
        assert_eq!(rebuilt, partition);
        validate_partition(&dist, &rebuilt).unwrap();
    }

    #[test]
    fn from_parts_rejects_overlap_and_bad_cells() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let mut overlapping = partition.parts().clone();
        let dup = overlapping[&vec![0, 1]].clone();
        overlapping.insert(vec![9, 9], dup);
        assert!(matches!(
            SpoilingPartition::from_parts(2, 2, partition.params(), overlapping, partition.uncovered().clone()),
            Err(Error::PartitionMismatch {
                detail: "overlapping outcome sets"
            })
        ));

        let mut bad_cell = BTreeMap::new();
        bad_cell.insert(vec![0], partition.parts()[&vec![0, 1]].clone());
        assert!(matches!(
            SpoilingPartition::from_parts(2, 2, partition.params(), bad_cell, partition.uncovered().clone()),
            Err(Error::PartitionMismatch {
                detail: "cell index length differs from block count"
            })
        ));
    }

    #[test]
    fn validate_rejects_tampered_cell_key() {
        let dist = dist_half_quarter_eighths();
        let partition = spoil(&dist, SpoilParams::new(0.01, 0.25).unwrap());
        let mut parts = partition.parts().clone();
        let moved = parts.remove(&vec![0, 1]).unwrap();
        parts.insert(vec![7, 7], moved);
        let tampered = SpoilingPartition::from_parts(
            2,
            2,
            partition.params(),
            parts,
            partition.uncovered().clone(),
        )
        .unwrap();
        assert!(matches!(
            validate_partition(&dist, &tampered),
            Err(Error::PartitionMismatch {
                detail: "cell key does not match member surprises"
            })
        ));
    }
}
