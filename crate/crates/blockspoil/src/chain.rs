//! Chain-rule gap measurements and the conditional-entropy lemmas.
//!
//! Within each part of a spoiling partition the chain rule for min-entropy
//! holds up to an additive `O(δ)`, and the average- and worst-case
//! conditional notions nearly coincide. These checks measure both gaps
//! exactly, part by part; the three lemmas below are unconditional theorems
//! and must hold on every input.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dist::{EventSet, JointDistribution};
use crate::entropy::{cond_min_entropy_avg, cond_min_entropy_worst, min_entropy};
use crate::error::{Error, Result};
use crate::math;
use crate::spoiling::{CellIndex, SpoilingPartition};

/// Slack for theorem checks; violations beyond this are real bugs.
pub const LEMMA_TOL: f64 = 1e-9;

/// Measured entropy gaps for one part, one block, one prefix set.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRuleReport {
    /// Cell index of the part the gaps were measured on.
    pub part: CellIndex,
    /// Block `i` whose conditional entropy is examined.
    pub block: usize,
    /// Prefix index set `I ⊆ {0..i-1}` (sorted, deduplicated).
    pub given: Vec<usize>,
    /// `|H_inf(X_i|X_I,B) − (H_inf(X_i,X_I|B) − H_inf(X_I|B))|`.
    pub gap_chain: f64,
    /// `|H̃_inf(X_i|X_I,B) − H_inf(X_i|X_I,B)|`.
    pub gap_avg_worst: f64,
    /// Flatness scale the partition was built with.
    pub delta: f64,
}

/// Per-part chain-rule gaps for block `block` given prefix set `given`.
///
/// All entropies are taken on the distribution conditioned on the part, so
/// the gaps are exact rather than proof-bound estimates. One report per
/// positive-mass part.
pub fn check_chain_rule(
    dist: &JointDistribution,
    partition: &SpoilingPartition,
    block: usize,
    given: &[usize],
) -> Result<Vec<ChainRuleReport>> {
    if partition.alphabet_size() != dist.alphabet_size()
        || partition.blocks() != dist.blocks()
        || partition.uncovered().table_len() != dist.len()
    {
        return Err(Error::PartitionMismatch {
            detail: "distribution dimensions differ",
        });
    }
    if block >= dist.blocks() {
        return Err(Error::BlockOutOfRange {
            block,
            blocks: dist.blocks(),
        });
    }
    let mut prefix: Vec<usize> = given.to_vec();
    prefix.sort_unstable();
    prefix.dedup();
    if let Some(&bad) = prefix.iter().find(|&&j| j >= block) {
        return Err(Error::BadIndexSet { block: bad });
    }

    let asz = dist.alphabet_size();
    let t = dist.blocks();
    let prefix_strides: Vec<usize> = prefix
        .iter()
        .map(|&b| asz.pow((t - 1 - b) as u32))
        .collect();
    let block_stride = asz.pow((t - 1 - block) as u32);
    let probs = dist.probs();
    let delta = partition.params().delta();

    let mut reports = Vec::with_capacity(partition.part_count());
    for (cell, part) in partition.parts() {
        let p_b = part.mass();
        if p_b <= 0.0 {
            continue;
        }
        // Group member mass by (projection onto I, x_i); keys sort by
        // projection first, so one ordered scan recovers per-prefix groups.
        let mut joint: BTreeMap<u64, f64> = BTreeMap::new();
        for &idx in part.indices() {
            let mut key = 0u64;
            for &s in &prefix_strides {
                key = key * asz as u64 + ((idx / s) % asz) as u64;
            }
            key = key * asz as u64 + ((idx / block_stride) % asz) as u64;
            *joint.entry(key).or_insert(0.0) += probs[idx];
        }
        let mut max_joint = 0.0_f64;
        let mut max_prefix = 0.0_f64;
        let mut worst_ratio = 0.0_f64;
        let mut avg_sum = 0.0_f64;
        let mut it = joint.iter().peekable();
        while let Some((&key, &mass)) = it.next() {
            let group = key / asz as u64;
            let mut total = mass;
            let mut largest = mass;
            while let Some(&(&next_key, &next_mass)) = it.peek() {
                if next_key / asz as u64 != group {
                    break;
                }
                total += next_mass;
                largest = largest.max(next_mass);
                it.next();
            }
            max_joint = max_joint.max(largest);
            max_prefix = max_prefix.max(total);
            worst_ratio = worst_ratio.max(largest / total);
            avg_sum += largest;
        }
        let h_worst = -math::log2(worst_ratio);
        let h_joint = -math::log2(max_joint / p_b);
        let h_prefix = -math::log2(max_prefix / p_b);
        let h_avg = -math::log2(avg_sum / p_b);
        reports.push(ChainRuleReport {
            part: cell.clone(),
            block,
            given: prefix.clone(),
            gap_chain: math::abs(h_worst - (h_joint - h_prefix)),
            gap_avg_worst: math::abs(h_avg - h_worst),
            delta,
        });
    }
    Ok(reports)
}

/// Same reports as [`check_chain_rule`]; named for the average-vs-worst
/// comparison the `gap_avg_worst` field carries.
pub fn check_avg_vs_worst(
    dist: &JointDistribution,
    partition: &SpoilingPartition,
    block: usize,
    given: &[usize],
) -> Result<Vec<ChainRuleReport>> {
    check_chain_rule(dist, partition, block, given)
}

/// Which theorem a [`LemmaReport`] checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LemmaId {
    /// `H̃_inf(X|Y,Z) ≤ H̃_inf(X|Y)`.
    ConditioningReduces,
    /// `H_inf(X,Y|Z) ≥ H_inf(X|Y,Z) + H_inf(Y|Z)`.
    BlockChaining,
    /// `H_inf(X|B,A) ≥ H_inf(X|B) − log2(1/Pr(A|B))`.
    Leakage,
}

/// Both sides of a lemma inequality, evaluated exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Extra conditioning never raises average min-entropy:
/// `H̃_inf(X|Y,Z) ≤ H̃_inf(X|Y)`. `x`, `y`, `z` must partition the blocks;
/// `y` and `z` may be empty.
pub fn lemma_conditioning_reduces(
    dist: &JointDistribution,
    x: &[usize],
    y: &[usize],
    z: &[usize],
) -> Result<LemmaReport> {
    checked_split(dist.blocks(), x, y, z, false)?;
    let yz: Vec<usize> = y.iter().chain(z).copied().collect();
    let lhs = cond_min_entropy_avg(dist, x, &yz)?;
    let rhs = cond_min_entropy_avg(dist, x, y)?;
    Ok(LemmaReport {
        lemma: LemmaId::ConditioningReduces,
        lhs,
        rhs,
        holds: lhs <= rhs + LEMMA_TOL,
    })
}

/// Worst-case min-entropy chains superadditively:
/// `H_inf(X,Y|Z) ≥ H_inf(X|Y,Z) + H_inf(Y|Z)`. `x`, `y`, `z` must partition
/// the blocks; `z` may be empty.
pub fn lemma_block_chaining(
    dist: &JointDistribution,
    x: &[usize],
    y: &[usize],
    z: &[usize],
) -> Result<LemmaReport> {
    checked_split(dist.blocks(), x, y, z, true)?;
    let xy: Vec<usize> = x.iter().chain(y).copied().collect();
    let yz: Vec<usize> = y.iter().chain(z).copied().collect();
    let lhs = cond_min_entropy_worst(dist, &xy, z)?;
    let rhs = cond_min_entropy_worst(dist, x, &yz)? + cond_min_entropy_worst(dist, y, z)?;
    Ok(LemmaReport {
        lemma: LemmaId::BlockChaining,
        lhs,
        rhs,
        holds: lhs >= rhs - LEMMA_TOL,
    })
}

/// Revealing that an event of conditional probability `p` happened costs at
/// most `log2(1/p)` bits: `H_inf(X|B,A) ≥ H_inf(X|B) − log2(1/Pr(A|B))`.
pub fn lemma_leakage(
    dist: &JointDistribution,
    event_a: &EventSet,
    event_b: &EventSet,
) -> Result<LemmaReport> {
    let ab = event_a.intersect(event_b, dist)?;
    let cond_ab = dist.condition_on_event(&ab)?;
    let cond_b = dist.condition_on_event(event_b)?;
    let lhs = min_entropy(cond_ab.probs());
    let rhs = min_entropy(cond_b.probs()) + math::log2(ab.mass() / event_b.mass());
    Ok(LemmaReport {
        lemma: LemmaId::Leakage,
        lhs,
        rhs,
        holds: lhs >= rhs - LEMMA_TOL,
    })
}

/// Disjointness/coverage check for a three-way block split; `x` (and `y`
/// when `require_y`) must be nonempty, and together the sets must name every
/// block exactly once.
fn checked_split(
    blocks: usize,
    x: &[usize],
    y: &[usize],
    z: &[usize],
    require_y: bool,
) -> Result<()> {
    let mut seen = alloc::vec![false; blocks];
    for &b in x.iter().chain(y).chain(z) {
        if b >= blocks {
            return Err(Error::BlockOutOfRange { block: b, blocks });
        }
        if seen[b] {
            return Err(Error::BadSplit);
        }
        seen[b] = true;
    }
    if x.is_empty() || (require_y && y.is_empty()) || seen.iter().any(|&s| !s) {
        return Err(Error::BadSplit);
    }
    Ok(())
}
