//! Entropy measures on probability tables.
//!
//! Everything is in bits (all logarithms base 2). Plain measures take a raw
//! probability table; conditional measures take a distribution plus an
//! explicit split saying which blocks play X and which play Y. Blocks in
//! neither set are summed out first.
//!
//! Conventions that matter:
//! * worst-case conditional min-entropy minimizes over conditioning values of
//!   positive probability only;
//! * average conditional min-entropy is `-log2 E_y [max_x p(x|y)]`, which
//!   collapses to `-log2 sum_y max_x p(x, y)`;
//! * smoothing maximizes min-entropy over the total-variation ball of radius
//!   epsilon, realized exactly by capping the largest probabilities
//!   (threshold trimming) — see [`smooth_min_entropy`].

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{normalized_index_set, JointDistribution};
use crate::error::{Error, Result};
use crate::math;

/// Shannon entropy of a probability table, in bits. Zero entries contribute
/// zero.
pub fn shannon_entropy(table: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in table {
        if p > 0.0 {
            h -= p * math::log2(p);
        }
    }
    h
}

/// Min-entropy `-log2 max_x p(x)` of a probability table, in bits.
pub fn min_entropy(table: &[f64]) -> f64 {
    let max = table.iter().copied().fold(0.0, f64::max);
    -math::log2(max)
}

/// Statistical (total-variation) distance: half the l1 distance.
pub fn statistical_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        sum += math::abs(a - b);
    }
    Ok(sum / 2.0)
}

/// Worst-case conditional min-entropy `H_inf(X|Y) = min_y H_inf(X|Y=y)`,
/// minimized over conditioning values of positive probability.
pub fn cond_min_entropy_worst(
    dist: &JointDistribution,
    x_blocks: &[usize],
    y_blocks: &[usize],
) -> Result<f64> {
    let (table, nx, ny) = grouped_xy(dist, x_blocks, y_blocks)?;
    let mut worst_ratio = 0.0f64;
    for iy in 0..ny {
        let row = &table[iy * nx..(iy + 1) * nx];
        let py: f64 = row.iter().sum();
        if py == 0.0 {
            continue;
        }
        let max = row.iter().copied().fold(0.0, f64::max);
        worst_ratio = worst_ratio.max(max / py);
    }
    Ok(-math::log2(worst_ratio))
}

/// Average conditional min-entropy `-log2 sum_y max_x p(x, y)`.
pub fn cond_min_entropy_avg(
    dist: &JointDistribution,
    x_blocks: &[usize],
    y_blocks: &[usize],
) -> Result<f64> {
    let (table, nx, ny) = grouped_xy(dist, x_blocks, y_blocks)?;
    let mut sum = 0.0;
    for iy in 0..ny {
        let row = &table[iy * nx..(iy + 1) * nx];
        sum += row.iter().copied().fold(0.0, f64::max);
    }
    Ok(-math::log2(sum))
}

/// The trimmed table achieving a smooth min-entropy value.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingWitness {
    /// The epsilon-close table: largest entries capped, removed mass
    /// redistributed below the cap.
    pub trimmed: Vec<f64>,
    /// Statistical distance actually spent, at most the requested epsilon.
    pub tv_used: f64,
}

/// Smooth min-entropy by threshold trimming, with the witness achieving it.
///
/// Over the total-variation ball of radius `epsilon` the achievable maximum
/// probability is exactly `c* = max(c_eps, 1/N)` where `c_eps` is the
/// smallest cap whose clipped excess `sum_x (p(x) - c)^+` is `epsilon` and
/// `N` is the table length: capping any lower either costs more than
/// `epsilon` in distance or leaves nowhere for the unit of mass to sit.
/// Returns `-log2 c*` and the capped table. Excess mass is redistributed onto
/// below-cap entries in descending-probability order (ties by index), then
/// onto zero entries in index order; the order never affects the value, only
/// the witness.
pub fn smooth_min_entropy(table: &[f64], epsilon: f64) -> Result<(f64, SmoothingWitness)> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidEpsilon { value: epsilon });
    }
    if table.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: 0,
        });
    }
    let n = table.len();
    let cap = trim_cap(table, epsilon);

    let mut trimmed: Vec<f64> = table.iter().map(|&p| p.min(cap)).collect();
    let kept: f64 = trimmed.iter().sum();
    let mut deficit = 1.0 - kept;
    if deficit > 0.0 {
        // Largest below-cap entries first, zero entries (by index) last.
        let mut order: Vec<usize> = (0..n).filter(|&i| trimmed[i] < cap).collect();
        order.sort_by(|&a, &b| table[b].total_cmp(&table[a]).then(a.cmp(&b)));
        for i in order {
            let add = (cap - trimmed[i]).min(deficit);
            trimmed[i] += add;
            deficit -= add;
            if deficit <= 0.0 {
                break;
            }
        }
    }
    let tv_used = statistical_distance(table, &trimmed)?;
    Ok((-math::log2(cap), SmoothingWitness { trimmed, tv_used }))
}

/// The optimal trimming cap for [`smooth_min_entropy`]; exposed within the
/// crate so conditional smoothing can reuse it on sparse layouts.
pub(crate) fn trim_cap_sparse(sorted_desc: &[f64], domain_len: f64, epsilon: f64) -> f64 {
    // Water-filling on the sorted positive entries: the smallest cap with
    // excess exactly epsilon is (S_k - eps)/k for the first k where that
    // value stays above the next entry.
    let mut c_eps = 0.0;
    let mut prefix = 0.0;
    for (k, &v) in sorted_desc.iter().enumerate() {
        prefix += v;
        let candidate = (prefix - epsilon) / (k + 1) as f64;
        let next = sorted_desc.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if candidate >= next {
            c_eps = candidate;
            break;
        }
    }
    c_eps.max(1.0 / domain_len)
}

fn trim_cap(table: &[f64], epsilon: f64) -> f64 {
    let mut sorted: Vec<f64> = table.iter().copied().filter(|&p| p > 0.0).collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    trim_cap_sparse(&sorted, table.len() as f64, epsilon)
}

/// Builds the grouped table `p[(y, x)]` for a split, y-major.
fn grouped_xy(
    dist: &JointDistribution,
    x_blocks: &[usize],
    y_blocks: &[usize],
) -> Result<(Vec<f64>, usize, usize)> {
    let x = normalized_index_set(x_blocks, dist.blocks())?;
    let y = if y_blocks.is_empty() {
        Vec::new()
    } else {
        normalized_index_set(y_blocks, dist.blocks())?
    };
    if x.iter().any(|b| y.contains(b)) {
        return Err(Error::BadSplit);
    }
    let asz = dist.alphabet_size();
    let nx = asz.pow(x.len() as u32);
    let ny = asz.pow(y.len() as u32);
    let x_strides: Vec<usize> = x
        .iter()
        .map(|&b| asz.pow((dist.blocks() - 1 - b) as u32))
        .collect();
    let y_strides: Vec<usize> = y
        .iter()
        .map(|&b| asz.pow((dist.blocks() - 1 - b) as u32))
        .collect();
    let mut table = vec![0.0; nx * ny];
    for (idx, &p) in dist.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut ix = 0usize;
        for &s in &x_strides {
            ix = ix * asz + (idx / s) % asz;
        }
        let mut iy = 0usize;
        for &s in &y_strides {
            iy = iy * asz + (idx / s) % asz;
        }
        table[iy * nx + ix] += p;
    }
    Ok((table, nx, ny))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_of_biased_bit() {
        let h = shannon_entropy(&[0.75, 0.25]);
        assert!((h - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn shannon_ignores_zero_entries() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn min_entropy_of_uniform_table() {
        assert!((min_entropy(&[0.25; 4]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn statistical_distance_is_half_l1() {
        let d = statistical_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let d = statistical_distance(&[0.5, 0.5], &[0.4, 0.6]).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn statistical_distance_rejects_shape_mismatch() {
        assert!(matches!(
            statistical_distance(&[1.0], &[0.5, 0.5]),
            Err(Error::ShapeMismatch { left: 1, right: 2 })
        ));
    }

    // Joint with p(x=0,y=0)=1/2, p(x=0,y=1)=1/4, p(x=1,y=1)=1/4.
    // x = block 0, y = block 1.
    fn avg_example() -> JointDistribution {
        JointDistribution::from_probabilities(2, 2, vec![0.5, 0.25, 0.0, 0.25]).unwrap()
    }

    #[test]
    fn average_conditional_matches_hand_value() {
        // E_y 2^{-H_inf(X|Y=y)} = 1/2 * 1 + 1/2 * 1/2 = 3/4.
        let h = cond_min_entropy_avg(&avg_example(), &[0], &[1]).unwrap();
        assert!((h - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn worst_conditional_takes_the_minimum() {
        let h = cond_min_entropy_worst(&avg_example(), &[0], &[1]).unwrap();
        assert!(h.abs() < 1e-12); // y = 0 pins x completely
    }

    #[test]
    fn worst_conditional_skips_zero_mass_values() {
        // y = 1 never happens; only y = 0 (uniform x) counts.
        let d =
            JointDistribution::from_probabilities(2, 2, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let h = cond_min_entropy_worst(&d, &[0], &[1]).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_on_nothing_is_plain_min_entropy() {
        let d = avg_example();
        let h = cond_min_entropy_worst(&d, &[0, 1], &[]).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        let ha = cond_min_entropy_avg(&d, &[0, 1], &[]).unwrap();
        assert!((ha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_must_be_disjoint() {
        assert!(matches!(
            cond_min_entropy_avg(&avg_example(), &[0, 1], &[1]),
            Err(Error::BadSplit)
        ));
    }

    #[test]
    fn smoothing_caps_the_top_entry() {
        // Cap 0.4 spends exactly 0.1 of distance; value -log2(0.4).
        let (h, witness) = smooth_min_entropy(&[0.5, 0.3, 0.2], 0.1).unwrap();
        assert!((h - 1.321_928_094_887_362_2).abs() < 1e-12);
        assert!((witness.tv_used - 0.1).abs() < 1e-12);
        let max = witness.trimmed.iter().copied().fold(0.0, f64::max);
        assert!((max - 0.4).abs() < 1e-12);
        let sum: f64 = witness.trimmed.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_with_zero_epsilon_is_min_entropy() {
        let table = [0.5, 0.3, 0.2];
        let (h, witness) = smooth_min_entropy(&table, 0.0).unwrap();
        assert!((h - min_entropy(&table)).abs() < 1e-12);
        assert_eq!(witness.trimmed, table.to_vec());
        assert_eq!(witness.tv_used, 0.0);
    }

    #[test]
    fn smoothing_spreads_onto_zero_entries_when_needed() {
        // Point mass on a 2-entry table: best achievable max is 1 - eps.
        let (h, witness) = smooth_min_entropy(&[1.0, 0.0], 0.3).unwrap();
        assert!((h + 0.7f64.log2()).abs() < 1e-12);
        assert!((witness.trimmed[0] - 0.7).abs() < 1e-12);
        assert!((witness.trimmed[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn smoothing_cannot_beat_uniform() {
        let (h, witness) = smooth_min_entropy(&[0.25; 4], 0.2).unwrap();
        assert!((h - 2.0).abs() < 1e-12);
        assert_eq!(witness.trimmed, vec![0.25; 4]);
    }

    #[test]
    fn smoothing_rejects_epsilon_at_or_above_one() {
        assert!(matches!(
            smooth_min_entropy(&[1.0], 1.0),
            Err(Error::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            smooth_min_entropy(&[1.0], -0.1),
            Err(Error::InvalidEpsilon { .. })
        ));
    }
}
