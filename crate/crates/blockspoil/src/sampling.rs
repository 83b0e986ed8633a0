//! Averaging samplers, the sampled-blocks entropy-rate experiment, and a
//! small Toeplitz extractor.
//!
//! The experiment ties the pieces together: a source that is near-flat
//! within every part of a spoiling partition keeps its entropy rate (up to
//! explicit spoiling and sampling error terms) when only a random subset of
//! its blocks is read. Composing a sampler with the extractor then reads few
//! input bits while extracting almost all available randomness.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dist::JointDistribution;
use crate::entropy::{min_entropy, trim_cap_sparse};
use crate::error::{Error, Result};
use crate::math;
use crate::spoiling::{validate_partition, SpoilingPartition};

/// Enumeration ceiling for seed spaces and flat-source families.
pub const MAX_ENUM_SEEDS: u64 = 1 << 20;

/// How a seed turns into a list of block indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    /// Base-`t` digits of the seed: `ℓ` independent uniform indices.
    WithReplacement,
    /// Partial Fisher–Yates shuffle driven by a splitmix64 stream; always
    /// returns distinct indices. The seed space is `2^seed_bits`.
    DistinctSubset { seed_bits: u32 },
    /// Seeds enumerate all `C(t, ℓ)` size-`ℓ` subsets in lexicographic order.
    Exhaustive,
}

/// A seeded procedure drawing `ell` indices from `[0, t)`.
///
/// `ell = t` is allowed (full sampling); the entropy-rate experiment
/// additionally requires `ell < t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerSpec {
    kind: SamplerKind,
    t: usize,
    ell: usize,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, t: usize, ell: usize) -> Result<Self> {
        if t == 0 || ell == 0 || ell > t {
            return Err(Error::InvalidParams("need 1 <= ell <= t"));
        }
        let spec = Self { kind, t, ell };
        spec.seed_count()?;
        Ok(spec)
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Size of the seed space; capped at [`MAX_ENUM_SEEDS`] so failure
    /// probabilities stay exactly enumerable.
    pub fn seed_count(&self) -> Result<u64> {
        let count = match self.kind {
            SamplerKind::WithReplacement => (self.t as u128).checked_pow(self.ell as u32),
            SamplerKind::DistinctSubset { seed_bits } => {
                if seed_bits < 64 {
                    Some(1u128 << seed_bits)
                } else {
                    None
                }
            }
            SamplerKind::Exhaustive => binomial(self.t as u64, self.ell as u64),
        };
        match count {
            Some(n) if n <= MAX_ENUM_SEEDS as u128 => Ok(n as u64),
            Some(n) => Err(Error::TooLarge {
                outcomes: n,
                cap: MAX_ENUM_SEEDS,
            }),
            None => Err(Error::TooLarge {
                outcomes: u128::MAX,
                cap: MAX_ENUM_SEEDS,
            }),
        }
    }

    /// Bits needed to address a seed: `⌈log2 seed_count⌉`.
    pub fn seed_bits(&self) -> Result<u32> {
        let count = self.seed_count()?;
        Ok(if count <= 1 {
            0
        } else {
            64 - (count - 1).leading_zeros()
        })
    }
}

/// The deterministic index list for one seed.
pub fn sample_indices(spec: &SamplerSpec, seed: u64) -> Result<Vec<usize>> {
    let count = spec.seed_count()?;
    if seed >= count {
        return Err(Error::SeedOutOfRange { seed, count });
    }
    let t = spec.t;
    let ell = spec.ell;
    Ok(match spec.kind {
        SamplerKind::WithReplacement => {
            let mut s = seed;
            (0..ell)
                .map(|_| {
                    let i = (s % t as u64) as usize;
                    s /= t as u64;
                    i
                })
                .collect()
        }
        SamplerKind::DistinctSubset { .. } => {
            let mut state = seed;
            let mut pool: Vec<usize> = (0..t).collect();
            let mut out = Vec::with_capacity(ell);
            for drawn in 0..ell {
                // Modulo bias is part of this sampler's definition; its
                // failure probability is still measured exactly.
                let r = (splitmix64(&mut state) % (t - drawn) as u64) as usize;
                pool.swap(drawn, drawn + r);
                out.push(pool[drawn]);
            }
            out
        }
        SamplerKind::Exhaustive => unrank_combination(t, ell, seed),
    })
}

/// Exact failure probability `Pr[sample mean ≤ mu − theta]` over all seeds.
///
/// The failure event is non-strict so that a sample landing exactly on the
/// threshold counts as failing to guarantee the average.
pub fn sampler_failure_estimate(
    spec: &SamplerSpec,
    f: &[f64],
    mu: f64,
    theta: f64,
) -> Result<f64> {
    if f.len() != spec.t {
        return Err(Error::LengthMismatch {
            expected: spec.t,
            got: f.len(),
        });
    }
    if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParams("function values must lie in [0, 1]"));
    }
    if !mu.is_finite() || !theta.is_finite() || theta <= 0.0 {
        return Err(Error::InvalidParams("need finite mu and theta > 0"));
    }
    let average = f.iter().sum::<f64>() / spec.t as f64;
    if average < mu {
        return Err(Error::AverageBelowMu { average, mu });
    }
    let count = spec.seed_count()?;
    let cutoff = mu - theta;
    let mut failures = 0u64;
    for seed in 0..count {
        let sample = sample_indices(spec, seed)?;
        let mean = sample.iter().map(|&i| f[i]).sum::<f64>() / spec.ell as f64;
        if mean <= cutoff {
            failures += 1;
        }
    }
    Ok(failures as f64 / count as f64)
}

/// Hoeffding tail bound `exp(−2ℓθ²)` for `ℓ` independent samples of a
/// `[0,1]`-valued function.
pub fn hoeffding_bound(ell: usize, theta: f64) -> f64 {
    math::exp(-2.0 * ell as f64 * theta * theta)
}

/// Entropy-rate comparison between a source and its sampled blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct NZReport {
    /// Source min-entropy rate `H_inf(X) / (t·log2|X|)`.
    pub alpha: f64,
    /// `epsilon`-quantile over seeds of the sampled smooth conditional rate.
    pub beta: f64,
    /// `(log2|parts| + log2(1/ε)) / (t·log2|X|)`.
    pub err_spoil: f64,
    /// `sqrt(ln(1/ε) / (2ℓ))`.
    pub err_samp: f64,
    /// Whether `beta ≥ alpha − err_spoil − err_samp`.
    pub holds: bool,
    /// Per-seed smooth conditional entropy rates, in seed order.
    pub per_seed_rates: Vec<f64>,
}

/// Runs the sampling-preserves-entropy-rate experiment.
///
/// For every sampler seed the sampled blocks `V = X_{distinct sampled}` are
/// paired with the part-index variable `B` (part ordinal, plus `uncovered`
/// as an extra value when it has mass), the joint is smoothed within total
/// variation `epsilon`, and the average conditional min-entropy
/// `-log2 Σ_b max_v` is normalized by `ℓ·log2|X|`. Repeated indices from a
/// with-replacement sampler carry no fresh randomness, so collisions lower
/// that seed's rate.
pub fn nz_experiment(
    dist: &JointDistribution,
    partition: &SpoilingPartition,
    spec: &SamplerSpec,
    epsilon: f64,
) -> Result<NZReport> {
    validate_partition(dist, partition)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon { value: epsilon });
    }
    if spec.t != dist.blocks() {
        return Err(Error::InvalidParams("sampler domain must equal the block count"));
    }
    if spec.ell >= spec.t {
        return Err(Error::InvalidParams("sample count must be below the block count"));
    }
    let log_x = math::log2(dist.alphabet_size() as f64);
    let t = dist.blocks() as f64;
    let alpha = min_entropy(dist.probs()) / (t * log_x);

    // Part-index variable: part ordinals in cell order, then `uncovered`.
    let mut b_of: Vec<u32> = alloc::vec![u32::MAX; dist.len()];
    for (ord, part) in partition.parts().values().enumerate() {
        for &idx in part.indices() {
            b_of[idx] = ord as u32;
        }
    }
    let mut b_count = partition.part_count();
    if partition.uncovered().mass() > 0.0 {
        for &idx in partition.uncovered().indices() {
            b_of[idx] = b_count as u32;
        }
        b_count += 1;
    }

    let seed_count = spec.seed_count()?;
    let mut per_seed_rates = Vec::with_capacity(seed_count as usize);
    for seed in 0..seed_count {
        let sampled = sample_indices(spec, seed)?;
        per_seed_rates.push(sampled_rate(dist, &b_of, b_count, &sampled, epsilon, log_x));
    }
    let mut sorted = per_seed_rates.clone();
    sorted.sort_by(f64::total_cmp);
    let q = ((epsilon * seed_count as f64) as usize).min(sorted.len() - 1);
    let beta = sorted[q];
    let err_spoil =
        (math::log2(partition.part_count() as f64) - math::log2(epsilon)) / (t * log_x);
    let err_samp = math::sqrt(math::ln(1.0 / epsilon) / (2.0 * spec.ell as f64));
    Ok(NZReport {
        alpha,
        beta,
        err_spoil,
        err_samp,
        // 1e-12 absorbs float noise in the rate computations, nothing more.
        holds: beta >= alpha - err_spoil - err_samp - 1e-12,
        per_seed_rates,
    })
}

/// Smooth conditional entropy rate of one seed's sampled blocks given the
/// part index, replicating the dense trimming smoother on a sparse layout.
fn sampled_rate(
    dist: &JointDistribution,
    b_of: &[u32],
    b_count: usize,
    sampled: &[usize],
    epsilon: f64,
    log_x: f64,
) -> f64 {
    let asz = dist.alphabet_size();
    let t = dist.blocks();
    let mut blocks: Vec<usize> = sampled.to_vec();
    blocks.sort_unstable();
    blocks.dedup();
    let strides: Vec<usize> = blocks
        .iter()
        .map(|&b| asz.pow((t - 1 - b) as u32))
        .collect();

    // Joint mass of (sampled-blocks value, part index); key = v·b_count + b
    // so keys order exactly like the dense table layout.
    let mut joint: BTreeMap<u64, f64> = BTreeMap::new();
    for (idx, &p) in dist.probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let mut v = 0u64;
        for &s in &strides {
            v = v * asz as u64 + ((idx / s) % asz) as u64;
        }
        *joint.entry(v * b_count as u64 + b_of[idx] as u64).or_insert(0.0) += p;
    }
    let domain_len = (asz as u64).pow(blocks.len() as u32) * b_count as u64;

    let mut sorted_desc: Vec<f64> = joint.values().copied().collect();
    sorted_desc.sort_unstable_by(|a, b| b.total_cmp(a));
    let cap = trim_cap_sparse(&sorted_desc, domain_len as f64, epsilon);

    // Trim, then refill the removed mass the way the dense smoother does:
    // below-cap entries largest-first (ties by table index), zeros last.
    let mut entries: Vec<(u64, f64, f64)> = joint
        .iter()
        .map(|(&key, &p)| (key, p, p.min(cap)))
        .collect();
    let kept: f64 = entries.iter().map(|e| e.2).sum();
    let mut deficit = 1.0 - kept;
    if deficit > 0.0 {
        let mut order: Vec<usize> = (0..entries.len())
            .filter(|&e| entries[e].2 < cap)
            .collect();
        order.sort_by(|&a, &b| {
            entries[b]
                .1
                .total_cmp(&entries[a].1)
                .then(entries[a].0.cmp(&entries[b].0))
        });
        for e in order {
            let add = (cap - entries[e].2).min(deficit);
            entries[e].2 += add;
            deficit -= add;
            if deficit <= 0.0 {
                break;
            }
        }
    }
    let mut col_max = alloc::vec![0.0_f64; b_count];
    for &(key, _, trimmed) in &entries {
        let col = (key % b_count as u64) as usize;
        col_max[col] = col_max[col].max(trimmed);
    }
    // Whatever still overflows lands on empty cells in index order, `cap`
    // per cell; only per-column maxima matter for the entropy.
    let mut key = 0u64;
    while deficit > 0.0 && key < domain_len {
        if !joint.contains_key(&key) {
            let add = cap.min(deficit);
            let col = (key % b_count as u64) as usize;
            col_max[col] = col_max[col].max(add);
            deficit -= add;
        }
        key += 1;
    }
    let guess: f64 = col_max.iter().sum();
    -math::log2(guess) / (sampled.len() as f64 * log_x)
}

/// GF(2) Toeplitz hashing from `n` input bits to `m` output bits, keyed by
/// an `(n+m−1)`-bit seed. Words are bit vectors, least significant bit
/// first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToeplitzExtractor {
    n: u32,
    m: u32,
}

impl ToeplitzExtractor {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 || m == 0 || m > n || n + m - 1 > 63 {
            return Err(Error::InvalidParams("need 1 <= m <= n and n+m-1 <= 63"));
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn seed_bits(&self) -> u32 {
        self.n + self.m - 1
    }

    /// Multiplies the seed's Toeplitz matrix into `x` over GF(2).
    ///
    /// Row `j`, column `k` holds seed bit `k−j` when `k ≥ j` and seed bit
    /// `n−1+(j−k)` otherwise, so the first row is the seed's first `n` bits
    /// and each later row shifts right, pulling a fresh seed bit in front.
    pub fn extract(&self, x: u64, seed: u64) -> Result<u64> {
        if x >> self.n != 0 {
            return Err(Error::LengthMismatch {
                expected: self.n as usize,
                got: (64 - x.leading_zeros()) as usize,
            });
        }
        if seed >> self.seed_bits() != 0 {
            return Err(Error::LengthMismatch {
                expected: self.seed_bits() as usize,
                got: (64 - seed.leading_zeros()) as usize,
            });
        }
        let mut out = 0u64;
        for j in 0..self.m {
            let row = self.row_mask(seed, j);
            out |= ((row & x).count_ones() as u64 & 1) << j;
        }
        Ok(out)
    }

    fn row_mask(&self, seed: u64, j: u32) -> u64 {
        let mut row = 0u64;
        for k in 0..self.n {
            let bit = if k >= j {
                (seed >> (k - j)) & 1
            } else {
                (seed >> (self.n - 1 + (j - k))) & 1
            };
            row |= bit << k;
        }
        row
    }
}

/// Leftover-hash bound `½·2^{(m−k)/2}` on the extraction error from a
/// `k`-bit min-entropy source.
pub fn leftover_hash_bound(ext: &ToeplitzExtractor, k: u32) -> f64 {
    0.5 * math::exp2((ext.m as f64 - k as f64) / 2.0)
}

/// Worst-case statistical distance of the extractor's output (seed
/// revealed) from uniform over flat `k`-sources.
///
/// Exact maximum over all `C(2^n, 2^k)` flat sources when that family is
/// enumerable; otherwise a greedy witness grows the worst support one
/// outcome at a time and the result is a lower bound on the true error.
pub fn extractor_error(ext: &ToeplitzExtractor, k: u32) -> Result<f64> {
    if ext.n > 12 || ext.seed_bits() + ext.n > 24 {
        return Err(Error::InvalidParams("output table too large to enumerate"));
    }
    if k > ext.n {
        return Err(Error::InvalidParams("entropy cannot exceed input length"));
    }
    let domain = 1usize << ext.n;
    let support = 1usize << k;
    match binomial(domain as u64, support as u64) {
        Some(c) if c <= MAX_ENUM_SEEDS as u128 => exact_flat_error(ext, support),
        _ => greedy_flat_error(ext, support),
    }
}

/// Output table indexed by `seed * domain + x`.
fn output_table(ext: &ToeplitzExtractor) -> Result<(Vec<u16>, usize, usize)> {
    let domain = 1usize << ext.n;
    let seeds = 1usize << ext.seed_bits();
    let mut outputs = alloc::vec![0u16; seeds * domain];
    for seed in 0..seeds {
        for x in 0..domain {
            outputs[seed * domain + x] = ext.extract(x as u64, seed as u64)? as u16;
        }
    }
    Ok((outputs, domain, seeds))
}

/// Average-over-seeds distance from uniform for the flat source on
/// `combo`, using precomputed outputs and a reusable bucket buffer.
fn flat_source_distance(
    outputs: &[u16],
    domain: usize,
    seeds: usize,
    m: u32,
    combo: &[usize],
    counts: &mut [u32],
) -> f64 {
    let inv_out = 1.0 / (1u64 << m) as f64;
    let inv_support = 1.0 / combo.len() as f64;
    let mut total = 0.0;
    for seed in 0..seeds {
        counts.fill(0);
        let row = &outputs[seed * domain..(seed + 1) * domain];
        for &x in combo {
            counts[row[x] as usize] += 1;
        }
        let mut d = 0.0;
        for &c in counts.iter() {
            d += math::abs(c as f64 * inv_support - inv_out);
        }
        total += d / 2.0;
    }
    total / seeds as f64
}

fn exact_flat_error(ext: &ToeplitzExtractor, support: usize) -> Result<f64> {
    let (outputs, domain, seeds) = output_table(ext)?;
    let mut counts = alloc::vec![0u32; 1usize << ext.m];
    let mut combo: Vec<usize> = (0..support).collect();
    let mut worst = 0.0_f64;
    loop {
        worst = worst.max(flat_source_distance(
            &outputs, domain, seeds, ext.m, &combo, &mut counts,
        ));
        if !next_combination(&mut combo, domain) {
            return Ok(worst);
        }
    }
}

fn greedy_flat_error(ext: &ToeplitzExtractor, support: usize) -> Result<f64> {
    let (outputs, domain, seeds) = output_table(ext)?;
    let out_size = 1usize << ext.m;
    let inv_out = 1.0 / out_size as f64;
    let mut counts = alloc::vec![alloc::vec![0u32; out_size]; seeds];
    let mut chosen = alloc::vec![false; domain];
    let mut best_distance = 0.0;
    for round in 0..support {
        let size = (round + 1) as f64;
        // Per-seed distance with current counts at the grown size; each
        // candidate then shifts exactly one bucket per seed.
        let mut base = 0.0;
        for seed_counts in &counts {
            for &c in seed_counts.iter() {
                base += math::abs(c as f64 / size - inv_out);
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for x in 0..domain {
            if chosen[x] {
                continue;
            }
            let mut cand = base;
            for (seed, seed_counts) in counts.iter().enumerate() {
                let bucket = outputs[seed * domain + x] as usize;
                let c = seed_counts[bucket] as f64;
                cand += math::abs((c + 1.0) / size - inv_out) - math::abs(c / size - inv_out);
            }
            if best.is_none_or(|(_, score)| cand > score) {
                best = Some((x, cand));
            }
        }
        let (pick, score) = best.expect("domain larger than support");
        chosen[pick] = true;
        for (seed, seed_counts) in counts.iter_mut().enumerate() {
            seed_counts[outputs[seed * domain + pick] as usize] += 1;
        }
        best_distance = score / (2.0 * seeds as f64);
    }
    Ok(best_distance)
}

/// Advances `combo` to the next size-`k` subset of `[0, domain)` in
/// lexicographic order; false when `combo` was the last one.
fn next_combination(combo: &mut [usize], domain: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] != domain - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `C(n, k)` without overflow; `None` when the value exceeds `u128`.
fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc holds C(n-k+i-1, i-1); the division is exact.
        acc = acc.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(acc)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unrank_combination(t: usize, ell: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(ell);
    let mut next = 0usize;
    let mut remaining = ell;
    while remaining > 0 {
        let with_next = binomial((t - next - 1) as u64, (remaining - 1) as u64)
            .expect("sub-binomial fits") as u64;
        if rank < with_next {
            out.push(next);
            remaining -= 1;
        } else {
            rank -= with_next;
        }
        next += 1;
    }
    out
}
