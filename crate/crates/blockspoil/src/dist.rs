//! Dense joint distributions over a fixed number of blocks.
//!
//! A [`JointDistribution`] stores the full probability table of `blocks`
//! coordinates, each ranging over an alphabet `{0, .., alphabet_size - 1}`.
//! The table is indexed lexicographically with block 0 most significant, so
//! outcome `(x_0, .., x_{t-1})` lives at `sum_i x_i * alphabet_size^(t-1-i)`.
//!
//! All probabilities are plain `f64`; operations that must renormalize do so
//! explicitly and everything downstream states its tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Symbols are small nonnegative integers below the alphabet size.
pub type Symbol = u32;

/// Hard cap on the dense table size.
pub const MAX_OUTCOMES: u64 = 1 << 22;

/// Probability vectors whose sum is within this of 1 are rescaled on
/// construction; anything further off is rejected.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Tolerance for mass bookkeeping done on top of an existing table.
pub const MASS_TOL: f64 = 1e-9;

/// A probability distribution over `alphabet_size^blocks` outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    alphabet_size: usize,
    blocks: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Builds a distribution from an explicit probability table in
    /// lexicographic order (block 0 most significant).
    ///
    /// Entries must be finite and nonnegative. A sum within
    /// [`NORMALIZATION_TOL`] of 1 is rescaled to sum to 1 exactly; a sum
    /// further off is an error. Outcome spaces larger than [`MAX_OUTCOMES`]
    /// are rejected.
    pub fn from_probabilities(
        alphabet_size: usize,
        blocks: usize,
        mut probs: Vec<f64>,
    ) -> Result<Self> {
        let len = checked_table_len(alphabet_size, blocks)?;
        if probs.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if math::abs(sum - 1.0) > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        Ok(Self {
            alphabet_size,
            blocks,
            probs,
        })
    }

    /// Rebuilds a table whose entries are kept verbatim — for round-tripping
    /// values this library previously produced, where the rescaling in
    /// [`Self::from_probabilities`] would disturb the stored bits.
    ///
    /// Validation is otherwise identical: finite nonnegative entries whose
    /// sum lies within [`NORMALIZATION_TOL`] of 1.
    pub fn from_normalized(alphabet_size: usize, blocks: usize, probs: Vec<f64>) -> Result<Self> {
        let len = checked_table_len(alphabet_size, blocks)?;
        if probs.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if math::abs(sum - 1.0) > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self {
            alphabet_size,
            blocks,
            probs,
        })
    }

    /// The uniform distribution over the outcome space.
    pub fn uniform(alphabet_size: usize, blocks: usize) -> Result<Self> {
        let len = checked_table_len(alphabet_size, blocks)?;
        Ok(Self {
            alphabet_size,
            blocks,
            probs: vec![1.0 / len as f64; len],
        })
    }

    /// Point mass on a single outcome.
    pub fn point(alphabet_size: usize, blocks: usize, outcome: &[Symbol]) -> Result<Self> {
        let len = checked_table_len(alphabet_size, blocks)?;
        let mut probs = vec![0.0; len];
        let idx = index_for(alphabet_size, blocks, outcome)?;
        probs[idx] = 1.0;
        Ok(Self {
            alphabet_size,
            blocks,
            probs,
        })
    }

    /// Internal constructor for tables already known to be valid.
    pub(crate) fn from_table_unchecked(alphabet_size: usize, blocks: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(
            probs.len(),
            checked_table_len(alphabet_size, blocks).expect("table within cap")
        );
        Self {
            alphabet_size,
            blocks,
            probs,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// The full probability table in lexicographic order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of outcomes in the table.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Lexicographic index of an outcome tuple.
    pub fn index_of(&self, outcome: &[Symbol]) -> Result<usize> {
        index_for(self.alphabet_size, self.blocks, outcome)
    }

    /// Outcome tuple at a lexicographic index.
    pub fn outcome_at(&self, mut index: usize) -> Vec<Symbol> {
        debug_assert!(index < self.probs.len());
        let mut out = vec![0; self.blocks];
        for slot in out.iter_mut().rev() {
            *slot = (index % self.alphabet_size) as Symbol;
            index /= self.alphabet_size;
        }
        out
    }

    /// Probability of an outcome tuple.
    pub fn prob(&self, outcome: &[Symbol]) -> Result<f64> {
        Ok(self.probs[self.index_of(outcome)?])
    }

    /// Conditional distribution of one block given the full prefix before it.
    ///
    /// `block` is zero-based and `prefix` must list the first `block`
    /// symbols. Fails with [`Error::ZeroPrefix`] when the prefix carries no
    /// mass. The returned vector has one entry per symbol and sums to 1 up to
    /// rounding.
    pub fn conditional_block(&self, block: usize, prefix: &[Symbol]) -> Result<Vec<f64>> {
        if block >= self.blocks {
            return Err(Error::BlockOutOfRange {
                block,
                blocks: self.blocks,
            });
        }
        if prefix.len() != block {
            return Err(Error::LengthMismatch {
                expected: block,
                got: prefix.len(),
            });
        }
        for &symbol in prefix {
            if symbol as usize >= self.alphabet_size {
                return Err(Error::SymbolOutOfRange {
                    symbol,
                    alphabet_size: self.alphabet_size,
                });
            }
        }
        // Mass of every extension of `prefix` by one symbol, then of `prefix`.
        let suffix = self.blocks - block - 1;
        let stride = self.alphabet_size.pow(suffix as u32);
        let mut base = 0usize;
        for &symbol in prefix {
            base = base * self.alphabet_size + symbol as usize;
        }
        base *= self.alphabet_size * stride;
        let mut extension_mass = vec![0.0; self.alphabet_size];
        for (a, slot) in extension_mass.iter_mut().enumerate() {
            let start = base + a * stride;
            *slot = self.probs[start..start + stride].iter().sum();
        }
        let prefix_mass: f64 = extension_mass.iter().sum();
        if prefix_mass == 0.0 {
            return Err(Error::ZeroPrefix);
        }
        for slot in &mut extension_mass {
            *slot /= prefix_mass;
        }
        Ok(extension_mass)
    }

    /// Marginal distribution over the given blocks, in ascending block order.
    ///
    /// Duplicate indices are collapsed; the set must be nonempty and within
    /// range.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDistribution> {
        let keep = normalized_index_set(keep, self.blocks)?;
        let new_blocks = keep.len();
        let new_len = self.alphabet_size.pow(new_blocks as u32);
        let mut table = vec![0.0; new_len];
        // Strides of the kept blocks in the source table, most significant first.
        let strides: Vec<usize> = keep
            .iter()
            .map(|&b| self.alphabet_size.pow((self.blocks - 1 - b) as u32))
            .collect();
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut target = 0usize;
            for &stride in &strides {
                target = target * self.alphabet_size + (idx / stride) % self.alphabet_size;
            }
            table[target] += p;
        }
        Ok(JointDistribution::from_table_unchecked(
            self.alphabet_size,
            new_blocks,
            table,
        ))
    }

    /// Per-block surprise of an outcome: `r_i = -log2 p(x_i | x_{<i})`.
    ///
    /// Defined only on outcomes of positive probability. Values are clamped
    /// at zero so rounding can never produce a negative surprise; the total
    /// telescopes to `-log2 p(x)` up to rounding.
    pub fn surprise_vector(&self, outcome: &[Symbol]) -> Result<SurpriseVector> {
        let idx = self.index_of(outcome)?;
        self.prefix_marginals().surprise_at(idx)
    }

    /// Condition on an event: zero out non-members and renormalize.
    pub fn condition_on_event(&self, event: &EventSet) -> Result<JointDistribution> {
        if event.table_len != self.probs.len() {
            return Err(Error::LengthMismatch {
                expected: self.probs.len(),
                got: event.table_len,
            });
        }
        if event.mass == 0.0 {
            return Err(Error::ZeroEvent);
        }
        let mut table = vec![0.0; self.probs.len()];
        let mut mass = 0.0;
        for &i in &event.indices {
            mass += self.probs[i];
        }
        if mass == 0.0 {
            return Err(Error::ZeroEvent);
        }
        for &i in &event.indices {
            table[i] = self.probs[i] / mass;
        }
        Ok(JointDistribution::from_table_unchecked(
            self.alphabet_size,
            self.blocks,
            table,
        ))
    }

    /// All prefix-mass tables, for bulk conditional and surprise queries.
    pub fn prefix_marginals(&self) -> PrefixMarginals {
        let mut tables: Vec<Vec<f64>> = Vec::with_capacity(self.blocks + 1);
        tables.push(self.probs.clone());
        // Sum out the least significant block repeatedly.
        for _ in 0..self.blocks {
            let prev = tables.last().expect("nonempty");
            let next_len = prev.len() / self.alphabet_size;
            let mut next = vec![0.0; next_len];
            for (j, slot) in next.iter_mut().enumerate() {
                let start = j * self.alphabet_size;
                *slot = prev[start..start + self.alphabet_size].iter().sum();
            }
            tables.push(next);
        }
        tables.reverse(); // tables[k] now holds level-k prefix masses
        PrefixMarginals {
            alphabet_size: self.alphabet_size,
            blocks: self.blocks,
            tables,
        }
    }
}

/// Per-block surprises of a single outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SurpriseVector {
    per_block: Vec<f64>,
}

impl SurpriseVector {
    pub fn per_block(&self) -> &[f64] {
        &self.per_block
    }

    /// Sum of per-block surprises, equal to `-log2 p(x)` up to rounding.
    pub fn total(&self) -> f64 {
        self.per_block.iter().sum()
    }
}

/// Precomputed prefix masses of a distribution.
///
/// `tables[k]` holds the mass of every length-`k` prefix, so conditional
/// probabilities and surprise vectors of all outcomes come out of ratios of
/// adjacent levels without re-summing the table.
pub struct PrefixMarginals {
    alphabet_size: usize,
    blocks: usize,
    tables: Vec<Vec<f64>>,
}

impl PrefixMarginals {
    /// Conditional probability `p(x_block | x_{<block})` for the outcome at
    /// `index`. `None` when the prefix has zero mass.
    pub fn conditional_at(&self, index: usize, block: usize) -> Option<f64> {
        let suffix_after = self.alphabet_size.pow((self.blocks - 1 - block) as u32);
        let upto = self.tables[block + 1][index / suffix_after];
        let before = self.tables[block][index / (suffix_after * self.alphabet_size)];
        if before == 0.0 {
            return None;
        }
        Some(upto / before)
    }

    /// Surprise vector of the outcome at `index`.
    pub fn surprise_at(&self, index: usize) -> Result<SurpriseVector> {
        if self.tables[self.blocks][index] == 0.0 {
            return Err(Error::ZeroOutcome);
        }
        let mut per_block = Vec::with_capacity(self.blocks);
        for block in 0..self.blocks {
            let c = self
                .conditional_at(index, block)
                .expect("positive outcome has positive prefixes");
            // Rounding can push a ratio a hair above 1; surprises stay >= 0.
            per_block.push(f64::max(-math::log2(c), 0.0));
        }
        Ok(SurpriseVector { per_block })
    }

    /// Probability of the full outcome at `index`.
    pub fn prob_at(&self, index: usize) -> f64 {
        self.tables[self.blocks][index]
    }
}

/// A set of outcomes together with its probability mass.
///
/// Members are stored as sorted, deduplicated table indices; the mass is
/// computed from the distribution the set was built against.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSet {
    table_len: usize,
    indices: Vec<usize>,
    mass: f64,
}

impl EventSet {
    /// Builds an event from outcome indices into `dist`'s table.
    pub fn from_indices(dist: &JointDistribution, indices: &[usize]) -> Result<Self> {
        let mut sorted: Vec<usize> = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&last) = sorted.last() {
            if last >= dist.len() {
                return Err(Error::LengthMismatch {
                    expected: dist.len(),
                    got: last + 1,
                });
            }
        }
        let mass = sorted.iter().map(|&i| dist.probs[i]).sum();
        Ok(Self {
            table_len: dist.len(),
            indices: sorted,
            mass,
        })
    }

    /// Like [`Self::from_indices`], but keeps a caller-provided mass after
    /// checking it against the table within [`MASS_TOL`] — round-tripping a
    /// serialized event preserves its stored bits instead of re-deriving
    /// them in a possibly different summation order.
    pub fn from_indices_with_mass(
        dist: &JointDistribution,
        indices: &[usize],
        mass: f64,
    ) -> Result<Self> {
        let mut set = Self::from_indices(dist, indices)?;
        if !mass.is_finite() || math::abs(mass - set.mass) > MASS_TOL {
            return Err(Error::PartitionMismatch {
                detail: "stored event mass differs from the table",
            });
        }
        set.mass = mass;
        Ok(set)
    }

    /// Builds an event from outcome tuples.
    pub fn from_outcomes<'a, I>(dist: &JointDistribution, outcomes: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [Symbol]>,
    {
        let mut indices = Vec::new();
        for outcome in outcomes {
            indices.push(dist.index_of(outcome)?);
        }
        Self::from_indices(dist, &indices)
    }

    pub(crate) fn from_sorted_indices_unchecked(
        table_len: usize,
        indices: Vec<usize>,
        mass: f64,
    ) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self {
            table_len,
            indices,
            mass,
        }
    }

    /// Sorted outcome indices of the members.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Total probability of the members.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Expected table length of the distribution this event belongs to.
    pub fn table_len(&self) -> usize {
        self.table_len
    }

    /// Intersection of two events over the same distribution.
    pub fn intersect(&self, other: &EventSet, dist: &JointDistribution) -> Result<EventSet> {
        if self.table_len != other.table_len || self.table_len != dist.len() {
            return Err(Error::LengthMismatch {
                expected: dist.len(),
                got: if self.table_len != dist.len() {
                    self.table_len
                } else {
                    other.table_len
                },
            });
        }
        let mut indices = Vec::new();
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                core::cmp::Ordering::Less => a += 1,
                core::cmp::Ordering::Greater => b += 1,
                core::cmp::Ordering::Equal => {
                    indices.push(self.indices[a]);
                    a += 1;
                    b += 1;
                }
            }
        }
        let mass = indices.iter().map(|&i| dist.probs[i]).sum();
        Ok(EventSet {
            table_len: self.table_len,
            indices,
            mass,
        })
    }
}

fn checked_table_len(alphabet_size: usize, blocks: usize) -> Result<usize> {
    if alphabet_size < 2 {
        return Err(Error::InvalidParams("alphabet size must be at least 2"));
    }
    if blocks == 0 {
        return Err(Error::InvalidParams("block count must be at least 1"));
    }
    let mut outcomes: u128 = 1;
    for _ in 0..blocks {
        outcomes *= alphabet_size as u128;
        if outcomes > MAX_OUTCOMES as u128 {
            return Err(Error::TooLarge {
                outcomes,
                cap: MAX_OUTCOMES,
            });
        }
    }
    Ok(outcomes as usize)
}

fn index_for(alphabet_size: usize, blocks: usize, outcome: &[Symbol]) -> Result<usize> {
    if outcome.len() != blocks {
        return Err(Error::LengthMismatch {
            expected: blocks,
            got: outcome.len(),
        });
    }
    let mut index = 0usize;
    for &symbol in outcome {
        if symbol as usize >= alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size,
            });
        }
        index = index * alphabet_size + symbol as usize;
    }
    Ok(index)
}

/// Sorts, deduplicates, and bounds-checks a block index set.
pub(crate) fn normalized_index_set(set: &[usize], blocks: usize) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&last) = sorted.last() {
        if last >= blocks {
            return Err(Error::BlockOutOfRange { block: last, blocks });
        }
    }
    Ok(sorted)
}
