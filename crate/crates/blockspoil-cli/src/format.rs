//! Structured-text (JSON) file formats shared by the commands, atomic
//! writing, and strict parsing back into library types.
//!
//! Probability entries written here round-trip bit-exactly: parsing keeps
//! stored values verbatim (validated, never rescaled), so a written file
//! reproduces the identical in-memory value.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use blockspoil::spoiling::validate_partition;
use blockspoil::{EventSet, JointDistribution, SpoilParams, SpoilingPartition};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Identifier of the seedable generator behind every randomized command.
pub const RNG_ID: &str = "chacha12";

/// Provenance block stamped into every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    /// RNG algorithm identifier ([`RNG_ID`]).
    pub rng: String,
    /// Seed the command ran with; absent for fully deterministic commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Generator or sampler kind, where one was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl Meta {
    pub fn new(seed: Option<u64>, kind: Option<&str>) -> Self {
        Self {
            rng: RNG_ID.to_owned(),
            seed,
            kind: kind.map(str::to_owned),
        }
    }
}

/// A joint distribution: `probs` in lexicographic outcome order with block 0
/// most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub alphabet_size: usize,
    pub blocks: usize,
    pub probs: Vec<f64>,
    pub meta: Meta,
}

impl DistributionFile {
    pub fn new(dist: &JointDistribution, meta: Meta) -> Self {
        Self {
            alphabet_size: dist.alphabet_size(),
            blocks: dist.blocks(),
            probs: dist.probs().to_vec(),
            meta,
        }
    }

    pub fn to_distribution(&self) -> Result<JointDistribution, CliError> {
        JointDistribution::from_normalized(self.alphabet_size, self.blocks, self.probs.clone())
            .map_err(|e| CliError::Parse(format!("invalid distribution table: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub epsilon: f64,
    pub delta: f64,
}

/// One part: its grid cell, the member outcomes as symbol tuples, and their
/// total probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell_index: Vec<u32>,
    pub outcomes: Vec<Vec<u32>>,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncoveredRecord {
    pub outcomes: Vec<Vec<u32>>,
    pub mass: f64,
}

/// A spoiling partition tied to a distribution file of the same dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub alphabet_size: usize,
    pub blocks: usize,
    pub params: ParamsRecord,
    pub simplex_side: f64,
    pub cells: Vec<CellRecord>,
    pub uncovered: UncoveredRecord,
    pub bit_length: u32,
    pub meta: Meta,
}

impl PartitionFile {
    pub fn new(dist: &JointDistribution, partition: &SpoilingPartition, meta: Meta) -> Self {
        let tuples = |set: &EventSet| -> Vec<Vec<u32>> {
            set.indices().iter().map(|&i| dist.outcome_at(i)).collect()
        };
        Self {
            alphabet_size: partition.alphabet_size(),
            blocks: partition.blocks(),
            params: ParamsRecord {
                epsilon: partition.params().epsilon(),
                delta: partition.params().delta(),
            },
            simplex_side: partition.simplex_side(),
            cells: partition
                .parts()
                .iter()
                .map(|(cell, part)| CellRecord {
                    cell_index: cell.clone(),
                    outcomes: tuples(part),
                    mass: part.mass(),
                })
                .collect(),
            uncovered: UncoveredRecord {
                outcomes: tuples(partition.uncovered()),
                mass: partition.uncovered().mass(),
            },
            bit_length: partition.bit_length(),
            meta,
        }
    }

    /// Rebuilds the partition against `dist` and re-validates everything.
    ///
    /// File-internal defects (bad symbols, duplicate or overlapping cells,
    /// derived fields that do not reproduce) surface as parse errors;
    /// disagreement with `dist` (dimensions, masses, coverage) is an
    /// invariant violation — the files are not a matching pair.
    pub fn to_partition(&self, dist: &JointDistribution) -> Result<SpoilingPartition, CliError> {
        if self.alphabet_size != dist.alphabet_size() || self.blocks != dist.blocks() {
            return Err(CliError::Invariant(
                "partition and distribution dimensions differ".into(),
            ));
        }
        let params = SpoilParams::new(self.params.epsilon, self.params.delta)
            .map_err(|e| CliError::Parse(format!("invalid partition params: {e}")))?;

        let indices_of = |outcomes: &[Vec<u32>], what: &str| -> Result<Vec<usize>, CliError> {
            outcomes
                .iter()
                .map(|tuple| {
                    dist.index_of(tuple)
                        .map_err(|e| CliError::Parse(format!("bad outcome in {what}: {e}")))
                })
                .collect()
        };

        let mut parts = BTreeMap::new();
        for cell in &self.cells {
            let indices = indices_of(&cell.outcomes, "cell")?;
            let set = EventSet::from_indices_with_mass(dist, &indices, cell.mass)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            if parts.insert(cell.cell_index.clone(), set).is_some() {
                return Err(CliError::Parse("duplicate cell index".into()));
            }
        }
        let uncovered_indices = indices_of(&self.uncovered.outcomes, "uncovered")?;
        let uncovered =
            EventSet::from_indices_with_mass(dist, &uncovered_indices, self.uncovered.mass)
                .map_err(|e| CliError::Invariant(e.to_string()))?;

        let partition = SpoilingPartition::from_parts(
            self.alphabet_size,
            self.blocks,
            params,
            parts,
            uncovered,
        )
        .map_err(|e| CliError::Parse(format!("inconsistent partition file: {e}")))?;

        if self.bit_length != partition.bit_length()
            || self.simplex_side != partition.simplex_side()
        {
            return Err(CliError::Parse(
                "stored derived fields do not match the partition".into(),
            ));
        }
        validate_partition(dist, &partition).map_err(|e| CliError::Invariant(e.to_string()))?;
        Ok(partition)
    }
}

/// One chain-rule check: sampled part, target block, conditioning prefix,
/// and both gap statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub part: Vec<u32>,
    pub block: usize,
    pub given: Vec<usize>,
    pub gap_chain: f64,
    pub gap_avg_worst: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub lemma: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub chain_checks: usize,
    pub lemma_checks: usize,
    pub max_gap_chain: f64,
    pub max_gap_avg_worst: f64,
    pub gap_ceiling: f64,
    pub gap_violations: usize,
    pub lemma_violations: usize,
}

/// Report of `verify`: every chain-rule record, every lemma record, and the
/// summary the exit code is decided on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyFile {
    pub chain: Vec<ChainRecord>,
    pub lemmas: Vec<LemmaRecord>,
    pub summary: VerifySummary,
    pub meta: Meta,
}

/// Report of `nz-run`: rate comparison plus the full per-seed list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NZFile {
    pub alpha: f64,
    pub beta: f64,
    pub err_spoil: f64,
    pub err_samp: f64,
    pub holds: bool,
    pub sampler: String,
    pub t: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub part_count: usize,
    pub per_seed_rates: Vec<f64>,
    pub meta: Meta,
}

/// Serializes as pretty JSON and replaces `path` atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Parse(e.to_string()))?;
    bytes.push(b'\n');
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&bytes)?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
