//! Seeded source generators for the four distribution families.

use blockspoil::dist::MAX_OUTCOMES;
use blockspoil::JointDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution as _, Gamma};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    /// Every outcome equally likely.
    Uniform,
    /// Symmetric Dirichlet over the full outcome simplex.
    Dirichlet { concentration: f64 },
    /// Independent blocks: uniform on the listed blocks, constant (symbol 0)
    /// on the rest. All blocks flat degenerates to the uniform distribution.
    Planted { flat_blocks: Vec<usize> },
    /// Independent blocks with explicit per-block tables.
    Product { tables: Vec<Vec<f64>> },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Uniform => "uniform",
            GeneratorKind::Dirichlet { .. } => "dirichlet",
            GeneratorKind::Planted { .. } => "planted",
            GeneratorKind::Product { .. } => "product",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub alphabet_size: usize,
    pub blocks: usize,
    pub rng_seed: u64,
}

pub fn generate(spec: &GeneratorSpec) -> Result<JointDistribution, CliError> {
    let len = table_len(spec.alphabet_size, spec.blocks)?;
    match &spec.kind {
        GeneratorKind::Uniform => {
            JointDistribution::uniform(spec.alphabet_size, spec.blocks).map_err(usage)
        }
        GeneratorKind::Dirichlet { concentration } => {
            if !concentration.is_finite() || *concentration <= 0.0 {
                return Err(CliError::Usage(format!(
                    "concentration must be a positive real, got {concentration}"
                )));
            }
            let gamma = Gamma::new(*concentration, 1.0)
                .map_err(|e| CliError::Usage(format!("bad concentration: {e}")))?;
            let mut rng = ChaCha12Rng::seed_from_u64(spec.rng_seed);
            let weights: Vec<f64> = (0..len).map(|_| gamma.sample(&mut rng)).collect();
            let sum: f64 = weights.iter().sum();
            if sum <= 0.0 {
                return Err(CliError::Usage(
                    "sampled weights vanished; raise the concentration".into(),
                ));
            }
            let probs = weights.iter().map(|w| w / sum).collect();
            JointDistribution::from_probabilities(spec.alphabet_size, spec.blocks, probs)
                .map_err(usage)
        }
        GeneratorKind::Planted { flat_blocks } => {
            if let Some(&bad) = flat_blocks.iter().find(|&&b| b >= spec.blocks) {
                return Err(CliError::Usage(format!(
                    "flat block {bad} out of range for {} blocks",
                    spec.blocks
                )));
            }
            let flat = vec![1.0 / spec.alphabet_size as f64; spec.alphabet_size];
            let mut constant = vec![0.0; spec.alphabet_size];
            constant[0] = 1.0;
            let tables: Vec<&[f64]> = (0..spec.blocks)
                .map(|b| {
                    if flat_blocks.contains(&b) {
                        flat.as_slice()
                    } else {
                        constant.as_slice()
                    }
                })
                .collect();
            product_table(spec.alphabet_size, spec.blocks, &tables)
        }
        GeneratorKind::Product { tables } => {
            if tables.len() != spec.blocks {
                return Err(CliError::Usage(format!(
                    "need one table per block: got {} for {} blocks",
                    tables.len(),
                    spec.blocks
                )));
            }
            let mut normalized = Vec::with_capacity(tables.len());
            for (block, table) in tables.iter().enumerate() {
                if table.len() != spec.alphabet_size {
                    return Err(CliError::Usage(format!(
                        "table for block {block} has {} entries, alphabet is {}",
                        table.len(),
                        spec.alphabet_size
                    )));
                }
                if table.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(CliError::Usage(format!(
                        "table for block {block} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = table.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(CliError::Usage(format!(
                        "table for block {block} sums to {sum}, expected 1"
                    )));
                }
                normalized.push(table.iter().map(|p| p / sum).collect::<Vec<f64>>());
            }
            let refs: Vec<&[f64]> = normalized.iter().map(Vec::as_slice).collect();
            product_table(spec.alphabet_size, spec.blocks, &refs)
        }
    }
}

fn product_table(
    alphabet_size: usize,
    blocks: usize,
    per_block: &[&[f64]],
) -> Result<JointDistribution, CliError> {
    let len = table_len(alphabet_size, blocks)?;
    let mut probs = vec![1.0_f64; len];
    // stride of block b is alphabet_size^(blocks-1-b); build by axis sweeps
    let mut stride = len;
    for table in per_block {
        stride /= alphabet_size;
        for (idx, p) in probs.iter_mut().enumerate() {
            *p *= table[(idx / stride) % alphabet_size];
        }
    }
    JointDistribution::from_probabilities(alphabet_size, blocks, probs).map_err(usage)
}

fn table_len(alphabet_size: usize, blocks: usize) -> Result<usize, CliError> {
    if alphabet_size < 2 || blocks == 0 {
        return Err(CliError::Usage(
            "need alphabet size >= 2 and at least one block".into(),
        ));
    }
    let mut len = 1u128;
    for _ in 0..blocks {
        len *= alphabet_size as u128;
        if len > MAX_OUTCOMES as u128 {
            return Err(CliError::Usage(format!(
                "outcome space exceeds the {MAX_OUTCOMES}-entry cap"
            )));
        }
    }
    Ok(len as usize)
}

fn usage(e: blockspoil::Error) -> CliError {
    CliError::Usage(e.to_string())
}
