//! The clap surface and the four command implementations.

use std::path::PathBuf;

use blockspoil::chain::{
    check_chain_rule, lemma_block_chaining, lemma_conditioning_reduces, lemma_leakage, LemmaId,
    LemmaReport,
};
use blockspoil::sampling::{nz_experiment, SamplerKind, SamplerSpec};
use blockspoil::spoiling::{partition_bit_length, prune_tiny_parts, spoil, verify_flatness};
use blockspoil::{EventSet, JointDistribution, SpoilParams, SpoilingPartition};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::CliError;
use crate::format::{
    write_json, read_json, ChainRecord, DistributionFile, LemmaRecord, Meta, NZFile,
    PartitionFile, VerifyFile, VerifySummary,
};
use crate::gen::{generate, GeneratorKind, GeneratorSpec};

#[derive(Parser, Debug)]
#[command(
    name = "blockspoil",
    version,
    about = "Spoiling decompositions, entropy checks, and sampling experiments \
             on finite joint distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a source distribution file.
    Gen(GenArgs),
    /// Decompose a source into near-flat parts and write the partition.
    Spoil(SpoilArgs),
    /// Check chain rules and entropy lemmas on a distribution/partition pair.
    Verify(VerifyArgs),
    /// Run the sampled-blocks entropy-rate experiment.
    NzRun(NzArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Uniform,
    Dirichlet,
    Planted,
    Product,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SamplerArg {
    WithReplacement,
    DistinctSubset,
    Exhaustive,
}

impl SamplerArg {
    fn name(self) -> &'static str {
        match self {
            SamplerArg::WithReplacement => "with_replacement",
            SamplerArg::DistinctSubset => "distinct_subset",
            SamplerArg::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Distribution family.
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub alphabet_size: usize,
    #[arg(long)]
    pub blocks: usize,
    /// Dirichlet concentration parameter.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    /// Blocks kept uniform in a planted source (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub flat_blocks: Vec<usize>,
    /// Per-block tables for a product source; entries comma-separated,
    /// blocks separated by ';'.
    #[arg(long)]
    pub tables: Option<String>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Decomposition parameters shared by `spoil` and `nz-run`.
#[derive(Args, Debug)]
pub struct RunConfig {
    /// Uncovered-mass budget; doubles as the smoothing radius in `nz-run`.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Half-width of a surprise grid cell.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpoilArgs {
    /// Distribution file to decompose.
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Distribution file.
    pub dist: PathBuf,
    /// Partition file previously written by `spoil`.
    pub partition: PathBuf,
    /// Report output file.
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed for the random lemma splits and events.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rounds of randomized lemma checks.
    #[arg(long, default_value_t = 32)]
    pub lemma_rounds: usize,
    /// Largest tolerated chain gap; defaults to 8·delta of the partition.
    #[arg(long)]
    pub gap_ceiling: Option<f64>,
}

#[derive(Args, Debug)]
pub struct NzArgs {
    /// Distribution file for the source.
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunConfig,
    /// Seed-to-indices procedure.
    #[arg(long, value_enum, default_value_t = SamplerArg::Exhaustive)]
    pub sampler: SamplerArg,
    /// Number of blocks each seed samples.
    #[arg(long)]
    pub ell: usize,
    /// Seed-space size (log2) for the distinct-subset sampler.
    #[arg(long, default_value_t = 12)]
    pub seed_bits: u32,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Spoil(args) => cmd_spoil(args),
        Command::Verify(args) => cmd_verify(args),
        Command::NzRun(args) => cmd_nz(args),
    }
}

pub fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let kind = match args.kind {
        KindArg::Uniform => GeneratorKind::Uniform,
        KindArg::Dirichlet => GeneratorKind::Dirichlet {
            concentration: args.concentration,
        },
        KindArg::Planted => GeneratorKind::Planted {
            flat_blocks: args.flat_blocks.clone(),
        },
        KindArg::Product => GeneratorKind::Product {
            tables: parse_tables(args.tables.as_deref().ok_or_else(|| {
                CliError::Usage("--tables is required for a product source".into())
            })?)?,
        },
    };
    let spec = GeneratorSpec {
        kind,
        alphabet_size: args.alphabet_size,
        blocks: args.blocks,
        rng_seed: args.seed,
    };
    let dist = generate(&spec)?;
    let meta = Meta::new(Some(args.seed), Some(spec.kind.name()));
    write_json(&args.out, &DistributionFile::new(&dist, meta))?;
    println!(
        "gen: kind={} |X|={} t={} outcomes={} -> {}",
        spec.kind.name(),
        dist.alphabet_size(),
        dist.blocks(),
        dist.len(),
        args.out.display()
    );
    Ok(())
}

/// The decomposition every command builds: spoil with half the budget, then
/// prune tiny parts against the full budget, keeping uncovered mass within
/// `epsilon` overall.
pub fn build_partition(
    dist: &JointDistribution,
    epsilon: f64,
    delta: f64,
) -> Result<SpoilingPartition, CliError> {
    SpoilParams::new(epsilon, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let build = SpoilParams::new(epsilon / 2.0, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(prune_tiny_parts(&spoil(dist, build), epsilon))
}

pub fn cmd_spoil(args: SpoilArgs) -> Result<(), CliError> {
    let dist = read_json::<DistributionFile>(&args.input)?.to_distribution()?;
    let epsilon = args.run.epsilon;
    let partition = build_partition(&dist, epsilon, args.run.delta)?;
    let report = verify_flatness(&dist, &partition)
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    let (bits, bits_ok) = partition_bit_length(&partition);

    write_json(&args.run.out, &PartitionFile::new(&dist, &partition, Meta::new(None, None)))?;
    println!(
        "spoil: parts={} covered={} max_ratio={} bits={} bound={} -> {}",
        partition.part_count(),
        partition.covered_mass(),
        report.global_max_ratio,
        bits,
        report.bound_bits,
        args.run.out.display()
    );

    let ratio_cap = (2.0 * args.run.delta).exp2() * (1.0 + 1e-9);
    if partition.covered_mass() + 1e-9 < 1.0 - epsilon {
        return Err(CliError::Invariant(format!(
            "covered mass {} below 1 - epsilon = {}",
            partition.covered_mass(),
            1.0 - epsilon
        )));
    }
    if report.global_max_ratio > ratio_cap {
        return Err(CliError::Invariant(format!(
            "flatness ratio {} exceeds {}",
            report.global_max_ratio, ratio_cap
        )));
    }
    if !bits_ok {
        return Err(CliError::Invariant(format!(
            "bit length {bits} exceeds the grid bound"
        )));
    }
    Ok(())
}

pub fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let dist = read_json::<DistributionFile>(&args.dist)?.to_distribution()?;
    let partition = read_json::<PartitionFile>(&args.partition)?.to_partition(&dist)?;
    let ceiling = args
        .gap_ceiling
        .unwrap_or(8.0 * partition.params().delta());

    let mut chain = Vec::new();
    for block in 0..dist.blocks() {
        let given: Vec<usize> = (0..block).collect();
        let reports = check_chain_rule(&dist, &partition, block, &given)
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        chain.extend(reports.into_iter().map(|r| ChainRecord {
            part: r.part,
            block: r.block,
            given: r.given,
            gap_chain: r.gap_chain,
            gap_avg_worst: r.gap_avg_worst,
            delta: r.delta,
        }));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let mut lemmas = Vec::new();
    for _ in 0..args.lemma_rounds {
        lemma_round(&dist, &mut rng, &mut lemmas)?;
    }

    let max_gap_chain = chain.iter().map(|r| r.gap_chain).fold(0.0, f64::max);
    let max_gap_avg_worst = chain.iter().map(|r| r.gap_avg_worst).fold(0.0, f64::max);
    let gap_violations = chain
        .iter()
        .filter(|r| r.gap_chain > ceiling || r.gap_avg_worst > ceiling)
        .count();
    let lemma_violations = lemmas.iter().filter(|l| !l.holds).count();
    let summary = VerifySummary {
        chain_checks: chain.len(),
        lemma_checks: lemmas.len(),
        max_gap_chain,
        max_gap_avg_worst,
        gap_ceiling: ceiling,
        gap_violations,
        lemma_violations,
    };
    write_json(
        &args.out,
        &VerifyFile {
            chain,
            lemmas,
            summary: summary.clone(),
            meta: Meta::new(Some(args.seed), None),
        },
    )?;
    println!(
        "verify: chain_checks={} max_gap_chain={} max_gap_avg_worst={} ceiling={} \
         lemma_checks={} violations={} -> {}",
        summary.chain_checks,
        max_gap_chain,
        max_gap_avg_worst,
        ceiling,
        summary.lemma_checks,
        gap_violations + lemma_violations,
        args.out.display()
    );
    if gap_violations + lemma_violations > 0 {
        return Err(CliError::Invariant(format!(
            "{gap_violations} gap and {lemma_violations} lemma violations"
        )));
    }
    Ok(())
}

/// One randomized lemma round: a block split for the conditioning and
/// chaining lemmas (when two blocks exist), plus a random event pair for the
/// leakage lemma.
fn lemma_round(
    dist: &JointDistribution,
    rng: &mut ChaCha12Rng,
    out: &mut Vec<LemmaRecord>,
) -> Result<(), CliError> {
    let blocks = dist.blocks();
    if blocks >= 2 {
        let (x, y, z) = loop {
            let mut sets = (Vec::new(), Vec::new(), Vec::new());
            for b in 0..blocks {
                match rng.gen_range(0..3u8) {
                    0 => sets.0.push(b),
                    1 => sets.1.push(b),
                    _ => sets.2.push(b),
                }
            }
            if !sets.0.is_empty() && !sets.1.is_empty() {
                break sets;
            }
        };
        let cond = lemma_conditioning_reduces(dist, &x, &y, &z)
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        out.push(record(cond));
        let chaining = lemma_block_chaining(dist, &x, &y, &z)
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        out.push(record(chaining));
    } else {
        let cond = lemma_conditioning_reduces(dist, &[0], &[], &[])
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        out.push(record(cond));
    }

    // Leakage needs events whose intersection has mass; pin one positive
    // outcome into both sides.
    let support: Vec<usize> = (0..dist.len())
        .filter(|&i| dist.probs()[i] > 0.0)
        .collect();
    let pin = support[rng.gen_range(0..support.len())];
    let mut a = vec![pin];
    let mut b = vec![pin];
    for idx in 0..dist.len() {
        if rng.gen_bool(0.5) {
            a.push(idx);
        }
        if rng.gen_bool(0.5) {
            b.push(idx);
        }
    }
    let event_a = EventSet::from_indices(dist, &a).map_err(|e| CliError::Invariant(e.to_string()))?;
    let event_b = EventSet::from_indices(dist, &b).map_err(|e| CliError::Invariant(e.to_string()))?;
    let leakage =
        lemma_leakage(dist, &event_a, &event_b).map_err(|e| CliError::Invariant(e.to_string()))?;
    out.push(record(leakage));
    Ok(())
}

fn record(report: LemmaReport) -> LemmaRecord {
    let lemma = match report.lemma {
        LemmaId::ConditioningReduces => "conditioning_reduces",
        LemmaId::BlockChaining => "block_chaining",
        LemmaId::Leakage => "leakage",
    };
    LemmaRecord {
        lemma: lemma.to_owned(),
        lhs: report.lhs,
        rhs: report.rhs,
        holds: report.holds,
    }
}

pub fn cmd_nz(args: NzArgs) -> Result<(), CliError> {
    let dist = read_json::<DistributionFile>(&args.input)?.to_distribution()?;
    if args.ell >= dist.blocks() {
        return Err(CliError::Usage(format!(
            "ell must be below the block count: {} >= {}",
            args.ell,
            dist.blocks()
        )));
    }
    let kind = match args.sampler {
        SamplerArg::WithReplacement => SamplerKind::WithReplacement,
        SamplerArg::DistinctSubset => SamplerKind::DistinctSubset {
            seed_bits: args.seed_bits,
        },
        SamplerArg::Exhaustive => SamplerKind::Exhaustive,
    };
    let spec = SamplerSpec::new(kind, dist.blocks(), args.ell)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let partition = build_partition(&dist, args.run.epsilon, args.run.delta)?;
    let report = nz_experiment(&dist, &partition, &spec, args.run.epsilon)
        .map_err(|e| CliError::Invariant(e.to_string()))?;

    write_json(
        &args.run.out,
        &NZFile {
            alpha: report.alpha,
            beta: report.beta,
            err_spoil: report.err_spoil,
            err_samp: report.err_samp,
            holds: report.holds,
            sampler: args.sampler.name().to_owned(),
            t: dist.blocks(),
            ell: args.ell,
            epsilon: args.run.epsilon,
            part_count: partition.part_count(),
            per_seed_rates: report.per_seed_rates.clone(),
            meta: Meta::new(None, Some(args.sampler.name())),
        },
    )?;
    println!(
        "nz-run: alpha={} beta={} err_spoil={} err_samp={} holds={} -> {}",
        report.alpha,
        report.beta,
        report.err_spoil,
        report.err_samp,
        report.holds,
        args.run.out.display()
    );
    if !report.holds {
        return Err(CliError::Invariant(
            "sampled entropy rate fell below alpha - err_spoil - err_samp".into(),
        ));
    }
    Ok(())
}

fn parse_tables(raw: &str) -> Result<Vec<Vec<f64>>, CliError> {
    raw.split(';')
        .map(|table| {
            table
                .split(',')
                .map(|entry| {
                    entry.trim().parse::<f64>().map_err(|e| {
                        CliError::Usage(format!("bad table entry {entry:?}: {e}"))
                    })
                })
                .collect()
        })
        .collect()
}
