use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vsaudit_core::TieMode;

#[derive(Parser, Debug)]
#[command(name = "vsaudit", version, about = "Data-leakage audit for virtual-screening benchmarks")]
pub struct Cli {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Detect identity and analog leakage across and within splits.
    Audit(AuditArgs),
    /// Score validation sets with the memorization baseline.
    Baseline(BaselineArgs),
    /// EF and AUROC for a scores file, or simulate leak-inflated EF.
    Metrics(MetricsArgs),
    /// Print canonical SMILES.
    Canonicalize(CanonicalizeArgs),
    /// Print the set bits of an ECFP fingerprint.
    Fp(FpArgs),
}

#[derive(Args, Debug, Clone)]
pub struct FingerprintArgs {
    /// Fingerprint width in bits [default: manifest value, else 4096]
    #[arg(long)]
    pub bits: Option<u32>,
    /// ECFP radius [default: manifest value, else 1]
    #[arg(long)]
    pub radius: Option<u32>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Tanimoto threshold for cross-split analogs.
    #[arg(long, default_value_t = 0.6)]
    pub tc_inter: f64,
    /// Tanimoto threshold for within-split analogs.
    #[arg(long, default_value_t = 0.85)]
    pub tc_intra: f64,
    /// MCS ratio threshold for within-split analogs.
    #[arg(long, default_value_t = 0.9)]
    pub mcs_intra: f64,
    /// Evaluate MCS for every within-split pair.
    #[arg(long)]
    pub no_mcs_prefilter: bool,
    /// Check every role pair and every role, not only the default set.
    #[arg(long)]
    pub all_role_pairs: bool,
    /// Search-node budget per MCS computation.
    #[arg(long, default_value_t = vsaudit_core::simsearch::DEFAULT_MCS_BUDGET)]
    pub mcs_budget: u64,
    #[command(flatten)]
    pub fp: FingerprintArgs,
    /// Output directory.
    #[arg(long, default_value = "vsaudit-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Tie handling for the headline EF column.
    #[arg(long, default_value_t = TieMode::Expected)]
    pub tie_mode: TieMode,
    #[command(flatten)]
    pub fp: FingerprintArgs,
    /// Output directory.
    #[arg(long, default_value = "vsaudit-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Tab-separated scores file with record_id, score and label columns.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Screening fractions for EF.
    #[arg(long = "fraction", default_values_t = [0.01, 0.001])]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = TieMode::Expected)]
    pub tie_mode: TieMode,
    /// Simulate EF with g leaked actives placed in the top k.
    #[arg(long)]
    pub simulate: bool,
    /// Ranked-list size for the simulation.
    #[arg(long, requires = "simulate")]
    pub n: Option<u64>,
    /// Active count for the simulation.
    #[arg(long, requires = "simulate")]
    pub a: Option<u64>,
    /// Top-k cutoff for the simulation [default: floor(first fraction * N)]
    #[arg(long, requires = "simulate")]
    pub k: Option<u64>,
    /// Leaked actives for the simulation.
    #[arg(long, requires = "simulate", default_value_t = 0)]
    pub g: u64,
    #[arg(long, requires = "simulate", default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write metrics.json to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CanonicalizeArgs {
    /// SMILES strings to canonicalize.
    pub smiles: Vec<String>,
    /// Read `SMILES [id]` lines from a file instead.
    #[arg(long, conflicts_with = "smiles")]
    pub file: Option<PathBuf>,
    /// Write results to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FpArgs {
    pub smiles: Vec<String>,
    #[arg(long, default_value_t = vsaudit_core::fingerprints::DEFAULT_BITS)]
    pub bits: u32,
    #[arg(long, default_value_t = vsaudit_core::fingerprints::DEFAULT_RADIUS)]
    pub radius: u32,
    /// Write results to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
