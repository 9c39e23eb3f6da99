//! Integrity auditing for ligand-based virtual-screening benchmarks.

pub mod chemgraph;
pub mod fingerprints;
pub mod simsearch;
pub mod dataset;
pub mod audit;
pub mod screen;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub use audit::{audit, AuditConfig, AuditReport, AuditSummary, Category, LeakFinding, RolePolicy};
pub use chemgraph::{canonicalize, canonical_smiles, parse_smiles, CanonicalSmiles, Molecule, ParseError};
pub use dataset::{load_manifest, load_manifest_with, Benchmark, SplitRole, TargetDataset};
pub use fingerprints::{ecfp, Fingerprint, FingerprintParams};
pub use screen::{auroc, enrichment_factor, InflationParams, Ranking, TieMode};
pub use simsearch::{mcs_ratio, tanimoto, McsResult};
