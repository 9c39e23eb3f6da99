//! Benchmark ingestion: molecule files, manifests and per-role deduplication.
//!
//! Molecule files hold one record per line, `SMILES [whitespace] ID`; lines
//! whose first non-blank character is `#` are comments. A missing ID becomes
//! `file:line`. Query tables hold `PDB_ID LIGAND_CODE SMILES` per line with
//! the record ID `PDB_ID:LIGAND_CODE`, so a ligand reused across PDB entries
//! stays visible as a duplicate.
//!
//! The manifest is TOML:
//!
//! ```toml
//! schema_version = 1
//!
//! [fingerprint]
//! radius = 1
//! n_bits = 4096
//!
//! [[target]]
//! name = "PKM2"
//! query = "PKM2/query.tsv"
//! query_format = "table"        # or "smi" (default)
//! train_active = "PKM2/train_actives.smi"
//! train_inactive = "PKM2/train_inactives.smi"
//! val_active = "PKM2/val_actives.smi"
//! val_inactive = "PKM2/val_inactives.smi"
//! # allow_empty_query = true    # permits omitting `query`
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chemgraph::{canonical_smiles, parse_smiles, CanonicalSmiles, ParseError};
use crate::fingerprints::{ecfp, Fingerprint, FingerprintError, FingerprintParams};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    Query,
    TrainActive,
    TrainInactive,
    ValActive,
    ValInactive,
}

impl SplitRole {
    pub const ALL: [SplitRole; 5] = [
        SplitRole::Query,
        SplitRole::TrainActive,
        SplitRole::TrainInactive,
        SplitRole::ValActive,
        SplitRole::ValInactive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::Query => "query",
            SplitRole::TrainActive => "train_active",
            SplitRole::TrainInactive => "train_inactive",
            SplitRole::ValActive => "val_active",
            SplitRole::ValInactive => "val_inactive",
        }
    }

    pub fn is_active(self) -> bool {
        matches!(
            self,
            SplitRole::Query | SplitRole::TrainActive | SplitRole::ValActive
        )
    }
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SplitRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role '{s}'"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("target '{target}', role {role}: file {path} does not exist")]
    MissingFile {
        target: String,
        role: SplitRole,
        path: PathBuf,
    },
    #[error("duplicate target name '{0}'")]
    DuplicateTarget(String),
    #[error("target '{target}' has no entry for role {role}")]
    MissingRole { target: String, role: SplitRole },
    #[error(transparent)]
    Params(#[from] FingerprintError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    /// `SMILES [ID]`
    #[default]
    Smi,
    /// `PDB_ID LIGAND_CODE SMILES`
    Table,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoleculeRecord {
    pub record_id: String,
    /// Position in ingestion order; the total order used to pick
    /// representatives.
    pub ordinal: usize,
    pub line: usize,
    pub raw_smiles: String,
    pub canonical: Option<CanonicalSmiles>,
    pub parse_error: Option<ParseError>,
    pub fingerprint: Option<Fingerprint>,
    pub role: SplitRole,
    pub target: String,
}

impl MoleculeRecord {
    /// Parses, canonicalizes and fingerprints one SMILES.
    pub fn from_smiles(
        record_id: impl Into<String>,
        raw_smiles: impl Into<String>,
        role: SplitRole,
        target: impl Into<String>,
        params: FingerprintParams,
    ) -> Self {
        let raw_smiles = raw_smiles.into();
        let (canonical, parse_error, fingerprint) = match parse_smiles(&raw_smiles) {
            Ok(mol) => (
                Some(canonical_smiles(&mol)),
                None,
                Some(ecfp(&mol, params)),
            ),
            Err(e) => (None, Some(e), None),
        };
        MoleculeRecord {
            record_id: record_id.into(),
            ordinal: 0,
            line: 0,
            raw_smiles,
            canonical,
            parse_error,
            fingerprint,
            role,
            target: target.into(),
        }
    }

    pub fn canonical_str(&self) -> Option<&str> {
        self.canonical.as_ref().map(|c| c.as_str())
    }
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits file text into `(line number, id, smiles)` entries.
fn split_lines(text: &str, file_label: &str, format: FileFormat) -> Vec<(usize, String, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                return None;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            let entry = match format {
                FileFormat::Smi => {
                    let id = if tokens.len() > 1 {
                        tokens[1..].join(" ")
                    } else {
                        format!("{file_label}:{line_no}")
                    };
                    (line_no, id, tokens[0].to_string())
                }
                FileFormat::Table => match tokens.as_slice() {
                    [pdb, code, smiles, ..] => {
                        (line_no, format!("{pdb}:{code}"), smiles.to_string())
                    }
                    // short rows keep the whole line as SMILES so the parse
                    // failure is reported rather than silently dropped
                    _ => (
                        line_no,
                        format!("{file_label}:{line_no}"),
                        tokens.join(" "),
                    ),
                },
            };
            Some(entry)
        })
        .collect()
}

/// Reads one molecule file. Parse failures are kept as records with
/// `parse_error` set.
pub fn load_molecule_file(
    path: &Path,
    format: FileFormat,
    role: SplitRole,
    target: &str,
    params: FingerprintParams,
) -> Result<Vec<MoleculeRecord>, DatasetError> {
    params.validate()?;
    let text = read_text(path)?;
    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let entries = split_lines(&text, &label, format);
    if entries.is_empty() {
        log::warn!("{}: no molecule records", path.display());
    }
    let records: Vec<MoleculeRecord> = entries
        .into_par_iter()
        .enumerate()
        .map(|(ordinal, (line, id, smiles))| {
            let mut r = MoleculeRecord::from_smiles(id, smiles, role, target, params);
            r.ordinal = ordinal;
            r.line = line;
            r
        })
        .collect();
    let failures = records.iter().filter(|r| r.parse_error.is_some()).count();
    if failures > 0 {
        log::warn!(
            "{}: {failures} of {} records failed to parse",
            path.display(),
            records.len()
        );
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateGroup {
    pub canonical: CanonicalSmiles,
    /// Indices into the record list; the first is the representative.
    pub members: Vec<usize>,
    pub record_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Dedup {
    /// Representative record indices, in ingestion order.
    pub unique: Vec<usize>,
    /// Canonical strings seen more than once, ordered by representative.
    pub groups: Vec<DuplicateGroup>,
    /// Records that failed to parse.
    pub failures: Vec<usize>,
}

/// Groups records by canonical SMILES. The record with the lowest ordinal
/// represents its group.
pub fn dedup(records: &[MoleculeRecord]) -> Dedup {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].ordinal, i));
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut failures = Vec::new();
    for i in order {
        match records[i].canonical_str() {
            None => failures.push(i),
            Some(c) => match slot.get(c) {
                Some(&g) => members[g].push(i),
                None => {
                    slot.insert(c, members.len());
                    members.push(vec![i]);
                }
            },
        }
    }
    let unique = members.iter().map(|m| m[0]).collect();
    let groups = members
        .into_iter()
        .filter(|m| m.len() > 1)
        .map(|m| DuplicateGroup {
            canonical: records[m[0]].canonical.clone().expect("parsed"),
            record_ids: m.iter().map(|&i| records[i].record_id.clone()).collect(),
            members: m,
        })
        .collect();
    Dedup {
        unique,
        groups,
        failures,
    }
}

/// One split role of one target, deduplicated.
#[derive(Debug, Clone, Serialize)]
pub struct RoleSet {
    pub role: SplitRole,
    pub source: Option<PathBuf>,
    pub records: Vec<MoleculeRecord>,
    pub dedup: Dedup,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RoleCounts {
    pub lines: usize,
    pub unique: usize,
    pub duplicates: usize,
    pub duplicate_groups: usize,
    pub parse_failures: usize,
}

impl RoleSet {
    pub fn new(role: SplitRole, source: Option<PathBuf>, records: Vec<MoleculeRecord>) -> Self {
        let dedup = dedup(&records);
        RoleSet {
            role,
            source,
            records,
            dedup,
        }
    }

    pub fn empty(role: SplitRole) -> Self {
        RoleSet::new(role, None, Vec::new())
    }

    pub fn unique_records(&self) -> impl Iterator<Item = &MoleculeRecord> + '_ {
        self.dedup.unique.iter().map(|&i| &self.records[i])
    }

    /// Fingerprints of the unique records, aligned with `dedup.unique`.
    pub fn unique_fingerprints(&self) -> Vec<&Fingerprint> {
        self.unique_records()
            .map(|r| r.fingerprint.as_ref().expect("parsed records carry fingerprints"))
            .collect()
    }

    pub fn canonical_set(&self) -> HashSet<&str> {
        self.unique_records().filter_map(|r| r.canonical_str()).collect()
    }

    /// Every record id for a canonical string.
    pub fn ids_for(&self, canonical: &str) -> Vec<String> {
        self.records
            .iter()
            .filter(|r| r.canonical_str() == Some(canonical))
            .map(|r| r.record_id.clone())
            .collect()
    }

    /// Canonical SMILES → all record ids carrying it.
    pub fn dedup_map(&self) -> BTreeMap<String, Vec<String>> {
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in &self.records {
            if let Some(c) = r.canonical_str() {
                map.entry(c.to_string()).or_default().push(r.record_id.clone());
            }
        }
        map
    }

    pub fn counts(&self) -> RoleCounts {
        let parsed = self.records.len() - self.dedup.failures.len();
        RoleCounts {
            lines: self.records.len(),
            unique: self.dedup.unique.len(),
            duplicates: parsed - self.dedup.unique.len(),
            duplicate_groups: self.dedup.groups.len(),
            parse_failures: self.dedup.failures.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetDataset {
    pub name: String,
    pub roles: BTreeMap<SplitRole, RoleSet>,
}

impl TargetDataset {
    /// A target with every role present (empty where not given).
    pub fn new(name: impl Into<String>, sets: impl IntoIterator<Item = RoleSet>) -> Self {
        let mut roles: BTreeMap<SplitRole, RoleSet> = SplitRole::ALL
            .into_iter()
            .map(|r| (r, RoleSet::empty(r)))
            .collect();
        for s in sets {
            roles.insert(s.role, s);
        }
        TargetDataset {
            name: name.into(),
            roles,
        }
    }

    /// Builds a target from in-memory `(id, smiles)` lists.
    pub fn from_smiles(
        name: &str,
        params: FingerprintParams,
        sets: &[(SplitRole, Vec<(String, String)>)],
    ) -> Self {
        let role_sets = sets.iter().map(|(role, items)| {
            let records = items
                .iter()
                .enumerate()
                .map(|(k, (id, smi))| {
                    let mut r = MoleculeRecord::from_smiles(id, smi, *role, name, params);
                    r.ordinal = k;
                    r.line = k + 1;
                    r
                })
                .collect();
            RoleSet::new(*role, None, records)
        });
        TargetDataset::new(name, role_sets)
    }

    pub fn role(&self, role: SplitRole) -> &RoleSet {
        &self.roles[&role]
    }

    pub fn counts(&self) -> BTreeMap<SplitRole, RoleCounts> {
        self.roles.iter().map(|(r, s)| (*r, s.counts())).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Benchmark {
    pub targets: Vec<TargetDataset>,
    pub manifest_path: PathBuf,
    pub params: FingerprintParams,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub fingerprint: FingerprintParams,
    #[serde(default, rename = "target")]
    pub targets: Vec<TargetEntry>,
}

fn default_schema() -> u32 {
    MANIFEST_SCHEMA_VERSION
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub name: String,
    pub query: Option<PathBuf>,
    #[serde(default)]
    pub query_format: FileFormat,
    pub train_active: Option<PathBuf>,
    pub train_inactive: Option<PathBuf>,
    pub val_active: Option<PathBuf>,
    pub val_inactive: Option<PathBuf>,
    #[serde(default)]
    pub allow_empty_query: bool,
}

impl TargetEntry {
    pub fn path_for(&self, role: SplitRole) -> Option<&Path> {
        match role {
            SplitRole::Query => self.query.as_deref(),
            SplitRole::TrainActive => self.train_active.as_deref(),
            SplitRole::TrainInactive => self.train_inactive.as_deref(),
            SplitRole::ValActive => self.val_active.as_deref(),
            SplitRole::ValInactive => self.val_inactive.as_deref(),
        }
    }
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Manifest, DatasetError> {
        let m: Manifest = toml::from_str(text).map_err(|e| DatasetError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(DatasetError::Manifest {
                path: path.to_path_buf(),
                message: format!(
                    "unsupported schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                    m.schema_version
                ),
            });
        }
        m.fingerprint.validate()?;
        let mut seen = HashSet::new();
        for t in &m.targets {
            if !seen.insert(t.name.as_str()) {
                return Err(DatasetError::DuplicateTarget(t.name.clone()));
            }
            for role in SplitRole::ALL {
                if t.path_for(role).is_none() && !(role == SplitRole::Query && t.allow_empty_query)
                {
                    return Err(DatasetError::MissingRole {
                        target: t.name.clone(),
                        role,
                    });
                }
            }
        }
        Ok(m)
    }
}

/// Loads a manifest and every file it references.
pub fn load_manifest(path: &Path) -> Result<Benchmark, DatasetError> {
    load_manifest_with(path, None)
}

/// As [`load_manifest`], optionally overriding the manifest's fingerprint
/// parameters.
pub fn load_manifest_with(
    path: &Path,
    params_override: Option<FingerprintParams>,
) -> Result<Benchmark, DatasetError> {
    let text = read_text(path)?;
    let manifest = Manifest::parse(&text, path)?;
    let params = params_override.unwrap_or(manifest.fingerprint);
    params.validate()?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    // Resolve and check every path before doing any parsing work.
    let mut jobs = Vec::new();
    for t in &manifest.targets {
        for role in SplitRole::ALL {
            if let Some(rel) = t.path_for(role) {
                let full = base.join(rel);
                if !full.is_file() {
                    return Err(DatasetError::MissingFile {
                        target: t.name.clone(),
                        role,
                        path: full,
                    });
                }
                let format = if role == SplitRole::Query {
                    t.query_format
                } else {
                    FileFormat::Smi
                };
                jobs.push((t.name.clone(), role, full, format));
            }
        }
    }

    let loaded: Vec<(String, RoleSet)> = jobs
        .into_par_iter()
        .map(|(name, role, full, format)| {
            let records = load_molecule_file(&full, format, role, &name, params)?;
            Ok((name, RoleSet::new(role, Some(full), records)))
        })
        .collect::<Result<_, DatasetError>>()?;

    let mut by_target: BTreeMap<String, Vec<RoleSet>> = BTreeMap::new();
    for (name, set) in loaded {
        by_target.entry(name).or_default().push(set);
    }
    let targets = manifest
        .targets
        .iter()
        .map(|t| TargetDataset::new(&t.name, by_target.remove(&t.name).unwrap_or_default()))
        .collect();
    let bench = Benchmark {
        targets,
        manifest_path: path.to_path_buf(),
        params,
    };
    for t in &bench.targets {
        let c = t.counts();
        log::info!(
            "{}: query {} | train {} act / {} inact | val {} act / {} inact",
            t.name,
            c[&SplitRole::Query].lines,
            c[&SplitRole::TrainActive].lines,
            c[&SplitRole::TrainInactive].lines,
            c[&SplitRole::ValActive].lines,
            c[&SplitRole::ValInactive].lines,
        );
    }
    Ok(bench)
}
