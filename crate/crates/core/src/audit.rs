//! The four integrity detectors and the audit report.
//!
//! | category         | what is flagged                                        |
//! |------------------|--------------------------------------------------------|
//! | `inter_identity` | a canonical SMILES present in two different roles      |
//! | `inter_analog`   | a cross-role pair with `tc ≥ tc_inter`, not identical  |
//! | `intra_identity` | a canonical SMILES repeated within one role            |
//! | `intra_analog`   | a within-role pair with `tc ≥ tc_intra` or `mcs ≥ mcs_intra` |
//!
//! Analog detectors work on the deduplicated view of each role, so identity
//! and analog findings never share a record pair and the counts add up.
//!
//! MCS is only evaluated for intra-role pairs with
//! `tc ≥ tc_intra − mcs_prefilter_margin` unless the prefilter is disabled;
//! a pair with high MCS but Tanimoto below the prefilter is missed. The
//! report header states which mode was used.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chemgraph::{parse_smiles, Molecule};
use crate::dataset::{Benchmark, RoleSet, SplitRole, TargetDataset};
use crate::fingerprints::FingerprintParams;
use crate::simsearch::{
    find_cross_pairs, find_self_pairs, mcs_ratio, tanimoto, SimError, SimilarityPair,
    DEFAULT_MCS_BUDGET,
};
use crate::{REPORT_SCHEMA_VERSION, TOOL_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("invalid audit configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Similarity(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    InterIdentity,
    InterAnalog,
    IntraIdentity,
    IntraAnalog,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::InterIdentity,
        Category::InterAnalog,
        Category::IntraIdentity,
        Category::IntraAnalog,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::InterIdentity => "inter_identity",
            Category::InterAnalog => "inter_analog",
            Category::IntraIdentity => "intra_identity",
            Category::IntraAnalog => "intra_analog",
        }
    }

    pub fn is_identity(self) -> bool {
        matches!(self, Category::InterIdentity | Category::IntraIdentity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RolePair {
    pub a: SplitRole,
    pub b: SplitRole,
}

impl RolePair {
    pub const fn new(a: SplitRole, b: SplitRole) -> Self {
        RolePair { a, b }
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.a, self.b)
    }
}

/// Which roles each detector compares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolePolicy {
    pub identity_pairs: Vec<RolePair>,
    pub analog_pairs: Vec<RolePair>,
    pub intra_identity_roles: Vec<SplitRole>,
    pub intra_analog_roles: Vec<SplitRole>,
}

impl Default for RolePolicy {
    fn default() -> Self {
        use SplitRole::*;
        RolePolicy {
            identity_pairs: vec![
                RolePair::new(Query, TrainActive),
                RolePair::new(Query, ValActive),
                RolePair::new(TrainInactive, ValInactive),
                RolePair::new(TrainActive, ValActive),
            ],
            analog_pairs: vec![RolePair::new(TrainActive, ValActive)],
            intra_identity_roles: SplitRole::ALL.to_vec(),
            intra_analog_roles: vec![Query],
        }
    }
}

impl RolePolicy {
    /// Every distinct role pair for both cross-role detectors and every role
    /// for both within-role detectors.
    pub fn exhaustive() -> Self {
        let mut pairs = Vec::new();
        for (i, &a) in SplitRole::ALL.iter().enumerate() {
            for &b in &SplitRole::ALL[i + 1..] {
                pairs.push(RolePair::new(a, b));
            }
        }
        RolePolicy {
            identity_pairs: pairs.clone(),
            analog_pairs: pairs,
            intra_identity_roles: SplitRole::ALL.to_vec(),
            intra_analog_roles: SplitRole::ALL.to_vec(),
        }
    }

    /// Adds active-vs-active cross pairs (query, train and validation
    /// actives) to the analog detector and all active roles to the intra
    /// analog detector.
    pub fn with_active_analogs(mut self) -> Self {
        use SplitRole::*;
        for p in [
            RolePair::new(Query, TrainActive),
            RolePair::new(Query, ValActive),
            RolePair::new(TrainActive, ValActive),
        ] {
            if !self.analog_pairs.contains(&p) {
                self.analog_pairs.push(p);
            }
        }
        for r in [Query, TrainActive, ValActive] {
            if !self.intra_analog_roles.contains(&r) {
                self.intra_analog_roles.push(r);
            }
        }
        self
    }

    /// Adds the inactive train/validation pair to the analog detector.
    pub fn with_inactive_analogs(mut self) -> Self {
        let p = RolePair::new(SplitRole::TrainInactive, SplitRole::ValInactive);
        if !self.analog_pairs.contains(&p) {
            self.analog_pairs.push(p);
        }
        self
    }

    /// Compares query ligands against every other role in both cross-role
    /// detectors.
    pub fn with_query_vs_all(mut self) -> Self {
        for r in &SplitRole::ALL[1..] {
            let p = RolePair::new(SplitRole::Query, *r);
            for list in [&mut self.identity_pairs, &mut self.analog_pairs] {
                if !list.contains(&p) {
                    list.push(p);
                }
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub tc_inter: f64,
    pub tc_intra: f64,
    pub mcs_intra: f64,
    pub mcs_prefilter: bool,
    pub mcs_prefilter_margin: f64,
    pub mcs_budget: u64,
    pub roles: RolePolicy,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            tc_inter: 0.6,
            tc_intra: 0.85,
            mcs_intra: 0.9,
            mcs_prefilter: true,
            mcs_prefilter_margin: 0.25,
            mcs_budget: DEFAULT_MCS_BUDGET,
            roles: RolePolicy::default(),
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        for (name, v) in [
            ("tc_inter", self.tc_inter),
            ("tc_intra", self.tc_intra),
            ("mcs_intra", self.mcs_intra),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(AuditError::Config(format!("{name} = {v} is outside (0, 1]")));
            }
        }
        if !(self.mcs_prefilter_margin >= 0.0) {
            return Err(AuditError::Config(format!(
                "mcs_prefilter_margin = {} is negative",
                self.mcs_prefilter_margin
            )));
        }
        for p in self.roles.identity_pairs.iter().chain(&self.roles.analog_pairs) {
            if p.a == p.b {
                return Err(AuditError::Config(format!(
                    "cross-role pair {} compares a role with itself",
                    p.key()
                )));
            }
        }
        Ok(())
    }

    /// Lowest Tanimoto at which intra-role MCS is evaluated, or `None` when
    /// every pair is checked.
    pub fn prefilter_threshold(&self) -> Option<f64> {
        let t = self.tc_intra - self.mcs_prefilter_margin;
        (self.mcs_prefilter && t > 0.0).then_some(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakFinding {
    pub category: Category,
    pub target: String,
    pub role_a: SplitRole,
    pub role_b: SplitRole,
    /// Every record id carrying `smiles_a` in `role_a`.
    pub ids_a: Vec<String>,
    /// Every record id carrying `smiles_b` in `role_b`; empty for
    /// within-role duplicate groups.
    pub ids_b: Vec<String>,
    pub smiles_a: String,
    pub smiles_b: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_exact: Option<bool>,
}

impl LeakFinding {
    /// Key of the summary cell this finding counts towards.
    pub fn cell(&self) -> String {
        if self.role_a == self.role_b {
            self.role_a.to_string()
        } else {
            RolePair::new(self.role_a, self.role_b).key()
        }
    }
}

/// A canonical SMILES labelled both active and inactive in one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelConflict {
    pub target: String,
    pub active_role: SplitRole,
    pub inactive_role: SplitRole,
    pub smiles: String,
    pub active_ids: Vec<String>,
    pub inactive_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub target: String,
    pub role: SplitRole,
    pub record_id: String,
    pub line: usize,
    pub raw_smiles: String,
    pub offset: usize,
    pub reason: String,
}

/// Canonical string → all ids, for one role.
fn id_index(set: &RoleSet) -> HashMap<&str, Vec<&str>> {
    let mut map: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in &set.records {
        if let Some(c) = r.canonical_str() {
            map.entry(c).or_default().push(r.record_id.as_str());
        }
    }
    map
}

fn owned(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn unique_smiles(set: &RoleSet) -> Vec<&str> {
    set.unique_records()
        .map(|r| r.canonical_str().expect("unique records are parsed"))
        .collect()
}

pub fn detect_inter_identity(target: &TargetDataset, config: &AuditConfig) -> Vec<LeakFinding> {
    let mut out = Vec::new();
    for pair in &config.roles.identity_pairs {
        let (sa, sb) = (target.role(pair.a), target.role(pair.b));
        let ib = id_index(sb);
        let ia = id_index(sa);
        for smi in unique_smiles(sa) {
            if let Some(ids_b) = ib.get(smi) {
                out.push(LeakFinding {
                    category: Category::InterIdentity,
                    target: target.name.clone(),
                    role_a: pair.a,
                    role_b: pair.b,
                    ids_a: owned(&ia[smi]),
                    ids_b: owned(ids_b),
                    smiles_a: smi.to_string(),
                    smiles_b: Some(smi.to_string()),
                    tc: None,
                    mcs_ratio: None,
                    mcs_exact: None,
                });
            }
        }
    }
    out
}

pub fn detect_inter_analog(
    target: &TargetDataset,
    config: &AuditConfig,
) -> Result<Vec<LeakFinding>, AuditError> {
    let mut out = Vec::new();
    for pair in &config.roles.analog_pairs {
        let (sa, sb) = (target.role(pair.a), target.role(pair.b));
        let (ua, ub) = (unique_smiles(sa), unique_smiles(sb));
        let hits = find_cross_pairs(&sa.unique_fingerprints(), &sb.unique_fingerprints(), config.tc_inter)?;
        let (ia, ib) = (id_index(sa), id_index(sb));
        for p in hits {
            let (x, y) = (ua[p.a], ub[p.b]);
            if x == y {
                continue;
            }
            out.push(LeakFinding {
                category: Category::InterAnalog,
                target: target.name.clone(),
                role_a: pair.a,
                role_b: pair.b,
                ids_a: owned(&ia[x]),
                ids_b: owned(&ib[y]),
                smiles_a: x.to_string(),
                smiles_b: Some(y.to_string()),
                tc: Some(p.tc),
                mcs_ratio: None,
                mcs_exact: None,
            });
        }
    }
    Ok(out)
}

pub fn detect_intra_identity(target: &TargetDataset, config: &AuditConfig) -> Vec<LeakFinding> {
    let mut out = Vec::new();
    for &role in &config.roles.intra_identity_roles {
        let set = target.role(role);
        for g in &set.dedup.groups {
            out.push(LeakFinding {
                category: Category::IntraIdentity,
                target: target.name.clone(),
                role_a: role,
                role_b: role,
                ids_a: g.record_ids.clone(),
                ids_b: Vec::new(),
                smiles_a: g.canonical.to_string(),
                smiles_b: None,
                tc: None,
                mcs_ratio: None,
                mcs_exact: None,
            });
        }
    }
    out
}

fn all_pairs(set: &RoleSet) -> Result<Vec<SimilarityPair>, SimError> {
    let fps = set.unique_fingerprints();
    let n = fps.len();
    let mut pairs = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let fps = &fps;
            (i + 1..n).map(move |j| {
                tanimoto(fps[i], fps[j]).map(|tc| SimilarityPair {
                    a: i,
                    b: j,
                    tc,
                    mcs_ratio: None,
                })
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    pairs.sort_by(|x, y| y.tc.total_cmp(&x.tc).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b)));
    Ok(pairs)
}

pub fn detect_intra_analog(
    target: &TargetDataset,
    config: &AuditConfig,
) -> Result<Vec<LeakFinding>, AuditError> {
    let mut out = Vec::new();
    for &role in &config.roles.intra_analog_roles {
        let set = target.role(role);
        let smiles = unique_smiles(set);
        let candidates = match config.prefilter_threshold() {
            Some(t) => find_self_pairs(&set.unique_fingerprints(), t.min(config.tc_intra))?,
            None => all_pairs(set)?,
        };
        if candidates.is_empty() {
            continue;
        }
        let mut needed: Vec<usize> = candidates.iter().flat_map(|p| [p.a, p.b]).collect();
        needed.sort_unstable();
        needed.dedup();
        let mols: HashMap<usize, Molecule> = needed
            .par_iter()
            .map(|&i| {
                let m = parse_smiles(smiles[i]).expect("canonical SMILES reparses");
                (i, m)
            })
            .collect();
        let scored: Vec<_> = candidates
            .par_iter()
            .map(|p| (p, mcs_ratio(&mols[&p.a], &mols[&p.b], config.mcs_budget)))
            .collect();
        let ids = id_index(set);
        for (p, m) in scored {
            if p.tc >= config.tc_intra || m.ratio >= config.mcs_intra {
                let (x, y) = (smiles[p.a], smiles[p.b]);
                out.push(LeakFinding {
                    category: Category::IntraAnalog,
                    target: target.name.clone(),
                    role_a: role,
                    role_b: role,
                    ids_a: owned(&ids[x]),
                    ids_b: owned(&ids[y]),
                    smiles_a: x.to_string(),
                    smiles_b: Some(y.to_string()),
                    tc: Some(p.tc),
                    mcs_ratio: Some(m.ratio),
                    mcs_exact: Some(m.exact),
                });
            }
        }
    }
    Ok(out)
}

/// Molecules labelled active and inactive within the training split or
/// within the validation split.
pub fn label_conflicts(target: &TargetDataset) -> Vec<LabelConflict> {
    let mut out = Vec::new();
    for (act, inact) in [
        (SplitRole::TrainActive, SplitRole::TrainInactive),
        (SplitRole::ValActive, SplitRole::ValInactive),
    ] {
        let ia = id_index(target.role(act));
        let ii = id_index(target.role(inact));
        for smi in unique_smiles(target.role(act)) {
            if let Some(inactive) = ii.get(smi) {
                out.push(LabelConflict {
                    target: target.name.clone(),
                    active_role: act,
                    inactive_role: inact,
                    smiles: smi.to_string(),
                    active_ids: owned(&ia[smi]),
                    inactive_ids: owned(inactive),
                });
            }
        }
    }
    out
}

fn parse_failures(target: &TargetDataset) -> Vec<ParseFailure> {
    target
        .roles
        .values()
        .flat_map(|set| set.dedup.failures.iter().map(move |&i| &set.records[i]))
        .map(|r| {
            let e = r.parse_error.as_ref().expect("failure carries an error");
            ParseFailure {
                target: target.name.clone(),
                role: r.role,
                record_id: r.record_id.clone(),
                line: r.line,
                raw_smiles: r.raw_smiles.clone(),
                offset: e.offset,
                reason: e.reason.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetAudit {
    pub target: String,
    pub findings: BTreeMap<Category, Vec<LeakFinding>>,
    pub conflicts: Vec<LabelConflict>,
    pub parse_failures: Vec<ParseFailure>,
    /// Distinct canonical SMILES with more than one component (salts,
    /// mixtures), matched as a whole.
    pub multi_component: usize,
}

pub fn audit_target(target: &TargetDataset, config: &AuditConfig) -> Result<TargetAudit, AuditError> {
    config.validate()?;
    let mut findings = BTreeMap::new();
    findings.insert(Category::InterIdentity, detect_inter_identity(target, config));
    findings.insert(Category::InterAnalog, detect_inter_analog(target, config)?);
    findings.insert(Category::IntraIdentity, detect_intra_identity(target, config));
    findings.insert(Category::IntraAnalog, detect_intra_analog(target, config)?);
    Ok(TargetAudit {
        target: target.name.clone(),
        findings,
        conflicts: label_conflicts(target),
        parse_failures: parse_failures(target),
        multi_component: multi_component(target),
    })
}

fn multi_component(target: &TargetDataset) -> usize {
    target
        .roles
        .values()
        .flat_map(|set| set.unique_records())
        .filter_map(|r| r.canonical_str())
        .filter(|s| s.contains('.'))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Finding counts keyed by category, then by role or role pair.
pub type CellCounts = BTreeMap<Category, BTreeMap<String, usize>>;

fn empty_cells(config: &AuditConfig) -> CellCounts {
    let r = &config.roles;
    let mut cells = CellCounts::new();
    cells.insert(
        Category::InterIdentity,
        r.identity_pairs.iter().map(|p| (p.key(), 0)).collect(),
    );
    cells.insert(
        Category::InterAnalog,
        r.analog_pairs.iter().map(|p| (p.key(), 0)).collect(),
    );
    cells.insert(
        Category::IntraIdentity,
        r.intra_identity_roles.iter().map(|p| (p.to_string(), 0)).collect(),
    );
    cells.insert(
        Category::IntraAnalog,
        r.intra_analog_roles.iter().map(|p| (p.to_string(), 0)).collect(),
    );
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub counts: CellCounts,
    pub parse_failures: BTreeMap<SplitRole, usize>,
    pub label_conflicts: usize,
    pub mcs_truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub audit: AuditConfig,
    pub fingerprint: FingerprintParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub mcs_prefilter_note: String,
    pub targets: BTreeMap<String, TargetSummary>,
    /// Sum of per-target counts.
    pub global: CellCounts,
    /// Distinct molecules (identity) or distinct molecule pairs (analog)
    /// across all targets, for benchmarks that reuse compounds between
    /// targets.
    pub global_distinct: CellCounts,
    pub parse_failures: usize,
    pub label_conflicts: usize,
    pub warnings: Vec<String>,
}

impl AuditSummary {
    pub fn total_findings(&self) -> usize {
        self.global.values().flat_map(|m| m.values()).sum()
    }

    pub fn count(&self, target: &str, category: Category, cell: &str) -> usize {
        self.targets
            .get(target)
            .and_then(|t| t.counts.get(&category))
            .and_then(|m| m.get(cell))
            .copied()
            .unwrap_or(0)
    }
}

fn prefilter_note(config: &AuditConfig) -> String {
    match config.prefilter_threshold() {
        Some(t) => format!(
            "MCS evaluated only for intra-role pairs with tc >= {t:.2}; pairs below that are not MCS-checked"
        ),
        None => "MCS evaluated for every intra-role pair".to_string(),
    }
}

pub fn summarize(
    audits: &[TargetAudit],
    config: &AuditConfig,
    params: FingerprintParams,
) -> AuditSummary {
    let mut targets = BTreeMap::new();
    let mut global = empty_cells(config);
    let mut distinct: BTreeMap<Category, BTreeMap<String, BTreeSet<(String, Option<String>)>>> =
        BTreeMap::new();
    let mut warnings = Vec::new();
    let mut failures = 0;
    let mut conflicts = 0;
    for t in audits {
        let mut counts = empty_cells(config);
        let mut truncated = 0;
        for (cat, list) in &t.findings {
            for f in list {
                let cell = f.cell();
                *counts.entry(*cat).or_default().entry(cell.clone()).or_insert(0) += 1;
                *global.entry(*cat).or_default().entry(cell.clone()).or_insert(0) += 1;
                let key = if f.smiles_b.as_deref() == Some(f.smiles_a.as_str()) {
                    (f.smiles_a.clone(), None)
                } else {
                    (f.smiles_a.clone(), f.smiles_b.clone())
                };
                distinct.entry(*cat).or_default().entry(cell).or_default().insert(key);
                if f.mcs_exact == Some(false) {
                    truncated += 1;
                }
            }
        }
        let mut pf: BTreeMap<SplitRole, usize> = SplitRole::ALL.iter().map(|&r| (r, 0)).collect();
        for p in &t.parse_failures {
            *pf.get_mut(&p.role).expect("all roles") += 1;
        }
        failures += t.parse_failures.len();
        conflicts += t.conflicts.len();
        for c in &t.conflicts {
            warnings.push(format!(
                "{}: {} is both {} ({}) and {} ({}); scored as active",
                c.target,
                c.smiles,
                c.active_role,
                c.active_ids.join(","),
                c.inactive_role,
                c.inactive_ids.join(",")
            ));
        }
        if t.multi_component > 0 {
            warnings.push(format!(
                "{}: {} multi-component molecules (salts or mixtures) are matched with all components kept",
                t.target, t.multi_component
            ));
        }
        if truncated > 0 {
            warnings.push(format!(
                "{}: {truncated} MCS searches hit the expansion budget; their ratios are lower bounds",
                t.target
            ));
        }
        targets.insert(
            t.target.clone(),
            TargetSummary {
                counts,
                parse_failures: pf,
                label_conflicts: t.conflicts.len(),
                mcs_truncated: truncated,
            },
        );
    }
    let mut global_distinct = empty_cells(config);
    for (cat, cells) in distinct {
        for (cell, set) in cells {
            global_distinct.entry(cat).or_default().insert(cell, set.len());
        }
    }
    AuditSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config: ConfigEcho {
            audit: config.clone(),
            fingerprint: params,
        },
        mcs_prefilter_note: prefilter_note(config),
        targets,
        global,
        global_distinct,
        parse_failures: failures,
        label_conflicts: conflicts,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub summary: AuditSummary,
    /// category → target → findings
    pub findings: BTreeMap<Category, BTreeMap<String, Vec<LeakFinding>>>,
    pub label_conflicts: Vec<LabelConflict>,
    pub parse_failures: Vec<ParseFailure>,
}

impl AuditReport {
    pub fn has_findings(&self) -> bool {
        self.summary.total_findings() > 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every detector on every target. Targets are processed in parallel;
/// output order follows the benchmark.
pub fn audit(bench: &Benchmark, config: &AuditConfig) -> Result<AuditReport, AuditError> {
    audit_targets(&bench.targets, config, bench.params)
}

pub fn audit_targets(
    targets: &[TargetDataset],
    config: &AuditConfig,
    params: FingerprintParams,
) -> Result<AuditReport, AuditError> {
    config.validate()?;
    let audits: Vec<TargetAudit> = targets
        .par_iter()
        .map(|t| audit_target(t, config))
        .collect::<Result<_, _>>()?;
    let summary = summarize(&audits, config, params);
    let mut findings: BTreeMap<Category, BTreeMap<String, Vec<LeakFinding>>> =
        Category::ALL.iter().map(|&c| (c, BTreeMap::new())).collect();
    let mut label_conflicts = Vec::new();
    let mut failures = Vec::new();
    for a in audits {
        for (cat, list) in a.findings {
            findings.get_mut(&cat).expect("all categories").insert(a.target.clone(), list);
        }
        label_conflicts.extend(a.conflicts);
        failures.extend(a.parse_failures);
    }
    Ok(AuditReport {
        summary,
        findings,
        label_conflicts,
        parse_failures: failures,
    })
}

/// Plain-text summary: one row per category and role cell with the total,
/// the cross-target distinct count and the nonzero per-target counts.
pub fn render_table(summary: &AuditSummary) -> String {
    let c = &summary.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "vsaudit {}  report schema {}",
        summary.tool_version, summary.schema_version
    );
    let _ = writeln!(
        s,
        "ECFP radius {}, {} bits; tc_inter >= {}, tc_intra >= {}, mcs_intra >= {}",
        c.fingerprint.radius, c.fingerprint.n_bits, c.audit.tc_inter, c.audit.tc_intra, c.audit.mcs_intra
    );
    let _ = writeln!(s, "{}", summary.mcs_prefilter_note);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16} {:<28} {:>8} {:>8}  per target",
        "category", "roles", "total", "distinct"
    );
    for (cat, cells) in &summary.global {
        for (cell, total) in cells {
            let distinct = summary.global_distinct[cat].get(cell).copied().unwrap_or(0);
            let per: Vec<String> = summary
                .targets
                .iter()
                .filter_map(|(name, t)| {
                    let n = t.counts.get(cat).and_then(|m| m.get(cell)).copied().unwrap_or(0);
                    (n > 0).then(|| format!("{name}={n}"))
                })
                .collect();
            let _ = writeln!(
                s,
                "{:<16} {:<28} {:>8} {:>8}  {}",
                cat.as_str(),
                cell,
                total,
                distinct,
                if per.is_empty() { "-".to_string() } else { per.join(" ") }
            );
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "parse failures: {}", summary.parse_failures);
    let _ = writeln!(s, "label conflicts: {}", summary.label_conflicts);
    for w in &summary.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
