//! Memorization baseline, enrichment factor, AUROC and the leak-inflation
//! model.
//!
//! The baseline scores a validation molecule 2.0 if its canonical SMILES is
//! among the training actives, −1.0 if it is among the training inactives,
//! and otherwise the mean of its maximum Tanimoto to the training actives and
//! its maximum Tanimoto to the query ligands. Actives are checked first. An
//! empty comparison group contributes 0.0 and is flagged. Unparseable
//! molecules score −∞.
//!
//! `EF@f` uses `k = ⌊f·N⌋`. Tie groups straddling the top-k boundary are
//! resolved by [`TieMode`]; the expected mode credits the straddling group
//! with `actives_in_group · slots / group_size` hits. Hit counts are kept as
//! exact rationals so that all-tied rankings give EF = 1 exactly.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{MoleculeRecord, RoleSet, SplitRole, TargetDataset};
use crate::fingerprints::Fingerprint;
use crate::simsearch::max_tanimoto;

pub const EXACT_ACTIVE_SCORE: f64 = 2.0;
pub const EXACT_INACTIVE_SCORE: f64 = -1.0;
pub const UNSCORED: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("score for {0} is NaN")]
    NanScore(String),
    #[error("invalid inflation parameters: {0}")]
    BadInflation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ExactActive,
    ExactInactive,
    Similarity,
    Unscored,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ExactActive => "exact_active",
            Provenance::ExactInactive => "exact_inactive",
            Provenance::Similarity => "similarity",
            Provenance::Unscored => "unscored",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineScore {
    pub value: f64,
    pub provenance: Provenance,
    pub max_tc_actives: Option<f64>,
    pub max_tc_queries: Option<f64>,
}

/// Read-only training context for the memorization baseline.
pub struct BaselineModel<'a> {
    active_smiles: HashSet<&'a str>,
    inactive_smiles: HashSet<&'a str>,
    active_fps: Vec<&'a Fingerprint>,
    query_fps: Vec<&'a Fingerprint>,
}

impl<'a> BaselineModel<'a> {
    pub fn new(
        train_actives: &'a RoleSet,
        train_inactives: &'a RoleSet,
        queries: &'a RoleSet,
    ) -> Self {
        BaselineModel {
            active_smiles: train_actives.canonical_set(),
            inactive_smiles: train_inactives.canonical_set(),
            active_fps: train_actives.unique_fingerprints(),
            query_fps: queries.unique_fingerprints(),
        }
    }

    pub fn from_target(t: &'a TargetDataset) -> Self {
        BaselineModel::new(
            t.role(SplitRole::TrainActive),
            t.role(SplitRole::TrainInactive),
            t.role(SplitRole::Query),
        )
    }

    pub fn has_actives(&self) -> bool {
        !self.active_fps.is_empty()
    }

    pub fn has_queries(&self) -> bool {
        !self.query_fps.is_empty()
    }

    pub fn score(&self, mol: &MoleculeRecord) -> BaselineScore {
        let (Some(smi), Some(fp)) = (mol.canonical_str(), mol.fingerprint.as_ref()) else {
            return BaselineScore {
                value: UNSCORED,
                provenance: Provenance::Unscored,
                max_tc_actives: None,
                max_tc_queries: None,
            };
        };
        if self.active_smiles.contains(smi) {
            return BaselineScore {
                value: EXACT_ACTIVE_SCORE,
                provenance: Provenance::ExactActive,
                max_tc_actives: None,
                max_tc_queries: None,
            };
        }
        if self.inactive_smiles.contains(smi) {
            return BaselineScore {
                value: EXACT_INACTIVE_SCORE,
                provenance: Provenance::ExactInactive,
                max_tc_actives: None,
                max_tc_queries: None,
            };
        }
        let ta = max_tanimoto(fp, &self.active_fps);
        let tq = max_tanimoto(fp, &self.query_fps);
        BaselineScore {
            value: (ta.unwrap_or(0.0) + tq.unwrap_or(0.0)) / 2.0,
            provenance: Provenance::Similarity,
            max_tc_actives: ta,
            max_tc_queries: tq,
        }
    }
}

/// Scores one molecule against the training and query roles.
pub fn baseline_score(
    mol: &MoleculeRecord,
    train_actives: &RoleSet,
    train_inactives: &RoleSet,
    queries: &RoleSet,
) -> BaselineScore {
    BaselineModel::new(train_actives, train_inactives, queries).score(mol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub record_id: String,
    pub score: f64,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Entries sorted by score, highest first; equal scores keep input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub entries: Vec<RankedEntry>,
    pub n: usize,
    pub a: usize,
}

impl Ranking {
    pub fn new(mut entries: Vec<RankedEntry>) -> Result<Self, MetricError> {
        if let Some(e) = entries.iter().find(|e| e.score.is_nan()) {
            return Err(MetricError::NanScore(e.record_id.clone()));
        }
        entries.sort_by(|x, y| y.score.partial_cmp(&x.score).unwrap_or(Ordering::Equal));
        let a = entries.iter().filter(|e| e.label == Label::Active).count();
        Ok(Ranking {
            n: entries.len(),
            a,
            entries,
        })
    }

    /// Builds a ranking from `(score, is_active)` pairs with synthetic ids.
    pub fn from_scores(scores: &[(f64, bool)]) -> Result<Self, MetricError> {
        Ranking::new(
            scores
                .iter()
                .enumerate()
                .map(|(i, &(score, active))| RankedEntry {
                    record_id: i.to_string(),
                    score,
                    label: if active { Label::Active } else { Label::Inactive },
                    provenance: None,
                })
                .collect(),
        )
    }

    /// `(group size, actives in group)` for each run of equal scores, from
    /// the top.
    pub fn tie_groups(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        let mut prev: Option<f64> = None;
        for e in &self.entries {
            let act = (e.label == Label::Active) as usize;
            match (prev, out.last_mut()) {
                (Some(p), Some(last)) if p == e.score => {
                    last.0 += 1;
                    last.1 += act;
                }
                _ => out.push((1, act)),
            }
            prev = Some(e.score);
        }
        out
    }
}

/// Builds the validation ranking: validation actives and inactives with
/// their scores, aligned with `target.role(ValActive).records` followed by
/// `target.role(ValInactive).records`.
pub fn rank_validation(target: &TargetDataset, scores: &[BaselineScore]) -> Result<Ranking, MetricError> {
    let records = validation_records(target);
    if records.len() != scores.len() {
        return Err(MetricError::DegenerateInput(format!(
            "{} scores for {} validation records",
            scores.len(),
            records.len()
        )));
    }
    Ranking::new(
        records
            .iter()
            .zip(scores)
            .map(|(r, s)| RankedEntry {
                record_id: r.record_id.clone(),
                score: s.value,
                label: if r.role == SplitRole::ValActive {
                    Label::Active
                } else {
                    Label::Inactive
                },
                provenance: Some(s.provenance),
            })
            .collect(),
    )
}

fn validation_records(target: &TargetDataset) -> Vec<&MoleculeRecord> {
    target
        .role(SplitRole::ValActive)
        .records
        .iter()
        .chain(&target.role(SplitRole::ValInactive).records)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    #[default]
    Expected,
    Optimistic,
    Pessimistic,
}

impl TieMode {
    pub const ALL: [TieMode; 3] = [TieMode::Expected, TieMode::Optimistic, TieMode::Pessimistic];

    pub fn as_str(self) -> &'static str {
        match self {
            TieMode::Expected => "expected",
            TieMode::Optimistic => "optimistic",
            TieMode::Pessimistic => "pessimistic",
        }
    }
}

impl fmt::Display for TieMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TieMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown tie mode '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnrichmentResult {
    pub fraction: f64,
    pub k: usize,
    pub n: usize,
    pub a: usize,
    pub hits: f64,
    pub ef: f64,
    pub tie_mode: TieMode,
}

/// `⌊f·N⌋`, tolerant of products like `0.29 · 100` landing just below an
/// integer.
pub fn top_k(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Hits as the rational `num / den`.
fn boundary_hits(
    full_hits: u64,
    group_size: u64,
    group_actives: u64,
    slots: u64,
    mode: TieMode,
) -> (u128, u128) {
    match mode {
        TieMode::Expected => (
            full_hits as u128 * group_size as u128 + group_actives as u128 * slots as u128,
            group_size as u128,
        ),
        TieMode::Optimistic => ((full_hits + group_actives.min(slots)) as u128, 1),
        TieMode::Pessimistic => (
            (full_hits + slots.saturating_sub(group_size - group_actives)) as u128,
            1,
        ),
    }
}

fn ef_from_parts(
    fraction: f64,
    n: usize,
    a: usize,
    k: usize,
    (num, den): (u128, u128),
    mode: TieMode,
) -> EnrichmentResult {
    // ef = (hits / k) / (a / n) = num · n / (den · k · a)
    let ef_num = num * n as u128;
    let ef_den = den * k as u128 * a as u128;
    let g = gcd(ef_num, ef_den);
    let hg = gcd(num, den);
    EnrichmentResult {
        fraction,
        k,
        n,
        a,
        hits: (num / hg) as f64 / (den / hg) as f64,
        ef: (ef_num / g) as f64 / (ef_den / g) as f64,
        tie_mode: mode,
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn check_ef_inputs(fraction: f64, n: usize, a: usize) -> Result<usize, MetricError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(MetricError::BadFraction(fraction));
    }
    let k = top_k(fraction, n);
    if k == 0 {
        return Err(MetricError::DegenerateInput(format!(
            "top {fraction} of {n} entries is empty"
        )));
    }
    if a == 0 {
        return Err(MetricError::DegenerateInput("no actives".to_string()));
    }
    Ok(k)
}

pub fn enrichment_factor(
    ranking: &Ranking,
    fraction: f64,
    mode: TieMode,
) -> Result<EnrichmentResult, MetricError> {
    let k = check_ef_inputs(fraction, ranking.n, ranking.a)?;
    let mut taken = 0usize;
    let mut hits = 0usize;
    for (size, act) in ranking.tie_groups() {
        if taken + size <= k {
            taken += size;
            hits += act;
            if taken == k {
                break;
            }
        } else {
            let slots = k - taken;
            let h = boundary_hits(hits as u64, size as u64, act as u64, slots as u64, mode);
            return Ok(ef_from_parts(fraction, ranking.n, ranking.a, k, h, mode));
        }
    }
    Ok(ef_from_parts(
        fraction,
        ranking.n,
        ranking.a,
        k,
        (hits as u128, 1),
        mode,
    ))
}

/// Probability that a random active outranks a random inactive, ties
/// counting one half.
pub fn auroc(ranking: &Ranking) -> Result<f64, MetricError> {
    let a = ranking.a as u128;
    let i = (ranking.n - ranking.a) as u128;
    if a == 0 || i == 0 {
        return Err(MetricError::DegenerateInput(
            "AUROC needs at least one active and one inactive".to_string(),
        ));
    }
    // walk from the bottom; twice the win count keeps ties integral
    let mut inactives_below = 0u128;
    let mut twice_wins = 0u128;
    for (size, act) in ranking.tie_groups().into_iter().rev() {
        let act = act as u128;
        let inact = size as u128 - act;
        twice_wins += act * (2 * inactives_below + inact);
        inactives_below += inact;
    }
    Ok(twice_wins as f64 / (2 * a * i) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflationParams {
    pub n: u64,
    pub a: u64,
    pub k: u64,
    /// Actives guaranteed a place in the top k.
    pub g: u64,
}

impl InflationParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        let InflationParams { n, a, k, g } = *self;
        if k == 0 || a == 0 {
            return Err(MetricError::BadInflation("k and A must be positive".into()));
        }
        if g > a.min(k) || a.min(k) > n || a > n || k > n {
            return Err(MetricError::BadInflation(format!(
                "need g <= min(A, k) and A, k <= N (N={n}, A={a}, k={k}, g={g})"
            )));
        }
        Ok(())
    }
}

/// Expected EF when `g` actives are fixed in the top `k` and the rest of
/// the ranking is random: `[g + (A−g)(k−g)/(N−g)] / (k·A/N)`.
pub fn analytic_inflated_ef(p: InflationParams) -> Result<f64, MetricError> {
    p.validate()?;
    let (n, a, k, g) = (p.n as f64, p.a as f64, p.k as f64, p.g as f64);
    let rest = if p.n == p.g {
        0.0
    } else {
        (a - g) * (k - g) / (n - g)
    };
    Ok((g + rest) / (k * a / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub params: InflationParams,
    pub trials: u64,
    pub seed: u64,
    pub tie_mode: TieMode,
    pub mean_ef: f64,
    pub std_error: f64,
    pub analytic_ef: f64,
}

/// Monte Carlo estimate of the inflated EF: each trial gives the `g`
/// planted actives score 2.0 and every other entry an independent uniform
/// score in `[0, 1)`, then measures EF over the top `k`.
///
/// Trials are seeded individually from `seed`, so the result does not depend
/// on the thread count.
pub fn simulate_inflated_ef(
    p: InflationParams,
    trials: u64,
    seed: u64,
    mode: TieMode,
) -> Result<SimulationResult, MetricError> {
    p.validate()?;
    if trials == 0 {
        return Err(MetricError::DegenerateInput("zero trials".into()));
    }
    let (n, a, k, g) = (p.n as usize, p.a as usize, p.k as usize, p.g as usize);
    let efs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |scores: &mut Vec<(f64, bool)>, t| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(crate::fingerprints::splitmix64(seed ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                scores.clear();
                scores.extend((0..g).map(|_| (EXACT_ACTIVE_SCORE, true)));
                scores.extend((g..n).map(|i| (rng.gen::<f64>(), i < a)));
                ef_of_unsorted(scores, k, mode).ef
            },
        )
        .collect();
    let m = efs.len() as f64;
    let mean = efs.iter().sum::<f64>() / m;
    let var = efs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(SimulationResult {
        params: p,
        trials,
        seed,
        tie_mode: mode,
        mean_ef: mean,
        std_error: (var / m).sqrt(),
        analytic_ef: analytic_inflated_ef(p)?,
    })
}

/// EF over the top `k` of unsorted `(score, is_active)` entries in linear
/// time. Reorders `scores`.
fn ef_of_unsorted(scores: &mut [(f64, bool)], k: usize, mode: TieMode) -> EnrichmentResult {
    let n = scores.len();
    let a = scores.iter().filter(|s| s.1).count();
    let (_, kth, _) = scores.select_nth_unstable_by(k - 1, |x, y| y.0.total_cmp(&x.0));
    let cut = kth.0;
    let (mut above, mut above_hits, mut group, mut group_act) = (0u64, 0u64, 0u64, 0u64);
    for &(s, act) in scores.iter() {
        if s > cut {
            above += 1;
            above_hits += act as u64;
        } else if s == cut {
            group += 1;
            group_act += act as u64;
        }
    }
    let slots = k as u64 - above;
    let h = boundary_hits(above_hits, group, group_act, slots, mode);
    ef_from_parts(k as f64 / n as f64, n, a, k, h, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredRecord {
    pub record_id: String,
    pub label: Label,
    pub score: BaselineScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineFlags {
    pub empty_query_set: bool,
    pub empty_train_actives: bool,
    pub unscored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetBaseline {
    pub target: String,
    pub flags: BaselineFlags,
    pub scores: Vec<ScoredRecord>,
    pub ranking: Ranking,
}

/// Scores every validation record of a target in parallel.
pub fn run_baseline(target: &TargetDataset) -> Result<TargetBaseline, MetricError> {
    let records = validation_records(target);
    if target.role(SplitRole::ValActive).records.is_empty()
        || target.role(SplitRole::ValInactive).records.is_empty()
    {
        return Err(MetricError::DegenerateInput(format!(
            "target {} has an empty validation role",
            target.name
        )));
    }
    let model = BaselineModel::from_target(target);
    let scores: Vec<BaselineScore> = records.par_iter().map(|r| model.score(r)).collect();
    let ranking = rank_validation(target, &scores)?;
    let flags = BaselineFlags {
        empty_query_set: !model.has_queries(),
        empty_train_actives: !model.has_actives(),
        unscored: scores
            .iter()
            .filter(|s| s.provenance == Provenance::Unscored)
            .count(),
    };
    let scores = records
        .iter()
        .zip(scores)
        .map(|(r, score)| ScoredRecord {
            record_id: r.record_id.clone(),
            label: if r.role == SplitRole::ValActive {
                Label::Active
            } else {
                Label::Inactive
            },
            score,
        })
        .collect();
    Ok(TargetBaseline {
        target: target.name.clone(),
        flags,
        scores,
        ranking,
    })
}

fn format_score(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// Writes `record_id score provenance label` rows in ranking order.
pub fn write_scores_tsv<W: Write>(mut w: W, ranking: &Ranking) -> io::Result<()> {
    writeln!(w, "record_id\tscore\tprovenance\tlabel")?;
    for e in &ranking.entries {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.record_id,
            format_score(e.score),
            e.provenance.map_or("-", Provenance::as_str),
            match e.label {
                Label::Active => "active",
                Label::Inactive => "inactive",
            }
        )?;
    }
    Ok(())
}

/// Reads rows written by [`write_scores_tsv`] (or any tab-separated table
/// with `record_id`, `score` and `label` columns) back into a ranking.
/// Lines starting with `#` are skipped.
pub fn read_scores_tsv(text: &str) -> Result<Ranking, MetricError> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| MetricError::DegenerateInput("empty score file".into()))?
        .split('\t')
        .collect();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let (Some(ci), Some(cs), Some(cl)) = (col("record_id"), col("score"), col("label")) else {
        return Err(MetricError::DegenerateInput(
            "score file needs record_id, score and label columns".into(),
        ));
    };
    let cp = col("provenance");
    let mut entries = Vec::new();
    for (no, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || MetricError::DegenerateInput(format!("malformed score row {}", no + 2));
        let score = match f.get(cs).ok_or_else(bad)?.trim() {
            "-inf" => UNSCORED,
            s => s.parse::<f64>().map_err(|_| bad())?,
        };
        let label = match f.get(cl).ok_or_else(bad)?.trim() {
            "active" | "1" => Label::Active,
            "inactive" | "0" => Label::Inactive,
            _ => return Err(bad()),
        };
        let provenance = cp.and_then(|c| f.get(c)).and_then(|p| match p.trim() {
            "exact_active" => Some(Provenance::ExactActive),
            "exact_inactive" => Some(Provenance::ExactInactive),
            "similarity" => Some(Provenance::Similarity),
            "unscored" => Some(Provenance::Unscored),
            _ => None,
        });
        entries.push(RankedEntry {
            record_id: f.get(ci).ok_or_else(bad)?.trim().to_string(),
            score,
            label,
            provenance,
        });
    }
    Ranking::new(entries)
}
