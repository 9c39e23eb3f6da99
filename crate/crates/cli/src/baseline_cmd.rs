use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{Context, Result};
use serde::Serialize;
use vsaudit_core::load_manifest_with;
use vsaudit_core::screen::{
    analytic_inflated_ef, auroc, enrichment_factor, run_baseline, top_k, write_scores_tsv,
    BaselineFlags, InflationParams, Label, Provenance, Ranking, TargetBaseline, TieMode,
};

use crate::args::BaselineArgs;
use crate::output::{file_stem, fmt_opt, resolve_fingerprint, to_json, write_file, RunConfig};

pub const FRACTIONS: [f64; 2] = [0.01, 0.001];

#[derive(Debug, Serialize)]
pub struct EfRow {
    pub fraction: f64,
    pub k: usize,
    pub expected: Option<f64>,
    pub optimistic: Option<f64>,
    pub pessimistic: Option<f64>,
    /// EF expected from `leaked_actives` actives pinned to the top k of an
    /// otherwise random ranking.
    pub leak_model: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EfRow {
    pub fn get(&self, mode: TieMode) -> Option<f64> {
        match mode {
            TieMode::Expected => self.expected,
            TieMode::Optimistic => self.optimistic,
            TieMode::Pessimistic => self.pessimistic,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TargetMetrics {
    pub target: String,
    pub n: usize,
    pub actives: usize,
    /// Validation actives whose structure appears among the training actives.
    pub leaked_actives: usize,
    pub provenance: BTreeMap<&'static str, usize>,
    pub flags: BaselineFlags,
    pub enrichment: Vec<EfRow>,
    pub auroc: Option<f64>,
    pub scores_file: String,
}

#[derive(Serialize)]
struct Body<'a> {
    targets: &'a [TargetMetrics],
}

pub fn ef_rows(ranking: &Ranking, leaked: usize) -> Vec<EfRow> {
    FRACTIONS
        .iter()
        .map(|&f| {
            let k = top_k(f, ranking.n);
            let mut note = None;
            let mut ef = |mode| match enrichment_factor(ranking, f, mode) {
                Ok(r) => Some(r.ef),
                Err(e) => {
                    note = Some(e.to_string());
                    None
                }
            };
            let (expected, optimistic, pessimistic) =
                (ef(TieMode::Expected), ef(TieMode::Optimistic), ef(TieMode::Pessimistic));
            let leak_model = analytic_inflated_ef(InflationParams {
                n: ranking.n as u64,
                a: ranking.a as u64,
                k: k as u64,
                g: leaked.min(k).min(ranking.a) as u64,
            })
            .ok();
            EfRow {
                fraction: f,
                k,
                expected,
                optimistic,
                pessimistic,
                leak_model,
                note,
            }
        })
        .collect()
}

fn metrics(b: &TargetBaseline, scores_file: String) -> TargetMetrics {
    let r = &b.ranking;
    let leaked = r
        .entries
        .iter()
        .filter(|e| e.label == Label::Active && e.provenance == Some(Provenance::ExactActive))
        .count();
    let mut provenance = BTreeMap::new();
    for p in [
        Provenance::ExactActive,
        Provenance::ExactInactive,
        Provenance::Similarity,
        Provenance::Unscored,
    ] {
        let n = b.scores.iter().filter(|s| s.score.provenance == p).count();
        provenance.insert(p.as_str(), n);
    }
    TargetMetrics {
        target: b.target.clone(),
        n: r.n,
        actives: r.a,
        leaked_actives: leaked,
        provenance,
        flags: b.flags.clone(),
        enrichment: ef_rows(r, leaked),
        auroc: auroc(r).ok(),
        scores_file,
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

pub fn render(targets: &[TargetMetrics], mode: TieMode) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "memorization baseline, EF tie mode: {mode}");
    let _ = writeln!(
        s,
        "{:<16} {:>8} {:>6} {:>7} {:>9} {:>17} {:>9} {:>9} {:>7}",
        "target", "N", "A", "leaked", "EF1%", "EF1% opt/pess", "leak-EF1%", "EF0.1%", "AUROC"
    );
    for t in targets {
        let (e1, e01) = (&t.enrichment[0], &t.enrichment[1]);
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>6} {:>7} {:>9} {:>17} {:>9} {:>9} {:>7}",
            t.target,
            t.n,
            t.actives,
            t.leaked_actives,
            fmt_opt(e1.get(mode), 2),
            format!("{}/{}", fmt_opt(e1.optimistic, 2), fmt_opt(e1.pessimistic, 2)),
            fmt_opt(e1.leak_model, 2),
            fmt_opt(e01.get(mode), 2),
            fmt_opt(t.auroc, 3),
        );
    }
    let ef1: Vec<f64> = targets.iter().filter_map(|t| t.enrichment[0].get(mode)).collect();
    if !ef1.is_empty() {
        let mean = ef1.iter().sum::<f64>() / ef1.len() as f64;
        let _ = writeln!(s, "{:<16} {:>33.2}", "mean EF1%", mean);
        let _ = writeln!(s, "{:<16} {:>33}", "median EF1%", fmt_opt(median(ef1), 2));
    }
    for t in targets {
        let f = &t.flags;
        if f.empty_query_set {
            let _ = writeln!(s, "warning: {}: empty query set, query term scored 0", t.target);
        }
        if f.empty_train_actives {
            let _ = writeln!(s, "warning: {}: no training actives, active term scored 0", t.target);
        }
        if f.unscored > 0 {
            let _ = writeln!(s, "warning: {}: {} unparseable validation molecules ranked last", t.target, f.unscored);
        }
        for row in &t.enrichment {
            if let Some(n) = &row.note {
                let _ = writeln!(s, "warning: {}: EF at {}: {n}", t.target, row.fraction);
            }
        }
    }
    s
}

pub fn run(args: &BaselineArgs) -> Result<u8> {
    let params = resolve_fingerprint(&args.manifest, &args.fp)?;
    let run = RunConfig {
        manifest: Some(args.manifest.clone()),
        fingerprint: Some(params),
        tie_mode: Some(args.tie_mode),
        ..RunConfig::new("baseline")
    };
    let bench = load_manifest_with(&args.manifest, Some(params))
        .with_context(|| format!("loading {}", args.manifest.display()))?;

    let mut results = Vec::new();
    for t in &bench.targets {
        let b = run_baseline(t).with_context(|| format!("scoring target {}", t.name))?;
        results.push(b);
    }

    let mut targets = Vec::new();
    for b in &results {
        let rel = format!("scores/{}.tsv", file_stem(&b.target));
        let mut buf = Vec::new();
        write_scores_tsv(&mut buf, &b.ranking)?;
        let body = String::from_utf8(buf).expect("scores are UTF-8");
        write_file(&args.out.join(&rel), &format!("{}\n{body}", run.header_line()))?;
        targets.push(metrics(b, rel));
    }

    let table = render(&targets, args.tie_mode);
    write_file(&args.out.join("baseline.json"), &to_json(&run, Body { targets: &targets }))?;
    write_file(
        &args.out.join("baseline_summary.txt"),
        &format!("{}\n{table}", run.header_line()),
    )?;
    print!("{table}");
    Ok(0)
}
