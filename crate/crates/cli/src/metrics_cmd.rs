use std::fs;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use vsaudit_core::screen::{
    auroc, enrichment_factor, read_scores_tsv, simulate_inflated_ef, top_k, EnrichmentResult,
    InflationParams, SimulationResult, TieMode,
};

use crate::args::MetricsArgs;
use crate::output::{to_json, write_file, RunConfig};

#[derive(Serialize)]
struct RankingMetrics {
    n: usize,
    actives: usize,
    enrichment: Vec<EnrichmentResult>,
    auroc: f64,
}

#[derive(Serialize)]
struct Body {
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<RankingMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulationResult>,
}

pub fn run(args: &MetricsArgs) -> Result<u8> {
    if args.scores.is_none() && !args.simulate {
        bail!("nothing to do: pass --scores FILE and/or --simulate");
    }
    let run = RunConfig {
        tie_mode: Some(args.tie_mode),
        seed: args.simulate.then_some(args.seed),
        ..RunConfig::new("metrics")
    };
    let mut body = Body {
        ranking: None,
        simulation: None,
    };

    if let Some(path) = &args.scores {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let ranking = read_scores_tsv(&text).with_context(|| format!("parsing {}", path.display()))?;
        let mut enrichment = Vec::new();
        for &f in &args.fractions {
            for mode in TieMode::ALL {
                enrichment.push(enrichment_factor(&ranking, f, mode)?);
            }
        }
        let m = RankingMetrics {
            n: ranking.n,
            actives: ranking.a,
            auroc: auroc(&ranking)?,
            enrichment,
        };
        println!("N = {}, actives = {}", m.n, m.actives);
        for e in m.enrichment.iter().filter(|e| e.tie_mode == args.tie_mode) {
            let spread: Vec<String> = m
                .enrichment
                .iter()
                .filter(|o| o.fraction == e.fraction)
                .map(|o| format!("{} {:.4}", o.tie_mode, o.ef))
                .collect();
            println!(
                "EF{}% = {:.4} (k = {}, hits = {:.4}; {})",
                e.fraction * 100.0,
                e.ef,
                e.k,
                e.hits,
                spread.join(", ")
            );
        }
        println!("AUROC = {:.6}", m.auroc);
        body.ranking = Some(m);
    }

    if args.simulate {
        let (Some(n), Some(a)) = (args.n, args.a) else {
            bail!("--simulate needs --n and --a");
        };
        let k = match args.k {
            Some(k) => k,
            None => {
                let f = *args.fractions.first().context("no fraction given")?;
                top_k(f, n as usize) as u64
            }
        };
        let p = InflationParams { n, a, k, g: args.g };
        let s = simulate_inflated_ef(p, args.trials, args.seed, args.tie_mode)?;
        println!(
            "N = {n}, A = {a}, k = {k}, g = {}: analytic EF {:.4}, simulated {:.4} +/- {:.4} over {} trials (seed {})",
            args.g, s.analytic_ef, s.mean_ef, s.std_error, s.trials, s.seed
        );
        body.simulation = Some(s);
    }

    if let Some(dir) = &args.out {
        write_file(&dir.join("metrics.json"), &to_json(&run, body))?;
    }
    Ok(0)
}
