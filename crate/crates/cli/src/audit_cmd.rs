use anyhow::{Context, Result};
use log::info;
use vsaudit_core::audit::{audit, render_table, AuditConfig, RolePolicy};
use vsaudit_core::load_manifest_with;

use crate::args::AuditArgs;
use crate::output::{resolve_fingerprint, to_json, write_file, RunConfig};
use crate::EXIT_FINDINGS;

pub fn run(args: &AuditArgs) -> Result<u8> {
    let params = resolve_fingerprint(&args.manifest, &args.fp)?;
    let config = AuditConfig {
        tc_inter: args.tc_inter,
        tc_intra: args.tc_intra,
        mcs_intra: args.mcs_intra,
        mcs_prefilter: !args.no_mcs_prefilter,
        mcs_budget: args.mcs_budget,
        roles: if args.all_role_pairs {
            RolePolicy::exhaustive()
        } else {
            RolePolicy::default()
        },
        ..AuditConfig::default()
    };
    config.validate()?;

    let run = RunConfig {
        manifest: Some(args.manifest.clone()),
        fingerprint: Some(params),
        tc_inter: Some(config.tc_inter),
        tc_intra: Some(config.tc_intra),
        mcs_intra: Some(config.mcs_intra),
        mcs_prefilter: Some(config.mcs_prefilter),
        mcs_budget: Some(config.mcs_budget),
        role_policy: Some(if args.all_role_pairs { "exhaustive" } else { "default" }),
        ..RunConfig::new("audit")
    };

    let bench = load_manifest_with(&args.manifest, Some(params))
        .with_context(|| format!("loading {}", args.manifest.display()))?;
    info!("loaded {} targets", bench.targets.len());
    let report = audit(&bench, &config)?;

    let table = render_table(&report.summary);
    write_file(&args.out.join("audit.json"), &to_json(&run, &report))?;
    write_file(
        &args.out.join("summary.txt"),
        &format!("{}\n{table}", run.header_line()),
    )?;
    print!("{table}");

    Ok(if report.has_findings() { EXIT_FINDINGS } else { 0 })
}
