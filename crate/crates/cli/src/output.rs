use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use vsaudit_core::dataset::Manifest;
use vsaudit_core::{FingerprintParams, TieMode, REPORT_SCHEMA_VERSION, TOOL_VERSION};

use crate::args::FingerprintArgs;

/// Effective settings of one invocation, embedded in every artifact.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunConfig {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub report_schema_version: u32,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<FingerprintParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tc_inter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tc_intra: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_intra: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_prefilter: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role_policy: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_mode: Option<TieMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: &'static str) -> Self {
        RunConfig {
            tool: "vsaudit",
            tool_version: TOOL_VERSION,
            report_schema_version: REPORT_SCHEMA_VERSION,
            command,
            ..Default::default()
        }
    }

    /// Single-line form for text headers.
    pub fn header_line(&self) -> String {
        format!(
            "# vsaudit {TOOL_VERSION} run_config {}",
            serde_json::to_string(self).expect("run config serializes")
        )
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub run_config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(config: &RunConfig, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope {
        run_config: config,
        body,
    })
    .expect("report serializes");
    s.push('\n');
    s
}

/// Fingerprint parameters from the flags, falling back to the manifest's
/// `[fingerprint]` table field by field.
pub fn resolve_fingerprint(manifest: &Path, flags: &FingerprintArgs) -> Result<FingerprintParams> {
    let text = fs::read_to_string(manifest)
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    let m = Manifest::parse(&text, manifest)?;
    let params = FingerprintParams {
        radius: flags.radius.unwrap_or(m.fingerprint.radius),
        n_bits: flags.bits.unwrap_or(m.fingerprint.n_bits),
    };
    params.validate()?;
    Ok(params)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Target names made safe for use as file names.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

pub fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}
