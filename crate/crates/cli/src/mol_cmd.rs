use std::fs;
use std::io::{self, Write};

use anyhow::{bail, Context, Result};
use vsaudit_core::{canonicalize as canon, ecfp, parse_smiles, FingerprintParams};

use crate::args::{CanonicalizeArgs, FpArgs};
use crate::output::{write_file, RunConfig};

fn emit(out: Option<&std::path::Path>, run: &RunConfig, lines: &[String]) -> Result<()> {
    match out {
        Some(path) => {
            let mut s = run.header_line();
            s.push('\n');
            for l in lines {
                s.push_str(l);
                s.push('\n');
            }
            write_file(path, &s)
        }
        None => {
            let mut w = io::stdout().lock();
            for l in lines {
                writeln!(w, "{l}")?;
            }
            Ok(())
        }
    }
}

pub fn canonicalize(args: &CanonicalizeArgs) -> Result<u8> {
    let mut inputs: Vec<(String, Option<String>, String)> = Vec::new();
    if let Some(path) = &args.file {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut parts = t.split_whitespace();
            let smi = parts.next().unwrap_or_default().to_string();
            let id = parts.next().map(str::to_string);
            inputs.push((smi, id, format!("{}:{}", path.display(), i + 1)));
        }
    } else {
        if args.smiles.is_empty() {
            bail!("no SMILES given");
        }
        for (i, s) in args.smiles.iter().enumerate() {
            inputs.push((s.clone(), None, format!("argument {}", i + 1)));
        }
    }

    let mut lines = Vec::new();
    let mut failures = 0usize;
    for (smi, id, origin) in &inputs {
        match canon(smi) {
            Ok(c) => lines.push(match id {
                Some(id) => format!("{}\t{id}", c.as_str()),
                None => c.as_str().to_string(),
            }),
            Err(e) => {
                failures += 1;
                eprintln!("error: {origin}: {smi:?}: {e}");
            }
        }
    }
    let run = RunConfig::new("canonicalize");
    emit(args.out.as_deref(), &run, &lines)?;
    if failures > 0 {
        bail!("{failures} of {} inputs failed to parse", inputs.len());
    }
    Ok(0)
}

pub fn fingerprint(args: &FpArgs) -> Result<u8> {
    if args.smiles.is_empty() {
        bail!("no SMILES given");
    }
    let params = FingerprintParams::new(args.radius, args.bits)?;
    let mut lines = Vec::new();
    for smi in &args.smiles {
        let mol = parse_smiles(smi).with_context(|| format!("{smi:?}"))?;
        let fp = ecfp(&mol, params);
        let bits: Vec<String> = fp.ones().map(|b| b.to_string()).collect();
        lines.push(bits.join(" "));
    }
    let run = RunConfig {
        fingerprint: Some(params),
        ..RunConfig::new("fp")
    };
    emit(args.out.as_deref(), &run, &lines)?;
    Ok(0)
}
