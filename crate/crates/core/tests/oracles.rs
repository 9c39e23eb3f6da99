mod common;

use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use vsaudit_core::audit::{
    detect_inter_analog, detect_inter_identity, detect_intra_analog, detect_intra_identity,
    AuditConfig,
};
use vsaudit_core::chemgraph::{canonical_smiles, parse_smiles, Molecule};
use vsaudit_core::dataset::{dedup, load_manifest, MoleculeRecord, SplitRole, TargetDataset};
use vsaudit_core::fingerprints::{ecfp, FingerprintParams};
use vsaudit_core::screen::{
    analytic_inflated_ef, enrichment_factor, run_baseline, InflationParams, TieMode,
};
use vsaudit_core::simsearch::{mcs_ratio, DEFAULT_MCS_BUDGET};

fn params() -> FingerprintParams {
    FingerprintParams::default()
}

/// `count` mutually distinct molecules.
fn distinct_molecules(seed: u64, count: usize) -> Vec<Molecule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let m = random_molecule(&mut rng, 16);
        if seen.insert(canonical_smiles(&m)) {
            out.push(m);
        }
    }
    out
}

fn spellings(m: &Molecule, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..n).map(|_| random_smiles(m, rng)).collect()
}

fn items(smis: Vec<String>, tag: &str) -> Vec<(String, String)> {
    smis.into_iter().enumerate().map(|(i, s)| (format!("{tag}{i}"), s)).collect()
}

#[test]
fn dedup_recovers_seven_planted_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mols = distinct_molecules(1, 30);
    let mut smis = Vec::new();
    for (i, m) in mols.iter().enumerate() {
        let copies = if i < 7 { 2 + i % 3 } else { 1 };
        smis.extend(spellings(m, copies, &mut rng));
    }
    let records: Vec<MoleculeRecord> = smis
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = MoleculeRecord::from_smiles(format!("r{i}"), s.clone(), SplitRole::TrainInactive, "T", params());
            r.ordinal = i;
            r
        })
        .collect();
    let d = dedup(&records);
    assert_eq!(d.groups.len(), 7);
    assert_eq!(d.unique.len(), 30);
    for g in &d.groups {
        assert!(g.members.len() >= 2);
        assert_eq!(g.members[0], *g.members.iter().min().unwrap());
    }
}

#[test]
fn intra_identity_recovers_twelve_planted_groups() {
    let mols = distinct_molecules(2, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut smis = Vec::new();
    for (i, m) in mols.iter().enumerate() {
        smis.extend(spellings(m, if i < 12 { 3 } else { 1 }, &mut rng));
    }
    let t = TargetDataset::from_smiles("T", params(), &[(SplitRole::TrainInactive, items(smis, "ti"))]);
    assert_eq!(detect_intra_identity(&t, &AuditConfig::default()).len(), 12);
}

#[test]
fn inter_identity_recovers_three_shared_inactives() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mols = distinct_molecules(3, 20);
    let train: Vec<String> = mols[..10].iter().map(|m| random_smiles(m, &mut rng)).collect();
    let mut val: Vec<String> = mols[10..].iter().map(|m| random_smiles(m, &mut rng)).collect();
    for m in &mols[..3] {
        val.push(random_smiles(m, &mut rng));
    }
    let t = TargetDataset::from_smiles(
        "T",
        params(),
        &[
            (SplitRole::TrainInactive, items(train, "ti")),
            (SplitRole::ValInactive, items(val, "vi")),
        ],
    );
    let f = detect_inter_identity(&t, &AuditConfig::default());
    assert_eq!(f.len(), 3);
    assert!(f.iter().all(|x| x.role_a == SplitRole::TrainInactive && x.role_b == SplitRole::ValInactive));
}

#[test]
fn analog_tc_matches_brute_force_fingerprints() {
    let a = "CC(=O)Nc1ccc(O)cc1";
    let b = "CCC(=O)Nc1ccc(O)cc1";
    let t = TargetDataset::from_smiles(
        "T",
        params(),
        &[
            (SplitRole::TrainActive, items(vec![a.into()], "ta")),
            (SplitRole::ValActive, items(vec![b.into()], "va")),
        ],
    );
    let fa = ecfp(&parse_smiles(a).unwrap(), params());
    let fb = ecfp(&parse_smiles(b).unwrap(), params());
    let want = brute_tanimoto(&fa, &fb);
    let f = detect_inter_analog(&t, &AuditConfig::default()).unwrap();
    if want >= 0.6 {
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].tc, Some(want));
    } else {
        assert!(f.is_empty());
    }
    let strict = AuditConfig { tc_inter: want, ..AuditConfig::default() };
    assert_eq!(detect_inter_analog(&t, &strict).unwrap().len(), 1);
}

#[test]
fn intra_analog_tanimoto_evidence() {
    let a = format!("c1ccccc1{}O", "C".repeat(8));
    let b = format!("c1ccccc1{}O", "C".repeat(9));
    let fa = ecfp(&parse_smiles(&a).unwrap(), params());
    let fb = ecfp(&parse_smiles(&b).unwrap(), params());
    let tc = brute_tanimoto(&fa, &fb);
    assert!(tc >= 0.85, "{tc}");
    let t = TargetDataset::from_smiles("T", params(), &[(SplitRole::Query, items(vec![a, b], "q"))]);
    let f = detect_intra_analog(&t, &AuditConfig::default()).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].tc, Some(tc));
}

#[test]
fn intra_analog_mcs_evidence_matches_exhaustive_oracle() {
    let a = "CCCCCCCCCCCO";
    let b = "CCCCCCCCCCCN";
    let (ma, mb) = (parse_smiles(a).unwrap(), parse_smiles(b).unwrap());
    let oracle = exhaustive_mcs(&ma, &mb) as f64 / 12.0;
    assert!(oracle >= 0.9);
    let tc = brute_tanimoto(&ecfp(&ma, params()), &ecfp(&mb, params()));
    assert!(tc < 0.85);
    let t = TargetDataset::from_smiles("T", params(), &[(SplitRole::Query, items(vec![a.into(), b.into()], "q"))]);
    let config = AuditConfig { mcs_prefilter: false, ..AuditConfig::default() };
    let f = detect_intra_analog(&t, &config).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].mcs_ratio, Some(oracle));
    assert_eq!(f[0].tc, Some(tc));
}

#[test]
fn mcs_agrees_with_exhaustive_oracle_on_homologs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..40 {
        let a = random_molecule(&mut rng, 11);
        let Some(b) = add_methyl(&a, &mut rng) else { continue };
        let got = mcs_ratio(&a, &b, DEFAULT_MCS_BUDGET);
        assert!(got.exact);
        assert_eq!(got.mcs_atom_count, exhaustive_mcs(&a, &b));
        assert_eq!(got.mcs_atom_count, a.atom_count());
    }
}

#[test]
fn query_ligand_found_in_training_actives() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("q.tsv"), "3GQY DZG CC(C)n1cc(C(=O)Nc2ccccc2)cn1\n3H6O D8G O=C(O)c1ccccc1\n").unwrap();
    fs::write(d.join("ta.smi"), "CC(C)n1cnc(C(=O)Nc2ccccc2)c1 a1\nCC(C)n1cc(C(=O)Nc2ccccc2)cn1 a2\n").unwrap();
    fs::write(d.join("ti.smi"), "CCCC i1\n").unwrap();
    fs::write(d.join("va.smi"), "c1ccccc1C(O)=O v1\n").unwrap();
    fs::write(d.join("vi.smi"), "CCCCC w1\n").unwrap();
    fs::write(
        d.join("m.toml"),
        "[[target]]\nname = \"PKM2\"\nquery = \"q.tsv\"\nquery_format = \"table\"\n\
         train_active = \"ta.smi\"\ntrain_inactive = \"ti.smi\"\nval_active = \"va.smi\"\nval_inactive = \"vi.smi\"\n",
    )
    .unwrap();
    let b = load_manifest(&d.join("m.toml")).unwrap();
    let f = detect_inter_identity(&b.targets[0], &AuditConfig::default());
    let leaks: Vec<_> = f.iter().map(|x| (x.role_b, x.ids_a.clone(), x.ids_b.clone())).collect();
    assert_eq!(
        leaks,
        vec![
            (SplitRole::TrainActive, vec!["3GQY:DZG".to_string()], vec!["a2".to_string()]),
            (SplitRole::ValActive, vec!["3H6O:D8G".to_string()], vec!["v1".to_string()]),
        ]
    );
}

#[test]
fn repeated_ligand_code_forms_one_query_group() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = ["1AAA", "2BBB", "3CCC", "4DDD", "5EEE"]
        .iter()
        .map(|pdb| format!("{pdb} RAP CC1CCC(O)C(OC)C1\n"))
        .chain(["6FFF RAD CC1CCC(OCCO)C(OC)C1\n".to_string()])
        .collect();
    fs::write(dir.path().join("q.tsv"), rows).unwrap();
    let recs = vsaudit_core::dataset::load_molecule_file(
        &dir.path().join("q.tsv"),
        vsaudit_core::dataset::FileFormat::Table,
        SplitRole::Query,
        "MTORC1",
        params(),
    )
    .unwrap();
    let t = TargetDataset::new("MTORC1", [vsaudit_core::dataset::RoleSet::new(SplitRole::Query, None, recs)]);
    let f = detect_intra_identity(&t, &AuditConfig::default());
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].ids_a.len(), 5);
    assert!(f[0].ids_a.iter().all(|id| id.ends_with(":RAP")));
}

#[test]
fn leaked_active_inflates_ef_over_random_expectation() {
    // one validation active is a copy of a training active; everything else
    // is unrelated
    let mols = distinct_molecules(4, 230);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let spell = |m: &Molecule, rng: &mut ChaCha8Rng| random_smiles(m, rng);
    let ta: Vec<String> = mols[..5].iter().map(|m| spell(m, &mut rng)).collect();
    let ti: Vec<String> = mols[5..20].iter().map(|m| spell(m, &mut rng)).collect();
    let mut va: Vec<String> = mols[20..29].iter().map(|m| spell(m, &mut rng)).collect();
    va.push(spell(&mols[0], &mut rng));
    let vi: Vec<String> = mols[29..].iter().map(|m| spell(m, &mut rng)).collect();
    let t = TargetDataset::from_smiles(
        "T",
        params(),
        &[
            (SplitRole::TrainActive, items(ta, "ta")),
            (SplitRole::TrainInactive, items(ti, "ti")),
            (SplitRole::ValActive, items(va, "va")),
            (SplitRole::ValInactive, items(vi, "vi")),
        ],
    );
    let b = run_baseline(&t).unwrap();
    let r = &b.ranking;
    let ef = enrichment_factor(r, 0.01, TieMode::Expected).unwrap();
    let random = analytic_inflated_ef(InflationParams { n: r.n as u64, a: r.a as u64, k: ef.k as u64, g: 0 }).unwrap();
    assert_eq!(random, 1.0);
    assert_eq!(r.entries[0].record_id, "va9");
    assert!(ef.hits >= 1.0);
    assert!(ef.ef > random, "{} vs {random}", ef.ef);
}
