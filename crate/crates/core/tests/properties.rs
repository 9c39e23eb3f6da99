mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use vsaudit_core::audit::{audit_targets, AuditConfig, Category, LeakFinding};
use vsaudit_core::chemgraph::{canonical_smiles, parse_smiles};
use vsaudit_core::dataset::{dedup, MoleculeRecord, RoleSet, SplitRole, TargetDataset};
use vsaudit_core::fingerprints::{ecfp, Fingerprint, FingerprintParams};
use vsaudit_core::screen::{
    analytic_inflated_ef, auroc, enrichment_factor, run_baseline, InflationParams, Provenance,
    Ranking, TieMode,
};
use vsaudit_core::simsearch::{find_cross_pairs, find_self_pairs, mcs_ratio, tanimoto};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small target whose roles overlap and contain methyl homologs, so every
/// detector has something to find.
fn random_target(seed: u64) -> TargetDataset {
    let mut r = rng(seed);
    let base: Vec<_> = (0..12).map(|_| random_molecule(&mut r, 14)).collect();
    let pick = |r: &mut ChaCha8Rng| -> String {
        let m = &base[r.gen_range(0..base.len())];
        if r.gen_bool(0.3) {
            if let Some(v) = add_methyl(m, r) {
                return random_smiles(&v, r);
            }
        }
        random_smiles(m, r)
    };
    let sets: Vec<_> = SplitRole::ALL
        .iter()
        .map(|&role| {
            let n = r.gen_range(0..8);
            let items = (0..n).map(|i| (format!("{role}{i}"), pick(&mut r))).collect();
            (role, items)
        })
        .collect();
    TargetDataset::from_smiles("P", FingerprintParams::default(), &sets)
}

fn record_pairs(f: &LeakFinding) -> Vec<(String, String)> {
    let ordered = |a: &str, b: &str| {
        if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    };
    let qualify = |role: SplitRole, id: &str| format!("{role}:{id}");
    let mut out = Vec::new();
    if f.ids_b.is_empty() {
        for (i, x) in f.ids_a.iter().enumerate() {
            for y in &f.ids_a[i + 1..] {
                out.push(ordered(&qualify(f.role_a, x), &qualify(f.role_a, y)));
            }
        }
    } else {
        for x in &f.ids_a {
            for y in &f.ids_b {
                out.push(ordered(&qualify(f.role_a, x), &qualify(f.role_b, y)));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_ignores_spelling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_molecule(&mut r, 20);
        let a = canonical_smiles(&parse_smiles(&random_smiles(&m, &mut r)).unwrap());
        let b = canonical_smiles(&parse_smiles(&random_smiles(&m, &mut r)).unwrap());
        prop_assert_eq!(&a, &b);
        let again = canonical_smiles(&parse_smiles(a.as_str()).unwrap());
        prop_assert_eq!(a, again);
    }

    #[test]
    fn canonical_equality_means_isomorphism(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_molecule(&mut rng(s1), 8);
        let b = random_molecule(&mut rng(s2), 8);
        prop_assert_eq!(canonical_smiles(&a) == canonical_smiles(&b), isomorphic(&a, &b));
    }

    #[test]
    fn ecfp_ignores_atom_order(seed in any::<u64>(), radius in 0u32..4) {
        let mut r = rng(seed);
        let m = random_molecule(&mut r, 20);
        let p = parse_smiles(&random_smiles(&m, &mut r)).unwrap();
        let params = FingerprintParams::new(radius, 2048).unwrap();
        prop_assert_eq!(ecfp(&m, params), ecfp(&p, params));
    }

    #[test]
    fn tanimoto_is_a_bounded_symmetric_similarity(seed in any::<u64>()) {
        let fps = random_fingerprints(&mut rng(seed), 6, 512);
        for x in &fps {
            for y in &fps {
                let t = tanimoto(x, y).unwrap();
                prop_assert!((0.0..=1.0).contains(&t));
                prop_assert_eq!(t, tanimoto(y, x).unwrap());
                prop_assert_eq!(t, brute_tanimoto(x, y));
            }
            if x.popcount() > 0 {
                prop_assert_eq!(tanimoto(x, x).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn pair_search_matches_brute_force(seed in any::<u64>(), t in 0.05f64..=1.0) {
        let mut r = rng(seed);
        let a = random_fingerprints(&mut r, 40, 256);
        let b = random_fingerprints(&mut r, 30, 256);
        let ra: Vec<&Fingerprint> = a.iter().collect();
        let rb: Vec<&Fingerprint> = b.iter().collect();
        let got: Vec<_> = find_cross_pairs(&ra, &rb, t).unwrap().iter().map(|p| (p.a, p.b)).collect();
        let mut want: Vec<_> = brute_pairs(&a, Some(&b), t).iter().map(|p| (p.0, p.1)).collect();
        let mut sorted = got.clone();
        sorted.sort();
        want.sort();
        prop_assert_eq!(sorted, want);
        let got: HashSet<_> = find_self_pairs(&ra, t).unwrap().iter().map(|p| (p.a, p.b)).collect();
        let want: HashSet<_> = brute_pairs(&a, None, t).iter().map(|p| (p.0, p.1)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn mcs_is_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_molecule(&mut rng(s1), 14);
        let b = random_molecule(&mut rng(s2), 14);
        let ab = mcs_ratio(&a, &b, 1_000_000);
        let ba = mcs_ratio(&b, &a, 1_000_000);
        prop_assert_eq!(ab.mcs_atom_count, ba.mcs_atom_count);
        prop_assert!(ab.mcs_atom_count <= a.atom_count().min(b.atom_count()));
        prop_assert!((0.0..=1.0).contains(&ab.ratio));
        prop_assert_eq!(mcs_ratio(&a, &a, 1_000_000).mcs_atom_count, a.atom_count());
    }

    #[test]
    fn dedup_is_lossless_and_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let base: Vec<_> = (0..6).map(|_| random_molecule(&mut r, 10)).collect();
        let params = FingerprintParams::default();
        let records: Vec<MoleculeRecord> = (0..r.gen_range(0..25))
            .map(|i| {
                let smi = if r.gen_bool(0.1) {
                    "C1CC".to_string()
                } else {
                    random_smiles(&base[r.gen_range(0..base.len())], &mut r)
                };
                let mut rec = MoleculeRecord::from_smiles(format!("m{i}"), smi, SplitRole::TrainInactive, "T", params);
                rec.ordinal = i;
                rec
            })
            .collect();
        let set = RoleSet::new(SplitRole::TrainInactive, None, records.clone());
        let c = set.counts();
        prop_assert_eq!(c.unique + c.duplicates + c.parse_failures, c.lines);
        let ids: usize = set.dedup_map().values().map(Vec::len).sum();
        prop_assert_eq!(ids + c.parse_failures, c.lines);
        let uniques: Vec<MoleculeRecord> = set.unique_records().cloned().collect();
        let again = dedup(&uniques);
        prop_assert!(again.groups.is_empty());
        prop_assert_eq!(again.unique.len(), uniques.len());
        let distinct: HashSet<_> = uniques.iter().map(|u| u.canonical.clone()).collect();
        prop_assert_eq!(distinct.len(), uniques.len());
    }

    #[test]
    fn identity_and_analog_findings_are_disjoint(seed in any::<u64>()) {
        let t = random_target(seed);
        let config = AuditConfig {
            roles: vsaudit_core::audit::RolePolicy::exhaustive(),
            ..AuditConfig::default()
        };
        let report = audit_targets(&[t], &config, FingerprintParams::default()).unwrap();
        let mut identity = HashSet::new();
        let mut analog = HashSet::new();
        for (cat, by_target) in &report.findings {
            for f in by_target.values().flatten() {
                let dest = if cat.is_identity() { &mut identity } else { &mut analog };
                dest.extend(record_pairs(f));
            }
        }
        prop_assert!(identity.is_disjoint(&analog));
        for (cat, cells) in &report.summary.global {
            let total: usize = cells.values().sum();
            prop_assert_eq!(total, report.findings[cat].values().map(Vec::len).sum::<usize>());
        }
    }

    #[test]
    fn raising_thresholds_never_adds_findings(seed in any::<u64>(), lo in 0.3f64..0.9, step in 0.0f64..0.1) {
        let t = random_target(seed);
        let count = |tc_inter: f64, tc_intra: f64, mcs: f64| {
            let config = AuditConfig {
                tc_inter,
                tc_intra,
                mcs_intra: mcs,
                roles: vsaudit_core::audit::RolePolicy::exhaustive(),
                ..AuditConfig::default()
            };
            let r = audit_targets(std::slice::from_ref(&t), &config, FingerprintParams::default()).unwrap();
            let g = &r.summary.global;
            let n = |c: Category| g[&c].values().sum::<usize>();
            (n(Category::InterAnalog), n(Category::IntraAnalog))
        };
        let hi = (lo + step).min(1.0);
        let (inter_lo, intra_lo) = count(lo, lo, 0.9);
        let (inter_hi, intra_hi) = count(hi, hi, 0.9);
        prop_assert!(inter_hi <= inter_lo);
        prop_assert!(intra_hi <= intra_lo);
    }

    #[test]
    fn audit_report_is_deterministic(seed in any::<u64>()) {
        let t = random_target(seed);
        let config = AuditConfig::default();
        let a = audit_targets(std::slice::from_ref(&t), &config, FingerprintParams::default()).unwrap().to_json();
        let b = audit_targets(&[t], &config, FingerprintParams::default()).unwrap().to_json();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ef_tie_modes_are_ordered(scores in prop::collection::vec((0u8..5, any::<bool>()), 2..200), f in 0.001f64..0.999) {
        let mut s: Vec<(f64, bool)> = scores.iter().map(|&(v, a)| (v as f64, a)).collect();
        s[0].1 = true;
        let r = Ranking::from_scores(&s).unwrap();
        if let Ok(x) = enrichment_factor(&r, f, TieMode::Expected) {
            let o = enrichment_factor(&r, f, TieMode::Optimistic).unwrap();
            let p = enrichment_factor(&r, f, TieMode::Pessimistic).unwrap();
            prop_assert!(p.ef <= x.ef && x.ef <= o.ef);
            prop_assert!(x.hits >= 0.0 && x.hits <= x.k.min(x.a) as f64);
        }
    }

    #[test]
    fn metrics_ignore_monotone_transforms(scores in prop::collection::vec((-50i32..50, any::<bool>()), 2..150), f in 0.01f64..0.99) {
        let mut s: Vec<(f64, bool)> = scores.iter().map(|&(v, a)| (v as f64 / 10.0, a)).collect();
        s[0].1 = true;
        s[1].1 = false;
        let t: Vec<(f64, bool)> = s.iter().map(|&(v, a)| (v.exp() * 3.0 + 1.0, a)).collect();
        let (rs, rt) = (Ranking::from_scores(&s).unwrap(), Ranking::from_scores(&t).unwrap());
        prop_assert_eq!(auroc(&rs).unwrap(), auroc(&rt).unwrap());
        for m in TieMode::ALL {
            let (a, b) = (enrichment_factor(&rs, f, m), enrichment_factor(&rt, f, m));
            prop_assert_eq!(a.map(|x| x.ef).ok(), b.map(|x| x.ef).ok());
        }
    }

    #[test]
    fn auroc_matches_pairwise_count(scores in prop::collection::vec((0u8..6, any::<bool>()), 2..120)) {
        let mut s: Vec<(f64, bool)> = scores.iter().map(|&(v, a)| (v as f64, a)).collect();
        s[0].1 = true;
        s[1].1 = false;
        let got = auroc(&Ranking::from_scores(&s).unwrap()).unwrap();
        prop_assert!((got - pairwise_auroc(&s)).abs() <= 1e-12);
    }

    #[test]
    fn inflation_is_one_without_leaks_and_grows_with_them(n in 2u64..100_000, a_frac in 0.0f64..1.0, k_frac in 0.0f64..1.0) {
        let a = 1 + ((n - 1) as f64 * a_frac) as u64;
        let k = 1 + ((n - 1) as f64 * k_frac) as u64;
        let base = analytic_inflated_ef(InflationParams { n, a, k, g: 0 }).unwrap();
        prop_assert!((base - 1.0).abs() < 1e-9);
        let mut prev = base;
        for g in 1..=a.min(k).min(50) {
            let ef = analytic_inflated_ef(InflationParams { n, a, k, g }).unwrap();
            prop_assert!(ef >= prev - 1e-9, "g={g}: {ef} < {prev}");
            prev = ef;
        }
    }

    #[test]
    fn baseline_score_bands(seed in any::<u64>()) {
        let t = random_target(seed);
        if t.role(SplitRole::ValActive).records.is_empty() || t.role(SplitRole::ValInactive).records.is_empty() {
            return Ok(());
        }
        let b = run_baseline(&t).unwrap();
        for s in &b.scores {
            let v = s.score.value;
            match s.score.provenance {
                Provenance::ExactActive => prop_assert_eq!(v, 2.0),
                Provenance::ExactInactive => prop_assert_eq!(v, -1.0),
                Provenance::Similarity => prop_assert!((0.0..=1.0).contains(&v)),
                Provenance::Unscored => prop_assert_eq!(v, f64::NEG_INFINITY),
            }
        }
        let band = |p: Option<Provenance>| match p {
            Some(Provenance::ExactActive) => 0,
            Some(Provenance::Similarity) => 1,
            Some(Provenance::ExactInactive) => 2,
            _ => 3,
        };
        let bands: Vec<_> = b.ranking.entries.iter().map(|e| band(e.provenance)).collect();
        prop_assert!(bands.windows(2).all(|w| w[0] <= w[1]));
    }
}
