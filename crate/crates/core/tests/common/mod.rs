//! Test-only generators and brute-force oracles.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use vsaudit_core::chemgraph::{parse_smiles, Atom, Bond, BondOrder, Molecule};
use vsaudit_core::fingerprints::Fingerprint;

struct Builder {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    cap: Vec<u8>,
    used: Vec<u8>,
}

impl Builder {
    fn free(&self, i: usize) -> u8 {
        self.cap[i] - self.used[i]
    }

    fn bonded(&self, i: usize, j: usize) -> bool {
        self.bonds
            .iter()
            .any(|b| (b.a == i && b.b == j) || (b.a == j && b.b == i))
    }

    fn bond(&mut self, i: usize, j: usize, order: BondOrder, cost: u8) {
        self.bonds.push(Bond { a: i, b: j, order });
        self.used[i] += cost;
        self.used[j] += cost;
    }

    fn push(&mut self, atom: Atom, cap: u8) -> usize {
        self.atoms.push(atom);
        self.cap.push(cap);
        self.used.push(0);
        self.atoms.len() - 1
    }

    fn attach_point(&self, rng: &mut impl Rng) -> Option<usize> {
        let open: Vec<usize> = (0..self.atoms.len()).filter(|&i| self.free(i) > 0).collect();
        open.choose(rng).copied()
    }
}

/// A random connected, valence-valid molecule with at most `max_atoms`
/// heavy atoms. Mixes chains, branches, aliphatic rings, benzene/pyridine
/// rings, double bonds, charges and isotopes. The result has been through
/// the parser so it is in normalized form.
pub fn random_molecule(rng: &mut impl Rng, max_atoms: usize) -> Molecule {
    assert!(max_atoms >= 1);
    let n_target = rng.gen_range(1..=max_atoms);
    let mut b = Builder {
        atoms: Vec::new(),
        bonds: Vec::new(),
        cap: Vec::new(),
        used: Vec::new(),
    };
    while b.atoms.len() < n_target {
        let anchor = if b.atoms.is_empty() {
            None
        } else {
            match b.attach_point(rng) {
                Some(a) => Some(a),
                None => break,
            }
        };
        if b.atoms.len() + 6 <= n_target && rng.gen_bool(0.2) {
            let first = b.atoms.len();
            for k in 0..6 {
                let pyridine_n = k > 0 && rng.gen_bool(0.12);
                let mut atom = Atom::new(if pyridine_n { 7 } else { 6 });
                atom.aromatic = true;
                // aromatic c takes one substituent, n none
                b.push(atom, if pyridine_n { 2 } else { 3 });
            }
            for k in 0..6 {
                b.bond(first + k, first + (k + 1) % 6, BondOrder::Aromatic, 1);
            }
            if let Some(a) = anchor {
                b.bond(a, first, BondOrder::Single, 1);
            }
        } else {
            let (z, charge, cap) = match rng.gen_range(0..20) {
                0..=9 => (6, 0, 4),
                10..=12 => (7, 0, 3),
                13..=15 => (8, 0, 2),
                16 => (16, 0, 2),
                17 => (9, 0, 1),
                18 => (17, 0, 1),
                _ => match rng.gen_range(0..3) {
                    0 => (7, 1, 4),
                    1 => (8, -1, 1),
                    _ => (35, 0, 1),
                },
            };
            let mut atom = Atom::new(z);
            atom.formal_charge = charge;
            if z == 6 && rng.gen_bool(0.03) {
                atom.isotope = Some(13);
            }
            let i = b.push(atom, cap);
            if let Some(a) = anchor {
                b.bond(a, i, BondOrder::Single, 1);
            }
        }
    }
    // extra aliphatic ring closures
    for _ in 0..rng.gen_range(0..=2) {
        let cands: Vec<usize> = (0..b.atoms.len())
            .filter(|&i| !b.atoms[i].aromatic && b.free(i) > 0)
            .collect();
        if cands.len() < 2 {
            break;
        }
        let i = *cands.choose(rng).unwrap();
        let j = *cands.choose(rng).unwrap();
        if i != j && !b.bonded(i, j) {
            b.bond(i, j, BondOrder::Single, 1);
        }
    }
    // unsaturation
    for k in 0..b.bonds.len() {
        let Bond { a, b: c, order } = b.bonds[k];
        if order != BondOrder::Single || b.atoms[a].aromatic || b.atoms[c].aromatic {
            continue;
        }
        if b.free(a) >= 1 && b.free(c) >= 1 && rng.gen_bool(0.15) {
            let triple = b.free(a) >= 2 && b.free(c) >= 2 && rng.gen_bool(0.2);
            let (ord, extra) = if triple {
                (BondOrder::Triple, 2)
            } else {
                (BondOrder::Double, 1)
            };
            b.bonds[k].order = ord;
            b.used[a] += extra;
            b.used[c] += extra;
        }
    }
    // capacities already encode the aromatic hydrogen rule: a ring c has one
    // slot for either H or a substituent, a ring n has none
    for i in 0..b.atoms.len() {
        b.atoms[i].implicit_h = b.free(i);
    }
    let raw = Molecule::from_parts(b.atoms, b.bonds).expect("generator builds simple graphs");
    let smiles = raw.to_smiles();
    parse_smiles(&smiles).unwrap_or_else(|e| panic!("generated {smiles} does not parse: {e}"))
}

/// A random spelling of `mol`: atoms are relabelled and the writer is given
/// a random traversal priority.
pub fn random_smiles(mol: &Molecule, rng: &mut impl Rng) -> String {
    let mut order: Vec<usize> = (0..mol.atom_count()).collect();
    order.shuffle(rng);
    let shuffled = mol.permuted(&order);
    let mut prio: Vec<u32> = (0..mol.atom_count() as u32).collect();
    prio.shuffle(rng);
    shuffled.to_smiles_ordered(&prio)
}

fn order_of(m: &Molecule, i: usize, j: usize) -> Option<BondOrder> {
    m.bond_between(i, j).map(|b| b.order)
}

/// Graph isomorphism by backtracking, matching every atom field and bond
/// order.
pub fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bonds().len() != b.bonds().len() {
        return false;
    }
    let sig = |m: &Molecule, i: usize| (m.atoms()[i], m.degree(i));
    let mut sa: Vec<_> = (0..n).map(|i| sig(a, i)).collect();
    let mut sb: Vec<_> = (0..n).map(|i| sig(b, i)).collect();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    let order = bfs_order(a);
    let mut map = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    fn go(
        a: &Molecule,
        b: &Molecule,
        order: &[usize],
        depth: usize,
        map: &mut [usize],
        taken: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        for v in 0..b.atom_count() {
            if taken[v] || a.atoms()[u] != b.atoms()[v] || a.degree(u) != b.degree(v) {
                continue;
            }
            let ok = order[..depth]
                .iter()
                .all(|&w| order_of(a, u, w) == order_of(b, v, map[w]));
            if ok {
                map[u] = v;
                taken[v] = true;
                if go(a, b, order, depth + 1, map, taken) {
                    return true;
                }
                taken[v] = false;
            }
        }
        false
    }
    go(a, b, &order, 0, &mut map, &mut taken)
}

fn bfs_order(m: &Molecule) -> Vec<usize> {
    let n = m.atom_count();
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            out.push(u);
            for &(w, _) in m.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    out
}

fn connected(m: &Molecule, mask: u32) -> bool {
    let start = mask.trailing_zeros() as usize;
    let mut seen = 1u32 << start;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &(w, _) in m.neighbors(u) {
            let bit = 1u32 << w;
            if mask & bit != 0 && seen & bit == 0 {
                seen |= bit;
                stack.push(w);
            }
        }
    }
    seen == mask
}

fn members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

type SubKey = Vec<(u8, bool, usize)>;

fn sub_key(m: &Molecule, mask: u32) -> SubKey {
    let mut k: SubKey = members(mask)
        .into_iter()
        .map(|i| {
            let a = m.atoms()[i];
            let deg = m.neighbors(i).iter().filter(|&&(w, _)| mask >> w & 1 == 1).count();
            (a.atomic_number, a.aromatic, deg)
        })
        .collect();
    k.sort();
    k
}

/// Whether the substructures induced by `ma` in `a` and `mb` in `b` are
/// isomorphic, matching element, aromatic flag and bond order.
fn induced_iso(a: &Molecule, ma: u32, b: &Molecule, mb: u32) -> bool {
    let va = members(ma);
    let vb = members(mb);
    let label = |m: &Molecule, i: usize| (m.atoms()[i].atomic_number, m.atoms()[i].aromatic);
    let mut map: Vec<(usize, usize)> = Vec::new();
    let mut used = 0u32;
    fn go(
        a: &Molecule,
        b: &Molecule,
        va: &[usize],
        vb: &[usize],
        map: &mut Vec<(usize, usize)>,
        used: &mut u32,
        label: &dyn Fn(&Molecule, usize) -> (u8, bool),
    ) -> bool {
        let d = map.len();
        if d == va.len() {
            return true;
        }
        let u = va[d];
        for &v in vb {
            if *used >> v & 1 == 1 || label(a, u) != label(b, v) {
                continue;
            }
            if map.iter().all(|&(x, y)| order_of(a, u, x) == order_of(b, v, y)) {
                map.push((u, v));
                *used |= 1 << v;
                if go(a, b, va, vb, map, used, label) {
                    return true;
                }
                *used &= !(1 << v);
                map.pop();
            }
        }
        false
    }
    go(a, b, &va, &vb, &mut map, &mut used, &label)
}

/// Size of the largest connected common induced substructure, by
/// enumerating every connected atom subset of both molecules.
pub fn exhaustive_mcs(a: &Molecule, b: &Molecule) -> usize {
    let (na, nb) = (a.atom_count(), b.atom_count());
    assert!(na <= 16 && nb <= 16, "oracle is exponential");
    let subsets = |m: &Molecule, n: usize| -> Vec<Vec<u32>> {
        let mut by_size = vec![Vec::new(); n + 1];
        for mask in 1u32..(1 << n) {
            if connected(m, mask) {
                by_size[mask.count_ones() as usize].push(mask);
            }
        }
        by_size
    };
    if na == 0 || nb == 0 {
        return 0;
    }
    let sa = subsets(a, na);
    let sb = subsets(b, nb);
    for s in (1..=na.min(nb)).rev() {
        let mut buckets: HashMap<SubKey, Vec<u32>> = HashMap::new();
        for &m in &sb[s] {
            buckets.entry(sub_key(b, m)).or_default().push(m);
        }
        for &ma in &sa[s] {
            if let Some(cands) = buckets.get(&sub_key(a, ma)) {
                if cands.iter().any(|&mb| induced_iso(a, ma, b, mb)) {
                    return s;
                }
            }
        }
    }
    0
}

/// Tanimoto from explicit bit-index sets.
pub fn brute_tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let sa: HashSet<u32> = a.ones().collect();
    let sb: HashSet<u32> = b.ones().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Random fingerprints in families: members of a family share most bits,
/// so thresholds around 0.6–0.9 see plenty of hits.
pub fn random_fingerprints(rng: &mut impl Rng, count: usize, n_bits: u32) -> Vec<Fingerprint> {
    let mut bases: Vec<Vec<u32>> = Vec::new();
    (0..count)
        .map(|_| {
            if bases.is_empty() || rng.gen_bool(0.3) {
                let len = rng.gen_range(0..60);
                bases.push((0..len).map(|_| rng.gen_range(0..n_bits)).collect());
            }
            let base = bases.choose(rng).unwrap();
            let mut bits: Vec<u32> = base.iter().copied().filter(|_| rng.gen_bool(0.9)).collect();
            for _ in 0..rng.gen_range(0..6) {
                bits.push(rng.gen_range(0..n_bits));
            }
            Fingerprint::from_indices(n_bits, bits).unwrap()
        })
        .collect()
}

/// Brute-force pair enumeration: cross pairs as `(a, b)`, self pairs as
/// `(i, j)` with `i < j`.
pub fn brute_pairs(a: &[Fingerprint], b: Option<&[Fingerprint]>, t: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    match b {
        Some(b) => {
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    let tc = brute_tanimoto(x, y);
                    if tc >= t {
                        out.push((i, j, tc));
                    }
                }
            }
        }
        None => {
            for i in 0..a.len() {
                for j in i + 1..a.len() {
                    let tc = brute_tanimoto(&a[i], &a[j]);
                    if tc >= t {
                        out.push((i, j, tc));
                    }
                }
            }
        }
    }
    out
}

/// A copy of `mol` with one extra methyl on a random atom that carries
/// implicit hydrogen, or `None` if there is no such atom.
pub fn add_methyl(mol: &Molecule, rng: &mut impl Rng) -> Option<Molecule> {
    let sites: Vec<usize> = (0..mol.atom_count())
        .filter(|&i| mol.atoms()[i].implicit_h > 0)
        .collect();
    let &site = sites.choose(rng)?;
    let mut atoms = mol.atoms().to_vec();
    let mut bonds = mol.bonds().to_vec();
    atoms[site].implicit_h -= 1;
    let mut methyl = Atom::new(6);
    methyl.implicit_h = 3;
    atoms.push(methyl);
    bonds.push(Bond {
        a: site,
        b: atoms.len() - 1,
        order: BondOrder::Single,
    });
    let raw = Molecule::from_parts(atoms, bonds).ok()?;
    parse_smiles(&raw.to_smiles()).ok()
}

/// AUROC as the fraction of (active, inactive) pairs where the active
/// scores higher, ties counting one half.
pub fn pairwise_auroc(scores: &[(f64, bool)]) -> f64 {
    let act: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let ina: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for &x in &act {
        for &y in &ina {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    wins / (act.len() * ina.len()) as f64
}
