//! SMILES reader.
//!
//! Grammar: organic-subset and bracket atoms, branches, ring closures (digits
//! and `%nn`), `.` component separators and the bond symbols `- = # : / \`.
//! Stereo information (`@`-classes, `/`, `\`) is read and dropped.

use std::collections::BTreeMap;

use super::element::{self, AROMATIC_BRACKET_SYMBOLS, CARBON, HYDROGEN, NITROGEN, OXYGEN, SULFUR};
use super::{Atom, Bond, BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, serde::Serialize, serde::Deserialize)]
#[error("SMILES parse error at byte {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: String,
}

impl ParseError {
    fn new(offset: usize, reason: impl Into<String>) -> Self {
        ParseError {
            offset,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RawAtom {
    atomic_number: u8,
    charge: i8,
    isotope: Option<u16>,
    aromatic: bool,
    bracket: bool,
    hcount: u8,
    offset: usize,
}

#[derive(Debug, Clone, Copy)]
struct RawBond {
    a: usize,
    b: usize,
    order: Option<BondOrder>,
    offset: usize,
}

/// Parses and normalizes a SMILES string.
pub fn parse_smiles(text: &str) -> Result<Molecule, ParseError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    if body.is_empty() {
        return Err(ParseError::new(0, "empty SMILES"));
    }
    let (atoms, bonds) = Reader::new(body, lead).read()?;
    build(atoms, bonds)
}

struct Reader<'a> {
    s: &'a [u8],
    pos: usize,
    base: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, base: usize) -> Self {
        Reader {
            s: text.as_bytes(),
            pos: 0,
            base,
            atoms: Vec::new(),
            bonds: Vec::new(),
        }
    }

    fn err(&self, at: usize, reason: impl Into<String>) -> ParseError {
        ParseError::new(self.base + at, reason)
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn read(mut self) -> Result<(Vec<RawAtom>, Vec<RawBond>), ParseError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(Option<BondOrder>, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut rings: BTreeMap<u16, (usize, Option<BondOrder>, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return Err(self.err(start, "branch opened before any atom"));
                    };
                    if pending.is_some() {
                        return Err(self.err(start, "bond symbol before branch"));
                    }
                    branches.push((p, start));
                    self.pos += 1;
                }
                b')' => {
                    let Some((p, _)) = branches.pop() else {
                        return Err(self.err(start, "unbalanced ')'"));
                    };
                    if pending.is_some() {
                        return Err(self.err(start, "dangling bond symbol before ')'"));
                    }
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(self.err(start, "dangling bond symbol before '.'"));
                    }
                    if !branches.is_empty() {
                        return Err(self.err(start, "'.' inside a branch"));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if prev.is_none() {
                        return Err(self.err(start, "bond symbol without a preceding atom"));
                    }
                    if pending.is_some() {
                        return Err(self.err(start, "two consecutive bond symbols"));
                    }
                    let order = match c {
                        b'-' => Some(BondOrder::Single),
                        b'=' => Some(BondOrder::Double),
                        b'#' => Some(BondOrder::Triple),
                        b':' => Some(BondOrder::Aromatic),
                        b'/' | b'\\' => None,
                        _ => return Err(self.err(start, "quadruple bonds are not supported")),
                    };
                    pending = Some((order, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(self.err(start, "ring closure before any atom"));
                    };
                    let label = self.ring_label()?;
                    let bond_sym = pending.take();
                    match rings.remove(&label) {
                        Some((other, open_order, _)) => {
                            let order = match (open_order, bond_sym.and_then(|b| b.0)) {
                                (Some(x), Some(y)) if x != y => {
                                    return Err(self.err(
                                        start,
                                        format!("conflicting bond orders on ring closure {label}"),
                                    ))
                                }
                                (x, y) => x.or(y),
                            };
                            if other == p {
                                return Err(self.err(start, "ring closure bonds an atom to itself"));
                            }
                            if self.bonded(other, p) {
                                return Err(self.err(start, "ring closure duplicates an existing bond"));
                            }
                            self.bonds.push(RawBond {
                                a: other,
                                b: p,
                                order,
                                offset: self.base + start,
                            });
                        }
                        None => {
                            rings.insert(label, (p, bond_sym.and_then(|b| b.0), start));
                        }
                    }
                }
                _ => {
                    let atom = if c == b'[' {
                        self.bracket_atom()?
                    } else {
                        self.organic_atom()?
                    };
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    if let Some(p) = prev {
                        let (order, off) = match pending.take() {
                            Some((o, off)) => (o, off),
                            None => (None, start),
                        };
                        self.bonds.push(RawBond {
                            a: p,
                            b: idx,
                            order,
                            offset: self.base + off,
                        });
                    }
                    pending = None;
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, off)) = pending {
            return Err(self.err(off, "dangling bond symbol at end of input"));
        }
        if let Some(&(_, off)) = branches.last() {
            return Err(self.err(off, "unclosed branch"));
        }
        if let Some((label, &(_, _, off))) = rings.iter().next() {
            return Err(self.err(off, format!("unresolved ring closure {label}")));
        }
        Ok((self.atoms, self.bonds))
    }

    fn bonded(&self, a: usize, b: usize) -> bool {
        self.bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    }

    fn ring_label(&mut self) -> Result<u16, ParseError> {
        let start = self.pos;
        if self.s[self.pos] == b'%' {
            let digits = self.s.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u16)
                }
                _ => Err(self.err(start, "'%' must be followed by two digits")),
            }
        } else {
            let d = self.s[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u16)
        }
    }

    fn organic_atom(&mut self) -> Result<RawAtom, ParseError> {
        let start = self.pos;
        let two = self.s.get(self.pos..self.pos + 2);
        let (z, aromatic, len) = match two {
            Some(b"Cl") => (17, false, 2),
            Some(b"Br") => (35, false, 2),
            _ => match self.s[self.pos] {
                b'B' => (5, false, 1),
                b'C' => (6, false, 1),
                b'N' => (7, false, 1),
                b'O' => (8, false, 1),
                b'P' => (15, false, 1),
                b'S' => (16, false, 1),
                b'F' => (9, false, 1),
                b'I' => (53, false, 1),
                b'b' => (5, true, 1),
                b'c' => (6, true, 1),
                b'n' => (7, true, 1),
                b'o' => (8, true, 1),
                b'p' => (15, true, 1),
                b's' => (16, true, 1),
                other => {
                    let shown = std::str::from_utf8(&self.s[start..])
                        .ok()
                        .and_then(|r| r.chars().next())
                        .unwrap_or(other as char);
                    return Err(self.err(start, format!("unexpected character '{shown}'")));
                }
            },
        };
        self.pos += len;
        Ok(RawAtom {
            atomic_number: z,
            charge: 0,
            isotope: None,
            aromatic,
            bracket: false,
            hcount: 0,
            offset: self.base + start,
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = match self.number() {
            Some(n) if n <= u16::MAX as u32 => Some(n as u16),
            Some(_) => return Err(self.err(open + 1, "isotope out of range")),
            None => None,
        };

        let sym_start = self.pos;
        let rest = &self.s[self.pos..];
        let mut found = None;
        for (sym, z) in AROMATIC_BRACKET_SYMBOLS {
            if rest.starts_with(sym.as_bytes()) {
                found = Some((z, true, sym.len()));
                break;
            }
        }
        if found.is_none() {
            if let Some(&c0) = rest.first() {
                if c0.is_ascii_uppercase() {
                    if let Some(&c1) = rest.get(1) {
                        if c1.is_ascii_lowercase() {
                            let s2 = std::str::from_utf8(&rest[..2]).unwrap_or("");
                            if let Some(z) = element::atomic_number(s2) {
                                found = Some((z, false, 2));
                            }
                        }
                    }
                    if found.is_none() {
                        let s1 = std::str::from_utf8(&rest[..1]).unwrap_or("");
                        if let Some(z) = element::atomic_number(s1) {
                            found = Some((z, false, 1));
                        }
                    }
                }
            }
        }
        let Some((z, aromatic, len)) = found else {
            let end = rest
                .iter()
                .position(|c| !c.is_ascii_alphabetic())
                .unwrap_or(rest.len());
            let shown = String::from_utf8_lossy(&rest[..end.max(1).min(rest.len())]).into_owned();
            return Err(self.err(sym_start, format!("unknown element symbol '{shown}'")));
        };
        self.pos += len;

        // chirality, discarded
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let Some(cls) = self.s.get(self.pos..self.pos + 2) {
                if matches!(cls, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    self.pos += 2;
                    self.number();
                }
            }
        }

        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = match self.number() {
                Some(n) if n <= 8 => n as u8,
                Some(_) => return Err(self.err(self.pos, "hydrogen count out of range")),
                None => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if !(-15..=15).contains(&charge) {
                return Err(self.err(open, "formal charge out of range"));
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number().is_none() {
                return Err(self.err(self.pos, "atom class requires digits"));
            }
        }

        if self.peek() != Some(b']') {
            return Err(self.err(open, "unbalanced '[': expected ']'"));
        }
        self.pos += 1;

        Ok(RawAtom {
            atomic_number: z,
            charge: charge as i8,
            isotope,
            aromatic,
            bracket: true,
            hcount,
            offset: self.base + open,
        })
    }
}

/// Implicit hydrogens for an unbracketed atom given its bond orders, or
/// `None` when the bonds exceed every allowed valence.
pub(crate) fn organic_implicit_h(
    atomic_number: u8,
    aromatic: bool,
    orders: impl Iterator<Item = BondOrder>,
) -> Option<u8> {
    let allowed = element::allowed_valences(atomic_number, 0)?;
    let sum: u32 = orders.map(|o| o.valence() as u32).sum();
    let max = *allowed.iter().max()? as u32;
    if sum > max {
        return None;
    }
    if aromatic {
        Some((allowed[0] as u32).saturating_sub(sum + 1) as u8)
    } else {
        let target = allowed.iter().map(|&v| v as u32).find(|&v| v >= sum)?;
        Some((target - sum) as u8)
    }
}

fn build(raw_atoms: Vec<RawAtom>, raw_bonds: Vec<RawBond>) -> Result<Molecule, ParseError> {
    // Resolve implicit orders: aromatic between aromatic atoms on a ring, else single.
    let provisional: Vec<Bond> = raw_bonds
        .iter()
        .map(|b| Bond {
            a: b.a,
            b: b.b,
            order: b.order.unwrap_or(BondOrder::Single),
        })
        .collect();
    let atoms0: Vec<Atom> = raw_atoms
        .iter()
        .map(|r| Atom::new(r.atomic_number))
        .collect();
    let topo = Molecule::from_parts(atoms0, provisional)
        .map_err(|e| ParseError::new(0, e.to_string()))?;

    let mut bonds: Vec<Bond> = Vec::with_capacity(raw_bonds.len());
    for (i, rb) in raw_bonds.iter().enumerate() {
        let both_aromatic = raw_atoms[rb.a].aromatic && raw_atoms[rb.b].aromatic;
        let ring = topo.is_ring_bond(i);
        let order = match rb.order {
            Some(BondOrder::Aromatic) => {
                if !both_aromatic || !ring {
                    return Err(ParseError::new(
                        rb.offset,
                        "aromatic bond outside an aromatic ring",
                    ));
                }
                BondOrder::Aromatic
            }
            Some(o) => o,
            None if both_aromatic && ring => BondOrder::Aromatic,
            None => BondOrder::Single,
        };
        bonds.push(Bond {
            a: rb.a,
            b: rb.b,
            order,
        });
    }

    let n = raw_atoms.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        incident[b.a].push(i);
        incident[b.b].push(i);
    }

    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    for (i, r) in raw_atoms.iter().enumerate() {
        if r.aromatic
            && !incident[i]
                .iter()
                .any(|&b| bonds[b].order == BondOrder::Aromatic)
        {
            return Err(ParseError::new(
                r.offset,
                "aromatic atom is not part of an aromatic ring",
            ));
        }
        let orders = || incident[i].iter().map(|&b| bonds[b].order);
        let implicit_h = if r.bracket {
            if let Some(allowed) = element::allowed_valences(r.atomic_number, r.charge) {
                let sum: u32 = orders().map(|o| o.valence() as u32).sum::<u32>() + r.hcount as u32;
                if allowed.iter().all(|&v| (v as u32) < sum) {
                    return Err(ParseError::new(
                        r.offset,
                        format!(
                            "valence {sum} impossible for {}",
                            describe(r.atomic_number, r.charge)
                        ),
                    ));
                }
            }
            r.hcount
        } else {
            organic_implicit_h(r.atomic_number, r.aromatic, orders()).ok_or_else(|| {
                ParseError::new(
                    r.offset,
                    format!(
                        "valence impossible for {} with {} bond(s)",
                        element::symbol(r.atomic_number),
                        incident[i].len()
                    ),
                )
            })?
        };
        atoms.push(Atom {
            atomic_number: r.atomic_number,
            formal_charge: r.charge,
            isotope: r.isotope,
            aromatic: r.aromatic,
            implicit_h,
        });
    }

    // Fold plain explicit hydrogens into their heavy-atom neighbor.
    let mut removed = vec![false; n];
    for i in 0..n {
        let a = atoms[i];
        if a.atomic_number == HYDROGEN
            && a.formal_charge == 0
            && a.isotope.is_none()
            && a.implicit_h == 0
            && incident[i].len() == 1
        {
            let b = bonds[incident[i][0]];
            let nb = b.other(i);
            if atoms[nb].atomic_number != HYDROGEN && b.order == BondOrder::Single {
                removed[i] = true;
                atoms[nb].implicit_h += 1;
            }
        }
    }
    let (atoms, bonds) = if removed.iter().any(|&r| r) {
        let mut remap = vec![usize::MAX; n];
        let mut kept = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            if !removed[i] {
                remap[i] = kept.len();
                kept.push(*a);
            }
        }
        let kept_bonds = bonds
            .iter()
            .filter(|b| !removed[b.a] && !removed[b.b])
            .map(|b| Bond {
                a: remap[b.a],
                b: remap[b.b],
                order: b.order,
            })
            .collect();
        (kept, kept_bonds)
    } else {
        (atoms, bonds)
    };

    let mol = Molecule::from_parts(atoms, bonds).map_err(|e| ParseError::new(0, e.to_string()))?;
    Ok(aromatize_kekule_six_rings(mol))
}

fn describe(z: u8, charge: i8) -> String {
    match charge {
        0 => element::symbol(z).to_string(),
        c if c > 0 => format!("{}{:+}", element::symbol(z), c),
        c => format!("{}{}", element::symbol(z), c),
    }
}

/// Simple six-membered cycles as `(atoms, bonds)` in ring order.
fn six_cycles(mol: &Molecule) -> Vec<([usize; 6], [usize; 6])> {
    let mut out = Vec::new();
    let n = mol.atom_count();
    let mut path = Vec::with_capacity(6);
    let mut path_bonds = Vec::with_capacity(6);
    for start in 0..n {
        if !mol.is_ring_atom(start) || !ring_element(mol.atoms()[start].atomic_number) {
            continue;
        }
        path.clear();
        path_bonds.clear();
        path.push(start);
        extend_cycle(mol, start, &mut path, &mut path_bonds, &mut out);
    }
    out
}

fn ring_element(z: u8) -> bool {
    matches!(z, CARBON | NITROGEN | OXYGEN | SULFUR)
}

fn extend_cycle(
    mol: &Molecule,
    start: usize,
    path: &mut Vec<usize>,
    path_bonds: &mut Vec<usize>,
    out: &mut Vec<([usize; 6], [usize; 6])>,
) {
    let last = *path.last().unwrap();
    for &(nb, bi) in mol.neighbors(last) {
        if !mol.is_ring_bond(bi) {
            continue;
        }
        if path.len() == 6 {
            // close only in one direction to avoid duplicates
            if nb == start && path[1] < path[5] {
                path_bonds.push(bi);
                let mut atoms = [0; 6];
                let mut bonds = [0; 6];
                atoms.copy_from_slice(path);
                bonds.copy_from_slice(path_bonds);
                out.push((atoms, bonds));
                path_bonds.pop();
            }
            continue;
        }
        if nb <= start || path.contains(&nb) || !ring_element(mol.atoms()[nb].atomic_number) {
            continue;
        }
        path.push(nb);
        path_bonds.push(bi);
        extend_cycle(mol, start, path, path_bonds, out);
        path.pop();
        path_bonds.pop();
    }
}

/// Aromatizes six-rings of C/N/O/S whose bonds alternate single/double
/// (already-aromatic bonds match either), repeated to a fixed point so fused
/// Kekulé systems converge with their lowercase spelling.
fn aromatize_kekule_six_rings(mol: Molecule) -> Molecule {
    let cycles = six_cycles(&mol);
    if cycles.is_empty() {
        return mol;
    }
    let mut atoms = mol.atoms().to_vec();
    let mut bonds = mol.bonds().to_vec();
    let mut done = vec![false; cycles.len()];
    loop {
        let mut changed = false;
        for (ci, (ring_atoms, ring_bonds)) in cycles.iter().enumerate() {
            if done[ci] {
                continue;
            }
            if ring_bonds.iter().all(|&b| bonds[b].order == BondOrder::Aromatic) {
                done[ci] = true;
                continue;
            }
            let alternates = (0..2).any(|parity| {
                ring_bonds.iter().enumerate().all(|(k, &b)| match bonds[b].order {
                    BondOrder::Aromatic => true,
                    BondOrder::Double => k % 2 == parity,
                    BondOrder::Single => k % 2 != parity,
                    BondOrder::Triple => false,
                })
            });
            if !alternates {
                continue;
            }
            let exocyclic_multiple = ring_atoms.iter().any(|&a| {
                mol.neighbors(a).iter().any(|&(nb, bi)| {
                    !ring_atoms.contains(&nb)
                        && matches!(bonds[bi].order, BondOrder::Double | BondOrder::Triple)
                })
            });
            if exocyclic_multiple {
                continue;
            }
            for &a in ring_atoms {
                atoms[a].aromatic = true;
            }
            for &b in ring_bonds {
                bonds[b].order = BondOrder::Aromatic;
            }
            done[ci] = true;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let mut out = Molecule::from_parts(atoms, bonds).expect("aromatization keeps the graph simple");
    out.source_id = mol.source_id;
    out
}
