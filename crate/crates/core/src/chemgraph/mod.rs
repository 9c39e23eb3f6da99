//! Molecular graphs: SMILES parsing, normalization and canonical SMILES.
//!
//! Molecules are hydrogen-suppressed and stereo-free. Parsing discards every
//! stereo marker, assigns implicit hydrogens from a fixed valence table and
//! perceives aromaticity (lowercase input is trusted; Kekulé six-rings of
//! C/N/O/S with alternating bonds are aromatized). The canonical SMILES string
//! is the identity key used throughout the audit.

mod canon;
pub mod element;
mod parse;
mod write;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use canon::{canonical_ranks, canonical_smiles};
pub use parse::{parse_smiles, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub atomic_number: u8,
    pub formal_charge: i8,
    pub isotope: Option<u16>,
    pub aromatic: bool,
    pub implicit_h: u8,
}

impl Atom {
    pub fn new(atomic_number: u8) -> Self {
        Atom {
            atomic_number,
            formal_charge: 0,
            isotope: None,
            aromatic: false,
            implicit_h: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Small stable integer used by hashing and refinement.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Contribution to an atom's valence sum; aromatic bonds count one.
    pub(crate) fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("atomic number {0} outside 1..=118")]
    BadElement(u8),
    #[error("bond {0} references a missing atom")]
    DanglingBond(usize),
    #[error("bond {0} is a self-loop")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are bonded more than once")]
    DuplicateBond(usize, usize),
}

/// A simple undirected molecular graph with per-atom neighbor lists.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
    pub source_id: Option<String>,
}

impl Molecule {
    /// Builds a molecule from raw parts, checking that the graph is simple.
    /// No chemistry normalization is applied.
    pub fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        for a in &atoms {
            if a.atomic_number == 0 || a.atomic_number > 118 {
                return Err(GraphError::BadElement(a.atomic_number));
            }
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= atoms.len() || bond.b >= atoms.len() {
                return Err(GraphError::DanglingBond(i));
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop(i));
            }
            if adjacency[bond.a].iter().any(|&(n, _)| n == bond.b) {
                return Err(GraphError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let ring_bond = ring_bonds(atoms.len(), &bonds, &adjacency);
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            ring_bond,
            source_id: None,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs of an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    /// True when the bond lies on at least one cycle.
    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, b)| self.ring_bond[b])
    }

    /// Relabels atoms so that old atom `order[k]` becomes new atom `k`.
    pub fn permuted(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len());
        let mut new_index = vec![usize::MAX; order.len()];
        for (k, &old) in order.iter().enumerate() {
            new_index[old] = k;
        }
        let atoms = order.iter().map(|&o| self.atoms[o]).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: new_index[b.a],
                b: new_index[b.b],
                order: b.order,
            })
            .collect();
        let mut m = Molecule::from_parts(atoms, bonds).expect("permutation preserves validity");
        m.source_id = self.source_id.clone();
        m
    }

    /// SMILES written by depth-first traversal where lower `priority` values
    /// are visited first. `priority` must be a permutation-free total order
    /// (distinct values); it is how both canonical and randomized spellings
    /// are produced.
    pub fn to_smiles_ordered(&self, priority: &[u32]) -> String {
        write::write_smiles(self, priority).0
    }

    /// SMILES in input atom order.
    pub fn to_smiles(&self) -> String {
        let order: Vec<u32> = (0..self.atoms.len() as u32).collect();
        self.to_smiles_ordered(&order)
    }
}

/// Marks bonds that are not bridges (Tarjan low-link).
fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next neighbor slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, pbond, ref mut slot)) = stack.last_mut() {
            if *slot < adjacency[v].len() {
                let (w, bi) = adjacency[v][*slot];
                *slot += 1;
                if bi == pbond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, bi, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        ring[pbond] = false;
                    }
                }
            }
        }
    }
    ring
}

/// A canonical SMILES string: equal strings mean equal molecules.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalSmiles(String);

impl CanonicalSmiles {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalSmiles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalSmiles {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Identity under the canonical form.
pub fn same_molecule(a: &Molecule, b: &Molecule) -> bool {
    a.atom_count() == b.atom_count()
        && a.bonds().len() == b.bonds().len()
        && canonical_smiles(a) == canonical_smiles(b)
}

/// Parse then canonicalize.
pub fn canonicalize(text: &str) -> Result<CanonicalSmiles, ParseError> {
    parse_smiles(text).map(|m| canonical_smiles(&m))
}
