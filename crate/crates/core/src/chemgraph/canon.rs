//! Canonical atom ranking and canonical SMILES.
//!
//! Atoms start from an invariant tuple `(atomic number, charge, isotope,
//! aromatic, implicit H, degree)` and are refined by neighbor colors until the
//! partition is stable. Remaining ties are broken by individualization: each
//! member of the first non-singleton cell is tried in turn and the
//! lexicographically smallest resulting SMILES wins. Automorphisms discovered
//! along the way (two leaves giving the same string) prune equivalent
//! branches.

use super::write::write_smiles;
use super::{CanonicalSmiles, Molecule};

/// Canonical SMILES for `mol`. Invariant under atom reordering.
pub fn canonical_smiles(mol: &Molecule) -> CanonicalSmiles {
    CanonicalSmiles(search(mol).0)
}

/// A canonical rank (distinct, `0..n`) for every atom.
pub fn canonical_ranks(mol: &Molecule) -> Vec<u32> {
    search(mol).1
}

fn search(mol: &Molecule) -> (String, Vec<u32>) {
    let n = mol.atom_count();
    if n == 0 {
        return (String::new(), Vec::new());
    }
    let colors = initial_colors(mol);
    let mut s = Search {
        mol,
        best: None,
        first: None,
        autos: Vec::new(),
        prefix: Vec::new(),
    };
    s.visit(colors);
    let best = s.best.expect("at least one leaf");
    (best.text, best.labels)
}

fn initial_colors(mol: &Molecule) -> Vec<u32> {
    let keys: Vec<_> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.atomic_number,
                a.formal_charge,
                a.isotope,
                a.aromatic,
                a.implicit_h,
                mol.degree(i),
            )
        })
        .collect();
    dense_rank(&keys)
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap() as u32)
        .collect()
}

fn cell_count(colors: &[u32]) -> usize {
    colors.iter().max().map_or(0, |&m| m as usize + 1)
}

/// Iterated neighborhood refinement. Keeps the old color as the primary key,
/// so the ordered partition only ever splits.
fn refine(mol: &Molecule, mut colors: Vec<u32>) -> Vec<u32> {
    let mut cells = cell_count(&colors);
    loop {
        if cells == colors.len() {
            return colors;
        }
        let sigs: Vec<(u32, Vec<(u8, u32)>)> = (0..colors.len())
            .map(|v| {
                let mut nb: Vec<(u8, u32)> = mol
                    .neighbors(v)
                    .iter()
                    .map(|&(w, b)| (mol.bonds()[b].order.code(), colors[w]))
                    .collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let next = dense_rank(&sigs);
        let next_cells = cell_count(&next);
        colors = next;
        if next_cells == cells {
            return colors;
        }
        cells = next_cells;
    }
}

fn individualize(colors: &[u32], v: usize) -> Vec<u32> {
    let keys: Vec<(u32, bool)> = colors
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i != v))
        .collect();
    dense_rank(&keys)
}

struct Leaf {
    text: String,
    labels: Vec<u32>,
    order: Vec<usize>,
}

struct Search<'m> {
    mol: &'m Molecule,
    best: Option<Leaf>,
    first: Option<Leaf>,
    autos: Vec<Vec<usize>>,
    prefix: Vec<usize>,
}

impl Search<'_> {
    fn visit(&mut self, colors: Vec<u32>) {
        let colors = refine(self.mol, colors);
        let n = colors.len();
        if cell_count(&colors) == n {
            self.leaf(colors);
            return;
        }
        // first non-singleton cell
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let target = counts.iter().position(|&k| k > 1).unwrap() as u32;
        let members: Vec<usize> = (0..n).filter(|&i| colors[i] == target).collect();

        let mut explored: Vec<usize> = Vec::new();
        for &v in &members {
            if !explored.is_empty() {
                let orbits = self.orbits();
                if explored.iter().any(|&u| orbits.find(u) == orbits.find(v)) {
                    continue;
                }
            }
            self.prefix.push(v);
            self.visit(individualize(&colors, v));
            self.prefix.pop();
            explored.push(v);
        }
    }

    /// Orbit partition under stored automorphisms that fix the current
    /// prefix pointwise.
    fn orbits(&self) -> UnionFind {
        let mut uf = UnionFind::new(self.mol.atom_count());
        for g in &self.autos {
            if self.prefix.iter().all(|&p| g[p] == p) {
                for (x, &y) in g.iter().enumerate() {
                    uf.union(x, y);
                }
            }
        }
        uf
    }

    fn leaf(&mut self, labels: Vec<u32>) {
        let (text, order) = write_smiles(self.mol, &labels);
        let leaf = Leaf {
            text,
            labels,
            order,
        };
        for known in [&self.first, &self.best].into_iter().flatten() {
            if known.text == leaf.text {
                let mut g = vec![0usize; leaf.order.len()];
                for (k, &a) in known.order.iter().enumerate() {
                    g[a] = leaf.order[k];
                }
                if is_automorphism(self.mol, &g) && g.iter().enumerate().any(|(i, &x)| i != x) {
                    self.autos.push(g);
                }
                break;
            }
        }
        if self.first.is_none() {
            self.first = Some(Leaf {
                text: leaf.text.clone(),
                labels: leaf.labels.clone(),
                order: leaf.order.clone(),
            });
        }
        let better = match &self.best {
            None => true,
            Some(b) => leaf.text < b.text,
        };
        if better {
            self.best = Some(leaf);
        }
    }
}

fn is_automorphism(mol: &Molecule, g: &[usize]) -> bool {
    let atoms = mol.atoms();
    if (0..g.len()).any(|i| atoms[i] != atoms[g[i]]) {
        return false;
    }
    mol.bonds().iter().all(|b| {
        mol.bond_between(g[b.a], g[b.b])
            .is_some_and(|img| img.order == b.order)
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
