//! Maximum common connected induced substructure.
//!
//! Product vertices are atom pairs with equal element and aromatic flag. Two
//! product vertices are compatible when they map distinct atoms and either
//! both atom pairs are bonded with the same order (a "c-edge") or neither is
//! bonded (a "d-edge"). A common connected substructure is a clique whose
//! c-edges span it. The search is a Bron–Kerbosch variant that only extends
//! along c-edges, with a size bound and an expansion budget.

use serde::{Deserialize, Serialize};

use crate::chemgraph::Molecule;

pub const DEFAULT_MCS_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsResult {
    pub mcs_atom_count: usize,
    /// `mcs_atom_count / max(atoms(a), atoms(b))`.
    pub ratio: f64,
    /// False when the budget ran out; the count is then a lower bound.
    pub exact: bool,
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn and_not(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }
    fn or(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a | b).collect())
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }
    fn first(&self) -> Option<usize> {
        self.iter().next()
    }
}

struct Product {
    pairs: Vec<(usize, usize)>,
    /// compatible (c- or d-edge)
    compat: Vec<Bits>,
    /// c-edges only
    cadj: Vec<Bits>,
    n_a: usize,
    n_b: usize,
}

impl Product {
    fn build(a: &Molecule, b: &Molecule) -> Product {
        let mut pairs = Vec::new();
        for i in 0..a.atom_count() {
            for j in 0..b.atom_count() {
                let (x, y) = (a.atoms()[i], b.atoms()[j]);
                if x.atomic_number == y.atomic_number && x.aromatic == y.aromatic {
                    pairs.push((i, j));
                }
            }
        }
        let m = pairs.len();
        let mut compat = vec![Bits::new(m); m];
        let mut cadj = vec![Bits::new(m); m];
        for u in 0..m {
            let (i, j) = pairs[u];
            for v in u + 1..m {
                let (k, l) = pairs[v];
                if i == k || j == l {
                    continue;
                }
                let ba = a.bond_between(i, k).map(|x| x.order);
                let bb = b.bond_between(j, l).map(|x| x.order);
                match (ba, bb) {
                    (Some(x), Some(y)) if x == y => {
                        compat[u].set(v);
                        compat[v].set(u);
                        cadj[u].set(v);
                        cadj[v].set(u);
                    }
                    (None, None) => {
                        compat[u].set(v);
                        compat[v].set(u);
                    }
                    _ => {}
                }
            }
        }
        Product {
            pairs,
            compat,
            cadj,
            n_a: a.atom_count(),
            n_b: b.atom_count(),
        }
    }

    /// Upper bound on how many more atoms the candidates can contribute.
    fn bound(&self, cand: &Bits) -> usize {
        let mut rows = vec![false; self.n_a];
        let mut cols = vec![false; self.n_b];
        let (mut r, mut c) = (0, 0);
        for v in cand.iter() {
            let (i, j) = self.pairs[v];
            if !rows[i] {
                rows[i] = true;
                r += 1;
            }
            if !cols[j] {
                cols[j] = true;
                c += 1;
            }
        }
        r.min(c)
    }
}

struct Search<'p> {
    g: &'p Product,
    best: usize,
    budget: u64,
    expansions: u64,
    truncated: bool,
}

impl Search<'_> {
    fn expand(&mut self, size: usize, mut p: Bits, d: Bits) {
        if self.truncated {
            return;
        }
        self.expansions += 1;
        if self.expansions > self.budget {
            self.truncated = true;
            return;
        }
        if size > self.best {
            self.best = size;
        }
        loop {
            let Some(u) = p.first() else { return };
            let all = p.or(&d);
            if size + all.count() <= self.best || size + self.g.bound(&all) <= self.best {
                return;
            }
            p.clear(u);
            let nu = &self.g.compat[u];
            let cu = &self.g.cadj[u];
            let d_next = d.and(nu);
            let newly_connected = d_next.and(cu);
            let p_next = p.and(nu).or(&newly_connected);
            let d_next = d_next.and_not(cu);
            self.expand(size + 1, p_next, d_next);
            if self.truncated {
                return;
            }
        }
    }

    fn greedy(&mut self) {
        let m = self.g.pairs.len();
        let starts = m.min(256);
        for s in 0..starts {
            let mut p = self.g.cadj[s].clone();
            let mut d = self.g.compat[s].and_not(&self.g.cadj[s]);
            let mut size = 1;
            while let Some(u) = p.first() {
                size += 1;
                let nu = &self.g.compat[u];
                let cu = &self.g.cadj[u];
                p.clear(u);
                let dn = d.and(nu);
                p = p.and(nu).or(&dn.and(cu));
                d = dn.and_not(cu);
            }
            self.best = self.best.max(size);
        }
    }
}

/// Size of the largest common connected induced substructure, as a ratio of
/// the larger molecule. Exact unless `budget` node expansions are exceeded.
pub fn mcs_ratio(a: &Molecule, b: &Molecule, budget: u64) -> McsResult {
    let denom = a.atom_count().max(b.atom_count());
    if denom == 0 {
        return McsResult {
            mcs_atom_count: 0,
            ratio: 1.0,
            exact: true,
        };
    }
    let g = Product::build(a, b);
    let m = g.pairs.len();
    let mut s = Search {
        g: &g,
        best: 0,
        budget: budget.max(1),
        expansions: 0,
        truncated: false,
    };
    if m > 0 {
        s.greedy();
    }
    let cap = a.atom_count().min(b.atom_count());
    let mut used = Bits::new(m);
    for u in 0..m {
        if s.best >= cap || s.truncated {
            break;
        }
        let p = g.cadj[u].and_not(&used);
        let d = g.compat[u].and_not(&g.cadj[u]).and_not(&used);
        s.expand(1, p, d);
        used.set(u);
    }
    McsResult {
        mcs_atom_count: s.best,
        ratio: s.best as f64 / denom as f64,
        exact: !s.truncated,
    }
}
