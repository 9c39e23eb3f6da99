//! SMILES writer driven by an atom priority order.

use std::fmt::Write as _;

use super::element;
use super::parse::organic_implicit_h;
use super::{Atom, BondOrder, Molecule};

/// Writes `mol` visiting lower-priority atoms first. Returns the string and
/// the atoms in the order they were written.
pub(crate) fn write_smiles(mol: &Molecule, priority: &[u32]) -> (String, Vec<usize>) {
    let n = mol.atom_count();
    assert_eq!(priority.len(), n, "priority must cover every atom");

    let mut sorted_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|a| {
            let mut v = mol.neighbors(a).to_vec();
            v.sort_by_key(|&(nb, _)| priority[nb]);
            v
        })
        .collect();

    // Pass 1: spanning forest and ring-closure bonds.
    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.bonds().len()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // per atom: ring closure events in discovery order, (bond index, partner)
    let mut closures: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();

    let mut by_priority: Vec<usize> = (0..n).collect();
    by_priority.sort_by_key(|&a| priority[a]);

    for &root in &by_priority {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visited[root] = true;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut slot)) = stack.last_mut() {
            if *slot >= sorted_nbrs[v].len() {
                stack.pop();
                continue;
            }
            let (w, bi) = sorted_nbrs[v][*slot];
            *slot += 1;
            if bond_used[bi] {
                continue;
            }
            bond_used[bi] = true;
            if visited[w] {
                // w is an ancestor of v: ring opens at w, closes at v
                closures[w].push((bi, v));
                closures[v].push((bi, w));
            } else {
                visited[w] = true;
                children[v].push((w, bi));
                stack.push((w, 0));
            }
        }
    }
    sorted_nbrs.clear();

    // Pass 2: emit.
    let mut out = String::new();
    let mut order = Vec::with_capacity(n);
    let mut digit_of_bond: Vec<Option<u16>> = vec![None; mol.bonds().len()];
    let mut digits_in_use: Vec<bool> = Vec::new();

    enum Step {
        Open,
        Atom(usize, Option<usize>),
        Close,
    }

    for (ci, &root) in roots.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        let mut stack = vec![Step::Atom(root, None)];
        while let Some(step) = stack.pop() {
            let (v, via) = match step {
                Step::Open => {
                    out.push('(');
                    continue;
                }
                Step::Close => {
                    out.push(')');
                    continue;
                }
                Step::Atom(v, via) => (v, via),
            };
            if let Some(bi) = via {
                out.push_str(bond_symbol(mol, bi));
            }
            order.push(v);
            write_atom(mol, v, &mut out);
            for &(bi, _) in &closures[v] {
                match digit_of_bond[bi] {
                    Some(d) => {
                        push_ring_label(&mut out, d);
                        digits_in_use[d as usize] = false;
                    }
                    None => {
                        let d = match digits_in_use.iter().skip(1).position(|u| !u) {
                            Some(p) => p + 1,
                            None => {
                                digits_in_use.resize(digits_in_use.len().max(1) + 1, false);
                                digits_in_use.len() - 1
                            }
                        };
                        digits_in_use[d] = true;
                        digit_of_bond[bi] = Some(d as u16);
                        out.push_str(bond_symbol(mol, bi));
                        push_ring_label(&mut out, d as u16);
                    }
                }
            }
            // All children but the last are parenthesized branches.
            let kids = &children[v];
            if let Some((&(last, last_bond), rest)) = kids.split_last() {
                stack.push(Step::Atom(last, Some(last_bond)));
                for &(w, bi) in rest.iter().rev() {
                    stack.push(Step::Close);
                    stack.push(Step::Atom(w, Some(bi)));
                    stack.push(Step::Open);
                }
            }
        }
    }
    (out, order)
}

fn push_ring_label(out: &mut String, d: u16) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        assert!(d < 100, "more than 99 simultaneously open rings");
        let _ = write!(out, "%{d:02}");
    }
}

fn bond_symbol(mol: &Molecule, bi: usize) -> &'static str {
    let b = mol.bonds()[bi];
    match b.order {
        BondOrder::Single => {
            if mol.atoms()[b.a].aromatic && mol.atoms()[b.b].aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => "",
    }
}

fn write_atom(mol: &Molecule, v: usize, out: &mut String) {
    let atom: Atom = mol.atoms()[v];
    let sym = element::symbol(atom.atomic_number);
    let organic_ok = atom.formal_charge == 0
        && atom.isotope.is_none()
        && element::is_organic_subset(atom.atomic_number)
        && (!atom.aromatic || element::is_aromatic_organic(atom.atomic_number))
        && organic_implicit_h(
            atom.atomic_number,
            atom.aromatic,
            mol.neighbors(v).iter().map(|&(_, b)| mol.bonds()[b].order),
        ) == Some(atom.implicit_h);
    if organic_ok {
        if atom.aromatic {
            out.push_str(&sym.to_ascii_lowercase());
        } else {
            out.push_str(sym);
        }
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    if atom.aromatic {
        out.push_str(&sym.to_ascii_lowercase());
    } else {
        out.push_str(sym);
    }
    match atom.implicit_h {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -(c as i32));
        }
    }
    out.push(']');
}
