//! Shared inputs for the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAGMENTS: [&str; 12] = [
    "c1ccccc1", "C(=O)O", "N", "CC", "c1ccncc1", "Cl", "O", "C(F)(F)F", "C1CCNCC1", "S(=O)(=O)N",
    "c1ccc2[nH]ccc2c1", "C#N",
];

/// Deterministic drug-sized SMILES: a carbon backbone with one fragment
/// branching off each backbone atom.
pub fn smiles_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let parts = rng.gen_range(3..9);
            let mut s = String::new();
            for _ in 0..parts {
                s.push_str("C(");
                s.push_str(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())]);
                s.push(')');
            }
            s.push('C');
            s
        })
        .collect()
}
