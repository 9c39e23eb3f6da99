//! Folded circular (ECFP-style) fingerprints.
//!
//! ECFP naming counts diameter, so ECFP2 is radius 1, the default here.
//!
//! Atom identifiers start from a hash of `(atomic number, heavy degree,
//! implicit H, formal charge, aromatic, in-ring)`. At iteration `i` an atom's
//! identifier becomes the hash of `(i, previous identifier, sorted (bond code,
//! neighbor identifier) pairs)`; atoms without neighbors keep their
//! identifier. Every distinct identifier from iterations `0..=radius` sets bit
//! `identifier mod n_bits`.
//!
//! Hashing folds 64-bit words through the SplitMix64 finalizer, starting from
//! [`HASH_SEED`]: `h = splitmix64(h ^ word)` for each word. Test vectors live
//! in this module's tests.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chemgraph::Molecule;

pub const DEFAULT_RADIUS: u32 = 1;
pub const DEFAULT_BITS: u32 = 4096;
pub const MAX_RADIUS: u32 = 8;

/// Initial state of the identifier hash.
pub const HASH_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FingerprintParams {
    pub radius: u32,
    pub n_bits: u32,
}

impl Default for FingerprintParams {
    fn default() -> Self {
        FingerprintParams {
            radius: DEFAULT_RADIUS,
            n_bits: DEFAULT_BITS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("fingerprint width {0} is not a positive power of two")]
    BadWidth(u32),
    #[error("radius {0} exceeds the maximum of {MAX_RADIUS}")]
    BadRadius(u32),
    #[error("bit index {index} out of range for width {n_bits}")]
    BitOutOfRange { index: u32, n_bits: u32 },
}

impl FingerprintParams {
    pub fn new(radius: u32, n_bits: u32) -> Result<Self, FingerprintError> {
        let p = FingerprintParams { radius, n_bits };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        if self.n_bits == 0 || !self.n_bits.is_power_of_two() {
            return Err(FingerprintError::BadWidth(self.n_bits));
        }
        if self.radius > MAX_RADIUS {
            return Err(FingerprintError::BadRadius(self.radius));
        }
        Ok(())
    }
}

/// Fixed-width bitset with a cached population count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Box<[u64]>,
    n_bits: u32,
    popcount: u32,
}

impl Fingerprint {
    pub fn empty(n_bits: u32) -> Result<Self, FingerprintError> {
        if n_bits == 0 || !n_bits.is_power_of_two() {
            return Err(FingerprintError::BadWidth(n_bits));
        }
        let words = vec![0u64; (n_bits as usize).div_ceil(64)].into_boxed_slice();
        Ok(Fingerprint {
            words,
            n_bits,
            popcount: 0,
        })
    }

    pub fn from_indices(
        n_bits: u32,
        indices: impl IntoIterator<Item = u32>,
    ) -> Result<Self, FingerprintError> {
        let mut fp = Fingerprint::empty(n_bits)?;
        for i in indices {
            if i >= n_bits {
                return Err(FingerprintError::BitOutOfRange { index: i, n_bits });
            }
            fp.words[(i / 64) as usize] |= 1u64 << (i % 64);
        }
        fp.popcount = fp.count_ones();
        Ok(fp)
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, bit: u32) -> bool {
        bit < self.n_bits && self.words[(bit / 64) as usize] >> (bit % 64) & 1 == 1
    }

    /// Recounts set bits, bypassing the cache.
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Set bit indices in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros();
                rest &= rest - 1;
                Some(wi as u32 * 64 + tz)
            })
        })
    }

    /// `|self ∧ other|`; widths must already match.
    pub fn intersection_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn is_subset(&self, other: &Fingerprint) -> bool {
        self.n_bits == other.n_bits
            && self
                .words
                .iter()
                .zip(other.words.iter())
                .all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fingerprint")
            .field("n_bits", &self.n_bits)
            .field("popcount", &self.popcount)
            .field("ones", &self.ones().collect::<Vec<_>>())
            .finish()
    }
}

// Serialized as the list of set bits, which is compact for sparse ECFP output.
impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n_bits: u32,
            ones: Vec<u32>,
        }
        Repr {
            n_bits: self.n_bits,
            ones: self.ones().collect(),
        }
        .serialize(s)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(HASH_SEED, |h, &w| splitmix64(h ^ w))
}

/// Distinct atom-environment identifiers for iterations `0..=radius`, sorted.
pub fn ecfp_identifiers(mol: &Molecule, radius: u32) -> Vec<u64> {
    let n = mol.atom_count();
    let mut current: Vec<u64> = (0..n)
        .map(|i| {
            let a = mol.atoms()[i];
            hash_words(&[
                a.atomic_number as u64,
                mol.degree(i) as u64,
                a.implicit_h as u64,
                a.formal_charge as i64 as u64,
                a.aromatic as u64,
                mol.is_ring_atom(i) as u64,
            ])
        })
        .collect();
    let mut all: Vec<u64> = current.clone();
    let mut words: Vec<u64> = Vec::new();
    let mut env: Vec<(u64, u64)> = Vec::new();
    for iteration in 1..=radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                if mol.degree(i) == 0 {
                    return current[i];
                }
                env.clear();
                env.extend(
                    mol.neighbors(i)
                        .iter()
                        .map(|&(w, b)| (mol.bonds()[b].order.code() as u64, current[w])),
                );
                env.sort_unstable();
                words.clear();
                words.push(iteration as u64);
                words.push(current[i]);
                for &(code, id) in &env {
                    words.push(code);
                    words.push(id);
                }
                hash_words(&words)
            })
            .collect();
        all.extend_from_slice(&next);
        current = next;
    }
    all.sort_unstable();
    all.dedup();
    all
}

pub fn ecfp(mol: &Molecule, params: FingerprintParams) -> Fingerprint {
    let mask = params.n_bits as u64 - 1;
    let bits = ecfp_identifiers(mol, params.radius)
        .into_iter()
        .map(|id| (id & mask) as u32);
    Fingerprint::from_indices(params.n_bits, bits).expect("params validated by caller")
}
